//! Fixed-timestep 2D swarm simulator for differential-drive robots.
//!
//! The arena is centred on the origin. Every control cycle: each robot's
//! adapter samples its sensors from the current world, every controller
//! steps once, the resulting body commands are latched onto the wheels,
//! and the physics advances `control_dt / physics_dt` Euler substeps, each
//! followed by collision resolution.

mod adapters;
pub mod geometry;
pub mod kinematics;
pub mod metrics;
mod world;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use adapters::{AggregationAdapter, RobotAdapter, TaxisAdapter, TaxisParams};
pub use kinematics::{body_to_wheel, integrate_pose, wheel_to_body, Pose, WheelCommand};
pub use metrics::{cluster_fraction, taxis_metrics};
pub use world::{
    Arena, LosHit, Neighbor, RobotBody, World, BODY_RADIUS_CM, MAX_WHEEL_SPEED_CMS,
    WHEEL_DISTANCE_CM,
};

use crate::compiler::CompiledMachine;
use crate::runtime::{CreateError, ExecutionContext, Fault, RuntimeConfig, TraceRecord};
use crate::value::Value;

/// Time unit of the taxis preset, s.
pub const TAXIS_TIME_UNIT_S: f64 = 0.05;

/// Name of the pseudo-random generator, recorded in metrics headers.
pub const RNG_NAME: &str = "ChaCha8Rng";

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(&'static str),
    #[error("beacon required")]
    NoBeacon,
    #[error("could not place {0} robots without overlap")]
    Placement(usize),
    #[error("controller cannot run on this platform: {0}")]
    Controller(String),
    #[error("robot {robot}: {fault}")]
    Fault { robot: usize, fault: Fault },
}

impl From<CreateError> for SimError {
    fn from(e: CreateError) -> Self {
        SimError::Controller(alloc::format!("{e}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ControllerKind {
    Aggregation,
    Taxis,
    /// A compiled machine; its adapter is chosen from its events.
    External(Arc<CompiledMachine>),
}

/// Tunable constants. Lengths in cm, speeds in cm/s, angles in rad.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub body_radius: f64,
    pub wheel_distance: f64,
    pub max_wheel_speed: f64,
    pub forward_speed: f64,
    pub turn_rate: f64,
    pub coherence_range: f64,
    /// Overrides of the model's radius variables (model units).
    pub radius_illuminated: Option<f64>,
    pub radius_shadowed: Option<f64>,
    pub radius_unit_cm: f64,
    /// Simulated seconds per model time unit.
    pub time_unit_s: f64,
    pub cluster_threshold: f64,
}

impl Default for Params {
    fn default() -> Self {
        let t = TaxisParams::default();
        Params {
            body_radius: BODY_RADIUS_CM,
            wheel_distance: WHEEL_DISTANCE_CM,
            max_wheel_speed: MAX_WHEEL_SPEED_CMS,
            forward_speed: t.forward_speed,
            turn_rate: t.turn_rate,
            coherence_range: t.coherence_range,
            radius_illuminated: None,
            radius_shadowed: None,
            radius_unit_cm: t.radius_unit_cm,
            time_unit_s: 0.1,
            cluster_threshold: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub arena: Arena,
    pub robots: usize,
    pub seed: u64,
    pub duration_s: f64,
    pub controller: ControllerKind,
    pub beacon: Option<(f64, f64)>,
    pub physics_dt: f64,
    pub control_dt: f64,
    pub params: Params,
}

impl Scenario {
    /// Defaults for the aggregation experiment: 250 x 250 cm, no beacon.
    pub fn aggregation(robots: usize, seed: u64, duration_s: f64) -> Self {
        Scenario {
            arena: Arena {
                width: 250.0,
                height: 250.0,
            },
            robots,
            seed,
            duration_s,
            controller: ControllerKind::Aggregation,
            beacon: None,
            physics_dt: 0.01,
            control_dt: 0.1,
            params: Params::default(),
        }
    }

    /// Defaults for the taxis experiment: 400 x 400 cm, beacon centred on
    /// the right wall, and a time unit of 0.05 s so the 25-unit Forward
    /// timeout lasts 1.25 s.
    pub fn taxis(robots: usize, seed: u64, duration_s: f64) -> Self {
        let mut s = Scenario {
            arena: Arena {
                width: 400.0,
                height: 400.0,
            },
            beacon: Some((200.0, 0.0)),
            controller: ControllerKind::Taxis,
            ..Scenario::aggregation(robots, seed, duration_s)
        };
        s.params.time_unit_s = TAXIS_TIME_UNIT_S;
        s
    }
}

/// One sample of the swarm metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub t_s: f64,
    pub cluster_fraction: f64,
    /// `None` without a beacon.
    pub centroid_beacon_dist: Option<f64>,
    pub max_spread: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    /// Metrics at t = 0.
    pub initial: MetricsRow,
    /// One row per simulated second, t = 1, 2, ...
    pub rows: Vec<MetricsRow>,
}

impl SimOutcome {
    pub fn last(&self) -> &MetricsRow {
        self.rows.last().unwrap_or(&self.initial)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AdapterKind {
    Aggregation,
    Taxis,
}

pub struct Simulation {
    pub scenario: Scenario,
    pub world: World,
    pub robots: Vec<ExecutionContext<RobotAdapter>>,
    kind: AdapterKind,
    substeps: usize,
    cycles: u64,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        if !positive(scenario.duration_s) {
            return Err(SimError::Config("duration must be positive"));
        }
        if scenario.robots == 0 {
            return Err(SimError::Config("at least one robot is required"));
        }
        if !(positive(scenario.arena.width) && positive(scenario.arena.height)) {
            return Err(SimError::Config("arena must have a positive size"));
        }
        let p = &scenario.params;
        let all = [
            p.time_unit_s,
            p.cluster_threshold,
            p.body_radius,
            p.wheel_distance,
            p.max_wheel_speed,
            p.turn_rate,
            p.coherence_range,
        ];
        if !all.into_iter().all(positive) {
            return Err(SimError::Config("parameters must be positive"));
        }
        let machine = match &scenario.controller {
            ControllerKind::Aggregation => Arc::new(reference_machine(
                crate::corpus::AGGREGATION,
                crate::corpus::AGGREGATION_MACHINE,
            )),
            ControllerKind::Taxis => Arc::new(reference_machine(
                crate::corpus::TAXIS,
                crate::corpus::TAXIS_MACHINE,
            )),
            ControllerKind::External(m) => Arc::clone(m),
        };
        let kind = if machine.event_index("seeRobot").is_some() {
            AdapterKind::Aggregation
        } else if machine.event_index("robotDetected").is_some() {
            AdapterKind::Taxis
        } else {
            return Err(SimError::Controller(String::from(
                "machine has neither a `seeRobot` nor a `robotDetected` event",
            )));
        };
        if kind == AdapterKind::Taxis && scenario.beacon.is_none() {
            return Err(SimError::NoBeacon);
        }

        let world = World::new(
            scenario.arena,
            place(&scenario, kind)?,
            scenario.beacon,
            scenario.physics_dt,
            scenario.control_dt,
        );
        let substeps = world.substeps()?;

        let config = RuntimeConfig {
            time_unit: scenario.control_dt / p.time_unit_s,
            ..RuntimeConfig::default()
        };
        let taxis = TaxisParams {
            forward_speed: p.forward_speed,
            turn_rate: p.turn_rate,
            coherence_range: p.coherence_range,
            radius_unit_cm: p.radius_unit_cm,
            control_dt: scenario.control_dt,
        };
        let mut robots = Vec::with_capacity(scenario.robots);
        for _ in 0..scenario.robots {
            let adapter = match kind {
                AdapterKind::Aggregation => {
                    RobotAdapter::Aggregation(AggregationAdapter::default())
                }
                AdapterKind::Taxis => RobotAdapter::Taxis(TaxisAdapter::new(taxis)),
            };
            let mut ctx = ExecutionContext::new(Arc::clone(&machine), adapter, config.clone())?;
            for (name, value) in [
                ("radiusIlluminated", p.radius_illuminated),
                ("radiusShadowed", p.radius_shadowed),
                (
                    "maxSpeed",
                    (kind == AdapterKind::Aggregation).then_some(p.max_wheel_speed),
                ),
                (
                    "wheelDistance",
                    (kind == AdapterKind::Aggregation).then_some(p.wheel_distance),
                ),
            ] {
                if let Some(v) = value {
                    ctx.set_var(name, Value::Real(v));
                }
            }
            robots.push(ctx);
        }
        Ok(Simulation {
            scenario,
            world,
            robots,
            kind,
            substeps,
            cycles: 0,
        })
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    /// Metrics of the current world.
    pub fn metrics(&self) -> MetricsRow {
        let pos = self.world.positions();
        let (dist, spread) = match self.world.beacon {
            Some(b) => {
                let (d, s) = taxis_metrics(&pos, b);
                (Some(d), Some(s))
            }
            None => (None, None),
        };
        MetricsRow {
            t_s: self.world.clock_s,
            cluster_fraction: cluster_fraction(&pos, self.scenario.params.cluster_threshold),
            centroid_beacon_dist: dist,
            max_spread: spread,
        }
    }

    /// Advance one control cycle, reporting every robot's trace record.
    pub fn step_control(
        &mut self,
        mut on_record: impl FnMut(usize, &TraceRecord),
    ) -> Result<(), SimError> {
        for (i, ctx) in self.robots.iter_mut().enumerate() {
            let avoidance = ctx
                .var("avoidanceRadius")
                .and_then(|v| v.as_real())
                .unwrap_or(0.0);
            match ctx.platform_mut() {
                RobotAdapter::Aggregation(a) => a.sense(&self.world, i),
                RobotAdapter::Taxis(t) => t.sense(
                    &self.world,
                    i,
                    avoidance * self.scenario.params.radius_unit_cm,
                )?,
            }
        }
        for (i, ctx) in self.robots.iter_mut().enumerate() {
            let record = ctx
                .step()
                .map_err(|e| SimError::Controller(alloc::format!("{e}")))?;
            on_record(i, &record);
            if let Some(fault) = record.fault {
                return Err(SimError::Fault { robot: i, fault });
            }
        }
        for (ctx, body) in self.robots.iter().zip(self.world.robots.iter_mut()) {
            let (v, w) = ctx.platform().command(|n| ctx.var(n));
            let cmd = body_to_wheel(v, w, body.max_wheel_speed, body.wheel_distance);
            body.set_wheels(cmd.left, cmd.right);
        }
        for _ in 0..self.substeps {
            self.world.physics_step();
        }
        self.cycles += 1;
        self.world.clock_s = self.cycles as f64 * self.scenario.control_dt;
        Ok(())
    }

    /// Run the whole scenario, sampling metrics once per simulated second.
    pub fn run(
        &mut self,
        mut on_record: impl FnMut(usize, &TraceRecord),
    ) -> Result<SimOutcome, SimError> {
        let initial = self.metrics();
        let mut rows = Vec::new();
        let dt = self.scenario.control_dt;
        let total = libm::round(self.scenario.duration_s / dt) as u64;
        let mut next_sample = 1u64;
        while self.cycles < total {
            self.step_control(&mut on_record)?;
            let t = self.cycles as f64 * dt;
            while (next_sample as f64) <= t + 1e-9
                && next_sample as f64 <= self.scenario.duration_s + 1e-9
            {
                let mut row = self.metrics();
                row.t_s = next_sample as f64;
                rows.push(row);
                next_sample += 1;
            }
        }
        Ok(SimOutcome { initial, rows })
    }

    pub fn is_taxis(&self) -> bool {
        self.kind == AdapterKind::Taxis
    }
}

/// False for NaN as well as for non-positive values.
fn positive(x: f64) -> bool {
    x > 0.0
}

/// Compile a corpus model. The corpus is checked by the test suite, so a
/// failure here is a build defect.
pub fn reference_machine(source: &str, machine: &str) -> CompiledMachine {
    let unit = crate::dsl::parse(source).expect("corpus model parses");
    let model = crate::analyzer::check(&unit).expect("corpus model checks");
    crate::compiler::compile(&model, machine).expect("corpus model compiles")
}

/// Initial poses by rejection sampling. Positions come from the placement
/// stream, headings from each robot's own stream.
fn place(s: &Scenario, kind: AdapterKind) -> Result<Vec<RobotBody>, SimError> {
    let p = &s.params;
    let r = p.body_radius;
    let (hw, hh) = (s.arena.width / 2.0, s.arena.height / 2.0);
    let (x0, x1) = match kind {
        AdapterKind::Aggregation => (-hw + r, hw - r),
        AdapterKind::Taxis => (-hw + r, -hw + s.arena.width / 3.0 - r),
    };
    let (y0, y1) = (-hh + r, hh - r);
    if !(x1 > x0 && y1 > y0) {
        return Err(SimError::Config("arena too small for the robots"));
    }
    let mut placement = stream(s.seed, 0);
    let mut bodies: Vec<RobotBody> = Vec::with_capacity(s.robots);
    for i in 0..s.robots {
        let mut heading = stream(s.seed, i as u64 + 1);
        let mut tries = 0;
        let (x, y) = loop {
            tries += 1;
            if tries > 10_000 {
                return Err(SimError::Placement(s.robots));
            }
            let x = placement.random_range(x0..x1);
            let y = placement.random_range(y0..y1);
            if bodies
                .iter()
                .all(|b| libm::hypot(b.pose.x - x, b.pose.y - y) >= b.radius + r)
            {
                break (x, y);
            }
        };
        let theta = heading.random_range(-PI..PI);
        bodies.push(RobotBody {
            pose: Pose::new(x, y, theta),
            wheels: (0.0, 0.0),
            radius: r,
            wheel_distance: p.wheel_distance,
            max_wheel_speed: p.max_wheel_speed,
        });
    }
    Ok(bodies)
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}
