//! Platform adapters binding the reference controllers to simulated robots.
//!
//! Each control cycle the simulator hands the adapter a fresh sensor
//! reading ([`RobotAdapter::sense`]), steps the machine, then asks for the
//! body command to latch onto the wheels ([`RobotAdapter::command`]).

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::geometry::normalize_angle;
use super::world::{LosHit, Neighbor, World};
use super::SimError;
use crate::runtime::{MachineIo, Platform};
use crate::value::Value;

/// Aggregation: one line-of-sight reading per cycle.
///
/// The machine's operations store the commanded body velocity in the
/// interface variables `linearSpeed` (cm/s) and `angularSpeed` (rad/s).
/// If a model leaves `MoveClockwise`/`RotateClockwise` platform-bound, the
/// adapter writes those variables itself.
#[derive(Clone, Debug, Default)]
pub struct AggregationAdapter {
    pub los: Option<LosHit>,
}

impl AggregationAdapter {
    pub const OPS: [&'static str; 2] = ["MoveClockwise", "RotateClockwise"];

    pub fn sense(&mut self, world: &World, i: usize) {
        self.los = Some(world.raycast(i));
    }
}

impl Platform for AggregationAdapter {
    fn provides(&self, op: &str) -> bool {
        Self::OPS.contains(&op)
    }

    fn publish(&mut self, io: &mut MachineIo<'_>) {
        match self.los {
            Some(LosHit::Wall) => io.raise("seeWall"),
            Some(LosHit::Robot) => io.raise("seeRobot"),
            None => false,
        };
    }

    fn invoke(&mut self, op: &str, args: &[Value], io: &mut MachineIo<'_>) -> Result<(), String> {
        let num = |k: usize| {
            args.get(k)
                .and_then(Value::as_real)
                .ok_or_else(|| "bad argument".to_string())
        };
        match op {
            "MoveClockwise" => {
                io.set("angularSpeed", Value::Real(num(0)?));
                io.set("linearSpeed", Value::Real(num(1)?));
                Ok(())
            }
            "RotateClockwise" => {
                io.set("angularSpeed", Value::Real(num(0)?));
                io.set("linearSpeed", Value::Real(0.0));
                Ok(())
            }
            _ => Err("not bound by the aggregation platform".to_string()),
        }
    }
}

/// Locomotion and sensing constants of the taxis platform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaxisParams {
    pub forward_speed: f64,
    /// Angular speed of `Turn`, rad/s.
    pub turn_rate: f64,
    /// Range of the neighbour sensing used by coherence, cm.
    pub coherence_range: f64,
    /// Centimetres per unit of the model's radius variables.
    pub radius_unit_cm: f64,
    pub control_dt: f64,
}

impl Default for TaxisParams {
    fn default() -> Self {
        TaxisParams {
            forward_speed: 6.4,
            turn_rate: 5.0,
            coherence_range: 300.0,
            radius_unit_cm: 100.0,
            control_dt: 0.1,
        }
    }
}

/// Swarm taxis: range-and-bearing neighbours, a light sensor, and turning
/// on the spot.
#[derive(Clone, Debug)]
pub struct TaxisAdapter {
    pub params: TaxisParams,
    /// Neighbours within the larger of the coherence range and any
    /// avoidance radius, nearest first.
    neighbors: Vec<Neighbor>,
    illuminated: bool,
    /// Rotation commanded since the last heading computation, rad.
    turned: f64,
    command: (f64, f64),
}

impl TaxisAdapter {
    pub const OPS: [&'static str; 5] = [
        "CheckIlluminationStatus",
        "CalcAvoidanceHeading",
        "CalcCoherenceHeading",
        "Turn",
        "MoveForward",
    ];

    pub fn new(params: TaxisParams) -> Self {
        TaxisAdapter {
            params,
            neighbors: Vec::new(),
            illuminated: false,
            turned: 0.0,
            command: (0.0, 0.0),
        }
    }

    pub fn sense(&mut self, world: &World, i: usize, avoidance_cm: f64) -> Result<(), SimError> {
        let radius = self.params.coherence_range.max(avoidance_cm);
        self.neighbors = world.neighbors_within(i, radius);
        self.illuminated = world.is_illuminated(i)?;
        Ok(())
    }

    /// Latched body command `(v, w)`.
    pub fn command(&self) -> (f64, f64) {
        self.command
    }

    fn avoidance_cm(&self, io: &MachineIo<'_>) -> f64 {
        io.real("avoidanceRadius").unwrap_or(0.0) * self.params.radius_unit_cm
    }

    /// Bearing of the mean position of `ns`, relative to the heading.
    fn mean_bearing(ns: &[Neighbor]) -> Option<f64> {
        if ns.is_empty() {
            return None;
        }
        let (sx, sy) = ns.iter().fold((0.0, 0.0), |(sx, sy), n| {
            (
                sx + n.range * libm::cos(n.bearing),
                sy + n.range * libm::sin(n.bearing),
            )
        });
        Some(libm::atan2(sy, sx))
    }

    fn set_heading(&mut self, io: &mut MachineIo<'_>, target: Option<f64>) {
        self.turned = 0.0;
        self.command = (0.0, 0.0);
        match target {
            Some(a) => {
                io.set("desiredTurningDegree", Value::Real(a));
                io.set("reached", Value::Bool(false));
            }
            None => {
                io.set("desiredTurningDegree", Value::Real(0.0));
                io.set("reached", Value::Bool(true));
            }
        }
    }

    fn turn(&mut self, angle: f64, io: &mut MachineIo<'_>) {
        let remaining = libm::fabs(angle) - self.turned;
        let max_step = self.params.turn_rate * self.params.control_dt;
        if remaining <= 0.0 {
            self.command = (0.0, 0.0);
            io.set("reached", Value::Bool(true));
            return;
        }
        let delta = remaining.min(max_step);
        self.turned += delta;
        let sign = if angle < 0.0 { -1.0 } else { 1.0 };
        self.command = (0.0, sign * delta / self.params.control_dt);
        io.set("reached", Value::Bool(remaining <= max_step));
    }
}

impl Platform for TaxisAdapter {
    fn provides(&self, op: &str) -> bool {
        Self::OPS.contains(&op)
    }

    fn publish(&mut self, io: &mut MachineIo<'_>) {
        let r = self.avoidance_cm(io);
        if self.neighbors.first().is_some_and(|n| n.range <= r) {
            io.raise("robotDetected");
        }
    }

    fn invoke(&mut self, op: &str, args: &[Value], io: &mut MachineIo<'_>) -> Result<(), String> {
        match op {
            "CheckIlluminationStatus" => {
                io.set("illuminated", Value::Bool(self.illuminated));
            }
            "CalcAvoidanceHeading" => {
                let r = self.avoidance_cm(io);
                let close: Vec<Neighbor> = self
                    .neighbors
                    .iter()
                    .copied()
                    .filter(|n| n.range <= r)
                    .collect();
                let away = Self::mean_bearing(&close).map(|b| normalize_angle(b + PI));
                self.set_heading(io, away);
            }
            "CalcCoherenceHeading" => {
                let range = self.params.coherence_range;
                let near: Vec<Neighbor> = self
                    .neighbors
                    .iter()
                    .copied()
                    .filter(|n| n.range <= range)
                    .collect();
                let toward = Self::mean_bearing(&near);
                self.set_heading(io, toward);
            }
            "Turn" => {
                let angle = args
                    .first()
                    .and_then(Value::as_real)
                    .ok_or_else(|| "bad argument".to_string())?;
                self.turn(angle, io);
            }
            "MoveForward" => self.command = (self.params.forward_speed, 0.0),
            _ => return Err("not bound by the taxis platform".to_string()),
        }
        Ok(())
    }
}

/// The adapter of one simulated robot.
#[derive(Clone, Debug)]
pub enum RobotAdapter {
    Aggregation(AggregationAdapter),
    Taxis(TaxisAdapter),
}

impl RobotAdapter {
    /// Body command `(v, w)` after a step. Aggregation reads it from the
    /// machine's speed variables.
    pub fn command(&self, var: impl Fn(&str) -> Option<Value>) -> (f64, f64) {
        match self {
            RobotAdapter::Aggregation(_) => {
                let get = |n: &str| var(n).and_then(|v| v.as_real()).unwrap_or(0.0);
                (get("linearSpeed"), get("angularSpeed"))
            }
            RobotAdapter::Taxis(t) => t.command(),
        }
    }
}

impl Platform for RobotAdapter {
    fn provides(&self, op: &str) -> bool {
        match self {
            RobotAdapter::Aggregation(a) => a.provides(op),
            RobotAdapter::Taxis(t) => t.provides(op),
        }
    }

    fn publish(&mut self, io: &mut MachineIo<'_>) {
        match self {
            RobotAdapter::Aggregation(a) => a.publish(io),
            RobotAdapter::Taxis(t) => t.publish(io),
        }
    }

    fn invoke(&mut self, op: &str, args: &[Value], io: &mut MachineIo<'_>) -> Result<(), String> {
        match self {
            RobotAdapter::Aggregation(a) => a.invoke(op, args, io),
            RobotAdapter::Taxis(t) => t.invoke(op, args, io),
        }
    }
}
