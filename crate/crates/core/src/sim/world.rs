//! Arena, robot bodies, sensing and collision handling.

use alloc::vec::Vec;

use super::geometry::{normalize_angle, point_segment_distance, ray_box_exit, ray_circle};
use super::kinematics::{integrate_pose, Pose};
use super::SimError;

/// e-puck defaults, cm and cm/s.
pub const BODY_RADIUS_CM: f64 = 3.7;
pub const WHEEL_DISTANCE_CM: f64 = 5.1;
pub const MAX_WHEEL_SPEED_CMS: f64 = 12.8;

#[derive(Clone, Debug, PartialEq)]
pub struct RobotBody {
    pub pose: Pose,
    /// Left and right wheel speeds, cm/s.
    pub wheels: (f64, f64),
    pub radius: f64,
    pub wheel_distance: f64,
    pub max_wheel_speed: f64,
}

impl RobotBody {
    pub fn epuck(pose: Pose) -> Self {
        RobotBody {
            pose,
            wheels: (0.0, 0.0),
            radius: BODY_RADIUS_CM,
            wheel_distance: WHEEL_DISTANCE_CM,
            max_wheel_speed: MAX_WHEEL_SPEED_CMS,
        }
    }

    /// Set wheel speeds, clamping each to the speed limit. Returns true if
    /// clamping was needed.
    pub fn set_wheels(&mut self, left: f64, right: f64) -> bool {
        let m = self.max_wheel_speed;
        let (l, r) = (left.clamp(-m, m), right.clamp(-m, m));
        self.wheels = (l, r);
        l != left || r != right
    }
}

/// Axis-aligned arena centred on the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

impl Arena {
    pub fn half_w(&self) -> f64 {
        self.width / 2.0
    }

    pub fn half_h(&self) -> f64 {
        self.height / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LosHit {
    Robot,
    Wall,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    /// Centre-to-centre distance, cm.
    pub range: f64,
    /// Relative to the heading, in (-pi, pi].
    pub bearing: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub arena: Arena,
    pub robots: Vec<RobotBody>,
    pub beacon: Option<(f64, f64)>,
    pub physics_dt: f64,
    pub control_dt: f64,
    pub clock_s: f64,
}

/// Collision passes per physics step.
pub const COLLISION_PASSES: usize = 8;

impl World {
    pub fn new(
        arena: Arena,
        robots: Vec<RobotBody>,
        beacon: Option<(f64, f64)>,
        physics_dt: f64,
        control_dt: f64,
    ) -> Self {
        World {
            arena,
            robots,
            beacon,
            physics_dt,
            control_dt,
            clock_s: 0.0,
        }
    }

    /// Physics substeps per control step.
    pub fn substeps(&self) -> Result<usize, SimError> {
        if !(self.physics_dt > 0.0 && self.control_dt > 0.0) {
            return Err(SimError::Config("time steps must be positive"));
        }
        let n = libm::round(self.control_dt / self.physics_dt);
        if n < 1.0 || libm::fabs(n * self.physics_dt - self.control_dt) > 1e-9 * self.control_dt {
            return Err(SimError::Config(
                "control step must be a positive integer multiple of the physics step",
            ));
        }
        Ok(n as usize)
    }

    /// What the forward ray of robot `i` hits first. Ties go to the robot.
    pub fn raycast(&self, i: usize) -> LosHit {
        let me = &self.robots[i].pose;
        let (dx, dy) = (libm::cos(me.theta), libm::sin(me.theta));
        let a = &self.arena;
        let wall = ray_box_exit(me.x, me.y, dx, dy, a.half_w(), a.half_h());
        let nearest_robot = self
            .robots
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .filter_map(|(_, r)| ray_circle(me.x, me.y, dx, dy, r.pose.x, r.pose.y, r.radius))
            .fold(f64::INFINITY, f64::min);
        if nearest_robot <= wall {
            LosHit::Robot
        } else {
            LosHit::Wall
        }
    }

    /// Other robots whose centres lie within `radius` of robot `i`, nearest
    /// first, ties by index.
    pub fn neighbors_within(&self, i: usize, radius: f64) -> Vec<Neighbor> {
        let me = &self.robots[i].pose;
        let mut out: Vec<Neighbor> = self
            .robots
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .filter_map(|(j, r)| {
                let (dx, dy) = (r.pose.x - me.x, r.pose.y - me.y);
                let range = libm::hypot(dx, dy);
                (range <= radius).then(|| Neighbor {
                    index: j,
                    range,
                    bearing: normalize_angle(libm::atan2(dy, dx) - me.theta),
                })
            })
            .collect();
        out.sort_by(|a, b| a.range.total_cmp(&b.range).then(a.index.cmp(&b.index)));
        out
    }

    /// Whether the segment from the beacon to robot `i`'s centre clears
    /// every other robot's disc.
    pub fn is_illuminated(&self, i: usize) -> Result<bool, SimError> {
        let (bx, by) = self.beacon.ok_or(SimError::NoBeacon)?;
        let me = &self.robots[i].pose;
        Ok(!self.robots.iter().enumerate().any(|(j, r)| {
            j != i && point_segment_distance(r.pose.x, r.pose.y, bx, by, me.x, me.y) < r.radius
        }))
    }

    /// Push overlapping discs apart, half each along the centre line, then
    /// clamp into the arena; repeated up to [`COLLISION_PASSES`] times.
    pub fn resolve_collisions(&mut self) {
        for _ in 0..COLLISION_PASSES {
            let mut moved = false;
            let n = self.robots.len();
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (&self.robots[i], &self.robots[j]);
                    let min = a.radius + b.radius;
                    let (dx, dy) = (b.pose.x - a.pose.x, b.pose.y - a.pose.y);
                    let d = libm::hypot(dx, dy);
                    if d >= min {
                        continue;
                    }
                    // Coincident centres: separate along x.
                    let (ux, uy) = if d > 0.0 {
                        (dx / d, dy / d)
                    } else {
                        (1.0, 0.0)
                    };
                    let push = (min - d) / 2.0;
                    self.robots[i].pose.x -= ux * push;
                    self.robots[i].pose.y -= uy * push;
                    self.robots[j].pose.x += ux * push;
                    self.robots[j].pose.y += uy * push;
                    moved = true;
                }
            }
            for r in &mut self.robots {
                moved |= clamp_into(&self.arena, r);
            }
            if !moved {
                break;
            }
        }
    }

    /// One physics step: integrate every pose, then resolve collisions.
    pub fn physics_step(&mut self) {
        let dt = self.physics_dt;
        for r in &mut self.robots {
            r.pose = integrate_pose(r.pose, r.wheels.0, r.wheels.1, r.wheel_distance, dt);
        }
        self.resolve_collisions();
    }

    /// Every centre lies inside the arena inset by the body radius.
    pub fn contained(&self) -> bool {
        let a = &self.arena;
        self.robots.iter().all(|r| {
            let (mx, my) = (a.half_w() - r.radius, a.half_h() - r.radius);
            r.pose.x >= -mx && r.pose.x <= mx && r.pose.y >= -my && r.pose.y <= my
        })
    }

    pub fn positions(&self) -> Vec<(f64, f64)> {
        self.robots.iter().map(|r| (r.pose.x, r.pose.y)).collect()
    }
}

fn clamp_into(a: &Arena, r: &mut RobotBody) -> bool {
    let (mx, my) = (a.half_w() - r.radius, a.half_h() - r.radius);
    let (x, y) = (r.pose.x.clamp(-mx, mx), r.pose.y.clamp(-my, my));
    let changed = x != r.pose.x || y != r.pose.y;
    r.pose.x = x;
    r.pose.y = y;
    changed
}
