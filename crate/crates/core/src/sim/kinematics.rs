//! Differential-drive kinematics.

use super::geometry::normalize_angle;

/// Body velocity from normalized wheel speeds in [-1, 1]:
/// `v = (vl + vr) / 2 * max`, `w = (vr - vl) * max / l`.
pub fn wheel_to_body(
    vl_norm: f64,
    vr_norm: f64,
    max_speed: f64,
    wheel_distance: f64,
) -> (f64, f64) {
    let v = (vl_norm + vr_norm) / 2.0 * max_speed;
    let w = (vr_norm - vl_norm) * max_speed / wheel_distance;
    (v, w)
}

/// Body velocity from wheel speeds in cm/s.
pub fn body_velocity(vl: f64, vr: f64, wheel_distance: f64) -> (f64, f64) {
    ((vl + vr) / 2.0, (vr - vl) / wheel_distance)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WheelCommand {
    pub left: f64,
    pub right: f64,
    /// At least one wheel had to be limited to `±max_speed`.
    pub clamped: bool,
}

/// Wheel speeds (cm/s) realizing body velocity `(v, w)`:
/// `vl = v - w l / 2`, `vr = v + w l / 2`, each clamped to `±max_speed`.
pub fn body_to_wheel(v: f64, w: f64, max_speed: f64, wheel_distance: f64) -> WheelCommand {
    let half = w * wheel_distance / 2.0;
    let (left, right) = (v - half, v + half);
    let (cl, cr) = (
        left.clamp(-max_speed, max_speed),
        right.clamp(-max_speed, max_speed),
    );
    WheelCommand {
        left: cl,
        right: cr,
        clamped: cl != left || cr != right,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading in (-pi, pi].
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }
}

/// One explicit Euler step of the unicycle model driven by wheel speeds
/// `(vl, vr)` in cm/s.
pub fn integrate_pose(pose: Pose, vl: f64, vr: f64, wheel_distance: f64, dt: f64) -> Pose {
    let (v, w) = body_velocity(vl, vr, wheel_distance);
    Pose {
        x: pose.x + v * libm::cos(pose.theta) * dt,
        y: pose.y + v * libm::sin(pose.theta) * dt,
        theta: normalize_angle(pose.theta + w * dt),
    }
}
