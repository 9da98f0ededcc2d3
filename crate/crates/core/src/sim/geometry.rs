//! Plane geometry for sensing.

use core::f64::consts::{PI, TAU};

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut r = a - TAU * libm::floor((a + PI) / TAU);
    // r is now in [-pi, pi); move the lower end to the upper one.
    if r <= -PI {
        r += TAU;
    }
    if r > PI {
        r -= TAU;
    }
    r
}

/// Smallest `t >= 0` with `|o + t d - c| = r`, for a unit direction `d`.
pub fn ray_circle(ox: f64, oy: f64, dx: f64, dy: f64, cx: f64, cy: f64, r: f64) -> Option<f64> {
    let (fx, fy) = (ox - cx, oy - cy);
    let b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - r * r;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = libm::sqrt(disc);
    let (t0, t1) = (-b - s, -b + s);
    if t0 >= 0.0 {
        Some(t0)
    } else if t1 >= 0.0 {
        Some(t1)
    } else {
        None
    }
}

/// Distance along a unit ray from a point inside the origin-centred
/// rectangle `[-hw, hw] x [-hh, hh]` to its boundary.
pub fn ray_box_exit(ox: f64, oy: f64, dx: f64, dy: f64, hw: f64, hh: f64) -> f64 {
    let mut t = f64::INFINITY;
    if dx > 0.0 {
        t = t.min((hw - ox) / dx);
    } else if dx < 0.0 {
        t = t.min((-hw - ox) / dx);
    }
    if dy > 0.0 {
        t = t.min((hh - oy) / dy);
    } else if dy < 0.0 {
        t = t.min((-hh - oy) / dy);
    }
    t.max(0.0)
}

/// Distance from point `p` to the segment `a`-`b`.
pub fn point_segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (ex, ey) = (bx - ax, by - ay);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 {
        (((px - ax) * ex + (py - ay) * ey) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    libm::hypot(px - (ax + t * ex), py - (ay + t * ey))
}
