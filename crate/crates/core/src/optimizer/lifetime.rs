//! Straight-line extrapolation of how long a link stays within range.

use crate::mobility::VehicleState;

/// Relative speeds below this (m/s) count as standing still.
const STILL_MPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lifetime {
    /// Whole control cycles before the endpoints separate beyond range.
    Cycles(u32),
    /// No separation within the prediction horizon.
    Unbounded,
}

impl Lifetime {
    pub fn at_least(self, cycles: u32) -> bool {
        match self {
            Lifetime::Cycles(c) => c >= cycles,
            Lifetime::Unbounded => true,
        }
    }
}

/// Lifetime of a link with relative position `(rx, ry)` and relative
/// velocity `(wx, wy)`.
pub fn lifetime_from_motion(rx: f64, ry: f64, wx: f64, wy: f64, range_m: f64, step_s: f64, horizon_cycles: u32) -> Lifetime {
    let c = rx * rx + ry * ry - range_m * range_m;
    if c > 0.0 {
        return Lifetime::Cycles(0);
    }
    let a = wx * wx + wy * wy;
    if a < STILL_MPS * STILL_MPS {
        return Lifetime::Unbounded;
    }
    let b = 2.0 * (rx * wx + ry * wy);
    // c <= 0 makes the discriminant non-negative and the larger root non-negative
    let t = (-b + libm::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
    let cycles = libm::floor(t / step_s + 1e-9);
    if cycles > horizon_cycles as f64 {
        Lifetime::Unbounded
    } else {
        Lifetime::Cycles(cycles as u32)
    }
}

pub fn predict_link_lifetime(a: &VehicleState, b: &VehicleState, range_m: f64, step_s: f64, horizon_cycles: u32) -> Lifetime {
    let (ax, ay) = a.velocity();
    let (bx, by) = b.velocity();
    lifetime_from_motion(b.x - a.x, b.y - a.y, bx - ax, by - ay, range_m, step_s, horizon_cycles)
}

/// Lifetime of a vehicle's link to a fixed point such as an RSU.
pub fn predict_fixed_lifetime(v: &VehicleState, x: f64, y: f64, range_m: f64, step_s: f64, horizon_cycles: u32) -> Lifetime {
    let (vx, vy) = v.velocity();
    lifetime_from_motion(v.x - x, v.y - y, vx, vy, range_m, step_s, horizon_cycles)
}
