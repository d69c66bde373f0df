//! One-dimensional search primitives on angles: arcs, golden-section
//! maximization, parabolic steps and safeguarded Newton root polishing.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps any angle to `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    d.min(TAU - d)
}

/// A closed arc `[start, end]` of the circle, `end - start ≤ 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleArc {
    pub start: f64,
    pub end: f64,
}

impl AngleArc {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidArgument("arc bounds must be finite".into()));
        }
        if end <= start {
            return Err(Error::InvalidArgument(format!(
                "arc end {end} must exceed start {start}"
            )));
        }
        if end - start > TAU + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "arc length {} exceeds 2π",
                end - start
            )));
        }
        Ok(AngleArc { start, end })
    }

    pub fn full() -> Self {
        AngleArc {
            start: 0.0,
            end: TAU,
        }
    }

    /// `[0, π/2]`, the boundary portion in the closed first quadrant.
    pub fn first_quadrant() -> Self {
        AngleArc {
            start: 0.0,
            end: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_full(&self) -> bool {
        self.length() >= TAU - 1e-12
    }

    pub fn contains(&self, theta: f64) -> bool {
        if self.is_full() {
            return true;
        }
        let offset = normalize_angle(theta - self.start);
        offset <= self.length() + 1e-12 || TAU - offset <= 1e-12
    }

    /// Number of grid intervals matching a density of `full_circle` points
    /// per turn, never fewer than 16.
    pub fn intervals(&self, full_circle: usize) -> usize {
        let n = (full_circle as f64 * self.length() / TAU).ceil() as usize;
        n.max(16)
    }

    /// Equally spaced sample angles. A full circle yields `n` points without
    /// repeating the start; a proper arc yields `n + 1` points including both
    /// endpoints. Angles are not normalized.
    pub fn grid(&self, full_circle: usize) -> Vec<f64> {
        let n = self.intervals(full_circle);
        let h = self.length() / n as f64;
        let count = if self.is_full() { n } else { n + 1 };
        (0..count).map(|i| self.start + h * i as f64).collect()
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
///
/// Returns the final bracket midpoint candidate and its value.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while (b - a) > tol && iterations < 200 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iterations += 1;
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Vertex of the parabola through three points, if it is a proper maximum or
/// minimum (nonzero curvature).
pub fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (x[1] - x[0]) * (y[1] - y[2]);
    let d2 = (x[1] - x[2]) * (y[1] - y[0]);
    let denom = d1 - d2;
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let v = x[1] - 0.5 * ((x[1] - x[0]) * d1 - (x[1] - x[2]) * d2) / denom;
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub const ROOT_MAX_ITER: usize = 60;
pub const ROOT_STEP_TOL: f64 = 1e-13;

/// Newton iteration for a root of `g` inside `[lo, hi]`, falling back to
/// bisection whenever the step leaves the bracket. Requires
/// `g(lo)·g(hi) ≤ 0`.
pub fn refine_root(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Root {
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Root {
            x: lo,
            converged: true,
            iterations: 0,
        };
    }
    if g_hi == 0.0 {
        return Root {
            x: hi,
            converged: true,
            iterations: 0,
        };
    }
    let mut x = 0.5 * (lo + hi);
    for it in 1..=ROOT_MAX_ITER {
        let gx = g(x);
        if gx == 0.0 {
            return Root {
                x,
                converged: true,
                iterations: it,
            };
        }
        if (gx < 0.0) == (g_lo < 0.0) {
            lo = x;
            g_lo = gx;
        } else {
            hi = x;
        }
        let slope = dg(x);
        let mut next = x - gx / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step < ROOT_STEP_TOL || hi - lo < ROOT_STEP_TOL {
            return Root {
                x,
                converged: true,
                iterations: it,
            };
        }
    }
    Root {
        x,
        converged: false,
        iterations: ROOT_MAX_ITER,
    }
}

/// Bisection on a sign change of `g` in `[lo, hi]` down to `tol`.
pub fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut g_lo = g(lo);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
