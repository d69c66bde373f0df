//! Nearly-disk star domains `r < 1 + t·ζ(θ)` and axis-aligned rectangles.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::search::{angular_distance, normalize_angle, refine_root, AngleArc};
use crate::trig::TrigPolynomial;

/// Grid used to validate positivity of the boundary radius.
const POSITIVITY_GRID: usize = 4096;
/// Grid used to locate local minima of the radius before refinement.
const CONTACT_GRID: usize = 4096;
/// Relative tolerance on `r` for "attains the minimum".
pub const CONTACT_RTOL: f64 = 1e-9;
/// Angles closer than this are the same point.
const ANGLE_MERGE_TOL: f64 = 1e-9;

/// The domain `{(r, θ) : r < 1 + t·ζ(θ)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarDomain {
    zeta: TrigPolynomial,
    t: f64,
}

impl StarDomain {
    pub fn new(zeta: TrigPolynomial, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidDomain(format!("amplitude t = {t} is not finite")));
        }
        let domain = StarDomain { zeta, t };
        for j in 0..POSITIVITY_GRID {
            let theta = TAU * j as f64 / POSITIVITY_GRID as f64;
            let r = domain.radius(theta);
            if !(r > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "boundary radius {r} is not positive at θ = {theta}"
                )));
            }
        }
        Ok(domain)
    }

    /// The unit disk.
    pub fn disk() -> Self {
        StarDomain {
            zeta: TrigPolynomial::zero(),
            t: 0.0,
        }
    }

    pub fn zeta(&self) -> &TrigPolynomial {
        &self.zeta
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `1 + t·ζ(θ)`.
    pub fn radius(&self, theta: f64) -> f64 {
        1.0 + self.t * self.zeta.eval(theta)
    }

    pub fn radius_derivative(&self, order: u32, theta: f64) -> f64 {
        if order == 0 {
            return self.radius(theta);
        }
        self.t * self.zeta.eval_derivative(order, theta)
    }

    pub fn boundary_point(&self, theta: f64) -> [f64; 2] {
        let r = self.radius(theta);
        let (s, c) = theta.sin_cos();
        [r * c, r * s]
    }

    /// `d/dθ` of the boundary parametrization.
    pub fn boundary_tangent(&self, theta: f64) -> [f64; 2] {
        let r = self.radius(theta);
        let dr = self.radius_derivative(1, theta);
        let (s, c) = theta.sin_cos();
        [dr * c - r * s, dr * s + r * c]
    }

    /// Arclength element `ds/dθ = sqrt(r² + r′²)`.
    pub fn arclength_element(&self, theta: f64) -> f64 {
        self.radius(theta).hypot(self.radius_derivative(1, theta))
    }

    /// Exact curvature of the boundary curve at polar angle `theta`.
    pub fn curvature(&self, theta: f64) -> f64 {
        let r = self.radius(theta);
        let r1 = self.radius_derivative(1, theta);
        let r2 = self.radius_derivative(2, theta);
        let q = r * r + r1 * r1;
        (r * r + 2.0 * r1 * r1 - r * r2) / (q * q.sqrt())
    }

    /// θ-derivative of the curvature, by the quotient rule on the exact formula.
    pub fn curvature_derivative(&self, theta: f64) -> f64 {
        let r = self.radius(theta);
        let r1 = self.radius_derivative(1, theta);
        let r2 = self.radius_derivative(2, theta);
        let r3 = self.radius_derivative(3, theta);
        let num = r * r + 2.0 * r1 * r1 - r * r2;
        let dnum = 2.0 * r * r1 + 4.0 * r1 * r2 - r1 * r2 - r * r3;
        let q = r * r + r1 * r1;
        let dq = 2.0 * r * r1 + 2.0 * r1 * r2;
        (dnum * q - 1.5 * num * dq) / q.powf(2.5)
    }

    /// True when the boundary is invariant under `θ → θ + π`.
    pub fn is_centrally_symmetric(&self) -> bool {
        self.t == 0.0 || self.zeta.has_only_even_modes()
    }

    /// True when the radius profile is constant, i.e. the domain is a disk.
    pub fn is_circle(&self) -> bool {
        self.t == 0.0 || self.zeta.is_constant()
    }

    /// Images of `theta` under the coordinate symmetries of the profile
    /// (`θ → −θ` for cosine-only profiles, `θ → θ + π` for even-mode
    /// profiles), normalized, deduplicated and sorted. Always contains
    /// `theta` itself.
    pub fn symmetry_orbit(&self, theta: f64) -> Vec<f64> {
        let mut orbit = vec![normalize_angle(theta)];
        let reflect = self.t == 0.0 || self.zeta.has_only_cosines();
        let rotate = self.is_centrally_symmetric();
        if reflect {
            orbit.push(normalize_angle(-theta));
        }
        if rotate {
            orbit.push(normalize_angle(theta + PI));
            if reflect {
                orbit.push(normalize_angle(PI - theta));
            }
        }
        dedup_angles(orbit, 1e-12)
    }
}

/// `ζ + ζ″`, the first-order coefficient of the curvature:
/// `κ(θ, t) = 1 − t·(ζ + ζ″)(θ) + O(t²)`.
pub fn curvature_linear_term(zeta: &TrigPolynomial) -> TrigPolynomial {
    zeta.map_modes(|k| 1.0 - (k * k) as f64)
}

/// Contact points of the largest origin-centred inscribed circle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactPoints {
    /// Angles in `[0, 2π)`, sorted. Empty when `all_boundary` is set.
    pub angles: Vec<f64>,
    /// The domain is a disk; every boundary point touches the circle.
    pub all_boundary: bool,
    pub min_radius: f64,
}

/// Angles where the boundary radius attains its global minimum.
///
/// Only defined for centrally symmetric domains, where the largest
/// origin-centred inscribed circle is the largest inscribed circle.
pub fn contact_points(domain: &StarDomain) -> Result<ContactPoints> {
    if !domain.is_centrally_symmetric() {
        return Err(Error::NotCentrallySymmetric);
    }
    if domain.is_circle() {
        return Ok(ContactPoints {
            angles: Vec::new(),
            all_boundary: true,
            min_radius: domain.radius(0.0),
        });
    }
    // Work with g = r − 1 = tζ to keep full relative precision of the offset.
    let g = |th: f64| domain.radius_derivative(0, th) - 1.0;
    let dg = |th: f64| domain.radius_derivative(1, th);
    let d2g = |th: f64| domain.radius_derivative(2, th);
    let n = CONTACT_GRID;
    let h = TAU / n as f64;
    let values: Vec<f64> = (0..n).map(|j| g(h * j as f64)).collect();

    let mut candidates = Vec::new();
    for j in 0..n {
        let prev = values[(j + n - 1) % n];
        let next = values[(j + 1) % n];
        let here = values[j];
        if !(here <= prev && here < next) {
            continue;
        }
        let theta = h * j as f64;
        let refined = if dg(theta) == 0.0 {
            theta
        } else {
            let (lo, hi) = (theta - h, theta + h);
            if dg(lo) < 0.0 && dg(hi) > 0.0 {
                refine_root(dg, d2g, lo, hi).x
            } else {
                theta
            }
        };
        let best = if g(refined) <= here { refined } else { theta };
        candidates.push(best);
    }

    let radii: Vec<f64> = candidates.iter().map(|&th| domain.radius(th)).collect();
    let min_radius = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let angles = candidates
        .iter()
        .zip(&radii)
        .filter(|&(_, &r)| r <= min_radius * (1.0 + CONTACT_RTOL))
        .map(|(&th, _)| normalize_angle(th))
        .collect();
    Ok(ContactPoints {
        angles: dedup_angles(angles, ANGLE_MERGE_TOL),
        all_boundary: false,
        min_radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub convex: bool,
    pub min_curvature: f64,
    pub min_curvature_angle: f64,
}

/// Checks strict positivity of the exact curvature on an equally spaced grid.
/// Ties for the minimum resolve to the smallest angle.
pub fn is_convex(domain: &StarDomain, grid_size: usize) -> Result<ConvexityReport> {
    if grid_size < 256 {
        return Err(Error::InvalidArgument(format!(
            "convexity grid needs at least 256 points, got {grid_size}"
        )));
    }
    let mut min_curvature = f64::INFINITY;
    let mut min_curvature_angle = 0.0;
    for j in 0..grid_size {
        let theta = TAU * j as f64 / grid_size as f64;
        let k = domain.curvature(theta);
        if k < min_curvature {
            min_curvature = k;
            min_curvature_angle = theta;
        }
    }
    Ok(ConvexityReport {
        convex: min_curvature > 0.0,
        min_curvature,
        min_curvature_angle,
    })
}

/// Sorts angles and merges those within `tol` of each other (cyclically).
pub fn dedup_angles(mut angles: Vec<f64>, tol: f64) -> Vec<f64> {
    angles.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(angles.len());
    for a in angles {
        if out.iter().all(|&b| angular_distance(a, b) > tol) {
            out.push(a);
        }
    }
    out
}

/// Keeps the part of a sorted angle list lying on `arc`.
pub fn restrict_to_arc(angles: &[f64], arc: &AngleArc) -> Vec<f64> {
    angles.iter().copied().filter(|&a| arc.contains(a)).collect()
}

/// The rectangle `(−L, L) × (−l, l)` with `L ≥ l > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectangleDomain {
    half_length: f64,
    half_width: f64,
}

impl RectangleDomain {
    pub fn new(half_length: f64, half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_length.is_finite()) || half_width <= 0.0 {
            return Err(Error::InvalidDomain(format!(
                "rectangle half-sides must be positive and finite, got L = {half_length}, l = {half_width}"
            )));
        }
        if half_length < half_width {
            return Err(Error::InvalidDomain(format!(
                "half-length L = {half_length} must be at least half-width l = {half_width}"
            )));
        }
        Ok(RectangleDomain {
            half_length,
            half_width,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn is_square(&self) -> bool {
        self.half_length == self.half_width
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x.abs() <= self.half_length && y.abs() <= self.half_width
    }
}
