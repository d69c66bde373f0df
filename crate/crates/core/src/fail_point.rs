//! Boundary maxima of `|∇u|²` on star domains, monotonicity checks, and the
//! convergence harness comparing numerical fail points with predictions.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{contact_points, dedup_angles, StarDomain};
use crate::perturbation::{boundary_gradient_expansion, fail_functional, predict_fail_point, Dimension};
use crate::report::csv_line;
use crate::search::{angular_distance, golden_section_max, normalize_angle, parabolic_vertex, refine_root, AngleArc};
use crate::solver::{solve_adaptive, BoundaryProfile, SolverOptions, TorsionSolution};
use crate::trig::TrigPolynomial;

/// Default number of samples on the full circle.
pub const DEFAULT_SAMPLES: usize = 4096;
/// Relative tolerance under which two maxima count as tied.
pub const TIE_RTOL: f64 = 1e-9;
/// Angles closer than this to a symmetry image are merged.
pub const SYMMETRY_TOL: f64 = 1e-6;
/// Largest accepted `|dE/dθ|` at a refined interior maximum.
pub const DERIVATIVE_TOL: f64 = 1e-10;
/// Smallest sample count accepted by the monotonicity checks.
pub const MIN_MONOTONICITY_SAMPLES: usize = 512;
// Refined maxima this close to an arc end are snapped to it.
const ENDPOINT_TOL: f64 = 1e-9;
// A profile whose sampled spread is below this fraction of its size is flat.
const FLAT_RTOL: f64 = 1e-12;

/// A boundary quantity `E(θ)` with its angular derivative.
pub trait BoundaryField: Sync {
    fn value(&self, theta: f64) -> f64;
    fn derivative(&self, theta: f64) -> f64;
    /// The domain whose symmetries the field shares.
    fn domain(&self) -> &StarDomain;
}

impl BoundaryField for TorsionSolution {
    fn value(&self, theta: f64) -> f64 {
        self.boundary_grad_sq(theta)
    }

    fn derivative(&self, theta: f64) -> f64 {
        self.boundary_grad_sq_derivative(theta)
    }

    fn domain(&self) -> &StarDomain {
        TorsionSolution::domain(self)
    }
}

/// The first-order model `1/4 + (t/2)·𝓕(θ)` of `|∇u|²` in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderModel {
    domain: StarDomain,
    functional: TrigPolynomial,
}

impl FirstOrderModel {
    pub fn new(domain: StarDomain) -> Self {
        let functional = fail_functional(domain.zeta());
        FirstOrderModel { domain, functional }
    }
}

impl BoundaryField for FirstOrderModel {
    fn value(&self, theta: f64) -> f64 {
        boundary_gradient_expansion(self.domain.zeta(), self.domain.t(), theta, Dimension::PLANE)
    }

    fn derivative(&self, theta: f64) -> f64 {
        0.5 * self.domain.t() * self.functional.eval_derivative(1, theta)
    }

    fn domain(&self) -> &StarDomain {
        &self.domain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailAngle {
    pub angle: f64,
    pub value: f64,
    /// `dE/dθ` at the angle; zero up to refinement accuracy unless `endpoint`.
    pub derivative: f64,
    pub endpoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailPointResult {
    /// All maximizers, tied within `TIE_RTOL·max_value`, sorted by angle.
    pub angles: Vec<f64>,
    pub points: Vec<FailAngle>,
    /// `angles` partitioned into orbits of the domain's symmetries.
    pub symmetry_groups: Vec<Vec<f64>>,
    pub max_value: f64,
    pub refinement_converged: bool,
    /// The sampled profile is constant; no fail point is singled out.
    pub degenerate: bool,
    pub arc: AngleArc,
    pub samples: usize,
    #[serde(skip)]
    pub profile: Option<BoundaryProfile>,
}

impl FailPointResult {
    /// The reported angle closest to `theta`.
    pub fn closest_to(&self, theta: f64) -> Option<f64> {
        self.angles
            .iter()
            .copied()
            .min_by(|a, b| angular_distance(*a, theta).total_cmp(&angular_distance(*b, theta)))
    }

    pub fn has_endpoint(&self) -> bool {
        self.points.iter().any(|p| p.endpoint)
    }
}

/// Fail points of a numerical solution on `arc`, with the boundary profile
/// attached.
pub fn find_fail_points(solution: &TorsionSolution, arc: &AngleArc) -> Result<FailPointResult> {
    let mut result = find_field_maxima(solution, arc, DEFAULT_SAMPLES)?;
    result.profile = Some(solution.boundary_profile(DEFAULT_SAMPLES));
    Ok(result)
}

/// Maxima of a boundary field on `arc`.
///
/// The field is sampled with `samples` points per full circle; every local
/// maximum of the samples is refined by golden-section search, a parabolic
/// step, and a safeguarded Newton iteration on the analytic derivative.
pub fn find_field_maxima(field: &impl BoundaryField, arc: &AngleArc, samples: usize) -> Result<FailPointResult> {
    if samples < 16 {
        return Err(Error::InvalidArgument(format!("need at least 16 samples, got {samples}")));
    }
    let grid = arc.grid(samples);
    let values: Vec<f64> = grid.iter().map(|&th| field.value(th)).collect();
    let n = grid.len();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument("boundary field is not finite".into()));
    }
    if hi - lo <= FLAT_RTOL * hi.abs().max(f64::MIN_POSITIVE) {
        return Ok(FailPointResult {
            angles: Vec::new(),
            points: Vec::new(),
            symmetry_groups: Vec::new(),
            max_value: hi,
            refinement_converged: true,
            degenerate: true,
            arc: *arc,
            samples,
            profile: None,
        });
    }

    let full = arc.is_full();
    let h = grid.get(1).map_or(TAU, |g| g - grid[0]);
    let neighbour = |i: usize, step: isize| -> Option<usize> {
        let j = i as isize + step;
        if full {
            Some(j.rem_euclid(n as isize) as usize)
        } else if (0..n as isize).contains(&j) {
            Some(j as usize)
        } else {
            None
        }
    };

    let mut candidates = Vec::new();
    let mut converged = true;
    for i in 0..n {
        let left = neighbour(i, -1).map(|j| values[j]);
        let right = neighbour(i, 1).map(|j| values[j]);
        // plateaus resolve to their first sample
        let is_max = left.is_none_or(|v| values[i] > v) && right.is_none_or(|v| values[i] >= v);
        if !is_max {
            continue;
        }
        if left.is_none() || right.is_none() {
            // arc endpoint: eligible, but not a critical point
            let slope = field.derivative(grid[i]);
            let inward_rising = if left.is_none() { slope > 0.0 } else { slope < 0.0 };
            if inward_rising && slope.abs() > DERIVATIVE_TOL {
                continue;
            }
            if slope.abs() > DERIVATIVE_TOL {
                candidates.push(FailAngle {
                    angle: normalize_angle(grid[i]),
                    value: values[i],
                    derivative: slope,
                    endpoint: true,
                });
                continue;
            }
        }
        let a = if left.is_some() { grid[i] - h } else { grid[i] };
        let b = if right.is_some() { grid[i] + h } else { grid[i] };
        let (x, ok) = refine_maximum(field, a, b, grid[i]);
        converged &= ok;
        let mut x = if full { x } else { x.clamp(arc.start, arc.end) };
        let mut endpoint = false;
        if !full {
            for end in [arc.start, arc.end] {
                if (x - end).abs() < ENDPOINT_TOL {
                    x = end;
                    endpoint = true;
                }
            }
        }
        candidates.push(FailAngle {
            angle: normalize_angle(x),
            value: field.value(x),
            derivative: field.derivative(x),
            endpoint,
        });
    }

    let max_value = candidates.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_RTOL * max_value.abs();
    let mut points: Vec<FailAngle> = Vec::new();
    for c in candidates.into_iter().filter(|c| c.value >= max_value - tol) {
        if points.iter().all(|p| angular_distance(p.angle, c.angle) > SYMMETRY_TOL) {
            points.push(c);
        }
    }
    points.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    let angles: Vec<f64> = points.iter().map(|p| p.angle).collect();
    let symmetry_groups = group_by_symmetry(&angles, field.domain());
    Ok(FailPointResult {
        angles,
        points,
        symmetry_groups,
        max_value,
        refinement_converged: converged,
        degenerate: false,
        arc: *arc,
        samples,
        profile: None,
    })
}

/// Golden section on `[a, b]`, one parabolic step, then Newton on `E′`.
/// Returns the location and whether `|E′| < DERIVATIVE_TOL` was reached.
fn refine_maximum(field: &impl BoundaryField, a: f64, b: f64, seed: f64) -> (f64, bool) {
    let f = |th: f64| field.value(th);
    let mut x = if b > a {
        golden_section_max(f, a, b, 1e-4 * (b - a)).0
    } else {
        seed
    };
    let step = 1e-3 * (b - a).max(1e-9);
    if let Some(v) = parabolic_vertex([x - step, x, x + step], [f(x - step), f(x), f(x + step)]) {
        if v > a && v < b && f(v) >= f(x) {
            x = v;
        }
    }
    let dg = |th: f64| field.derivative(th);
    if dg(x).abs() >= DERIVATIVE_TOL {
        // bracket the zero of E′ around x
        let (lo, hi) = (a.min(x - step), b.max(x + step));
        if dg(lo) > 0.0 && dg(hi) < 0.0 {
            let d2 = |th: f64| (dg(th + 1e-6) - dg(th - 1e-6)) / 2e-6;
            let root = refine_root(dg, d2, lo, hi);
            if f(root.x) >= f(x) - TIE_RTOL * f(x).abs() {
                x = root.x;
            }
        }
    }
    (x, dg(x).abs() < DERIVATIVE_TOL)
}

fn group_by_symmetry(angles: &[f64], domain: &StarDomain) -> Vec<Vec<f64>> {
    let mut groups: Vec<Vec<f64>> = Vec::new();
    let mut assigned = vec![false; angles.len()];
    for i in 0..angles.len() {
        if assigned[i] {
            continue;
        }
        let orbit = domain.symmetry_orbit(angles[i]);
        let mut group = Vec::new();
        for j in i..angles.len() {
            if !assigned[j] && orbit.iter().any(|&o| angular_distance(o, angles[j]) < SYMMETRY_TOL) {
                assigned[j] = true;
                group.push(angles[j]);
            }
        }
        groups.push(group);
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub samples: usize,
    pub trend: Trend,
    pub strictly_monotone: bool,
    /// Sample intervals `[θ_j, θ_{j+1}]` where the sign of the forward
    /// difference differs from the one before it.
    pub sign_changes: Vec<[f64; 2]>,
}

/// Sign pattern of forward differences of `f` at `samples` points interior
/// to `arc` (cell midpoints, so the endpoints themselves are excluded).
pub fn monotonicity_of(f: impl Fn(f64) -> f64, arc: &AngleArc, samples: usize) -> Result<MonotonicityReport> {
    if samples < MIN_MONOTONICITY_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_MONOTONICITY_SAMPLES} samples, got {samples}"
        )));
    }
    let h = arc.length() / samples as f64;
    let thetas: Vec<f64> = (0..samples).map(|j| arc.start + h * (j as f64 + 0.5)).collect();
    let values: Vec<f64> = thetas.iter().map(|&th| f(th)).collect();
    let signs: Vec<i8> = values
        .windows(2)
        .map(|w| match w[1].partial_cmp(&w[0]) {
            Some(std::cmp::Ordering::Greater) => 1,
            Some(std::cmp::Ordering::Less) => -1,
            _ => 0,
        })
        .collect();
    let sign_changes = (1..signs.len())
        .filter(|&j| signs[j] != signs[j - 1])
        .map(|j| [thetas[j], thetas[j + 1]])
        .collect();
    let trend = if signs.iter().all(|&s| s == 1) {
        Trend::Increasing
    } else if signs.iter().all(|&s| s == -1) {
        Trend::Decreasing
    } else {
        Trend::Mixed
    };
    Ok(MonotonicityReport {
        samples,
        trend,
        strictly_monotone: trend != Trend::Mixed,
        sign_changes,
    })
}

/// Monotonicity of `|∇u|²` along the boundary arc.
pub fn monotonicity_check(field: &impl BoundaryField, arc: &AngleArc, samples: usize) -> Result<MonotonicityReport> {
    monotonicity_of(|th| field.value(th), arc, samples)
}

/// Monotonicity of the boundary curvature along the arc.
pub fn curvature_monotonicity(domain: &StarDomain, arc: &AngleArc, samples: usize) -> Result<MonotonicityReport> {
    monotonicity_of(|th| domain.curvature(th), arc, samples)
}

/// Settings for [`convergence_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    pub solver: SolverOptions,
    /// Upper limit for the adaptive degree.
    pub max_degree: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            solver: SolverOptions::default(),
            max_degree: 96,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub fail_angle_numeric: f64,
    pub fail_angle_predicted: f64,
    pub abs_error: f64,
    /// `abs_error` of the previous row divided by this one; NaN on the first
    /// row or after a failed row.
    pub error_ratio: f64,
    pub degree: Option<usize>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

pub const CONVERGENCE_HEADER: &str = "t,fail_angle_numeric,fail_angle_predicted,abs_error,error_ratio";

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CONVERGENCE_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&csv_line(&[
                r.t,
                r.fail_angle_numeric,
                r.fail_angle_predicted,
                r.abs_error,
                r.error_ratio,
            ]));
        }
        out
    }

    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
    }

    pub fn errors_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].abs_error < w[0].abs_error)
    }

    /// Ratios between consecutive errors (rows after the first).
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().skip(1).map(|r| r.error_ratio).collect()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.rows.last().map(|r| r.abs_error)
    }
}

/// Solves at each `t` (in parallel), locates the fail point on `arc` and
/// compares it with the first-order prediction. Rows keep the input order;
/// a failing row carries its error and NaN values.
pub fn convergence_sweep(
    zeta: &TrigPolynomial,
    t_list: &[f64],
    arc: &AngleArc,
    options: &SweepOptions,
) -> Result<ConvergenceTable> {
    if t_list.is_empty() {
        return Err(Error::InvalidArgument("t_list is empty".into()));
    }
    if t_list.iter().any(|&t| !(t > 0.0 && t.is_finite())) || t_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "t_list must be strictly decreasing positive values, got {t_list:?}"
        )));
    }
    let prediction = predict_fail_point(zeta, arc)?;
    if prediction.endpoint || prediction.nondegenerate != Some(true) {
        return Err(Error::Degenerate(format!(
            "predicted fail point at {} is not a nondegenerate interior maximum",
            prediction.predicted_angle
        )));
    }
    let predicted = prediction.predicted_angle;

    let outcomes: Vec<Result<(f64, usize, f64)>> = t_list
        .par_iter()
        .map(|&t| {
            let domain = StarDomain::new(zeta.clone(), t)?;
            let sol = solve_adaptive(&domain, &options.solver, options.max_degree)?;
            let res = find_field_maxima(&sol, arc, DEFAULT_SAMPLES)?;
            let angle = res
                .closest_to(predicted)
                .ok_or_else(|| Error::Degenerate(format!("no fail point found at t = {t}")))?;
            Ok((angle, sol.degree(), sol.boundary_residual()))
        })
        .collect();

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(t_list.len());
    for (&t, outcome) in t_list.iter().zip(outcomes) {
        let prev_error = rows.last().map_or(f64::NAN, |r| r.abs_error);
        rows.push(match outcome {
            Ok((angle, degree, residual)) => {
                let abs_error = angular_distance(angle, predicted);
                ConvergenceRow {
                    t,
                    fail_angle_numeric: angle,
                    fail_angle_predicted: predicted,
                    abs_error,
                    error_ratio: prev_error / abs_error,
                    degree: Some(degree),
                    residual: Some(residual),
                    error: None,
                }
            }
            Err(e) => ConvergenceRow {
                t,
                fail_angle_numeric: f64::NAN,
                fail_angle_predicted: predicted,
                abs_error: f64::NAN,
                error_ratio: f64::NAN,
                degree: None,
                residual: None,
                error: Some(e.to_string()),
            },
        });
    }
    Ok(ConvergenceTable { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    /// Euclidean distance between the fail-point and contact-point sets.
    pub d_omega: Option<f64>,
    pub diameter: f64,
    /// `d_Ω / diam(Ω)`.
    pub ratio: Option<f64>,
    /// Fail points or contact points fill the whole boundary.
    pub degenerate: bool,
    pub fail_angles: Vec<f64>,
    pub contact_angles: Vec<f64>,
}

/// Distance between the fail points (closed under the domain's symmetries)
/// and the contact points, relative to the diameter.
pub fn distance_report(result: &FailPointResult, domain: &StarDomain) -> Result<DistanceReport> {
    let contacts = contact_points(domain)?;
    let diameter = diameter(domain);
    let fail_angles = dedup_angles(
        result.angles.iter().flat_map(|&a| domain.symmetry_orbit(a)).collect(),
        SYMMETRY_TOL,
    );
    let degenerate = result.degenerate || contacts.all_boundary || fail_angles.is_empty();
    let d_omega = (!degenerate).then(|| {
        fail_angles
            .iter()
            .flat_map(|&a| {
                contacts.angles.iter().map(move |&c| {
                    let [ax, ay] = domain.boundary_point(a);
                    let [cx, cy] = domain.boundary_point(c);
                    (ax - cx).hypot(ay - cy)
                })
            })
            .fold(f64::INFINITY, f64::min)
    });
    Ok(DistanceReport {
        d_omega,
        diameter,
        ratio: d_omega.map(|d| d / diameter),
        degenerate,
        fail_angles,
        contact_angles: contacts.angles,
    })
}

/// Largest distance between two boundary points: a 1024 × 1024 scan followed
/// by alternating golden-section refinement in each angle.
pub fn diameter(domain: &StarDomain) -> f64 {
    const N: usize = 1024;
    let h = TAU / N as f64;
    let pts: Vec<[f64; 2]> = (0..N).map(|j| domain.boundary_point(h * j as f64)).collect();
    let (mut best, mut bi, mut bj) = (0.0, 0, 0);
    for i in 0..N {
        for j in (i + 1)..N {
            let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
            if d > best {
                (best, bi, bj) = (d, i, j);
            }
        }
    }
    let dist = |a: f64, b: f64| {
        let [ax, ay] = domain.boundary_point(a);
        let [bx, by] = domain.boundary_point(b);
        (ax - bx).hypot(ay - by)
    };
    let (mut a, mut b) = (h * bi as f64, h * bj as f64);
    for _ in 0..8 {
        a = golden_section_max(|s| dist(s, b), a - h, a + h, 1e-13).0;
        b = golden_section_max(|s| dist(a, s), b - h, b + h, 1e-13).0;
    }
    dist(a, b).max(best)
}
