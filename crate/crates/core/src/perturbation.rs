//! First-order theory for nearly-disk domains `r < 1 + tζ(θ)`.
//!
//! On the unit disk the harmonic extension of `cos kθ` is `r^k cos kθ`, so
//! every operator here is a Fourier multiplier:
//!
//! | quantity                       | multiplier on mode k |
//! |--------------------------------|----------------------|
//! | `∂ᵣ(Tζ)(1, ·)`                 | `k`                  |
//! | `𝓕 = ζ − ∂ᵣ(Tζ)(1, ·)`         | `1 − k`              |
//! | `ζ + ζ″`                       | `1 − k²`             |
//!
//! The boundary gradient satisfies
//! `|∇u|² = 1/n² + (2/n²)·𝓕(θ)·t + O(t²)` and the transported torsion
//! function is `ũ = w + t·v + O(t²)` with `v = (Tζ − η·x)/n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::curvature_linear_term;
use crate::search::{angular_distance, normalize_angle, refine_root, AngleArc};
use crate::trig::TrigPolynomial;

/// Grid density (points per full turn) for bracketing critical points.
pub const CRITICAL_GRID: usize = 4096;

/// Spatial dimension of the expansion. Solvers only accept `n = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dimension(u32);

impl Dimension {
    pub const PLANE: Dimension = Dimension(2);

    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {n}")));
        }
        Ok(Dimension(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// `∂ᵣ(Tζ)(1, ·)`: the Dirichlet-to-Neumann map of the unit disk.
pub fn harmonic_extension_normal_derivative(zeta: &TrigPolynomial) -> TrigPolynomial {
    zeta.map_modes(|k| k as f64)
}

/// The fail-point functional `𝓕 = ζ − ∂ᵣ(Tζ)(1, ·)`.
pub fn fail_functional(zeta: &TrigPolynomial) -> TrigPolynomial {
    zeta.map_modes(|k| 1.0 - k as f64)
}

/// First-order model of `|∇u|²` at the boundary point over polar angle
/// `theta`: `1/n² + (2/n²)·𝓕(θ)·t`.
pub fn boundary_gradient_expansion(zeta: &TrigPolynomial, t: f64, theta: f64, n: Dimension) -> f64 {
    first_order_from_functional(&fail_functional(zeta), t, theta, n)
}

pub(crate) fn first_order_from_functional(functional: &TrigPolynomial, t: f64, theta: f64, n: Dimension) -> f64 {
    let n2 = f64::from(n.get()).powi(2);
    1.0 / n2 + 2.0 / n2 * functional.eval(theta) * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Max,
    Min,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub angle: f64,
    pub value: f64,
    #[serde(rename = "type")]
    pub kind: CriticalKind,
    /// The point is an endpoint of a proper search arc.
    pub endpoint: bool,
}

/// Location of the maximum of a trigonometric profile on an arc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailPointPrediction {
    pub predicted_angle: f64,
    pub predicted_value: f64,
    /// `Some(true)` when the second derivative is strictly negative at an
    /// interior maximum; `None` for endpoint maxima, where the question does
    /// not apply.
    pub nondegenerate: Option<bool>,
    pub endpoint: bool,
    #[serde(rename = "critical_points")]
    pub all_critical_points: Vec<CriticalPoint>,
}

/// Predicted fail point: the maximum of `𝓕` over `arc`.
pub fn predict_fail_point(zeta: &TrigPolynomial, arc: &AngleArc) -> Result<FailPointPrediction> {
    arc_maximum(&fail_functional(zeta), arc)
        .map_err(|_| Error::Degenerate("the fail-point functional is constant".into()))
}

/// Predicted curvature minimum: the maximum of `ζ + ζ″` over `arc`.
pub fn predict_curvature_min(zeta: &TrigPolynomial, arc: &AngleArc) -> Result<FailPointPrediction> {
    arc_maximum(&curvature_linear_term(zeta), arc)
        .map_err(|_| Error::Degenerate("ζ + ζ″ is constant (the domain is a disk to first order)".into()))
}

/// Global maximum of a trigonometric polynomial on a closed arc, with every
/// critical point found on the way.
///
/// Critical points are bracketed by sign changes of the derivative on a
/// dense grid and polished by Newton iteration on the analytic derivative.
/// Ties between maxima are broken by the smallest normalized angle.
pub fn arc_maximum(profile: &TrigPolynomial, arc: &AngleArc) -> Result<FailPointPrediction> {
    if profile.is_constant() {
        return Err(Error::Degenerate("profile is constant".into()));
    }
    let mut points = critical_points(profile, arc);
    let scale = profile.coefficient_scale();
    let kmax = profile.max_mode() as f64;
    let slope_tol = 1e-12 * scale * kmax;

    if !arc.is_full() {
        for (theta, is_start) in [(arc.start, true), (arc.end, false)] {
            let slope = profile.eval_derivative(1, theta);
            let kind = if slope.abs() > slope_tol {
                // moving into the arc from the start means increasing θ
                if (slope < 0.0) == is_start {
                    CriticalKind::Max
                } else {
                    CriticalKind::Min
                }
            } else {
                classify(profile.eval_derivative(2, theta), scale * kmax * kmax)
            };
            let angle = normalize_angle(theta);
            points.retain(|p| angular_distance(p.angle, angle) > 1e-9);
            points.push(CriticalPoint {
                angle,
                value: profile.eval(theta),
                kind,
                endpoint: true,
            });
        }
        points.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    }

    let vtol = 1e-12 * (scale + 1.0);
    let best = points
        .iter()
        .filter(|p| p.kind == CriticalKind::Max)
        .fold(None::<&CriticalPoint>, |best, p| match best {
            None => Some(p),
            Some(b) if p.value > b.value + vtol => Some(p),
            Some(b) if (p.value - b.value).abs() <= vtol && p.angle < b.angle => Some(p),
            keep => keep,
        })
        .copied()
        .ok_or_else(|| Error::Degenerate("no maximum found on the arc".into()))?;

    let nondegenerate = if best.endpoint {
        None
    } else {
        Some(profile.eval_derivative(2, best.angle) < -FLAT_RTOL * scale * kmax * kmax)
    };
    Ok(FailPointPrediction {
        predicted_angle: best.angle,
        predicted_value: best.value,
        nondegenerate,
        endpoint: best.endpoint,
        all_critical_points: points,
    })
}

// Curvature below this fraction of `scale·k²` counts as flat.
const FLAT_RTOL: f64 = 1e-6;

fn classify(second: f64, scale: f64) -> CriticalKind {
    if second < -FLAT_RTOL * scale {
        CriticalKind::Max
    } else if second > FLAT_RTOL * scale {
        CriticalKind::Min
    } else {
        CriticalKind::Saddle
    }
}

/// Interior critical points of `profile` on `arc` (for a full arc, all of
/// them), sorted by normalized angle.
pub fn critical_points(profile: &TrigPolynomial, arc: &AngleArc) -> Vec<CriticalPoint> {
    let d1 = |th: f64| profile.eval_derivative(1, th);
    let d2 = |th: f64| profile.eval_derivative(2, th);
    let scale = profile.coefficient_scale().max(f64::MIN_POSITIVE);
    let kmax = profile.max_mode().max(1) as f64;

    let n = arc.intervals(CRITICAL_GRID);
    let h = arc.length() / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| arc.start + h * i as f64).collect();
    let slopes: Vec<f64> = grid.iter().map(|&th| d1(th)).collect();

    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (slopes[i], slopes[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if a * b < 0.0 {
            let root = refine_root(d1, d2, grid[i], grid[i + 1]);
            roots.push(root.x);
        } else if i > 0 {
            // tangential zero: |f′| dips without a sign change
            let prev = slopes[i - 1];
            if a.abs() < prev.abs() && a.abs() < b.abs() && (a < 0.0) == (b < 0.0) && (a < 0.0) == (prev < 0.0) {
                if let Some(x) = newton_touch(d1, d2, grid[i], grid[i - 1], grid[i + 1]) {
                    if d1(x).abs() < 1e-10 * scale * kmax {
                        roots.push(x);
                    }
                }
            }
        }
    }
    if slopes[n] == 0.0 && !arc.is_full() {
        roots.push(grid[n]);
    }

    let mut points: Vec<CriticalPoint> = Vec::new();
    for x in roots {
        let angle = normalize_angle(x);
        if points.iter().any(|p| angular_distance(p.angle, angle) < 1e-9) {
            continue;
        }
        points.push(CriticalPoint {
            angle,
            value: profile.eval(x),
            kind: classify(d2(x), scale * kmax * kmax),
            endpoint: false,
        });
    }
    points.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    points
}

fn newton_touch(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, x0: f64, lo: f64, hi: f64) -> Option<f64> {
    let mut x = x0;
    for _ in 0..60 {
        let d = dg(x);
        if d == 0.0 {
            return None;
        }
        let next = x - g(x) / d;
        if !(lo..=hi).contains(&next) {
            return None;
        }
        if (next - x).abs() < 1e-13 {
            return Some(next);
        }
        x = next;
    }
    None
}

/// Smooth monotone cutoff: 0 for `r ≤ 1/4`, 1 for `r ≥ 3/4`, quintic
/// smoothstep between (C² at both joints).
pub fn cutoff(r: f64) -> f64 {
    let s = ((r - 0.25) / 0.5).clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// The radial transport `F_t(r, θ) = (r + t·χ(r)·ζ(θ), θ)` mapping the unit
/// disk onto `r < 1 + tζ(θ)`. Returns the image radius.
pub fn transport_radius(zeta: &TrigPolynomial, t: f64, r: f64, theta: f64) -> f64 {
    r + t * cutoff(r) * zeta.eval(theta)
}

/// Harmonic extension `Tζ(r, θ) = Σ r^k (c_k cos kθ + s_k sin kθ)`.
pub fn harmonic_extension(zeta: &TrigPolynomial, r: f64, theta: f64) -> f64 {
    let mut rk = 1.0;
    let mut sum = 0.0;
    for (k, c, s) in zeta.modes() {
        if k > 0 {
            rk *= r;
            let (sn, cs) = (k as f64 * theta).sin_cos();
            sum += rk * (c * cs + s * sn);
        } else {
            sum += c;
        }
    }
    sum
}

/// First-order variation `v = (Tζ − η·x)/n` of the transported torsion
/// function on the closed unit disk, for the transport field
/// `η = χ(r)·ζ(θ)·e_r` (so `η·x = r·χ(r)·ζ(θ)`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeDerivativeField {
    zeta: TrigPolynomial,
    dimension: Dimension,
}

impl ShapeDerivativeField {
    pub fn new(zeta: TrigPolynomial) -> Self {
        ShapeDerivativeField {
            zeta,
            dimension: Dimension::PLANE,
        }
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn harmonic_part(&self, r: f64, theta: f64) -> f64 {
        harmonic_extension(&self.zeta, r, theta)
    }

    /// `η·x` at `(r, θ)`.
    pub fn transport_part(&self, r: f64, theta: f64) -> f64 {
        r * cutoff(r) * self.zeta.eval(theta)
    }

    pub fn eval(&self, r: f64, theta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidArgument(format!("radius {r} outside the closed unit disk")));
        }
        let n = f64::from(self.dimension.get());
        Ok((self.harmonic_part(r, theta) - self.transport_part(r, theta)) / n)
    }
}

/// `v(r, θ)` for the planar transport of `ζ`.
pub fn shape_derivative(zeta: &TrigPolynomial, r: f64, theta: f64) -> Result<f64> {
    ShapeDerivativeField::new(zeta.clone()).eval(r, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn faraway() -> TrigPolynomial {
        TrigPolynomial::from_modes(&[(2, -4.0), (4, 1.0)], &[])
    }

    fn monotone() -> TrigPolynomial {
        TrigPolynomial::from_modes(&[(2, 13.0), (4, -1.0)], &[])
    }

    #[test]
    fn normal_derivative_examples() {
        assert!(harmonic_extension_normal_derivative(&TrigPolynomial::constant(3.0)).is_zero());
        assert_eq!(
            harmonic_extension_normal_derivative(&TrigPolynomial::cos_mode(3, 1.0)),
            TrigPolynomial::cos_mode(3, 3.0)
        );
        assert_eq!(
            harmonic_extension_normal_derivative(&faraway()),
            TrigPolynomial::from_modes(&[(2, -8.0), (4, 4.0)], &[])
        );
    }

    #[test]
    fn fail_functional_examples() {
        assert_eq!(fail_functional(&faraway()), TrigPolynomial::from_modes(&[(2, 4.0), (4, -3.0)], &[]));
        assert_eq!(fail_functional(&monotone()), TrigPolynomial::from_modes(&[(2, -13.0), (4, 3.0)], &[]));
        let translation = TrigPolynomial::from_modes(&[(1, 0.7)], &[(1, -2.5)]);
        assert!(fail_functional(&translation).is_zero());
    }

    #[test]
    fn expansion_examples() {
        let n = Dimension::PLANE;
        assert_eq!(boundary_gradient_expansion(&faraway(), 0.0, 1.3, n), 0.25);
        let e = boundary_gradient_expansion(&faraway(), 0.01, 0.0, n);
        assert!((e - 0.255).abs() < 1e-15);
        let cos1 = TrigPolynomial::cos_mode(1, 1.0);
        assert_eq!(boundary_gradient_expansion(&cos1, 0.3, 2.0, n), 0.25);
        // general n is plain arithmetic
        let e3 = boundary_gradient_expansion(&faraway(), 0.01, 0.0, Dimension::new(3).unwrap());
        assert!((e3 - (1.0 / 9.0 + 2.0 / 9.0 * 0.01)).abs() < 1e-15);
        assert!(Dimension::new(1).is_err());
    }

    #[test]
    fn fail_point_examples() {
        let q = AngleArc::first_quadrant();
        let p = predict_fail_point(&faraway(), &q).unwrap();
        assert!((p.predicted_angle - (2.0f64 / 3.0).sqrt().acos()).abs() < 1e-12);
        assert!((p.predicted_angle - 0.615_479_708_7).abs() < 1e-10);
        assert_eq!(p.nondegenerate, Some(true));
        let f = fail_functional(&faraway());
        assert!(f.eval_derivative(1, p.predicted_angle).abs() < 1e-10);
        assert!(p
            .all_critical_points
            .iter()
            .any(|c| c.angle == p.predicted_angle && c.kind == CriticalKind::Max));

        let p = predict_fail_point(&monotone(), &q).unwrap();
        assert!((p.predicted_angle - FRAC_PI_2).abs() < 1e-12);
        assert!(p.endpoint);
        assert_eq!(p.nondegenerate, None);

        let p = predict_fail_point(&TrigPolynomial::cos_mode(2, 1.0), &q).unwrap();
        assert!((p.predicted_angle - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn fail_point_matches_brute_force() {
        // brute-force argmax on a fine grid as an independent oracle
        let zeta = TrigPolynomial::from_modes(&[(2, 1.0), (4, 0.1)], &[(3, 0.2)]);
        let f = fail_functional(&zeta);
        let n = 2_000_000;
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
        for j in 0..n {
            let th = TAU * j as f64 / n as f64;
            let v = f.eval(th);
            if v > best {
                best = v;
                arg = th;
            }
        }
        let p = predict_fail_point(&zeta, &AngleArc::full()).unwrap();
        assert!(angular_distance(p.predicted_angle, arg) < 1e-5);
        assert!(p.predicted_value >= best - 1e-12);
    }

    #[test]
    fn curvature_min_examples() {
        let q = AngleArc::first_quadrant();
        let p = predict_curvature_min(&faraway(), &q).unwrap();
        assert!((p.predicted_angle - (3.0f64 / 5.0).sqrt().acos()).abs() < 1e-12);
        assert!((p.predicted_angle - 0.684_719_2).abs() < 1e-7);
        let p = predict_curvature_min(&TrigPolynomial::cos_mode(2, 1.0), &q).unwrap();
        assert!((p.predicted_angle - FRAC_PI_2).abs() < 1e-12);
        assert!(matches!(
            predict_curvature_min(&TrigPolynomial::constant(1.0), &q),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            predict_fail_point(&TrigPolynomial::cos_mode(1, 1.0), &q),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn full_circle_ties_resolve_to_smallest_angle() {
        let p = predict_fail_point(&faraway(), &AngleArc::full()).unwrap();
        let maxima: Vec<_> = p
            .all_critical_points
            .iter()
            .filter(|c| c.kind == CriticalKind::Max)
            .collect();
        assert_eq!(maxima.len(), 4);
        assert!((p.predicted_angle - (2.0f64 / 3.0).sqrt().acos()).abs() < 1e-12);
    }

    #[test]
    fn critical_points_classified() {
        // 𝓕 = 4cos2θ − 3cos4θ on [0, π/2]: min at 0, max at θ̄, min at π/2
        let f = fail_functional(&faraway());
        let cps = critical_points(&f, &AngleArc::new(-0.1, PI / 2.0 + 0.1).unwrap());
        let kinds: Vec<_> = cps.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![CriticalKind::Min, CriticalKind::Max, CriticalKind::Min]);
    }

    #[test]
    fn touching_zero_of_the_slope_is_found() {
        // f = sin³θ / 3 has f′ = sin²θ·cosθ, a double zero at θ = 0
        let f = TrigPolynomial::from_modes(&[], &[(1, 0.25), (3, -1.0 / 12.0)]);
        let cps = critical_points(&f, &AngleArc::new(-0.5, 0.6).unwrap());
        let at_zero: Vec<_> = cps.iter().filter(|c| angular_distance(c.angle, 0.0) < 1e-6).collect();
        assert_eq!(at_zero.len(), 1, "{cps:?}");
        assert_eq!(at_zero[0].kind, CriticalKind::Saddle);
    }

    #[test]
    fn cutoff_is_c2_step() {
        assert_eq!(cutoff(0.0), 0.0);
        assert_eq!(cutoff(0.25), 0.0);
        assert_eq!(cutoff(0.75), 1.0);
        assert_eq!(cutoff(1.0), 1.0);
        assert!((cutoff(0.5) - 0.5).abs() < 1e-15);
        let h = 1e-4;
        for r in [0.25, 0.75] {
            let d1 = (cutoff(r + h) - cutoff(r - h)) / (2.0 * h);
            let d2 = (cutoff(r + h) - 2.0 * cutoff(r) + cutoff(r - h)) / (h * h);
            assert!(d1.abs() < 1e-6 && d2.abs() < 1e-2, "{d1} {d2}");
        }
        for j in 0..100 {
            let r = j as f64 / 100.0;
            assert!(cutoff(r + 0.01) >= cutoff(r));
        }
    }

    #[test]
    fn shape_derivative_examples() {
        let zeta = TrigPolynomial::cos_mode(2, 1.0);
        for j in 0..16 {
            let th = 0.4 * j as f64;
            assert!(shape_derivative(&faraway(), 1.0, th).unwrap().abs() < 1e-13);
        }
        let th: f64 = 0.3;
        let expected = 0.5 * (0.25 * (2.0 * th).cos() - 0.5 * cutoff(0.5) * (2.0 * th).cos());
        assert!((shape_derivative(&zeta, 0.5, th).unwrap() - expected).abs() < 1e-15);
        assert!(shape_derivative(&zeta, 1.1, 0.0).is_err());
    }

    #[test]
    fn shape_derivative_field_invariants() {
        let field = ShapeDerivativeField::new(faraway() + TrigPolynomial::constant(0.4));
        assert_eq!(field.dimension().get(), 2);
        let n = 4096;
        let mut mean = 0.0;
        for j in 0..n {
            let th = TAU * j as f64 / n as f64;
            assert!(field.eval(1.0, th).unwrap().abs() < 1e-12);
            mean += field.harmonic_part(1.0, th);
        }
        mean /= n as f64;
        assert!((field.harmonic_part(0.0, 0.0) - mean).abs() < 1e-10);
    }

    fn arb_poly() -> impl Strategy<Value = TrigPolynomial> {
        (
            prop::collection::vec(-3.0..3.0f64, 1..10),
            prop::collection::vec(-3.0..3.0f64, 1..10),
        )
            .prop_map(|(c, s)| {
                let cos: Vec<_> = c.into_iter().enumerate().collect();
                let sin: Vec<_> = s.into_iter().enumerate().skip(1).collect();
                TrigPolynomial::from_modes(&cos, &sin)
            })
    }

    #[test]
    fn mode_multipliers() {
        for k in 0..=16usize {
            for poly in [TrigPolynomial::cos_mode(k, 1.0), TrigPolynomial::sin_mode(k.max(1), 1.0)] {
                let kk = if poly.has_only_cosines() { k } else { k.max(1) };
                let f = fail_functional(&poly);
                let dn = harmonic_extension_normal_derivative(&poly);
                assert_eq!(f.cos_coeff(kk) + f.sin_coeff(kk), 1.0 - kk as f64);
                assert_eq!(dn.cos_coeff(kk) + dn.sin_coeff(kk), kk as f64);
            }
        }
    }

    proptest! {
        #[test]
        fn functional_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, p in arb_poly(), q in arb_poly()) {
            let lhs = fail_functional(&(&(&p * a) + &(&q * b)));
            let rhs = &(&fail_functional(&p) * a) + &(&fail_functional(&q) * b);
            for k in 0..=lhs.max_mode().max(rhs.max_mode()) {
                let tol = 1e-12 * (1.0 + k as f64);
                prop_assert!((lhs.cos_coeff(k) - rhs.cos_coeff(k)).abs() <= tol);
                prop_assert!((lhs.sin_coeff(k) - rhs.sin_coeff(k)).abs() <= tol);
            }
        }

        #[test]
        fn mean_zero_is_preserved(p in arb_poly()) {
            let p = &p - &TrigPolynomial::constant(p.mean());
            let f = fail_functional(&p);
            let n = 256;
            let integral: f64 = (0..n).map(|j| f.eval(TAU * j as f64 / n as f64)).sum::<f64>() * TAU / n as f64;
            prop_assert!(integral.abs() < 1e-12);
        }

        #[test]
        fn translations_do_not_move_prediction(
            p in arb_poly(), a in -2.0..2.0f64, b in -2.0..2.0f64, c0 in -2.0..2.0f64
        ) {
            prop_assume!(!fail_functional(&p).is_constant());
            let arc = AngleArc::full();
            let base = predict_fail_point(&p, &arc).unwrap();
            let shifted = &p + &TrigPolynomial::from_modes(&[(1, a)], &[(1, b)]);
            prop_assert_eq!(fail_functional(&shifted), fail_functional(&p));
            let lifted = &p + &TrigPolynomial::constant(c0);
            let moved = predict_fail_point(&lifted, &arc).unwrap();
            prop_assert!(angular_distance(moved.predicted_angle, base.predicted_angle) < 1e-9);
            prop_assert!((moved.predicted_value - base.predicted_value - c0).abs() < 1e-9);
        }
    }
}
