//! Numerical torsion solver for star domains.
//!
//! The solution is split as `u = h − |x|²/4` with `h` harmonic and
//! `h = |x|²/4` on the boundary. `h` is expanded in the harmonic polynomials
//! `{1, (r/ρ)^k cos kθ, (r/ρ)^k sin kθ : k ≤ K}` and fitted by least squares
//! on oversampled, equally spaced boundary points. `−Δu = 1` then holds
//! exactly in the interior; the only error is the boundary misfit, which is
//! measured on a grid shifted by half a spacing.

use std::f64::consts::TAU;

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::StarDomain;
use crate::perturbation::{fail_functional, first_order_from_functional, Dimension};
use crate::quadrature::{gauss_legendre, integrate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Highest harmonic mode `K`.
    pub degree: usize,
    /// Number of boundary collocation points `M ≥ 4K + 2`.
    pub collocation_points: usize,
    /// Largest accepted boundary residual.
    pub rtol: f64,
    /// Largest accepted ratio of extreme singular values.
    pub condition_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            degree: 32,
            collocation_points: 256,
            rtol: 1e-8,
            condition_limit: 1e12,
        }
    }
}

impl SolverOptions {
    pub fn with_degree(degree: usize, collocation_points: usize) -> Self {
        SolverOptions {
            degree,
            collocation_points,
            ..Self::default()
        }
    }
}

/// `u`, `∇u` and the Hessian of `u` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub u: f64,
    pub grad: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

impl FieldSample {
    pub fn grad_sq(&self) -> f64 {
        self.grad[0] * self.grad[0] + self.grad[1] * self.grad[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsionSolution {
    domain: StarDomain,
    degree: usize,
    collocation_points: usize,
    /// Normalization radius ρ of the basis.
    scale: f64,
    /// `[a_0, a_1, b_1, …, a_K, b_K]` for the normalized basis.
    coefficients: Vec<f64>,
    boundary_residual: f64,
    condition_estimate: f64,
}

/// Solves `−Δu = 1` in the domain with `u = 0` on its boundary.
pub fn solve(domain: &StarDomain, options: &SolverOptions) -> Result<TorsionSolution> {
    let solution = fit(domain, options)?;
    if !(solution.boundary_residual <= options.rtol) {
        return Err(Error::NotConverged {
            residual: solution.boundary_residual,
            tolerance: options.rtol,
        });
    }
    Ok(solution)
}

/// Like [`solve`], but raises the degree in steps of 16 (keeping the ratio
/// `M/K`) until the residual meets `rtol`, up to `max_degree` or until the
/// collocation matrix becomes ill-conditioned.
pub fn solve_adaptive(domain: &StarDomain, options: &SolverOptions, max_degree: usize) -> Result<TorsionSolution> {
    let ratio = options.collocation_points as f64 / options.degree.max(1) as f64;
    let mut degree = options.degree;
    let mut best: Option<TorsionSolution> = None;
    loop {
        let opts = SolverOptions {
            degree,
            collocation_points: (ratio * degree as f64).ceil() as usize,
            ..*options
        };
        match fit(domain, &opts) {
            Ok(sol) if sol.boundary_residual <= options.rtol => return Ok(sol),
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.boundary_residual < b.boundary_residual) {
                    best = Some(sol);
                }
            }
            Err(e @ Error::IllConditioned { .. }) if best.is_none() => return Err(e),
            Err(Error::IllConditioned { .. }) => break,
            Err(e) => return Err(e),
        }
        if degree >= max_degree {
            break;
        }
        degree = (degree + 16).min(max_degree);
    }
    let residual = best.map_or(f64::INFINITY, |b| b.boundary_residual);
    Err(Error::NotConverged {
        residual,
        tolerance: options.rtol,
    })
}

fn fit(domain: &StarDomain, options: &SolverOptions) -> Result<TorsionSolution> {
    let k_max = options.degree;
    let m = options.collocation_points;
    if m < 4 * k_max + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4K + 2 = {} collocation points for degree {k_max}, got {m}",
            4 * k_max + 2
        )));
    }
    let thetas: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
    let radii: Vec<f64> = thetas.iter().map(|&th| domain.radius(th)).collect();
    let scale = radii.iter().copied().fold(0.0, f64::max);

    let ncols = 2 * k_max + 1;
    let mut a = DMatrix::<f64>::zeros(m, ncols);
    let mut b = DVector::<f64>::zeros(m);
    for (j, (&th, &r)) in thetas.iter().zip(&radii).enumerate() {
        a[(j, 0)] = 1.0;
        let w = r / scale;
        let mut wk = 1.0;
        for k in 1..=k_max {
            wk *= w;
            let (s, c) = (k as f64 * th).sin_cos();
            a[(j, 2 * k - 1)] = wk * c;
            a[(j, 2 * k)] = wk * s;
        }
        b[j] = 0.25 * r * r;
    }

    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition_estimate = smax / smin;
    if !(condition_estimate <= options.condition_limit) {
        return Err(Error::IllConditioned {
            condition: condition_estimate,
            limit: options.condition_limit,
        });
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::InvalidArgument(format!("least-squares solve failed: {e}")))?;

    let mut solution = TorsionSolution {
        domain: domain.clone(),
        degree: k_max,
        collocation_points: m,
        scale,
        coefficients: x.iter().copied().collect(),
        boundary_residual: 0.0,
        condition_estimate,
    };
    solution.boundary_residual = (0..m)
        .map(|j| {
            let th = TAU * (j as f64 + 0.5) / m as f64;
            let [px, py] = domain.boundary_point(th);
            solution.sample(px, py).u.abs()
        })
        .fold(0.0, f64::max);
    Ok(solution)
}

impl TorsionSolution {
    pub fn domain(&self) -> &StarDomain {
        &self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn collocation_points(&self) -> usize {
        self.collocation_points
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn boundary_residual(&self) -> f64 {
        self.boundary_residual
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Evaluates `u` with its gradient and Hessian at a Cartesian point, by
    /// analytic differentiation of the basis. Does not check the domain.
    pub fn sample(&self, x: f64, y: f64) -> FieldSample {
        // h = Re f(z/ρ), f(w) = Σ (a_k − i b_k) w^k
        let w = Complex::new(x / self.scale, y / self.scale);
        let mut f = Complex::new(self.coefficients[0], 0.0);
        let mut f1 = Complex::new(0.0, 0.0);
        let mut f2 = Complex::new(0.0, 0.0);
        let mut w_km2 = Complex::new(0.0, 0.0); // w^(k-2)
        let mut w_km1 = Complex::new(1.0, 0.0); // w^(k-1)
        for k in 1..=self.degree {
            let c = Complex::new(self.coefficients[2 * k - 1], -self.coefficients[2 * k]);
            let kf = k as f64;
            f += c * w_km1 * w;
            f1 += c * w_km1 * kf;
            if k >= 2 {
                f2 += c * w_km2 * (kf * (kf - 1.0));
            }
            w_km2 = w_km1;
            w_km1 *= w;
        }
        let inv = 1.0 / self.scale;
        let f1 = f1 * inv;
        let f2 = f2 * (inv * inv);
        FieldSample {
            u: f.re - 0.25 * (x * x + y * y),
            grad: [f1.re - 0.5 * x, -f1.im - 0.5 * y],
            hessian: [[f2.re - 0.5, -f2.im], [-f2.im, -f2.re - 0.5]],
        }
    }

    /// `u` and its derivatives at the polar point `(r, θ)`, which must lie in
    /// the closed domain.
    pub fn interior_eval(&self, r: f64, theta: f64) -> Result<FieldSample> {
        let (s, c) = theta.sin_cos();
        let (x, y) = (r * c, r * s);
        if !(r >= 0.0) || r > self.domain.radius(theta) * (1.0 + 1e-12) {
            return Err(Error::OutsideDomain { x, y });
        }
        Ok(self.sample(x, y))
    }

    /// `|∇u|²` at the boundary point over polar angle `theta`.
    pub fn boundary_grad_sq(&self, theta: f64) -> f64 {
        let [x, y] = self.domain.boundary_point(theta);
        self.sample(x, y).grad_sq()
    }

    /// `d/dθ` of [`boundary_grad_sq`](Self::boundary_grad_sq) along the boundary.
    pub fn boundary_grad_sq_derivative(&self, theta: f64) -> f64 {
        let [x, y] = self.domain.boundary_point(theta);
        let s = self.sample(x, y);
        let [tx, ty] = self.domain.boundary_tangent(theta);
        let hv = [
            s.hessian[0][0] * tx + s.hessian[0][1] * ty,
            s.hessian[1][0] * tx + s.hessian[1][1] * ty,
        ];
        2.0 * (s.grad[0] * hv[0] + s.grad[1] * hv[1])
    }

    /// Component of `∇u` along the unit boundary tangent; zero for the exact
    /// solution since `u` is constant on the boundary.
    pub fn tangential_gradient(&self, theta: f64) -> f64 {
        let [x, y] = self.domain.boundary_point(theta);
        let g = self.sample(x, y).grad;
        let [tx, ty] = self.domain.boundary_tangent(theta);
        (g[0] * tx + g[1] * ty) / tx.hypot(ty)
    }

    /// Saint-Venant torsional rigidity `∫_Ω u dx`.
    ///
    /// Gauss–Legendre in `r` (exact: `u·r` is a polynomial of degree
    /// `K + 1` along each ray) and the trapezoid rule in `θ`.
    pub fn saint_venant_functional(&self) -> f64 {
        let (nodes, weights) = gauss_legendre(self.degree / 2 + 3);
        let n_theta = (8 * self.degree).max(1024);
        let h = TAU / n_theta as f64;
        (0..n_theta)
            .map(|j| {
                let th = h * j as f64;
                let (s, c) = th.sin_cos();
                let outer = self.domain.radius(th);
                integrate(|r| self.sample(r * c, r * s).u * r, 0.0, outer, &nodes, &weights)
            })
            .sum::<f64>()
            * h
    }

    /// Dense boundary table on `samples` equally spaced angles from 0.
    pub fn boundary_profile(&self, samples: usize) -> BoundaryProfile {
        let functional = fail_functional(self.domain.zeta());
        let t = self.domain.t();
        let rows = (0..samples)
            .map(|j| {
                let theta = TAU * j as f64 / samples as f64;
                ProfileRow {
                    theta,
                    r: self.domain.radius(theta),
                    kappa: self.domain.curvature(theta),
                    grad_sq_numeric: self.boundary_grad_sq(theta),
                    grad_sq_firstorder: first_order_from_functional(&functional, t, theta, Dimension::PLANE),
                    f_value: functional.eval(theta),
                }
            })
            .collect();
        BoundaryProfile {
            rows,
            t,
            degree: self.degree,
            samples,
            residual: self.boundary_residual,
        }
    }

    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            t: self.domain.t(),
            degree: self.degree,
            collocation_points: self.collocation_points,
            residual: self.boundary_residual,
            condition_estimate: self.condition_estimate,
            center_value: self.sample(0.0, 0.0).u,
            saint_venant: self.saint_venant_functional(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveSummary {
    pub t: f64,
    #[serde(rename = "K")]
    pub degree: usize,
    #[serde(rename = "M")]
    pub collocation_points: usize,
    pub residual: f64,
    pub condition_estimate: f64,
    pub center_value: f64,
    pub saint_venant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub theta: f64,
    pub r: f64,
    pub kappa: f64,
    pub grad_sq_numeric: f64,
    pub grad_sq_firstorder: f64,
    #[serde(rename = "F")]
    pub f_value: f64,
}

/// Boundary quantities sampled along `∂Ω`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryProfile {
    pub rows: Vec<ProfileRow>,
    pub t: f64,
    #[serde(rename = "K")]
    pub degree: usize,
    pub samples: usize,
    pub residual: f64,
}

impl BoundaryProfile {
    pub const CSV_HEADER: &'static str = "theta,r,kappa,grad_sq_numeric,grad_sq_firstorder,F";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 128);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let cells = [
                row.theta,
                row.r,
                row.kappa,
                row.grad_sq_numeric,
                row.grad_sq_firstorder,
                row.f_value,
            ];
            out.push_str(&crate::report::csv_line(&cells));
        }
        out
    }

    /// Largest `|numeric − first order|` over the table.
    pub fn max_firstorder_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.grad_sq_numeric - r.grad_sq_firstorder).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::TrigPolynomial;
    use std::f64::consts::PI;

    fn faraway() -> TrigPolynomial {
        TrigPolynomial::from_modes(&[(2, -4.0), (4, 1.0)], &[])
    }

    #[test]
    fn disk_is_exact() {
        let sol = solve(&StarDomain::disk(), &SolverOptions::default()).unwrap();
        assert!((sol.coefficients()[0] - 0.25).abs() < 1e-14);
        assert!(sol.coefficients()[1..].iter().all(|c| c.abs() < 1e-14));
        for j in 0..64 {
            assert!((sol.boundary_grad_sq(0.1 * j as f64) - 0.25).abs() < 1e-13);
        }
        let c = sol.interior_eval(0.0, 0.0).unwrap();
        assert!((c.u - 0.25).abs() < 1e-14);
        assert!(c.grad[0].abs() < 1e-14 && c.grad[1].abs() < 1e-14);
        let p = sol.interior_eval(0.5, 0.0).unwrap();
        assert!((p.u - 0.1875).abs() < 1e-14);
    }

    #[test]
    fn rejects_undersampling_and_outside_points() {
        assert!(matches!(
            solve(&StarDomain::disk(), &SolverOptions::with_degree(32, 100)),
            Err(Error::InvalidArgument(_))
        ));
        let sol = solve(&StarDomain::disk(), &SolverOptions::default()).unwrap();
        assert!(matches!(sol.interior_eval(1.01, 0.0), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn spectral_accuracy_on_two_mode_profile() {
        let d = StarDomain::new(faraway(), 0.01).unwrap();
        let sol = solve(&d, &SolverOptions::default()).unwrap();
        assert!(sol.boundary_residual() <= 1e-10, "residual {}", sol.boundary_residual());
        assert!(sol.condition_estimate() < 1e12);
    }

    #[test]
    fn adaptive_degree_reaches_tolerance() {
        let d = StarDomain::new(TrigPolynomial::from_modes(&[(2, 13.0), (4, -1.0)], &[]), 0.01).unwrap();
        assert!(matches!(solve(&d, &SolverOptions::default()), Err(Error::NotConverged { .. })));
        let sol = solve_adaptive(&d, &SolverOptions::default(), 96).unwrap();
        assert!(sol.degree() > 32 && sol.boundary_residual() <= 1e-8);
        assert_eq!(sol.collocation_points(), 8 * sol.degree());
    }

    #[test]
    fn adaptive_degree_reports_best_residual() {
        let d = StarDomain::new(TrigPolynomial::from_modes(&[(2, 13.0), (4, -1.0)], &[]), 0.02).unwrap();
        match solve_adaptive(&d, &SolverOptions::default(), 96) {
            Err(Error::NotConverged { residual, .. }) => assert!(residual < 1e-6, "{residual}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ill_conditioning_is_reported() {
        let d = StarDomain::new(TrigPolynomial::cos_mode(2, 1.0), 0.5).unwrap();
        let opts = SolverOptions::with_degree(96, 768);
        assert!(matches!(solve(&d, &opts), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn nonconvergence_is_reported() {
        let d = StarDomain::new(TrigPolynomial::cos_mode(6, 1.0), 0.2).unwrap();
        let opts = SolverOptions::with_degree(4, 64);
        assert!(matches!(solve(&d, &opts), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn tangential_gradient_vanishes() {
        let d = StarDomain::new(faraway(), 0.005).unwrap();
        let sol = solve(&d, &SolverOptions::default()).unwrap();
        for j in 0..512 {
            let th = TAU * j as f64 / 512.0;
            assert!(sol.tangential_gradient(th).abs() <= 1e-8);
        }
    }

    #[test]
    fn boundary_value_near_first_order_model() {
        let value = |t: f64| {
            let d = StarDomain::new(faraway(), t).unwrap();
            let sol = solve(&d, &SolverOptions::default()).unwrap();
            (sol.boundary_grad_sq(0.0) - (0.25 + 0.5 * t)).abs()
        };
        let (e1, e2) = (value(0.01), value(0.005));
        assert!(e2 <= 100.0 * 0.005f64.powi(2));
        assert!((3.2..=4.8).contains(&(e1 / e2)), "{e1} {e2}");
    }

    #[test]
    fn center_value_second_order_for_mean_zero_profile() {
        let err = |t: f64| {
            let d = StarDomain::new(TrigPolynomial::cos_mode(2, 1.0), t).unwrap();
            let sol = solve(&d, &SolverOptions::default()).unwrap();
            (sol.sample(0.0, 0.0).u - 0.25).abs()
        };
        let (e1, e2) = (err(0.01), err(0.005));
        assert!(e2 <= 10.0 * 0.005f64.powi(2));
        assert!((3.2..=4.8).contains(&(e1 / e2)), "{e1} {e2}");
    }

    #[test]
    fn laplacian_by_finite_differences() {
        let d = StarDomain::new(faraway(), 0.02).unwrap();
        let sol = solve(&d, &SolverOptions::default()).unwrap();
        let h = 1e-2;
        let u = |x: f64, y: f64| sol.sample(x, y).u;
        for j in 0..50 {
            // deterministic scatter over the inner part of the domain
            let r = 0.05 + 0.8 * ((j as f64 * 0.618_034) % 1.0);
            let th = TAU * ((j as f64 * 0.414_214) % 1.0);
            let (x, y) = (r * th.cos(), r * th.sin());
            let d2 = |f: &dyn Fn(f64) -> f64| {
                (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
            };
            let uxx = d2(&|s| u(x + s, y));
            let uyy = d2(&|s| u(x, y + s));
            assert!((uxx + uyy + 1.0).abs() <= 1e-6, "at ({x}, {y}): {}", uxx + uyy);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let d = StarDomain::new(TrigPolynomial::from_modes(&[(2, 13.0), (4, -1.0)], &[(3, 1.0)]), 0.005).unwrap();
        let sol = solve(&d, &SolverOptions::default()).unwrap();
        let h = 1e-5;
        for (x, y) in [(0.3, -0.2), (0.0, 0.7), (-0.5, 0.1)] {
            let s = sol.sample(x, y);
            let gx = (sol.sample(x + h, y).u - sol.sample(x - h, y).u) / (2.0 * h);
            let gy = (sol.sample(x, y + h).u - sol.sample(x, y - h).u) / (2.0 * h);
            assert!((gx - s.grad[0]).abs() < 1e-8 && (gy - s.grad[1]).abs() < 1e-8);
            let hxy = (sol.sample(x, y + h).grad[0] - sol.sample(x, y - h).grad[0]) / (2.0 * h);
            assert!((hxy - s.hessian[0][1]).abs() < 1e-7);
        }
        for j in 0..12 {
            let th = 0.5 * j as f64;
            let fd = (sol.boundary_grad_sq(th + h) - sol.boundary_grad_sq(th - h)) / (2.0 * h);
            assert!((fd - sol.boundary_grad_sq_derivative(th)).abs() < 1e-8);
        }
    }

    #[test]
    fn symmetric_profile_gives_symmetric_gradient() {
        let d = StarDomain::new(faraway(), 0.01).unwrap();
        let sol = solve(&d, &SolverOptions::default()).unwrap();
        for j in 0..100 {
            let th = 0.0631 * j as f64;
            assert!((sol.boundary_grad_sq(th) - sol.boundary_grad_sq(-th)).abs() <= 1e-10);
        }
    }

    #[test]
    fn maximum_principle_and_positivity() {
        let d = StarDomain::new(TrigPolynomial::from_modes(&[(2, 13.0), (4, -1.0)], &[]), 0.005).unwrap();
        let sol = solve(&d, &SolverOptions::default()).unwrap();
        let mut center_max = f64::NEG_INFINITY;
        for i in 0..=40 {
            for j in 0..=40 {
                let (x, y) = (-0.2 + 0.01 * i as f64, -0.2 + 0.01 * j as f64);
                center_max = center_max.max(sol.sample(x, y).u);
            }
        }
        for j in 0..1000 {
            let th = TAU * ((j as f64 * 0.754_877_7) % 1.0);
            let frac = (j as f64 * 0.569_840_3) % 1.0;
            let r = d.radius(th) * frac.sqrt() * 0.999;
            let u = sol.interior_eval(r, th).unwrap().u;
            assert!(u > 0.0);
            assert!(u <= center_max + 1e-15);
        }
    }

    #[test]
    fn saint_venant_examples() {
        let sol = solve(&StarDomain::disk(), &SolverOptions::default()).unwrap();
        assert!((sol.saint_venant_functional() - PI / 8.0).abs() < 1e-13);
        let t = 0.05;
        let d = StarDomain::new(TrigPolynomial::constant(1.0), t).unwrap();
        let sol = solve(&d, &SolverOptions::default()).unwrap();
        let exact = PI * (1.0 + t).powi(4) / 8.0;
        assert!((sol.saint_venant_functional() - exact).abs() < 1e-12);
    }

    #[test]
    fn profile_csv_shape() {
        let d = StarDomain::new(faraway(), 0.01).unwrap();
        let sol = solve(&d, &SolverOptions::default()).unwrap();
        let profile = sol.boundary_profile(64);
        assert!(profile.rows.windows(2).all(|w| w[0].theta < w[1].theta));
        assert!(profile.rows.iter().all(|r| r.grad_sq_numeric > 0.0));
        let csv = profile.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 65);
        assert_eq!(lines[0], BoundaryProfile::CSV_HEADER);
        assert!(!csv.contains('\r'));
        assert_eq!(lines[1].split(',').count(), 6);
    }
}
