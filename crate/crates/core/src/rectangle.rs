//! Series solution of the torsion problem on `(−L, L) × (−l, l)`.
//!
//! Two equivalent Fourier series are available: one in `cos(a_k y)` with
//! `cosh(a_k x)` weights (`a_k = (2k+1)π/(2l)`), and the same series with the
//! roles of the axes exchanged. A term of the first decays like
//! `exp(−a_k (L − |x|))`, so it converges slowly near `x = ±L`, exactly where
//! the second converges fast. Each point is evaluated with whichever series
//! has the faster geometric rate, and terms are added until the envelope is
//! below double precision.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RectangleDomain;
use crate::report::fmt_sig;
use crate::search::golden_section_max;

/// Default minimum number of series terms.
pub const DEFAULT_TERMS: usize = 30;
/// Smallest accepted term count.
pub const MIN_TERMS: usize = 8;
/// Smallest accepted number of samples per side.
pub const MIN_SIDE_SAMPLES: usize = 128;
/// Relative tie tolerance between side maxima.
pub const TIE_RTOL: f64 = 1e-9;
/// Fraction of a half-side kept clear of the corners by the certificate.
pub const CORNER_MARGIN: f64 = 1e-3;

const MAX_TERMS: usize = 1_000_000;
// exp(−40) ≈ 4e−18: a term beyond this envelope cannot move an f64 sum.
const ENVELOPE_EXPONENT: f64 = 40.0;

/// `u`, `∇u` and the mixed derivative `u_xy` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectSample {
    pub u: f64,
    pub grad: [f64; 2],
    pub u_xy: f64,
}

impl RectSample {
    pub fn grad_norm(&self) -> f64 {
        self.grad[0].hypot(self.grad[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectangleSolution {
    domain: RectangleDomain,
    terms: usize,
}

impl RectangleSolution {
    /// `terms` is the minimum number of series terms; more are added where
    /// the series needs them.
    pub fn new(domain: RectangleDomain, terms: usize) -> Result<Self> {
        if terms < MIN_TERMS {
            return Err(Error::InvalidArgument(format!(
                "series needs at least {MIN_TERMS} terms, got {terms}"
            )));
        }
        Ok(RectangleSolution { domain, terms })
    }

    pub fn domain(&self) -> &RectangleDomain {
        &self.domain
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<RectSample> {
        let (big, small) = (self.domain.half_length(), self.domain.half_width());
        if !(x.is_finite() && y.is_finite()) || !self.domain.contains(x, y) {
            return Err(Error::OutsideDomain { x, y });
        }
        // geometric rates of the two series, in units of π/2 per odd index
        let rate_x = (big - x.abs()) / small;
        let rate_y = (small - y.abs()) / big;
        if rate_x <= 0.0 && rate_y <= 0.0 {
            // corner: u and ∇u vanish
            return Ok(RectSample {
                u: 0.0,
                grad: [0.0; 2],
                u_xy: 0.0,
            });
        }
        Ok(if rate_x >= rate_y {
            let s = series(small, big, x, y, self.term_count(rate_x));
            RectSample {
                u: s.u,
                grad: [s.u_p, s.u_q],
                u_xy: s.u_pq,
            }
        } else {
            let s = series(big, small, y, x, self.term_count(rate_y));
            RectSample {
                u: s.u,
                grad: [s.u_q, s.u_p],
                u_xy: s.u_pq,
            }
        })
    }

    fn term_count(&self, rate: f64) -> usize {
        // smallest k with (2k+1)·(π/2)·rate ≥ ENVELOPE_EXPONENT
        let m = ENVELOPE_EXPONENT / (0.5 * PI * rate);
        let needed = if m.is_finite() { ((m - 1.0) / 2.0).ceil().max(0.0) as usize + 1 } else { MAX_TERMS };
        needed.clamp(self.terms, MAX_TERMS.max(self.terms))
    }

    /// `|∇u|` at the point of `side` with coordinate `s` along it.
    pub fn side_grad_norm(&self, side: Side, s: f64) -> Result<f64> {
        let (x, y) = side.point(&self.domain, s);
        Ok(self.eval(x, y)?.grad_norm())
    }
}

/// Evaluates the torsion function with `N` terms (`N ≥ 8`, a floor; see the
/// module docs).
pub fn rect_eval(domain: &RectangleDomain, x: f64, y: f64, terms: usize) -> Result<RectSample> {
    RectangleSolution::new(*domain, terms)?.eval(x, y)
}

struct SeriesValue {
    u: f64,
    u_p: f64,
    u_q: f64,
    u_pq: f64,
}

/// `u = (w² − q²)/2 − (16w²/π³) Σ (−1)^k m^{−3} cosh(a p)/cosh(a h) cos(a q)`
/// with `m = 2k+1`, `a = mπ/(2w)`, on `|p| ≤ h`, `|q| ≤ w`.
fn series(w: f64, h: f64, p: f64, q: f64, terms: usize) -> SeriesValue {
    let ap = p.abs();
    let sign_p = if p < 0.0 { -1.0 } else { 1.0 };
    let (mut su, mut sp, mut sq, mut spq) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..terms {
        let m = (2 * k + 1) as f64;
        let a = m * PI / (2.0 * w);
        let alt = if k % 2 == 0 { 1.0 } else { -1.0 };
        // cosh(a|p|)/cosh(ah) and sinh(a|p|)/cosh(ah) without overflow
        let base = (a * (ap - h)).exp() / (1.0 + (-2.0 * a * h).exp());
        let e = (-2.0 * a * ap).exp();
        let ch = base * (1.0 + e);
        let sh = base * (1.0 - e) * sign_p;
        let (sin, cos) = (a * q).sin_cos();
        su += alt * ch * cos / (m * m * m);
        sp += alt * sh * cos / (m * m);
        sq += alt * ch * sin / (m * m);
        spq += alt * sh * sin / m;
    }
    let c = 16.0 * w * w / (PI * PI * PI);
    let d = 8.0 * w / (PI * PI);
    SeriesValue {
        u: 0.5 * (w * w - q * q) - c * su,
        u_p: -d * sp,
        u_q: -q + d * sq,
        u_pq: 4.0 / PI * spq,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Top,
    Left,
    Bottom,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Right, Side::Top, Side::Left, Side::Bottom];

    pub fn label(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
            Side::Bottom => "bottom",
        }
    }

    /// Half the length of the side.
    pub fn half_extent(self, domain: &RectangleDomain) -> f64 {
        match self {
            Side::Right | Side::Left => domain.half_width(),
            Side::Top | Side::Bottom => domain.half_length(),
        }
    }

    /// The point at signed distance `s` from the side midpoint, measured
    /// along the positive `y` (vertical sides) or `x` (horizontal sides) axis.
    pub fn point(self, domain: &RectangleDomain, s: f64) -> (f64, f64) {
        let (big, small) = (domain.half_length(), domain.half_width());
        match self {
            Side::Right => (big, s),
            Side::Top => (s, small),
            Side::Left => (-big, s),
            Side::Bottom => (s, -small),
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Maximum of `|∇u|` along one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideMaximum {
    pub side: Side,
    pub arc_param: f64,
    pub x: f64,
    pub y: f64,
    pub grad_norm: f64,
    /// `|∇u|` strictly decreases from the midpoint toward both corners at
    /// the sampled points.
    pub decreasing_from_midpoint: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideProfileRow {
    pub side: Side,
    pub arc_param: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectFailPoints {
    pub half_length: f64,
    pub half_width: f64,
    pub terms: usize,
    pub side_samples: usize,
    pub max_grad_norm: f64,
    /// Sides whose maximum is within `TIE_RTOL` of the global maximum.
    pub winners: Vec<SideMaximum>,
    pub sides: Vec<SideMaximum>,
    #[serde(skip)]
    pub profile: Vec<SideProfileRow>,
}

pub const SIDE_PROFILE_HEADER: &str = "side,arc_param,grad_norm";

impl RectFailPoints {
    pub fn profile_csv(&self) -> String {
        let mut out = String::from(SIDE_PROFILE_HEADER);
        out.push('\n');
        for row in &self.profile {
            out.push_str(&format!("{},{},{}\n", row.side, fmt_sig(row.arc_param), fmt_sig(row.grad_norm)));
        }
        out
    }

    /// `|∇u|(0, l) − |∇u|(L, 0)`.
    pub fn long_short_gap(&self) -> f64 {
        let get = |side| self.sides.iter().find(|m| m.side == side).map_or(f64::NAN, |m| m.grad_norm);
        get(Side::Top) - get(Side::Right)
    }
}

/// Maximum of `|∇u|` on each side and the global winners.
///
/// Each side is sampled at an odd number of equally spaced points (at least
/// `side_samples`) so that the midpoint is a sample, and the best sample is
/// refined by golden-section search.
pub fn rect_fail_points(domain: &RectangleDomain, terms: usize, side_samples: usize) -> Result<RectFailPoints> {
    if side_samples < MIN_SIDE_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SIDE_SAMPLES} samples per side, got {side_samples}"
        )));
    }
    let sol = RectangleSolution::new(*domain, terms)?;
    let n = side_samples | 1;
    let mut sides = Vec::with_capacity(4);
    let mut profile = Vec::with_capacity(4 * n);
    for side in Side::ALL {
        let half = side.half_extent(domain);
        let params: Vec<f64> = (0..n).map(|j| -half + 2.0 * half * j as f64 / (n - 1) as f64).collect();
        let values = params
            .iter()
            .map(|&s| sol.side_grad_norm(side, s))
            .collect::<Result<Vec<f64>>>()?;
        profile.extend(params.iter().zip(&values).map(|(&arc_param, &grad_norm)| SideProfileRow {
            side,
            arc_param,
            grad_norm,
        }));

        let mid = n / 2;
        let decreasing_from_midpoint =
            values[mid..].windows(2).all(|w| w[1] < w[0]) && values[..=mid].windows(2).all(|w| w[0] < w[1]);

        // first best sample, so ties resolve toward the negative end
        let best = (0..n).fold(0, |b, j| if values[j] > values[b] { j } else { b });
        let lo = params[best.saturating_sub(1)];
        let hi = params[(best + 1).min(n - 1)];
        let f = |s: f64| sol.side_grad_norm(side, s).unwrap_or(f64::NEG_INFINITY);
        let (mut s, mut g) = golden_section_max(f, lo, hi, 1e-12 * half);
        if values[best] >= g {
            s = params[best];
            g = values[best];
        }
        let (x, y) = side.point(domain, s);
        sides.push(SideMaximum {
            side,
            arc_param: s,
            x,
            y,
            grad_norm: g,
            decreasing_from_midpoint,
        });
    }
    let max_grad_norm = sides.iter().map(|m| m.grad_norm).fold(0.0, f64::max);
    let winners = sides
        .iter()
        .filter(|m| m.grad_norm >= max_grad_norm * (1.0 - TIE_RTOL))
        .copied()
        .collect();
    Ok(RectFailPoints {
        half_length: domain.half_length(),
        half_width: domain.half_width(),
        terms,
        side_samples: n,
        max_grad_norm,
        winners,
        sides,
        profile,
    })
}

/// Sign check of `u_xy` on the quarter-sides `(0, L) × {l}` and `{L} × (0, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityCertificate {
    pub passes: bool,
    pub samples_per_side: usize,
    pub min_u_xy: f64,
    pub min_at: [f64; 2],
    pub long_side_min: f64,
    pub short_side_min: f64,
}

/// Samples `u_xy` at `side_samples` points on each open quarter-side,
/// keeping a margin of `CORNER_MARGIN` times the half-side from both ends.
pub fn rect_monotonicity_certificate(
    domain: &RectangleDomain,
    terms: usize,
    side_samples: usize,
) -> Result<MonotonicityCertificate> {
    if side_samples < MIN_SIDE_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SIDE_SAMPLES} samples per side, got {side_samples}"
        )));
    }
    let sol = RectangleSolution::new(*domain, terms)?;
    let (big, small) = (domain.half_length(), domain.half_width());
    let quarter = |half: f64| -> Vec<f64> {
        let m = CORNER_MARGIN * half;
        (0..side_samples)
            .map(|j| m + (half - 2.0 * m) * j as f64 / (side_samples - 1) as f64)
            .collect()
    };
    let mut min_u_xy = f64::INFINITY;
    let mut min_at = [0.0; 2];
    let mut scan = |points: Vec<(f64, f64)>| -> Result<f64> {
        let mut side_min = f64::INFINITY;
        for (x, y) in points {
            let v = sol.eval(x, y)?.u_xy;
            side_min = side_min.min(v);
            if v < min_u_xy {
                min_u_xy = v;
                min_at = [x, y];
            }
        }
        Ok(side_min)
    };
    let long_side_min = scan(quarter(big).into_iter().map(|x| (x, small)).collect())?;
    let short_side_min = scan(quarter(small).into_iter().map(|y| (big, y)).collect())?;
    Ok(MonotonicityCertificate {
        passes: min_u_xy > 0.0,
        samples_per_side: side_samples,
        min_u_xy,
        min_at,
        long_side_min,
        short_side_min,
    })
}
