//! Finite Fourier series on the circle.
//!
//! A [`TrigPolynomial`] stores `c_0 + Σ_k (c_k cos kθ + s_k sin kθ)` with
//! dense coefficient vectors. The JSON form is a pair of sparse maps keyed by
//! the mode number written as a string, e.g. `{"cos": {"2": -4, "4": 1}}`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPolynomial {
    // cos[k] multiplies cos(kθ); sin[k] multiplies sin(kθ), sin[0] is always 0.
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_modes(&[(0, c)], &[])
    }

    pub fn cos_mode(k: usize, c: f64) -> Self {
        Self::from_modes(&[(k, c)], &[])
    }

    pub fn sin_mode(k: usize, s: f64) -> Self {
        Self::from_modes(&[], &[(k, s)])
    }

    /// Builds a polynomial from `(mode, coefficient)` pairs. Repeated modes
    /// accumulate. A sine coefficient on mode 0 is ignored (`sin 0 ≡ 0`).
    pub fn from_modes(cos: &[(usize, f64)], sin: &[(usize, f64)]) -> Self {
        let top = cos
            .iter()
            .chain(sin.iter())
            .map(|&(k, _)| k)
            .max()
            .unwrap_or(0);
        let mut p = TrigPolynomial {
            cos: vec![0.0; top + 1],
            sin: vec![0.0; top + 1],
        };
        for &(k, c) in cos {
            p.cos[k] += c;
        }
        for &(k, s) in sin {
            if k > 0 {
                p.sin[k] += s;
            }
        }
        p.trimmed()
    }

    fn with_len(len: usize) -> Self {
        TrigPolynomial {
            cos: vec![0.0; len],
            sin: vec![0.0; len],
        }
    }

    fn trimmed(mut self) -> Self {
        while let (Some(&c), Some(&s)) = (self.cos.last(), self.sin.last()) {
            if c == 0.0 && s == 0.0 {
                self.cos.pop();
                self.sin.pop();
            } else {
                break;
            }
        }
        self
    }

    /// Highest mode with a nonzero coefficient (0 for constants and zero).
    pub fn max_mode(&self) -> usize {
        self.cos.len().saturating_sub(1)
    }

    pub fn cos_coeff(&self, k: usize) -> f64 {
        self.cos.get(k).copied().unwrap_or(0.0)
    }

    pub fn sin_coeff(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.sin.get(k).copied().unwrap_or(0.0)
    }

    /// Mean value over the circle.
    pub fn mean(&self) -> f64 {
        self.cos_coeff(0)
    }

    pub fn is_zero(&self) -> bool {
        self.cos.is_empty()
    }

    /// True when every mode `k ≥ 1` vanishes.
    pub fn is_constant(&self) -> bool {
        self.max_mode() == 0
    }

    pub fn has_only_cosines(&self) -> bool {
        self.sin.iter().all(|&s| s == 0.0)
    }

    /// True when every odd mode vanishes, i.e. the profile is π-periodic.
    pub fn has_only_even_modes(&self) -> bool {
        (1..=self.max_mode())
            .step_by(2)
            .all(|k| self.cos_coeff(k) == 0.0 && self.sin_coeff(k) == 0.0)
    }

    /// Iterates `(k, cos_k, sin_k)` over all stored modes.
    pub fn modes(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.cos
            .iter()
            .zip(self.sin.iter())
            .enumerate()
            .map(|(k, (&c, &s))| (k, c, s))
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(TAU);
        self.modes()
            .map(|(k, c, s)| {
                if k == 0 {
                    return c;
                }
                let (sn, cs) = (k as f64 * theta).sin_cos();
                c * cs + s * sn
            })
            .sum()
    }

    /// Value of the `order`-th derivative at `theta`, without building the
    /// derivative polynomial.
    pub fn eval_derivative(&self, order: u32, theta: f64) -> f64 {
        if order == 0 {
            return self.eval(theta);
        }
        let theta = theta.rem_euclid(TAU);
        self.modes()
            .skip(1)
            .map(|(k, c, s)| {
                let kf = k as f64;
                let (sn, cs) = (kf * theta).sin_cos();
                let scale = kf.powi(order as i32);
                // d/dθ cycles (cos, sin) -> (-sin, cos) -> (-cos, -sin) -> (sin, -cos)
                let (a, b) = match order % 4 {
                    1 => (-c * sn, s * cs),
                    2 => (-c * cs, -s * sn),
                    3 => (c * sn, -s * cs),
                    _ => (c * cs, s * sn),
                };
                scale * (a + b)
            })
            .sum()
    }

    pub fn derivative(&self) -> Self {
        let mut d = Self::with_len(self.cos.len());
        for (k, c, s) in self.modes().skip(1) {
            let kf = k as f64;
            d.cos[k] = kf * s;
            d.sin[k] = -kf * c;
        }
        d.trimmed()
    }

    /// Applies a per-mode Fourier multiplier `m(k)` to both the cosine and
    /// sine coefficients of mode `k`.
    pub fn map_modes(&self, multiplier: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for k in 0..out.cos.len() {
            let m = multiplier(k);
            out.cos[k] *= m;
            out.sin[k] *= m;
        }
        if let Some(s0) = out.sin.first_mut() {
            *s0 = 0.0;
        }
        out.trimmed()
    }

    /// Samples `n` equally spaced values starting at θ = 0.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| self.eval(TAU * j as f64 / n as f64))
            .collect()
    }

    /// Largest coefficient magnitude; used as a scale for tolerances.
    pub fn coefficient_scale(&self) -> f64 {
        self.cos
            .iter()
            .chain(self.sin.iter())
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl Add for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn add(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        let len = self.cos.len().max(rhs.cos.len());
        let mut out = TrigPolynomial::with_len(len);
        for k in 0..len {
            out.cos[k] = self.cos_coeff(k) + rhs.cos_coeff(k);
            out.sin[k] = self.sin_coeff(k) + rhs.sin_coeff(k);
        }
        out.trimmed()
    }
}

impl Add for TrigPolynomial {
    type Output = TrigPolynomial;

    fn add(self, rhs: TrigPolynomial) -> TrigPolynomial {
        &self + &rhs
    }
}

impl Sub for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn sub(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        self + &(-rhs)
    }
}

impl Sub for TrigPolynomial {
    type Output = TrigPolynomial;

    fn sub(self, rhs: TrigPolynomial) -> TrigPolynomial {
        &self - &rhs
    }
}

impl Neg for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn neg(self) -> TrigPolynomial {
        self * -1.0
    }
}

impl Mul<f64> for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn mul(self, a: f64) -> TrigPolynomial {
        self.map_modes(|_| a)
    }
}

impl Mul<f64> for TrigPolynomial {
    type Output = TrigPolynomial;

    fn mul(self, a: f64) -> TrigPolynomial {
        &self * a
    }
}

impl fmt::Display for TrigPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (k, c, s) in self.modes() {
            if c != 0.0 {
                terms.push(match k {
                    0 => format!("{c}"),
                    1 => format!("{c}·cosθ"),
                    _ => format!("{c}·cos{k}θ"),
                });
            }
            if s != 0.0 {
                terms.push(match k {
                    1 => format!("{s}·sinθ"),
                    _ => format!("{s}·sin{k}θ"),
                });
            }
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseModes {
    #[serde(default)]
    cos: BTreeMap<String, f64>,
    #[serde(default)]
    sin: BTreeMap<String, f64>,
}

fn sparse(values: &[f64], skip_zero_mode: bool) -> BTreeMap<String, f64> {
    values
        .iter()
        .enumerate()
        .filter(|&(k, &v)| v != 0.0 && !(skip_zero_mode && k == 0))
        .map(|(k, &v)| (k.to_string(), v))
        .collect()
}

impl Serialize for TrigPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SparseModes {
            cos: sparse(&self.cos, false),
            sin: sparse(&self.sin, true),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TrigPolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = SparseModes::deserialize(deserializer)?;
        let parse = |map: &BTreeMap<String, f64>, min: usize| {
            map.iter()
                .map(|(key, &v)| {
                    let k: usize = key
                        .parse()
                        .map_err(|_| D::Error::custom(format!("mode key {key:?} is not a non-negative integer")))?;
                    if k < min {
                        return Err(D::Error::custom(format!("sine mode must be at least 1, got {k}")));
                    }
                    if !v.is_finite() {
                        return Err(D::Error::custom(format!("coefficient for mode {k} is not finite")));
                    }
                    Ok((k, v))
                })
                .collect::<std::result::Result<Vec<_>, D::Error>>()
        };
        let cos = parse(&raw.cos, 0)?;
        let sin = parse(&raw.sin, 1)?;
        Ok(TrigPolynomial::from_modes(&cos, &sin))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn faraway() -> TrigPolynomial {
        TrigPolynomial::from_modes(&[(2, -4.0), (4, 1.0)], &[])
    }

    #[test]
    fn zero_polynomial_vanishes() {
        let z = TrigPolynomial::zero();
        for j in 0..64 {
            assert_eq!(z.eval(0.1 * j as f64), 0.0);
        }
        assert!(z.is_zero() && z.is_constant());
        assert_eq!(z.max_mode(), 0);
    }

    #[test]
    fn evaluates_two_mode_profile() {
        assert_eq!(faraway().eval(0.0), -3.0);
        assert!((faraway().eval(PI / 2.0) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_keeps_max_mode() {
        let p = TrigPolynomial::from_modes(&[(0, 2.0), (3, 1.5)], &[(5, -0.5)]);
        assert_eq!(p.derivative().max_mode(), p.max_mode());
        let d2 = p.derivative().derivative();
        for j in 0..32 {
            let th = 0.2 * j as f64;
            assert!((d2.eval(th) - p.eval_derivative(2, th)).abs() < 1e-12);
            assert!((p.derivative().eval(th) - p.eval_derivative(1, th)).abs() < 1e-12);
        }
    }

    #[test]
    fn third_and_fourth_derivatives() {
        let p = TrigPolynomial::from_modes(&[(2, 1.0)], &[(3, 1.0)]);
        let d3 = p.derivative().derivative().derivative();
        let d4 = d3.derivative();
        for j in 0..16 {
            let th = 0.37 * j as f64;
            assert!((d3.eval(th) - p.eval_derivative(3, th)).abs() < 1e-11);
            assert!((d4.eval(th) - p.eval_derivative(4, th)).abs() < 1e-11);
        }
    }

    #[test]
    fn json_uses_string_mode_keys() {
        let p: TrigPolynomial = serde_json::from_str(r#"{"cos": {"2": -4, "4": 1}}"#).unwrap();
        assert_eq!(p, faraway());
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"cos":{"2":-4.0,"4":1.0},"sin":{}}"#);
        assert!(serde_json::from_str::<TrigPolynomial>(r#"{"sin": {"0": 1}}"#).is_err());
        assert!(serde_json::from_str::<TrigPolynomial>(r#"{"cos": {"x": 1}}"#).is_err());
        assert!(serde_json::from_str::<TrigPolynomial>(r#"{"tan": {}}"#).is_err());
    }

    #[test]
    fn symmetry_predicates() {
        assert!(faraway().has_only_even_modes());
        assert!(faraway().has_only_cosines());
        assert!(!TrigPolynomial::cos_mode(1, 1.0).has_only_even_modes());
        assert!(!TrigPolynomial::sin_mode(2, 1.0).has_only_cosines());
    }

    fn arb_poly() -> impl Strategy<Value = TrigPolynomial> {
        (
            prop::collection::vec(-5.0..5.0f64, 0..9),
            prop::collection::vec(-5.0..5.0f64, 0..9),
        )
            .prop_map(|(c, s)| {
                let cos: Vec<_> = c.into_iter().enumerate().collect();
                let sin: Vec<_> = s.into_iter().enumerate().skip(1).collect();
                TrigPolynomial::from_modes(&cos, &sin)
            })
    }

    proptest! {
        #[test]
        fn periodic(p in arb_poly(), theta in -10.0..10.0f64) {
            let a = p.eval(theta);
            let b = p.eval(theta + TAU);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + p.coefficient_scale()));
        }

        #[test]
        fn json_round_trip(p in arb_poly()) {
            let s = serde_json::to_string(&p).unwrap();
            let q: TrigPolynomial = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
