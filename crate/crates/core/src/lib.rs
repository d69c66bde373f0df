//! Locating the boundary maximum of `|∇u|` for the torsion problem
//! `−Δu = 1` in `Ω`, `u = 0` on `∂Ω`.
//!
//! Two families of domains are covered:
//!
//! * nearly-disk star domains `r < 1 + t·ζ(θ)`, where a first-order Fourier
//!   multiplier theory ([`perturbation`]) predicts the fail point and an
//!   independent harmonic-polynomial solver ([`solver`]) checks it;
//! * rectangles `(−L, L) × (−l, l)`, handled by the classical series
//!   solution ([`rectangle`]).

pub mod error;
pub mod fail_point;
pub mod geometry;
pub mod perturbation;
pub mod quadrature;
pub mod rectangle;
pub mod report;
pub mod reproduce;
pub mod search;
pub mod solver;
pub mod trig;

pub use error::{Error, Result};
pub use geometry::{RectangleDomain, StarDomain};
pub use rectangle::{rect_eval, rect_fail_points, rect_monotonicity_certificate, RectangleSolution};
pub use search::AngleArc;
pub use solver::{solve, solve_adaptive, BoundaryProfile, SolverOptions, TorsionSolution};
pub use trig::TrigPolynomial;
