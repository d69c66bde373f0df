use thiserror::Error;

/// Errors produced by the analysis and solver routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("domain lacks central symmetry; contact points are only defined for even-mode profiles")]
    NotCentrallySymmetric,

    #[error("degenerate profile: {0}")]
    Degenerate(String),

    #[error(
        "collocation system is ill-conditioned (condition estimate {condition:.3e} > {limit:.1e}); \
         lower the degree or the perturbation amplitude"
    )]
    IllConditioned { condition: f64, limit: f64 },

    #[error("solver did not converge: boundary residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    NotConverged { residual: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::IllConditioned { .. } | Error::NotConverged { .. })
    }
}
