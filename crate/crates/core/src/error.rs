use thiserror::Error;

/// Errors raised by flux construction, curve building, phase integration and the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("seed region violation at rho={rho:e}: sigma={sigma:e} outside [0, {upper:e}]")]
    SeedRegionViolation { rho: f64, sigma: f64, upper: f64 },

    #[error("no inflection: flux is concave on all of [0, 1]")]
    NoInflection,

    #[error("degenerate inflection: derivatives of order 3..=6 all vanish at rho_c={rho_c}")]
    DegenerateInflection { rho_c: f64 },

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("factor out of bounds: {value} not in [{lower}, {upper}] at t={t}")]
    FactorOutOfBounds { value: f64, lower: f64, upper: f64, t: f64 },

    #[error("rho1 too large: rho1={rho1}, 2*d_plus={twice_d_plus}, lower bound of d={lower}")]
    Rho1TooLarge { rho1: f64, twice_d_plus: f64, lower: f64 },

    #[error("CFL violation: courant number {courant} > 1")]
    CflViolation { courant: f64 },

    #[error("domain exit at t={t}: mass {mass:e} within the {side} boundary band")]
    DomainExit { t: f64, side: &'static str, mass: f64 },

    #[error("step size fell below the floor at t={t}")]
    StepFloor { t: f64 },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or violated preconditions).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CflViolation { .. }
                | Error::StepFloor { .. }
                | Error::DomainExit { .. }
                | Error::FactorOutOfBounds { .. }
                | Error::SeedRegionViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
