//! Critical-threshold curves, characteristic phase-plane dynamics and a finite-volume
//! solver for the look-ahead traffic model `ρ_t + (f(ρ) e^{-ρ̄})_x = 0`.

// `!(x > 0.0)` rejects NaN as well; that is the point
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod flux;
pub mod interp;
pub mod kernel;
pub mod ode;
pub mod pde;
pub mod phase;
pub mod profiles;
pub mod quad;
pub mod threshold;

pub use error::{Error, Result};
pub use flux::{find_inflection, validate_hypotheses, FluxKind, FluxModel, ValidationReport};
pub use kernel::{nonlocal_density, Grid, KernelKind, KernelSpec};
pub use pde::{simulate, DiagRecord, GridSolution, ShockReport, SimConfig, SimResult};
pub use phase::{
    blowup_time_bound, choose_rho1, descent_time, integrate_phase, nullclines, phase_portrait,
    trajectory_in_phase_plane, FactorField, NonlocalFactorModel, PhaseOptions, PhaseState, PhaseTrajectory, Terminal,
};
pub use profiles::Profile;
pub use threshold::{
    build_gamma, build_sigma, classify_pair, classify_profile, gamma_closed_fj, sigma_closed_fj, Classification,
    GammaOptions, Region, SigmaOptions, ThresholdCurve, Which,
};
