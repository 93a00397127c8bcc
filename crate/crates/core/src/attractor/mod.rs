//! Pullback experiments on a fixed noise path: absorption, `L^p` ceilings,
//! truncation tails, `L^p` Cauchy behaviour, continuity in `eps` and
//! convergence to the random equilibrium.

mod absorption;
mod bounds;
mod bundle;
mod cauchy;
mod continuity;
mod equilibrium;
mod matrix;

pub use absorption::{
    absorbing_functional, absorption_radius, absorption_test, integrand_monotone_in_eps,
    AbsorbingFunctional, AbsorptionReport, AbsorptionRow, AbsorptionSettings,
};
pub use bounds::{
    geometric_grid, lp_bound_test, truncation_profile, truncation_test, LpReport, LpRow,
    TruncationReport, TruncationRow,
};
pub use bundle::InitialBundle;
pub use cauchy::{lp_cauchy_test, split_distance, CauchyEntry, CauchyReport, Split};
pub use continuity::{epsilon_continuity, ContinuityReport, ContinuityRow};
pub use equilibrium::{
    equilibrium, equilibrium_invariance, EquilibriumReport, EquilibriumRow, InvarianceReport,
    InvarianceRow,
};
pub use matrix::{MatrixCell, PullbackMatrix};
