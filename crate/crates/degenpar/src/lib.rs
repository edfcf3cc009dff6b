//! Numerical toolkit for 1D parabolic equations whose diffusion coefficient
//! vanishes on an interval `[A, B] ⊂ (0, 1)`.
//!
//! The crate provides, in dependency order:
//!
//! * [`profile`] — degenerate diffusion coefficients and the structural
//!   hypothesis checks (non-integrable inverse, regularity, geometry);
//! * [`mesh`] — uniform space-time grids, slices, fields and discrete norms;
//! * [`solver`] — implicit-Euler forward march and its exact-transpose
//!   backward march, with duality and energy diagnostics;
//! * [`carleman`] — the weight family `θ, η, ξ, σ`, both sides of the
//!   weighted estimate, observability quotients and the transformed-equation
//!   identity, all evaluated through log-domain quadrature;
//! * [`hum`] — penalized Hilbert Uniqueness Method: conjugate gradients on
//!   the control Gramian, the penalized functional and its gradient, and the
//!   ε-sweep;
//! * [`config`], [`harness`], [`io`] — the batch experiment layer behind the
//!   `degenpar` binary.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --release --example hum_control`.

pub mod carleman;
pub mod config;
pub mod harness;
pub mod hum;
pub mod io;
pub mod mesh;
pub mod profile;
pub mod sampling;
pub mod solver;

pub use carleman::{
    build_weights, carleman_lhs, carleman_lhs_with, carleman_rhs, carleman_rhs_with, max_ratios,
    normalized_s, observability_quotient, observability_study, ratio_study, z_transform_identity,
    CarlemanParams, CarlemanReport, WeightTables,
};
pub use config::RunConfig;
pub use hum::{
    eps_sweep, gramian_apply, hum_solve, j_eps_gradient, j_eps_value, HumResult, SweepReport,
};
pub use mesh::{
    build_grid, h1a_seminorm, l2_norm, slice_inner, spacetime_inner, Grid, Interval, SpaceSlice,
    SpaceTimeField,
};
pub use profile::{
    make_constant_profile, make_power_profile, make_tabulated_profile, validate_hypotheses,
    DiffusionProfile, HypothesisReport,
};
pub use solver::{
    duality_check, energy_check, solve_adjoint, solve_forward, ControlProblem, EnergyReport,
    Potential,
};
