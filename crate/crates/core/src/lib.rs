//! Incremental minimization for doubly nonlinear evolution equations
//!
//! This crate solves finite-dimensional inclusions of the form
//!
//! ```text
//! ∂Ψ_u(u'(t)) + F_t(u(t)) ∋ 0,      u(0) = u0,
//! ```
//!
//! where `Ψ_u` is a convex dissipation potential (possibly depending on the
//! state) and `F_t` is a subdifferential of a time-dependent, possibly
//! nonconvex energy `E(t, ·)`. Solutions are approximated by the implicit
//! Euler / minimizing-movement scheme
//!
//! ```text
//! U_n ∈ Argmin_U  τ Ψ_{U_{n-1}}((U - U_{n-1}) / τ) + E(t_n, U)
//! ```
//!
//! and certified through the Fenchel–Young gap, the De Giorgi discrete
//! energy inequality and the energy identity.
//!
//! The main pieces are:
//!
//! * [potentials]: dissipation potentials, conjugates, admissibility audits
//! * [energy]: the [EnergyModel] trait, marginal energies, Clarke
//!   subdifferentials in 1D, conditioned time-derivatives, assumption audits
//! * [scheme]: the time stepper, De Giorgi variational interpolants and the
//!   piecewise interpolants of a [DiscreteTrajectory]
//! * [diagnostics]: residuals, energy-identity defects, refinement studies
//! * [models]: the registry of worked examples
//! * [io]: trajectory / refinement CSV formats

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod io;
pub mod models;
mod numerics;
pub mod potentials;
pub mod scheme;
pub mod state;

pub use diagnostics::{DiagnosticsOptions, DiagnosticsReport};
pub use energy::{EnergyConstants, EnergyModel, SubdiffSet};
pub use error::{Error, Result};
pub use models::{ModelSpec, SubdiffMode};
pub use potentials::DissipationPotential;
pub use scheme::{DiscreteTrajectory, SolverOptions, TimeGrid};
pub use state::StateVector;
