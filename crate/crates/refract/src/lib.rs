//! Occupation times of refracted spectrally negative Levy processes.
//!
//! A refracted process follows the dynamics of a spectrally negative Levy
//! process `X` below a barrier `b` and has a linear drift at rate `delta`
//! subtracted whenever it sits above the barrier:
//!
//! ```text
//! dU_t = dX_t - delta * 1{U_t > b} dt
//! ```
//!
//! This crate evaluates the Laplace transforms of the time `U` spends below
//! the barrier (up to first-passage times or forever), the density of the
//! total occupation time, and the associated Parisian ruin probability. All
//! closed-form results are backed by an independent Monte Carlo simulator of
//! the defining SDE, and a `validate` harness compares the two.
//!
//! Modules map onto the pipeline:
//!
//! - [`model`] — parametric specification of the driving process and the
//!   refracted pair, Laplace exponents and their right inverses.
//! - [`scale`] — scale functions `W`, `W'`, `Z` (closed-form partial
//!   fractions or numerical transform inversion) and basic exit identities.
//! - [`occupation`] — the occupation-time Laplace transforms, occupation
//!   density and Parisian ruin probability.
//! - [`mc`] — path-exact and Euler simulation of the SDE.
//! - [`validate`] — analytic-vs-Monte-Carlo comparison harness.
//! - [`cli`] — command line front end (`scale`, `lt`, `density`,
//!   `simulate`, `validate` subcommands).

pub mod cli;
pub mod fixtures;
pub mod mc;
pub mod model;
pub mod numerics;
pub mod occupation;
pub mod scale;
pub mod validate;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters violate a construction invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// Hypothesis (H) fails: bounded-variation driver with delta >= drift.
    #[error("hypothesis (H) violated: {0}")]
    HypothesisViolated(String),
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Argument outside the supported range of a numeric backend.
    #[error("range error: {0}")]
    RangeError(String),
    /// Operation not available for this backend / jump family.
    #[error("unsupported backend: {0}")]
    UnsupportedBackend(String),
    /// Root finder failed to converge.
    #[error("root finding failed: {0}")]
    RootFind(String),
    /// Quadrature could not reach the requested tolerance.
    #[error("accuracy error: requested {requested:e}, achieved {achieved:e}")]
    Accuracy { requested: f64, achieved: f64 },
    /// A quantity that must be positive came out non-positive; signals a bug.
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),
    /// Bad CLI / validation configuration.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use model::{JumpSpec, LevyModel, MagnitudeLaw, RefractedModel};
pub use occupation::{LaplaceResult, LtOptions, OccupationDensity, OccupationQuery};
pub use scale::{BackendKind, ScaleFunctionSet};
