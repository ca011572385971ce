//! Numerical laboratory for alpha-z Renyi divergences between positive
//! operators on finite-dimensional complex matrix algebras.
//!
//! The crate evaluates the two-parameter family
//!
//! ```text
//! D_{alpha,z}(psi || phi) = log( Q_{alpha,z}(psi || phi) / Tr h_psi ) / (alpha - 1)
//! ```
//!
//! for positive operators `h_psi`, `h_phi` (not necessarily normalized),
//! together with the machinery needed to probe its structure numerically:
//!
//! - [`matcore`]: hermitian spectral calculus, operator powers and logs on
//!   supports, Schatten (quasi-)norms, singular-value products.
//! - [`divergence`]: `Q` and `D` for both parameter branches, the normalized
//!   relative entropy, the `z = inf` endpoint, and the classical
//!   (commuting-case) oracle.
//! - [`variational`]: variational expressions for `Q` with closed-form and
//!   iterative optimizers over the positive-definite cone.
//! - [`channels`]: quantum maps in the Heisenberg picture, preduals, duals
//!   with respect to a reference state, pinchings and corner restrictions,
//!   data-processing gaps, and sufficiency (reversibility) testing.
//! - [`analysis`]: parameter sweeps and property checkers (monotonicity in
//!   `z` and `alpha`, log-convexity, orderings against the relative entropy,
//!   limits at `alpha -> 1`, log-majorization and trace inequalities).
//! - [`sample`]: seeded random states, unitaries, and matrices for the
//!   property suites and the CLI.
//!
//! Everything is double precision and aimed at desk scale (dimensions up to
//! a few dozen); tolerances are centralized in [`tol`].

#![forbid(unsafe_code)]

pub mod analysis;
pub mod channels;
pub mod divergence;
pub mod matcore;
pub mod sample;
pub mod tol;
pub mod variational;

pub use divergence::{AlphaZ, DivValue, DpiRegion};
pub use matcore::{CMatrix, HermitianOperator, PositiveOperator, SpectralDecomposition};

/// Errors for every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not hermitian: asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("operator is not positive semidefinite: eigenvalue {min_eigenvalue:.6e} below -{tolerance:.3e}")]
    NotPositive { min_eigenvalue: f64, tolerance: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("eigendecomposition did not converge")]
    EigenFailed,
    #[error("{0}: zero operator not allowed")]
    ZeroOperator(&'static str),
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("supports differ (defect {defect:.3e}); this closed form requires equal supports")]
    UnequalSupports { defect: f64 },
    #[error("variational variable must be strictly positive definite")]
    SingularVariable,
    #[error("rank-deficient input where full rank is required")]
    RankDeficient,
    #[error("divergence is infinite for these inputs")]
    InfiniteDivergence,
    #[error("parameters (alpha = {alpha}, z = {z}) out of range: {what}")]
    OutOfRange { alpha: f64, z: f64, what: &'static str },
    #[error("numerical inconsistency in {what}: magnitude {magnitude:.3e}")]
    NumericalInconsistency { what: &'static str, magnitude: f64 },
    #[error("input supported outside the required subspace (leakage {leakage:.3e})")]
    SupportViolation { leakage: f64 },
    #[error("map does not meet requirements: {0}")]
    MapRequirement(&'static str),
    #[error("malformed channel specification: {0}")]
    MalformedChannel(String),
    #[error("malformed subalgebra: {0}")]
    MalformedSubalgebra(String),
}

pub type Result<T> = std::result::Result<T, Error>;
