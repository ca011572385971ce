//! Centralized numerical tolerances.
//!
//! All tolerances are calibrated for double precision at dimensions up to 16.
//! Relative thresholds are preferred wherever a natural scale exists, so the
//! suites survive rescaling of the inputs.

/// Maximum relative asymmetry `max|a - a*|` / `max|a|` accepted before an
/// input is rejected as non-hermitian. Accepted inputs are symmetrized.
pub const HERMITIAN_ASYMMETRY: f64 = 1e-10;

/// Relative Frobenius error allowed when a spectral decomposition is
/// reconstructed, and the unitarity defect allowed for its eigenvectors.
pub const RECONSTRUCTION: f64 = 1e-12;

/// Relative factor for the numerical-zero cutoff: eigenvalues below
/// `dim * lambda_max * SUPPORT_CUTOFF_FACTOR` count as zero. Used both when
/// clamping almost-zero eigenvalues of positive operators and when taking
/// powers or logs on the support.
pub const SUPPORT_CUTOFF_FACTOR: f64 = 1e-12;

/// Spectral-norm threshold for `(I - P_phi) P_psi` below which the support of
/// `psi` counts as dominated by the support of `phi`.
pub const SUPPORT_LEAK: f64 = 1e-9;

/// Relative disagreement allowed between the two symmetric trace forms of
/// `Q` for `alpha < 1`; larger disagreement signals numerical pathology.
pub const FORM_AGREEMENT: f64 = 1e-9;

/// Below this, `Q` counts as underflowed to zero and `D` (for `alpha < 1`)
/// is reported as plus infinity.
pub const Q_UNDERFLOW: f64 = 1e-300;

/// Relative error allowed when a closed-form optimizer must attain `Q`,
/// and for the residuals of its defining equations (spectral norm).
pub const ATTAINMENT: f64 = 1e-8;

/// Relative threshold for "equality" of divergences before/after a channel
/// and for the recovery defect in sufficiency tests.
pub const SUFFICIENCY: f64 = 1e-7;

/// Consistency budget for quantum maps: unitality, Kraus/transfer agreement,
/// hermiticity preservation, Choi positivity, and state recovery.
pub const MAP_CONSISTENCY: f64 = 1e-10;

/// Unitality defect allowed for a dual map on the restricted algebra, and
/// slack for p-norm contraction checks.
pub const DUAL_CONSISTENCY: f64 = 1e-9;

/// Slack for monotonicity comparisons (in `z`, in `alpha`, along martingale
/// chains) and for data-processing gaps.
pub const MONOTONE: f64 = 1e-9;

/// Slack for convexity checks; second differences amplify round-off, so this
/// sits one order above [`MONOTONE`].
pub const CONVEXITY: f64 = 1e-8;

/// Slack for ordering comparisons against the `z = 1` family and the
/// relative entropy.
pub const ORDERING: f64 = 1e-8;

/// Required closeness of `D` at `alpha = 1 -+ 1e-5` to the relative entropy.
pub const ALPHA_LIMIT: f64 = 1e-3;

/// Relative Frobenius threshold under which two operators count as commuting.
pub const COMMUTATOR: f64 = 1e-10;

/// Relative and absolute slack for singular-value-product majorization.
pub const LOGMAJ_REL: f64 = 1e-9;
pub const LOGMAJ_ABS: f64 = 1e-12;

/// Slack for trace-inequality checks, relative to `max(1, rhs)`.
pub const TRACE_INEQ: f64 = 1e-9;

/// Finite-difference step for optimizer gradients.
pub const FD_STEP: f64 = 1e-5;

/// Backtracking factor for the optimizer line search.
pub const ARMIJO_BACKTRACK: f64 = 0.5;

/// Default relative tolerance and iteration cap for the iterative optimizer.
pub const OPT_TOL: f64 = 1e-6;
pub const OPT_MAX_ITER: usize = 200;
