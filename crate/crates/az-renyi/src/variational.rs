//! Variational characterizations of the divergence.
//!
//! For `alpha < 1` the quantity `Q_{alpha,z}` is the minimum over strictly
//! positive definite `a` of
//!
//! ```text
//! f(a) = alpha Tr (a^{1/2} h_psi^{alpha/z} a^{1/2})^{z/alpha}
//!      + (1 - alpha) Tr (a^{-1/2} h_phi^{(1-alpha)/z} a^{-1/2})^{z/(1-alpha)}
//! ```
//!
//! and for `alpha > 1` (with finite divergence) it is the maximum over
//! positive semidefinite `w` of
//!
//! ```text
//! g(w) = alpha Tr (y w y^*)^{z/alpha} - (alpha - 1) Tr w^{z/(alpha-1)}
//! ```
//!
//! where `y = h_psi^{alpha/2z} h_phi^{-(alpha-1)/2z}`. Both optima are
//! attained in closed form; this module evaluates the objectives, builds the
//! closed-form optimizers with self-consistency checks, and offers a small
//! derivative-free optimizer that confirms the optima numerically.

use crate::divergence::{q_alpha_z, y_factor, AlphaZ, DivValue};
use crate::matcore::{
    matrix_exp, schatten_norm, CMatrix, HermitianOperator, PositiveOperator,
    SpectralDecomposition,
};
use crate::tol;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Which way the variational expression bounds the divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `alpha < 1`: the objective is minimized and upper-bounds `Q`.
    Minimize,
    /// `alpha > 1`: the objective is maximized and lower-bounds `Q`.
    Maximize,
}

/// A divergence evaluation posed as an optimization problem.
///
/// The exponents `p = z/alpha`, `r = z/(1-alpha)` and `q = z/(alpha-1)` are
/// recomputed from the parameters on every call so they can never go stale.
#[derive(Debug, Clone)]
pub struct VariationalProblem {
    psi: PositiveOperator,
    phi: PositiveOperator,
    par: AlphaZ,
}

impl VariationalProblem {
    /// Poses the problem. Requires matching dimensions, a nonzero first
    /// argument, and a finite `z`.
    pub fn new(psi: PositiveOperator, phi: PositiveOperator, par: AlphaZ) -> Result<Self> {
        if psi.dim() != phi.dim() {
            return Err(Error::DimensionMismatch {
                left: psi.dim(),
                right: phi.dim(),
            });
        }
        if psi.is_zero() {
            return Err(Error::ZeroOperator("variational problem"));
        }
        if !par.z().is_finite() {
            return Err(Error::InvalidParameter {
                name: "z",
                value: par.z(),
                reason: "variational expressions need finite z",
            });
        }
        Ok(Self { psi, phi, par })
    }

    pub fn psi(&self) -> &PositiveOperator {
        &self.psi
    }

    pub fn phi(&self) -> &PositiveOperator {
        &self.phi
    }

    pub fn parameters(&self) -> &AlphaZ {
        &self.par
    }

    pub fn alpha(&self) -> f64 {
        self.par.alpha()
    }

    pub fn z(&self) -> f64 {
        self.par.z()
    }

    pub fn direction(&self) -> Direction {
        if self.alpha() < 1.0 {
            Direction::Minimize
        } else {
            Direction::Maximize
        }
    }

    /// Exponent `p = z / alpha`.
    pub fn p(&self) -> f64 {
        self.z() / self.alpha()
    }

    /// Exponent `r = z / (1 - alpha)`, positive on the minimization side.
    pub fn r(&self) -> f64 {
        self.z() / (1.0 - self.alpha())
    }

    /// Exponent `q = z / (alpha - 1)`, positive on the maximization side.
    pub fn q_exponent(&self) -> f64 {
        self.z() / (self.alpha() - 1.0)
    }

    /// The divergence quantity the objectives bound.
    pub fn q_value(&self) -> Result<DivValue> {
        q_alpha_z(&self.psi, &self.phi, &self.par)
    }
}

/// `Tr m^p` through the spectrum of the (numerically symmetrized) positive
/// semidefinite product `m`, with eigenvalues below the round-off floor of
/// `scale` treated as exact zeros.
fn trace_power(m: CMatrix, p: f64, scale: f64) -> Result<f64> {
    let dim = m.nrows();
    let sym = (&m + m.adjoint()).map(|v| v * 0.5);
    let h = HermitianOperator::new(sym)?;
    let sd = SpectralDecomposition::new(&h)?;
    let cutoff = (dim as f64) * scale * tol::SUPPORT_CUTOFF_FACTOR;
    Ok(sd
        .eigenvalues()
        .iter()
        .filter(|&&l| l > cutoff)
        .map(|&l| l.powf(p))
        .sum())
}

/// The minimization-side objective `f(a)` for `alpha < 1`.
///
/// `a` must be strictly positive definite since `a^{-1/2}` enters the second
/// term.
pub fn objective_lower(prob: &VariationalProblem, a: &PositiveOperator) -> Result<f64> {
    let (alpha, z) = (prob.alpha(), prob.z());
    if alpha >= 1.0 {
        return Err(Error::OutOfRange {
            alpha,
            z,
            what: "the minimization objective is defined for alpha < 1",
        });
    }
    if a.dim() != prob.psi.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: prob.psi.dim(),
        });
    }
    if a.rank() < a.dim() {
        return Err(Error::SingularVariable);
    }
    let sqrt_a = a.power(0.5)?;
    let inv_sqrt_a = a.power(-0.5)?;
    let psi_pow = prob.psi.power(alpha / z)?;
    let phi_pow = prob.phi.power((1.0 - alpha) / z)?;

    let m1 = sqrt_a.entries() * psi_pow.entries() * sqrt_a.entries();
    let scale1 = sqrt_a.lambda_max().powi(2) * psi_pow.lambda_max();
    let t1 = trace_power(m1, prob.p(), scale1)?;

    let m2 = inv_sqrt_a.entries() * phi_pow.entries() * inv_sqrt_a.entries();
    let scale2 = inv_sqrt_a.lambda_max().powi(2) * phi_pow.lambda_max();
    let t2 = trace_power(m2, prob.r(), scale2)?;

    Ok(alpha * t1 + (1.0 - alpha) * t2)
}

fn y_or_infinite(prob: &VariationalProblem) -> Result<CMatrix> {
    y_factor(&prob.psi, &prob.phi, &prob.par)?.ok_or(Error::InfiniteDivergence)
}

/// The maximization-side objective `g(w)` for `alpha > 1`.
///
/// Requires a finite divergence so that the factor `y` exists; any positive
/// semidefinite `w` is admissible.
pub fn objective_upper(prob: &VariationalProblem, w: &PositiveOperator) -> Result<f64> {
    let (alpha, z) = (prob.alpha(), prob.z());
    if alpha <= 1.0 {
        return Err(Error::OutOfRange {
            alpha,
            z,
            what: "the maximization objective is defined for alpha > 1",
        });
    }
    if w.dim() != prob.psi.dim() {
        return Err(Error::DimensionMismatch {
            left: w.dim(),
            right: prob.psi.dim(),
        });
    }
    let y = y_or_infinite(prob)?;
    let half = y * w.power(0.5)?.entries();
    let m1 = &half * half.adjoint();
    let scale1 = crate::matcore::singular_values(&half)
        .first()
        .map(|s| s * s)
        .unwrap_or(0.0);
    let t1 = trace_power(m1, prob.p(), scale1)?;
    let q = prob.q_exponent();
    let t2: f64 = w
        .eigenvalues()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l.powf(q))
        .sum();
    Ok(alpha * t1 - (alpha - 1.0) * t2)
}

fn finite_q(prob: &VariationalProblem) -> Result<f64> {
    match prob.q_value()? {
        DivValue::Finite(v) => Ok(v),
        DivValue::PlusInfinity => Err(Error::InfiniteDivergence),
    }
}

/// The closed-form minimizer
/// `a = h_psi^{-alpha/2z} (h_psi^{alpha/2z} h_phi^{(1-alpha)/z} h_psi^{alpha/2z})^alpha h_psi^{-alpha/2z}`
/// for `alpha < 1` and `z >= max(alpha, 1-alpha)` on full-rank pairs.
///
/// Two self-consistency checks run before returning: the objective at the
/// minimizer must match the divergence quantity to 1e-8 relative, and the
/// second stationarity identity must hold to 1e-8 in spectral norm.
pub fn closed_minimizer(prob: &VariationalProblem) -> Result<PositiveOperator> {
    let (alpha, z) = (prob.alpha(), prob.z());
    if alpha >= 1.0 || z < alpha.max(1.0 - alpha) {
        return Err(Error::OutOfRange {
            alpha,
            z,
            what: "the closed minimizer needs alpha < 1 and z >= max(alpha, 1-alpha)",
        });
    }
    let dim = prob.psi.dim();
    if prob.psi.rank() < dim || prob.phi.rank() < dim {
        return Err(Error::RankDeficient);
    }
    let e = alpha / (2.0 * z);
    let psi_half = prob.psi.power(e)?;
    let psi_half_inv = prob.psi.power(-e)?;
    let phi_mid = prob.phi.power((1.0 - alpha) / z)?;
    let inner = PositiveOperator::from_hermitian(
        psi_half.entries() * phi_mid.entries() * psi_half.entries(),
    )?;
    let core = inner.power(alpha)?;
    let a_bar = PositiveOperator::from_hermitian(
        psi_half_inv.entries() * core.entries() * psi_half_inv.entries(),
    )?;

    let q = finite_q(prob)?;
    let value = objective_lower(prob, &a_bar)?;
    let rel = (value - q).abs() / q.max(f64::MIN_POSITIVE);
    if rel > tol::ATTAINMENT {
        return Err(Error::NumericalInconsistency {
            what: "closed-form minimizer misses the divergence value",
            magnitude: rel,
        });
    }

    let phi_half = prob.phi.power((1.0 - alpha) / (2.0 * z))?;
    let a_inv = a_bar.power(-1.0)?;
    let lhs = phi_half.entries() * a_inv.entries() * phi_half.entries();
    let sandwich = PositiveOperator::from_hermitian(
        phi_half.entries() * prob.psi.power(alpha / z)?.entries() * phi_half.entries(),
    )?;
    let rhs = sandwich.power(1.0 - alpha)?;
    let residual = schatten_norm(&(lhs - rhs.entries()), f64::INFINITY)?;
    if residual > tol::ATTAINMENT {
        return Err(Error::NumericalInconsistency {
            what: "closed-form minimizer fails the stationarity identity",
            magnitude: residual,
        });
    }
    Ok(a_bar)
}

/// The closed-form maximizer `w = (y^* y)^{alpha - 1}` for `alpha > 1` with
/// finite divergence. The objective at the maximizer is checked against the
/// divergence quantity to 1e-8 relative before returning.
pub fn closed_maximizer(prob: &VariationalProblem) -> Result<PositiveOperator> {
    let (alpha, z) = (prob.alpha(), prob.z());
    if alpha <= 1.0 {
        return Err(Error::OutOfRange {
            alpha,
            z,
            what: "the closed maximizer needs alpha > 1",
        });
    }
    let y = y_or_infinite(prob)?;
    let gram = PositiveOperator::from_hermitian(y.adjoint() * &y)?;
    let w_bar = gram.power(alpha - 1.0)?;

    let q = finite_q(prob)?;
    let value = objective_upper(prob, &w_bar)?;
    let rel = (value - q).abs() / q.max(f64::MIN_POSITIVE);
    if rel > tol::ATTAINMENT {
        return Err(Error::NumericalInconsistency {
            what: "closed-form maximizer misses the divergence value",
            magnitude: rel,
        });
    }
    Ok(w_bar)
}

/// Where the numeric optimizer starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartPoint {
    /// Start from the identity (`H = 0`).
    Identity,
    /// Start from a seeded random hermitian exponent.
    Random,
}

/// Knobs for [`numeric_optimize`].
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    /// Convergence threshold on the Euclidean norm of the finite-difference
    /// gradient.
    pub tol: f64,
    /// Outer iteration cap.
    pub max_iter: usize,
    /// Seed for the random start (ignored for [`StartPoint::Identity`]).
    pub seed: u64,
    pub start: StartPoint,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            tol: tol::OPT_TOL,
            max_iter: tol::OPT_MAX_ITER,
            seed: 0,
            start: StartPoint::Identity,
        }
    }
}

/// Result of a numeric optimization run.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub optimizer: PositiveOperator,
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit first; `value` is then the best
    /// value seen so far rather than a certified optimum.
    pub converged: bool,
}

fn params_to_hermitian(x: &[f64], dim: usize) -> HermitianOperator {
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = crate::matcore::c64(x[i], 0.0);
    }
    let mut k = dim;
    for p in 0..dim {
        for q in (p + 1)..dim {
            let v = crate::matcore::c64(x[k], x[k + 1]);
            m[(p, q)] = v;
            m[(q, p)] = v.conj();
            k += 2;
        }
    }
    HermitianOperator::new(m).expect("hermitian by construction")
}

/// Confirms the variational optimum numerically.
///
/// The variable is parametrized as `exp(H)` over hermitian `H`, which keeps
/// it strictly inside the positive cone; gradients come from central finite
/// differences and steps from Armijo backtracking (with a Barzilai-Borwein
/// first guess). Deterministic for a fixed config.
pub fn numeric_optimize(prob: &VariationalProblem, cfg: &OptimizerConfig) -> Result<OptimizeOutcome> {
    let dim = prob.psi.dim();
    let minimize = prob.direction() == Direction::Minimize;
    if minimize {
        if prob.psi.rank() < dim || prob.phi.rank() < dim {
            return Err(Error::RankDeficient);
        }
    } else {
        y_or_infinite(prob)?;
    }
    let eval = |x: &[f64]| -> Result<f64> {
        let a = matrix_exp(&params_to_hermitian(x, dim))?;
        if minimize {
            objective_lower(prob, &a)
        } else {
            Ok(-objective_upper(prob, &a)?)
        }
    };

    let n = dim * dim;
    let mut x = vec![0.0; n];
    if cfg.start == StartPoint::Random {
        let mut rng = crate::sample::rng(cfg.seed);
        let spread = 0.5 / (dim as f64).sqrt();
        for xi in x.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *xi = spread * g;
        }
    }
    let mut f = eval(&x)?;
    let mut prev_x: Option<Vec<f64>> = None;
    let mut prev_grad: Option<Vec<f64>> = None;
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += tol::FD_STEP;
            xm[i] -= tol::FD_STEP;
            grad[i] = (eval(&xp)? - eval(&xm)?) / (2.0 * tol::FD_STEP);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut step = match (&prev_x, &prev_grad) {
            (Some(px), Some(pg)) => {
                let num: f64 = x
                    .iter()
                    .zip(px)
                    .zip(grad.iter().zip(pg))
                    .map(|((xi, pxi), (gi, pgi))| (xi - pxi) * (gi - pgi))
                    .sum();
                let den: f64 = grad.iter().zip(pg).map(|(gi, pgi)| (gi - pgi) * (gi - pgi)).sum();
                let bb = num / den;
                if bb.is_finite() && bb > 1e-12 && bb < 1e6 {
                    bb
                } else {
                    1.0 / gnorm.max(1.0)
                }
            }
            _ => 1.0 / gnorm.max(1.0),
        };
        let mut accepted = false;
        for _ in 0..60 {
            let xt: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
            let ft = eval(&xt)?;
            if ft <= f - 1e-4 * step * gnorm * gnorm {
                prev_x = Some(std::mem::replace(&mut x, xt));
                prev_grad = Some(grad);
                f = ft;
                accepted = true;
                break;
            }
            step *= tol::ARMIJO_BACKTRACK;
        }
        if !accepted {
            // Line search stalled at the finite-difference noise floor.
            break;
        }
    }

    let optimizer = matrix_exp(&params_to_hermitian(&x, dim))?;
    let value = if minimize { f } else { -f };
    Ok(OptimizeOutcome {
        optimizer,
        value,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::AlphaZ;
    use crate::matcore::{c64, schatten_norm, PositiveOperator};
    use crate::sample;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn problem(psi: PositiveOperator, phi: PositiveOperator, alpha: f64, z: f64) -> VariationalProblem {
        VariationalProblem::new(psi, phi, AlphaZ::new(alpha, z).unwrap()).unwrap()
    }

    fn normalized_pd(dim: usize, rng: &mut impl Rng) -> PositiveOperator {
        let a = sample::random_positive_definite(dim, rng);
        let t = a.trace();
        a.scale(1.0 / t).unwrap()
    }

    #[test]
    fn direction_and_exponents_follow_alpha() {
        let psi = PositiveOperator::identity(2);
        let phi = PositiveOperator::identity(2);
        let low = problem(psi.clone(), phi.clone(), 0.25, 0.75);
        assert_eq!(low.direction(), Direction::Minimize);
        assert_abs_diff_eq!(low.p() * low.alpha(), low.z(), epsilon = 1e-15);
        assert_abs_diff_eq!(low.r() * (1.0 - low.alpha()), low.z(), epsilon = 1e-15);
        let high = problem(psi, phi, 2.0, 1.5);
        assert_eq!(high.direction(), Direction::Maximize);
        assert_abs_diff_eq!(high.q_exponent() * (high.alpha() - 1.0), high.z(), epsilon = 1e-15);
    }

    #[test]
    fn infinite_z_rejected() {
        let psi = PositiveOperator::identity(2);
        let phi = PositiveOperator::identity(2);
        let par = AlphaZ::new(0.5, f64::INFINITY).unwrap();
        assert!(VariationalProblem::new(psi, phi, par).is_err());
    }

    #[test]
    fn lower_objective_at_identity_pair() {
        let half = PositiveOperator::from_real_diagonal(&[0.5, 0.5]).unwrap();
        let prob = problem(half.clone(), half, 0.5, 1.0);
        let a = PositiveOperator::identity(2);
        let f = objective_lower(&prob, &a).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lower_objective_commuting_scalar_formula() {
        let p = [0.6, 0.3, 0.1];
        let q = [0.2, 0.5, 0.3];
        let av = [1.3, 0.7, 2.1];
        let (alpha, z) = (0.4, 0.9);
        let prob = problem(
            PositiveOperator::from_real_diagonal(&p).unwrap(),
            PositiveOperator::from_real_diagonal(&q).unwrap(),
            alpha,
            z,
        );
        let a = PositiveOperator::from_real_diagonal(&av).unwrap();
        let f = objective_lower(&prob, &a).unwrap();
        let expect: f64 = alpha
            * p.iter()
                .zip(&av)
                .map(|(pi, ai)| (ai * pi.powf(alpha / z)).powf(z / alpha))
                .sum::<f64>()
            + (1.0 - alpha)
                * q.iter()
                    .zip(&av)
                    .map(|(qi, ai)| (qi.powf((1.0 - alpha) / z) / ai).powf(z / (1.0 - alpha)))
                    .sum::<f64>();
        assert_abs_diff_eq!(f, expect, epsilon = 1e-12 * expect);
    }

    #[test]
    fn lower_objective_rejects_singular_variable() {
        let half = PositiveOperator::from_real_diagonal(&[0.5, 0.5]).unwrap();
        let prob = problem(half.clone(), half, 0.5, 1.0);
        let singular = PositiveOperator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            objective_lower(&prob, &singular),
            Err(crate::Error::SingularVariable)
        ));
    }

    #[test]
    fn upper_objective_zero_w_gives_zero() {
        let mut rng = sample::rng(7);
        let psi = normalized_pd(3, &mut rng);
        let phi = normalized_pd(3, &mut rng);
        let prob = problem(psi, phi, 1.5, 1.2);
        let zero = PositiveOperator::from_real_diagonal(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(objective_upper(&prob, &zero).unwrap(), 0.0);
    }

    #[test]
    fn upper_objective_rejects_infinite_divergence() {
        let psi = PositiveOperator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let phi = PositiveOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let prob = problem(psi, phi, 2.0, 1.0);
        let w = PositiveOperator::identity(2);
        assert!(matches!(
            objective_upper(&prob, &w),
            Err(crate::Error::InfiniteDivergence)
        ));
    }

    #[test]
    fn closed_minimizer_identity_pair_is_identity() {
        let half = PositiveOperator::from_real_diagonal(&[0.5, 0.5]).unwrap();
        let prob = problem(half.clone(), half, 0.5, 1.0);
        let a_bar = closed_minimizer(&prob).unwrap();
        let diff = a_bar.entries() - CMatrix::identity(2, 2);
        assert!(schatten_norm(&diff, f64::INFINITY).unwrap() < 1e-12);
    }

    #[test]
    fn closed_minimizer_commuting_scalar_formula() {
        let p = [0.5, 0.3, 0.2];
        let q = [0.25, 0.3, 0.45];
        let (alpha, z) = (0.35, 0.8);
        let prob = problem(
            PositiveOperator::from_real_diagonal(&p).unwrap(),
            PositiveOperator::from_real_diagonal(&q).unwrap(),
            alpha,
            z,
        );
        let a_bar = closed_minimizer(&prob).unwrap();
        for i in 0..3 {
            let expect = (q[i] / p[i]).powf(alpha * (1.0 - alpha) / z);
            let got = a_bar.entries()[(i, i)].re;
            assert_abs_diff_eq!(got, expect, epsilon = 1e-10 * expect);
        }
    }

    #[test]
    fn closed_minimizer_random_qutrit_attains_q() {
        let mut rng = sample::rng(11);
        for _ in 0..10 {
            let psi = normalized_pd(3, &mut rng);
            let phi = normalized_pd(3, &mut rng);
            let prob = problem(psi, phi, 0.6, 1.1);
            // Attainment and the stationarity identity are checked inside.
            let a_bar = closed_minimizer(&prob).unwrap();
            let q = prob.q_value().unwrap().finite().unwrap();
            let f = objective_lower(&prob, &a_bar).unwrap();
            assert!((f - q).abs() <= 1e-8 * q.max(1.0));
        }
    }

    #[test]
    fn closed_minimizer_rejects_bad_inputs() {
        let mut rng = sample::rng(3);
        let psi = normalized_pd(3, &mut rng);
        let phi = normalized_pd(3, &mut rng);
        let low_z = problem(psi.clone(), phi.clone(), 0.7, 0.2);
        assert!(matches!(
            closed_minimizer(&low_z),
            Err(crate::Error::OutOfRange { .. })
        ));
        let deficient = sample::random_state(3, 2, &mut rng).unwrap();
        let prob = problem(deficient, phi, 0.5, 1.0);
        assert!(matches!(
            closed_minimizer(&prob),
            Err(crate::Error::RankDeficient)
        ));
    }

    #[test]
    fn closed_maximizer_identity_pair_gives_trace() {
        let mut rng = sample::rng(21);
        let psi = normalized_pd(3, &mut rng);
        let prob = problem(psi.clone(), psi, 1.7, 1.3);
        let w_bar = closed_maximizer(&prob).unwrap();
        let v = objective_upper(&prob, &w_bar).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn closed_maximizer_commuting_scalar_formula() {
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        let prob = problem(
            PositiveOperator::from_real_diagonal(&p).unwrap(),
            PositiveOperator::from_real_diagonal(&q).unwrap(),
            2.0,
            1.0,
        );
        let w_bar = closed_maximizer(&prob).unwrap();
        for i in 0..2 {
            let expect = p[i] * p[i] / q[i];
            assert_abs_diff_eq!(w_bar.entries()[(i, i)].re, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_maximizer_random_attains_q() {
        let mut rng = sample::rng(5);
        for _ in 0..10 {
            let psi = normalized_pd(2, &mut rng);
            let phi = normalized_pd(2, &mut rng);
            let prob = problem(psi, phi, 1.5, 1.2);
            let w_bar = closed_maximizer(&prob).unwrap();
            let q = prob.q_value().unwrap().finite().unwrap();
            let v = objective_upper(&prob, &w_bar).unwrap();
            assert!((v - q).abs() <= 1e-8 * q.max(1.0));
        }
    }

    #[test]
    fn optimizer_starting_at_optimum_stops_immediately() {
        let half = PositiveOperator::from_real_diagonal(&[0.5, 0.5]).unwrap();
        let prob = problem(half.clone(), half, 0.5, 1.0);
        let out = numeric_optimize(&prob, &OptimizerConfig::default()).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 5);
        assert_abs_diff_eq!(out.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn optimizer_matches_q_minimization() {
        let mut rng = sample::rng(31);
        let psi = normalized_pd(3, &mut rng);
        let phi = normalized_pd(3, &mut rng);
        let prob = problem(psi, phi, 0.5, 1.0);
        let q = prob.q_value().unwrap().finite().unwrap();
        let out = numeric_optimize(&prob, &OptimizerConfig::default()).unwrap();
        assert!(out.converged, "no convergence in {} iterations", out.iterations);
        assert!((out.value - q).abs() <= 1e-5 * q);
    }

    #[test]
    fn optimizer_matches_q_maximization() {
        let mut rng = sample::rng(37);
        let psi = normalized_pd(2, &mut rng);
        let phi = normalized_pd(2, &mut rng);
        let prob = problem(psi, phi, 1.5, 1.2);
        let q = prob.q_value().unwrap().finite().unwrap();
        let out = numeric_optimize(&prob, &OptimizerConfig::default()).unwrap();
        assert!(out.converged, "no convergence in {} iterations", out.iterations);
        assert!((out.value - q).abs() <= 1e-5 * q);
    }

    #[test]
    fn perturbing_the_minimizer_opens_a_growing_gap() {
        let mut rng = sample::rng(43);
        for _ in 0..5 {
            let psi = normalized_pd(2, &mut rng);
            let phi = normalized_pd(2, &mut rng);
            // p = z/alpha = 2 > 1 here.
            let prob = problem(psi, phi, 0.5, 1.0);
            let q = prob.q_value().unwrap().finite().unwrap();
            let a_bar = closed_minimizer(&prob).unwrap();
            let log_a = a_bar.log().unwrap();
            let h = sample::random_hermitian(2, &mut rng);
            let hn = schatten_norm(h.entries(), f64::INFINITY).unwrap();
            let mut last_gap = 0.0;
            for t in [0.1, 0.5, 1.0] {
                let shifted = log_a.entries() + h.entries().map(|v| v * c64(t / hn, 0.0));
                let a_t = matrix_exp(&HermitianOperator::new(shifted).unwrap()).unwrap();
                let gap = objective_lower(&prob, &a_t).unwrap() - q;
                assert!(gap > 0.0, "gap {gap} not positive at t={t}");
                assert!(gap > last_gap, "gap {gap} did not grow at t={t}");
                last_gap = gap;
            }
        }
    }

    #[test]
    fn optimizer_is_insensitive_to_the_start() {
        let mut rng = sample::rng(53);
        let psi = normalized_pd(2, &mut rng);
        let phi = normalized_pd(2, &mut rng);
        // p = r = 2 > 1: the optimum is unique and interior.
        let prob = problem(psi, phi, 0.5, 1.0);
        let mut optimizers = Vec::new();
        for seed in 0..5 {
            let cfg = OptimizerConfig {
                seed,
                start: StartPoint::Random,
                ..OptimizerConfig::default()
            };
            let out = numeric_optimize(&prob, &cfg).unwrap();
            assert!(out.converged);
            optimizers.push(out.optimizer);
        }
        for i in 0..optimizers.len() {
            for j in (i + 1)..optimizers.len() {
                let diff = optimizers[i].entries() - optimizers[j].entries();
                assert!(diff.norm() <= 1e-4, "optimizers {i} and {j} disagree");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

        #[test]
        fn lower_objective_bounds_q(seed in 0u64..1_000_000, ai in 0usize..4, zoff in 0usize..3) {
            let alphas = [0.2f64, 0.4, 0.6, 0.85];
            let alpha = alphas[ai];
            let z = alpha.max(1.0 - alpha) + [0.0, 0.3, 1.1][zoff];
            let mut rng = sample::rng(seed);
            let dim = 2 + (seed % 2) as usize;
            let psi = normalized_pd(dim, &mut rng);
            let phi = normalized_pd(dim, &mut rng);
            let prob = problem(psi, phi, alpha, z);
            let q = prob.q_value().unwrap().finite().unwrap();
            let a = sample::random_positive_definite(dim, &mut rng);
            let f = objective_lower(&prob, &a).unwrap();
            prop_assert!(f >= q - 1e-9 * q.max(1.0));
        }

        #[test]
        fn upper_objective_bounds_q(seed in 0u64..1_000_000, ai in 0usize..4, zi in 0usize..4) {
            let alphas = [1.3, 1.5, 2.0, 2.5];
            let alpha = alphas[ai];
            let z = [0.4, 0.9, 1.6, 3.0][zi];
            let mut rng = sample::rng(seed);
            let dim = 2 + (seed % 2) as usize;
            let psi = normalized_pd(dim, &mut rng);
            let phi = normalized_pd(dim, &mut rng);
            let prob = problem(psi, phi, alpha, z);
            let q = prob.q_value().unwrap().finite().unwrap();
            let w = {
                let g = sample::random_state(dim, 1 + (seed % dim as u64) as usize, &mut rng).unwrap();
                g.scale(2.0).unwrap()
            };
            let v = objective_upper(&prob, &w).unwrap();
            prop_assert!(v <= q + 1e-9 * q.max(1.0));
        }

        #[test]
        fn upper_objective_bounds_q_dominated_pairs(seed in 0u64..1_000_000, zi in 0usize..3) {
            // phi = psi / lambda + sigma guarantees psi <= lambda phi; the
            // bound then holds down to z = alpha - 1.
            let alpha = 1.8;
            let z = alpha - 1.0 + [0.0, 0.4, 1.0][zi];
            let mut rng = sample::rng(seed);
            let lambda = 4.0;
            let psi = normalized_pd(2, &mut rng);
            let sigma = normalized_pd(2, &mut rng).scale(0.5).unwrap();
            let phi = psi.scale(1.0 / lambda).unwrap().add(&sigma).unwrap();
            let prob = problem(psi, phi, alpha, z);
            let q = prob.q_value().unwrap().finite().unwrap();
            let w = sample::random_positive_definite(2, &mut rng);
            let v = objective_upper(&prob, &w).unwrap();
            prop_assert!(v <= q + 1e-9 * q.max(1.0));
        }
    }
}
