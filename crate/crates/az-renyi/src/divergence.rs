//! The alpha-z Renyi quantities: `Q_{alpha,z}` and `D_{alpha,z}` for both
//! parameter branches, the normalized relative entropy `D_1`, the `z = inf`
//! endpoint, and the classical (commuting-case) oracle.
//!
//! For `0 < alpha < 1`,
//! `Q = Tr (h_phi^((1-alpha)/2z) h_psi^(alpha/z) h_phi^((1-alpha)/2z))^z`;
//! for `alpha > 1` the support of `psi` must be dominated by the support of
//! `phi`, and `Q = ||y||_{2z}^{2z}` with
//! `y = h_psi^(alpha/2z) h_phi^(-(alpha-1)/2z)` (pseudo-inverse on the
//! support). Otherwise `Q = +inf`. Then
//! `D = log(Q / Tr h_psi) / (alpha - 1)`.

use crate::matcore::{CMatrix, PositiveOperator};
use crate::{tol, Error, Result};

/// Where a parameter pair sits relative to the two regions where the
/// data-processing inequality is available.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpiRegion {
    /// `0 < alpha < 1` and `z >= max(alpha, 1 - alpha)`.
    LowAlpha,
    /// `alpha > 1` and `max(alpha/2, alpha - 1) <= z <= alpha`.
    HighAlpha,
    Outside,
}

impl std::fmt::Display for DpiRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DpiRegion::LowAlpha => write!(f, "i"),
            DpiRegion::HighAlpha => write!(f, "ii"),
            DpiRegion::Outside => write!(f, "outside"),
        }
    }
}

/// Parameter ranges in which a channel preserving the divergence of a pair
/// is guaranteed to be reversible on that pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SufficiencyRange {
    /// `0 < alpha < 1`, `z >= max(alpha, 1 - alpha)`. The flags say which
    /// support condition unlocks the conclusion: `alpha < z` works when
    /// `s(phi) <= s(psi)`, `1 - alpha < z` when `s(psi) <= s(phi)`.
    BelowOne {
        alpha_lt_z: bool,
        complement_lt_z: bool,
    },
    /// `alpha > 1`, `max(alpha/2, alpha - 1) <= z <= alpha`, `alpha < z + 1`
    /// (finite divergence is required at call time).
    AboveOne,
    None,
}

/// Validated parameter pair `(alpha, z)` with `alpha > 0`, `alpha != 1`,
/// `z > 0` (possibly `+inf`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaZ {
    alpha: f64,
    z: f64,
}

impl AlphaZ {
    pub fn new(alpha: f64, z: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha == 1.0 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "alpha must be finite, positive, and different from 1",
            });
        }
        if alpha.is_nan() || z.is_nan() || z <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "z",
                value: z,
                reason: "z must be positive (finite or +inf)",
            });
        }
        Ok(Self { alpha, z })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn classify(&self) -> DpiRegion {
        let (a, z) = (self.alpha, self.z);
        if a < 1.0 && z >= a.max(1.0 - a) {
            DpiRegion::LowAlpha
        } else if a > 1.0 && z >= (a / 2.0).max(a - 1.0) && z <= a {
            DpiRegion::HighAlpha
        } else {
            DpiRegion::Outside
        }
    }

    pub fn sufficiency_range(&self) -> SufficiencyRange {
        let (a, z) = (self.alpha, self.z);
        match self.classify() {
            DpiRegion::LowAlpha => {
                let alpha_lt_z = a < z;
                let complement_lt_z = (1.0 - a) < z;
                if alpha_lt_z || complement_lt_z {
                    SufficiencyRange::BelowOne {
                        alpha_lt_z,
                        complement_lt_z,
                    }
                } else {
                    SufficiencyRange::None
                }
            }
            DpiRegion::HighAlpha if a < z + 1.0 => SufficiencyRange::AboveOne,
            _ => SufficiencyRange::None,
        }
    }
}

/// Extended nonnegative real: the value of `Q`, or of `D` (whose finite
/// values may be negative for unnormalized inputs).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DivValue {
    Finite(f64),
    PlusInfinity,
}

impl DivValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, DivValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            DivValue::Finite(v) => Some(*v),
            DivValue::PlusInfinity => None,
        }
    }

    /// Value in the extended reals, with `+inf` as `f64::INFINITY`.
    pub fn extended(&self) -> f64 {
        match self {
            DivValue::Finite(v) => *v,
            DivValue::PlusInfinity => f64::INFINITY,
        }
    }

    /// Total order on the extended reals.
    pub fn cmp_extended(&self, other: &DivValue) -> std::cmp::Ordering {
        self.extended().partial_cmp(&other.extended()).unwrap()
    }
}

impl std::fmt::Display for DivValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DivValue::Finite(v) => write!(f, "{v}"),
            DivValue::PlusInfinity => write!(f, "inf"),
        }
    }
}

fn check_pair(psi: &PositiveOperator, phi: &PositiveOperator) -> Result<()> {
    if psi.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: phi.dim(),
        });
    }
    if psi.is_zero() {
        return Err(Error::ZeroOperator("divergence"));
    }
    Ok(())
}

/// Eigenvalues of a PSD product sandwich, cut off relative to `scale` (an a
/// priori bound for the spectrum), so that matmul round-off of an exactly
/// zero product collapses to exactly zero.
fn sandwich_spectrum(m: CMatrix, scale: f64) -> Result<Vec<f64>> {
    let dim = m.nrows();
    let sym = (&m + m.adjoint()).map(|z| z * 0.5);
    let h = crate::matcore::HermitianOperator::new(sym)?;
    let sd = crate::matcore::SpectralDecomposition::new(&h)?;
    let cutoff = (dim as f64) * scale * tol::SUPPORT_CUTOFF_FACTOR;
    Ok(sd
        .eigenvalues()
        .iter()
        .map(|&l| if l > cutoff { l } else { 0.0 })
        .collect())
}

/// Spectral norm of `(I - P_phi) P_psi`: how much of the support of `psi`
/// leaks outside the support of `phi`.
pub fn support_leak(psi: &PositiveOperator, phi: &PositiveOperator) -> f64 {
    let p_psi = psi.support_projection();
    let p_phi = phi.support_projection();
    let dim = psi.dim();
    let leak = (CMatrix::identity(dim, dim) - p_phi.entries()) * p_psi.entries();
    crate::matcore::singular_values(&leak)
        .first()
        .copied()
        .unwrap_or(0.0)
}

fn support_dominated(psi: &PositiveOperator, phi: &PositiveOperator) -> bool {
    support_leak(psi, phi) <= tol::SUPPORT_LEAK
}

/// The factor `y = h_psi^(alpha/2z) h_phi^(-(alpha-1)/2z)` whose `2z`-norm
/// carries `Q` for `alpha > 1`. Returns `None` when the support of `psi` is
/// not dominated by the support of `phi` (infinite divergence).
pub(crate) fn y_factor(
    psi: &PositiveOperator,
    phi: &PositiveOperator,
    par: &AlphaZ,
) -> Result<Option<CMatrix>> {
    debug_assert!(par.alpha() > 1.0);
    if !support_dominated(psi, phi) {
        return Ok(None);
    }
    let (a, z) = (par.alpha(), par.z());
    let left = psi.power(a / (2.0 * z))?;
    let right = phi.power(-(a - 1.0) / (2.0 * z))?;
    Ok(Some(left.entries() * right.entries()))
}

/// `Q_{alpha,z}(psi || phi)` for finite `z`.
///
/// For `alpha < 1` both symmetric trace forms are evaluated and must agree
/// to 1e-9 relative; their mean is returned.
pub fn q_alpha_z(psi: &PositiveOperator, phi: &PositiveOperator, par: &AlphaZ) -> Result<DivValue> {
    check_pair(psi, phi)?;
    let (a, z) = (par.alpha(), par.z());
    if !z.is_finite() {
        return Err(Error::InvalidParameter {
            name: "z",
            value: z,
            reason: "q_alpha_z needs finite z; use q_alpha_inf for the z = inf endpoint",
        });
    }

    if a < 1.0 {
        let scale = psi.lambda_max().powf(a / z) * phi.lambda_max().powf((1.0 - a) / z);
        let psi_az = psi.power(a / z)?;
        let phi_half = phi.power((1.0 - a) / (2.0 * z))?;
        let m_a = phi_half.entries() * psi_az.entries() * phi_half.entries();
        let form_a: f64 = sandwich_spectrum(m_a, scale)?
            .iter()
            .map(|&l| if l > 0.0 { l.powf(z) } else { 0.0 })
            .sum();

        let phi_full = phi.power((1.0 - a) / z)?;
        let psi_half = psi.power(a / (2.0 * z))?;
        let m_b = psi_half.entries() * phi_full.entries() * psi_half.entries();
        let form_b: f64 = sandwich_spectrum(m_b, scale)?
            .iter()
            .map(|&l| if l > 0.0 { l.powf(z) } else { 0.0 })
            .sum();

        let denom = form_a.max(form_b);
        if denom > 0.0 && (form_a - form_b).abs() > tol::FORM_AGREEMENT * denom {
            return Err(Error::NumericalInconsistency {
                what: "symmetric trace forms of Q disagree",
                magnitude: (form_a - form_b).abs() / denom,
            });
        }
        Ok(DivValue::Finite(0.5 * (form_a + form_b)))
    } else {
        match y_factor(psi, phi, par)? {
            None => Ok(DivValue::PlusInfinity),
            Some(y) => {
                let q = crate::matcore::singular_values(&y)
                    .iter()
                    .map(|s| s.powf(2.0 * z))
                    .sum();
                Ok(DivValue::Finite(q))
            }
        }
    }
}

/// `D_{alpha,z} = log(Q / Tr h_psi) / (alpha - 1)`.
pub fn d_alpha_z(psi: &PositiveOperator, phi: &PositiveOperator, par: &AlphaZ) -> Result<DivValue> {
    let q = q_alpha_z(psi, phi, par)?;
    d_from_q(q, psi.trace(), par.alpha())
}

/// Shared `Q -> D` normalization, with the underflow guard for `alpha < 1`.
pub fn d_from_q(q: DivValue, psi_trace: f64, alpha: f64) -> Result<DivValue> {
    match q {
        DivValue::PlusInfinity => Ok(DivValue::PlusInfinity),
        DivValue::Finite(q) => {
            if q < tol::Q_UNDERFLOW {
                if alpha < 1.0 {
                    // (alpha - 1)^-1 log 0 = +inf.
                    Ok(DivValue::PlusInfinity)
                } else {
                    Err(Error::NumericalInconsistency {
                        what: "Q underflowed to zero with alpha > 1",
                        magnitude: q,
                    })
                }
            } else {
                Ok(DivValue::Finite((q / psi_trace).ln() / (alpha - 1.0)))
            }
        }
    }
}

/// Normalized relative entropy
/// `Tr h_psi (log h_psi - log h_phi) / Tr h_psi`, or `+inf` when the support
/// of `psi` is not dominated by the support of `phi`.
pub fn relative_entropy_d1(psi: &PositiveOperator, phi: &PositiveOperator) -> Result<DivValue> {
    check_pair(psi, phi)?;
    if !support_dominated(psi, phi) {
        return Ok(DivValue::PlusInfinity);
    }
    let log_psi = psi.log()?;
    let log_phi = if phi.is_zero() {
        // unreachable: psi != 0 and s(psi) <= s(phi) force phi != 0
        return Ok(DivValue::PlusInfinity);
    } else {
        phi.log()?
    };
    let diff = log_psi.entries() - log_phi.entries();
    let value = crate::matcore::trace_re(&(psi.entries() * diff)) / psi.trace();
    Ok(DivValue::Finite(value))
}

/// The `z = inf` endpoint `Tr exp(alpha log h_psi + (1 - alpha) log h_phi)`
/// with the logs taken on the common support.
///
/// The closed form is only defined for equal supports; anything else is
/// rejected with a distinct error.
pub fn q_alpha_inf(psi: &PositiveOperator, phi: &PositiveOperator, alpha: f64) -> Result<DivValue> {
    check_pair(psi, phi)?;
    if !alpha.is_finite() || alpha <= 0.0 || alpha == 1.0 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "alpha must be finite, positive, and different from 1",
        });
    }
    let forward = support_leak(psi, phi);
    let backward = support_leak(phi, psi);
    let defect = forward.max(backward);
    if defect > tol::SUPPORT_LEAK {
        return Err(Error::UnequalSupports { defect });
    }
    // Compress onto the common support so the kernel contributes nothing.
    let rank = psi.rank();
    let dim = psi.dim();
    let basis = CMatrix::from_fn(dim, rank, |r, c| psi.eigenvectors()[(r, c)]);
    let log_psi = basis.adjoint() * psi.log()?.entries() * &basis;
    let log_phi = basis.adjoint() * phi.log()?.entries() * &basis;
    let combo = log_psi.map(|v| v * alpha) + log_phi.map(|v| v * (1.0 - alpha));
    let h = crate::matcore::HermitianOperator::new(combo)?;
    let e = crate::matcore::matrix_exp(&h)?;
    Ok(DivValue::Finite(e.trace()))
}

/// Classical `Q = sum p_i^alpha q_i^(1-alpha)` with the conventions
/// `0^(1-alpha) = 0` for `alpha < 1` and `= +inf` for `alpha > 1` (so a term
/// with `p_i > 0, q_i = 0` makes the sum infinite).
pub fn classical_renyi(p: &[f64], q: &[f64], alpha: f64) -> Result<DivValue> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha == 1.0 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "alpha must be finite, positive, and different from 1",
        });
    }
    if p.iter().chain(q.iter()).any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "entry",
            value: f64::NAN,
            reason: "classical weights must be finite and nonnegative",
        });
    }
    if p.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroOperator("classical_renyi"));
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi == 0.0 {
            continue; // 0 * anything = 0 here, including 0 * inf
        }
        if qi == 0.0 {
            if alpha > 1.0 {
                return Ok(DivValue::PlusInfinity);
            }
            continue; // alpha < 1: q^(1-alpha) = 0
        }
        total += pi.powf(alpha) * qi.powf(1.0 - alpha);
    }
    Ok(DivValue::Finite(total))
}
