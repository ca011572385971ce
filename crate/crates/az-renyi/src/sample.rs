//! Seeded random generators for the property suites and the CLI.
//!
//! Everything funnels through a ChaCha8 stream so identical seeds give
//! identical matrices on every platform.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{c64, CMatrix, HermitianOperator, PositiveOperator};
use crate::{Error, Result};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn complex_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// GUE-style random hermitian matrix.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    let g = complex_gaussian(dim, dim, rng);
    let sym = (&g + g.adjoint()).map(|z| z * 0.5);
    HermitianOperator::new(sym).expect("symmetrized Gaussian is hermitian")
}

/// Haar-distributed unitary via QR of a complex Gaussian with the phases of
/// the R diagonal divided out.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = complex_gaussian(dim, dim, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 {
            d / Complex::from(d.norm())
        } else {
            Complex::from(1.0)
        };
        for rr in 0..dim {
            q[(rr, c)] *= phase.conj();
        }
    }
    q
}

/// Random state `G G* / Tr(G G*)` with `G` a dim x rank complex Gaussian;
/// rank-deficient states come from `rank < dim`.
pub fn random_state(dim: usize, rank: usize, rng: &mut impl Rng) -> Result<PositiveOperator> {
    if rank == 0 || rank > dim {
        return Err(Error::InvalidParameter {
            name: "rank",
            value: rank as f64,
            reason: "state rank must satisfy 1 <= rank <= dim",
        });
    }
    let g = complex_gaussian(dim, rank, rng);
    let h = &g * g.adjoint();
    let op = PositiveOperator::from_hermitian(h)?;
    op.scale(1.0 / op.trace())
}

/// Haar-style random isometry: `rows x cols` with orthonormal columns,
/// from the thin QR of a complex Gaussian.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> Result<CMatrix> {
    if cols == 0 || cols > rows {
        return Err(Error::InvalidParameter {
            name: "cols",
            value: cols as f64,
            reason: "an isometry needs 1 <= cols <= rows",
        });
    }
    let g = complex_gaussian(rows, cols, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..cols {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 {
            d / Complex::from(d.norm())
        } else {
            Complex::from(1.0)
        };
        for rr in 0..rows {
            q[(rr, c)] *= phase.conj();
        }
    }
    Ok(q)
}

/// Random strictly positive definite operator (unnormalized), with a small
/// ridge so conditioning stays mild.
pub fn random_positive_definite(dim: usize, rng: &mut impl Rng) -> PositiveOperator {
    let g = complex_gaussian(dim, dim, rng);
    let h = &g * g.adjoint() + CMatrix::identity(dim, dim).map(|z| z * 0.05);
    PositiveOperator::from_hermitian(h).expect("Gaussian Gram matrix plus ridge is positive")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_state_is_reproducible() {
        let a = random_state(3, 3, &mut rng(42)).unwrap();
        let b = random_state(3, 3, &mut rng(42)).unwrap();
        assert_eq!(a.entries(), b.entries());
        assert!((a.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_truncation() {
        let s = random_state(4, 2, &mut rng(1)).unwrap();
        assert_eq!(s.rank(), 2);
    }

    #[test]
    fn unitary_is_unitary() {
        let u = random_unitary(4, &mut rng(9));
        let defect = (u.adjoint() * &u - CMatrix::identity(4, 4)).norm();
        assert!(defect < 1e-12, "defect {defect:.3e}");
    }

    #[test]
    fn isometry_has_orthonormal_columns() {
        let v = random_isometry(9, 4, &mut rng(7)).unwrap();
        let defect = (v.adjoint() * &v - CMatrix::identity(4, 4)).norm();
        assert!(defect < 1e-12, "defect {defect:.3e}");
        assert!(random_isometry(2, 3, &mut rng(0)).is_err());
    }

    #[test]
    fn invalid_rank_rejected() {
        assert!(random_state(2, 3, &mut rng(0)).is_err());
        assert!(random_state(2, 0, &mut rng(0)).is_err());
    }
}
