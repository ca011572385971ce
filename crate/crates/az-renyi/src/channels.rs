//! Quantum maps in the Heisenberg picture, their preduals, Petz duals with
//! `L^p` extensions, pinchings and corner restrictions, data-processing
//! gaps, and sufficiency (reversibility) testing.
//!
//! A map `gamma` sends the `dim_in`-dimensional matrix algebra into the
//! `dim_out`-dimensional one; states are pulled back through it, so the
//! predual acts on densities in the opposite direction. The canonical
//! representation is a transfer matrix of shape `(dim_out^2) x (dim_in^2)`
//! acting on column-vectorized matrices: `vec` stacks columns, so entry
//! `(r, c)` of a `d x d` matrix sits at vector index `r + c d`. Kraus
//! presentations are an optional accelerator for completely positive maps.

use crate::divergence::{d_alpha_z, support_leak, AlphaZ, DivValue, DpiRegion, SufficiencyRange};
use crate::matcore::{
    c64, schatten_norm, trace_re, CMatrix, HermitianOperator, PositiveOperator,
    SpectralDecomposition,
};
use crate::tol;
use crate::{Error, Result};

/// Structural properties a map is known to have.
///
/// Flags are set truthfully by the constructors: either by the mathematics
/// of the construction or by an explicit numerical certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapFlags {
    pub unital: bool,
    pub positive: bool,
    pub completely_positive: bool,
    pub two_positive: bool,
}

impl MapFlags {
    pub fn all() -> Self {
        Self {
            unital: true,
            positive: true,
            completely_positive: true,
            two_positive: true,
        }
    }
}

/// A linear map between matrix algebras in the Heisenberg picture.
#[derive(Debug, Clone)]
pub struct QuantumMap {
    dim_in: usize,
    dim_out: usize,
    transfer: CMatrix,
    kraus: Option<Vec<CMatrix>>,
    flags: MapFlags,
}

fn unvec(v: &[num_complex::Complex<f64>], dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v)
}

fn vec_of(m: &CMatrix) -> CMatrix {
    CMatrix::from_column_slice(m.nrows() * m.ncols(), 1, m.as_slice())
}

/// `vec(X a Y) = (Y^T kron X) vec(a)` for column-major vectorization.
fn sandwich_transfer(x: &CMatrix, y: &CMatrix) -> CMatrix {
    y.transpose().kronecker(x)
}

impl QuantumMap {
    fn validate(self) -> Result<Self> {
        let (din, dout) = (self.dim_in, self.dim_out);
        if din == 0 || dout == 0 {
            return Err(Error::MalformedChannel("zero-dimensional algebra".into()));
        }
        if self.transfer.nrows() != dout * dout || self.transfer.ncols() != din * din {
            return Err(Error::MalformedChannel(format!(
                "transfer shape {}x{} does not match dimensions {} -> {}",
                self.transfer.nrows(),
                self.transfer.ncols(),
                din,
                dout
            )));
        }
        let scale = self.transfer.norm().max(1.0);
        // Hermiticity preservation: gamma(a^*) = gamma(a)^* on a basis.
        for i in 0..din {
            for j in i..din {
                let col_ij = self.transfer.column(i + j * din).into_owned();
                let col_ji = self.transfer.column(j + i * din).into_owned();
                let defect =
                    (unvec(col_ij.as_slice(), dout).adjoint() - unvec(col_ji.as_slice(), dout)).norm();
            if defect > tol::MAP_CONSISTENCY * scale {
                    return Err(Error::MalformedChannel(format!(
                        "map does not preserve hermiticity (defect {defect:.3e})"
                    )));
                }
            }
        }
        if self.flags.unital && self.unital_defect() > tol::MAP_CONSISTENCY * scale {
            return Err(Error::MalformedChannel(
                "map declared unital but does not fix the identity".into(),
            ));
        }
        if let Some(kraus) = &self.kraus {
            let mut rebuilt = CMatrix::zeros(dout * dout, din * din);
            for k in kraus {
                if k.nrows() != dout || k.ncols() != din {
                    return Err(Error::MalformedChannel(format!(
                        "Kraus factor shape {}x{} does not match dimensions {} -> {}",
                        k.nrows(),
                        k.ncols(),
                        din,
                        dout
                    )));
                }
                rebuilt += k.map(|v| v.conj()).kronecker(k);
            }
            let defect = (&rebuilt - &self.transfer).norm();
            if defect > tol::MAP_CONSISTENCY * scale {
                return Err(Error::MalformedChannel(format!(
                    "Kraus presentation disagrees with the transfer (defect {defect:.3e})"
                )));
            }
        }
        Ok(self)
    }

    /// Builds a completely positive map from Heisenberg Kraus factors
    /// (`gamma(b) = sum_i K_i b K_i^*` with each `K_i` of shape
    /// `dim_out x dim_in`). Unitality is certified numerically.
    pub fn from_kraus(kraus: Vec<CMatrix>, dim_in: usize, dim_out: usize) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::MalformedChannel("empty Kraus list".into()));
        }
        let mut transfer = CMatrix::zeros(dim_out * dim_out, dim_in * dim_in);
        for k in &kraus {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(Error::MalformedChannel(format!(
                    "Kraus factor shape {}x{} does not match dimensions {} -> {}",
                    k.nrows(),
                    k.ncols(),
                    dim_in,
                    dim_out
                )));
            }
            if k.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            transfer += k.map(|v| v.conj()).kronecker(k);
        }
        let mut map = Self {
            dim_in,
            dim_out,
            transfer,
            kraus: Some(kraus),
            flags: MapFlags::all(),
        };
        map.flags.unital = map.unital_defect() <= tol::MAP_CONSISTENCY * map.transfer.norm().max(1.0);
        map.validate()
    }

    /// Builds a map from a raw transfer matrix, inferring the flags
    /// numerically: complete positivity from the spectrum of the Choi
    /// matrix, plain positivity from seeded positive-semidefinite probes
    /// when the Choi test fails.
    pub fn from_transfer(transfer: CMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        let map = Self {
            dim_in,
            dim_out,
            transfer,
            kraus: None,
            flags: MapFlags {
                unital: false,
                positive: false,
                completely_positive: false,
                two_positive: false,
            },
        };
        let mut map = map.validate()?;
        let scale = map.transfer.norm().max(1.0);
        map.flags.unital = map.unital_defect() <= tol::MAP_CONSISTENCY * scale;
        let choi = map.choi();
        let ch = HermitianOperator::new((&choi + choi.adjoint()).map(|v| v * 0.5))?;
        let sd = SpectralDecomposition::new(&ch)?;
        let top = sd.eigenvalues().first().copied().unwrap_or(0.0).max(1.0);
        let cp = sd.eigenvalues().last().copied().unwrap_or(0.0) >= -tol::MAP_CONSISTENCY * top;
        map.flags.completely_positive = cp;
        map.flags.two_positive = cp;
        map.flags.positive = cp || map.probed_positive();
        Ok(map)
    }

    /// Internal constructor for maps whose flags are justified by the
    /// mathematics of the construction rather than numerics.
    fn from_parts(
        transfer: CMatrix,
        kraus: Option<Vec<CMatrix>>,
        dim_in: usize,
        dim_out: usize,
        flags: MapFlags,
    ) -> Result<Self> {
        Self {
            dim_in,
            dim_out,
            transfer,
            kraus,
            flags,
        }
        .validate()
    }

    /// Positivity probe: applies the map to a few seeded random positive
    /// semidefinite inputs and checks the outputs stay positive
    /// semidefinite up to round-off.
    fn probed_positive(&self) -> bool {
        let mut rng = crate::sample::rng(0x9e3779b97f4a7c15);
        for _ in 0..12 {
            let b = match crate::sample::random_state(self.dim_in, self.dim_in, &mut rng) {
                Ok(b) => b,
                Err(_) => return false,
            };
            let out = match self.apply_matrix(b.entries()) {
                Ok(m) => m,
                Err(_) => return false,
            };
            let h = match HermitianOperator::new((&out + out.adjoint()).map(|v| v * 0.5)) {
                Ok(h) => h,
                Err(_) => return false,
            };
            let sd = match SpectralDecomposition::new(&h) {
                Ok(sd) => sd,
                Err(_) => return false,
            };
            let top = sd.eigenvalues().first().copied().unwrap_or(0.0).max(1.0);
            if sd.eigenvalues().last().copied().unwrap_or(0.0) < -tol::MAP_CONSISTENCY * top {
                return false;
            }
        }
        true
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn transfer(&self) -> &CMatrix {
        &self.transfer
    }

    pub fn kraus(&self) -> Option<&[CMatrix]> {
        self.kraus.as_deref()
    }

    pub fn flags(&self) -> &MapFlags {
        &self.flags
    }

    /// `|| gamma(I) - I ||` in Frobenius norm.
    pub fn unital_defect(&self) -> f64 {
        let id_in = CMatrix::identity(self.dim_in, self.dim_in);
        match self.apply_matrix(&id_in) {
            Ok(out) => (out - CMatrix::identity(self.dim_out, self.dim_out)).norm(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Applies the map to an arbitrary matrix through the transfer.
    pub fn apply_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.dim_in || m.ncols() != self.dim_in {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: self.dim_in,
            });
        }
        let out = &self.transfer * vec_of(m);
        Ok(unvec(out.as_slice(), self.dim_out))
    }

    /// Applies the map to a hermitian operator; hermiticity of the output
    /// is enforced (the map preserves it by construction, so only round-off
    /// is symmetrized away).
    pub fn apply(&self, b: &HermitianOperator) -> Result<HermitianOperator> {
        HermitianOperator::new(self.apply_matrix(b.entries())?)
    }

    /// The predual: the adjoint of the transfer with respect to the trace
    /// inner product. It moves densities forward while the map itself pulls
    /// observables back; it preserves the trace exactly when the map is
    /// unital.
    pub fn predual(&self) -> QuantumMap {
        let transfer = self.transfer.adjoint();
        let kraus = self
            .kraus
            .as_ref()
            .map(|ks| ks.iter().map(|k| k.adjoint()).collect::<Vec<_>>());
        let mut flags = MapFlags {
            unital: false,
            positive: self.flags.positive,
            completely_positive: self.flags.completely_positive,
            two_positive: self.flags.two_positive,
        };
        let out = QuantumMap {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            transfer,
            kraus,
            flags,
        };
        flags.unital = out.unital_defect() <= tol::MAP_CONSISTENCY * out.transfer.norm().max(1.0);
        QuantumMap { flags, ..out }
    }

    /// The Choi matrix `sum_ij E_ij kron gamma(E_ij)`, positive
    /// semidefinite exactly when the map is completely positive.
    pub fn choi(&self) -> CMatrix {
        let (din, dout) = (self.dim_in, self.dim_out);
        let mut c = CMatrix::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let col = self.transfer.column(i + j * din).into_owned();
                let block = unvec(col.as_slice(), dout);
                for r in 0..dout {
                    for s in 0..dout {
                        c[(i * dout + r, j * dout + s)] = block[(r, s)];
                    }
                }
            }
        }
        c
    }
}

/// The transpose map `b -> b^T`: unital and positive but not completely
/// positive (for dimension at least 2); composing it with channels yields
/// the merely-positive maps the data-processing inequality still covers.
pub fn transpose_map(dim: usize) -> Result<QuantumMap> {
    let mut transfer = CMatrix::zeros(dim * dim, dim * dim);
    for r in 0..dim {
        for c in 0..dim {
            transfer[(r + c * dim, c + r * dim)] = c64(1.0, 0.0);
        }
    }
    let cp = dim <= 1;
    QuantumMap::from_parts(
        transfer,
        None,
        dim,
        dim,
        MapFlags {
            unital: true,
            positive: true,
            completely_positive: cp,
            two_positive: cp,
        },
    )
}

/// Composition `outer after inner` (`b -> outer(inner(b))`). Flags combine
/// conservatively: each property is claimed only when both factors have it.
pub fn compose(outer: &QuantumMap, inner: &QuantumMap) -> Result<QuantumMap> {
    if outer.dim_in != inner.dim_out {
        return Err(Error::DimensionMismatch {
            left: outer.dim_in,
            right: inner.dim_out,
        });
    }
    let transfer = &outer.transfer * &inner.transfer;
    let kraus = match (&outer.kraus, &inner.kraus) {
        (Some(a), Some(b)) => {
            let mut prods = Vec::with_capacity(a.len() * b.len());
            for ka in a {
                for kb in b {
                    prods.push(ka * kb);
                }
            }
            Some(prods)
        }
        _ => None,
    };
    let flags = MapFlags {
        unital: outer.flags.unital && inner.flags.unital,
        positive: outer.flags.positive && inner.flags.positive,
        completely_positive: outer.flags.completely_positive && inner.flags.completely_positive,
        two_positive: outer.flags.two_positive && inner.flags.two_positive,
    };
    QuantumMap::from_parts(transfer, kraus, inner.dim_in, outer.dim_out, flags)
}

/// A subalgebra of the full matrix algebra that states can be restricted to.
#[derive(Debug, Clone)]
pub enum Subalgebra {
    /// Block-diagonal matrices over an ordered partition of the coordinates.
    BlockDiagonal(Vec<Vec<usize>>),
    /// The corner `P M P` of a projector `P`.
    Corner(HermitianOperator),
}

impl Subalgebra {
    /// Validates that the blocks are disjoint and cover `0..dim`.
    pub fn block_diagonal(blocks: Vec<Vec<usize>>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::MalformedSubalgebra("empty block".into()));
            }
            for &i in block {
                if i >= dim {
                    return Err(Error::MalformedSubalgebra(format!(
                        "coordinate {i} outside 0..{dim}"
                    )));
                }
                if seen[i] {
                    return Err(Error::MalformedSubalgebra(format!(
                        "coordinate {i} appears in two blocks"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::MalformedSubalgebra(
                "blocks do not cover every coordinate".into(),
            ));
        }
        Ok(Self::BlockDiagonal(blocks))
    }

    /// Validates that `p` is a projector (idempotent to 1e-12).
    pub fn corner(p: HermitianOperator) -> Result<Self> {
        let defect = (p.entries() * p.entries() - p.entries()).norm();
        if defect > tol::RECONSTRUCTION * (p.dim() as f64).max(1.0) {
            return Err(Error::MalformedSubalgebra(format!(
                "not a projector (idempotency defect {defect:.3e})"
            )));
        }
        Ok(Self::Corner(p))
    }

    /// Dimension of the ambient algebra.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::BlockDiagonal(blocks) => blocks.iter().map(|b| b.len()).sum(),
            Self::Corner(p) => p.dim(),
        }
    }
}

fn pinch(m: &CMatrix, blocks: &[Vec<usize>]) -> CMatrix {
    let dim = m.nrows();
    let mut label = vec![usize::MAX; dim];
    for (bi, block) in blocks.iter().enumerate() {
        for &i in block {
            label[i] = bi;
        }
    }
    CMatrix::from_fn(dim, dim, |r, c| {
        if label[r] == label[c] {
            m[(r, c)]
        } else {
            c64(0.0, 0.0)
        }
    })
}

/// Orthonormal basis of the range of a projector, one column per dimension.
fn projector_basis(p: &HermitianOperator) -> Result<CMatrix> {
    let sd = SpectralDecomposition::new(p)?;
    let rank = sd.eigenvalues().iter().filter(|&&l| l > 0.5).count();
    Ok(sd.eigenvectors().columns(0, rank).into_owned())
}

/// Restricts a density to a subalgebra: pinching for the block-diagonal
/// kind (same ambient dimension), compression onto the range of the
/// projector for the corner kind (dimension drops to the rank).
pub fn restrict(psi: &PositiveOperator, sub: &Subalgebra) -> Result<PositiveOperator> {
    if psi.dim() != sub.ambient_dim() {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: sub.ambient_dim(),
        });
    }
    match sub {
        Subalgebra::BlockDiagonal(blocks) => {
            PositiveOperator::from_hermitian(pinch(psi.entries(), blocks))
        }
        Subalgebra::Corner(p) => {
            let v = projector_basis(p)?;
            PositiveOperator::from_hermitian(v.adjoint() * psi.entries() * v)
        }
    }
}

/// Density of the restriction to the subalgebra `P M P + C (I - P)`: the
/// corner of `P` kept intact, the complement collapsed to scalars. Along an
/// increasing chain of projectors these subalgebras form an increasing net,
/// so divergences restricted this way are nondecreasing; at `P = I` the
/// state is returned unchanged.
pub fn corner_with_scalar_tail(
    psi: &PositiveOperator,
    p: &HermitianOperator,
) -> Result<PositiveOperator> {
    if psi.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: p.dim(),
        });
    }
    // Validate the projector through the same gate as Subalgebra::corner.
    let _ = Subalgebra::corner(p.clone())?;
    let dim = psi.dim();
    let tail = CMatrix::identity(dim, dim) - p.entries();
    let tail_dim = trace_re(&tail);
    let corner = p.entries() * psi.entries() * p.entries();
    let entries = if tail_dim > 0.5 {
        let tail_mass = trace_re(&(&tail * psi.entries()));
        corner + tail.map(|v| v * (tail_mass / tail_dim))
    } else {
        corner
    };
    PositiveOperator::from_hermitian(entries)
}

/// Channel constructions with truthful flags.
#[derive(Debug, Clone)]
pub enum ChannelSpec {
    Identity(usize),
    /// Heisenberg conjugation `b -> U^* b U` by a unitary `U`.
    UnitaryConj(CMatrix),
    /// `b -> (1-t) b + t Tr(b) I / d`, self-dual; `t` in `[0, 1]`.
    Depolarizing { dim: usize, strength: f64 },
    Pinching(Vec<Vec<usize>>),
    /// Realizes a subalgebra inclusion as a channel: the conditional
    /// expectation (pinching) for block-diagonal subalgebras, the unital
    /// compression `b -> V^* b V` onto the corner for projector subalgebras
    /// (reversible, since compression is isometrically invariant on
    /// corner-supported states).
    Embedding(Subalgebra),
    /// Seeded random unital completely positive map from a random isometry
    /// dilation; requires `dim_out <= dim_in^2`.
    RandomCptp {
        dim_in: usize,
        dim_out: usize,
        seed: u64,
    },
}

pub fn make_channel(spec: &ChannelSpec) -> Result<QuantumMap> {
    match spec {
        ChannelSpec::Identity(dim) => {
            QuantumMap::from_kraus(vec![CMatrix::identity(*dim, *dim)], *dim, *dim)
        }
        ChannelSpec::UnitaryConj(u) => {
            let dim = u.nrows();
            if u.ncols() != dim {
                return Err(Error::MalformedChannel("unitary must be square".into()));
            }
            let defect = (u.adjoint() * u - CMatrix::identity(dim, dim)).norm();
            if defect > tol::MAP_CONSISTENCY * (dim as f64).max(1.0) {
                return Err(Error::MalformedChannel(format!(
                    "matrix is not unitary (defect {defect:.3e})"
                )));
            }
            QuantumMap::from_kraus(vec![u.adjoint()], dim, dim)
        }
        ChannelSpec::Depolarizing { dim, strength } => {
            let (d, t) = (*dim, *strength);
            if d == 0 {
                return Err(Error::MalformedChannel("zero-dimensional algebra".into()));
            }
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::MalformedChannel(format!(
                    "depolarizing strength {t} outside [0, 1]"
                )));
            }
            let n = d * d;
            let id_vec = vec_of(&CMatrix::identity(d, d));
            let transfer = CMatrix::identity(n, n).map(|v| v * (1.0 - t))
                + (&id_vec * id_vec.transpose()).map(|v| v * (t / d as f64));
            QuantumMap::from_parts(transfer, None, d, d, MapFlags::all())
        }
        ChannelSpec::Pinching(blocks) => {
            let dim: usize = blocks.iter().map(|b| b.len()).sum();
            let sub = Subalgebra::block_diagonal(blocks.clone(), dim)?;
            let blocks = match &sub {
                Subalgebra::BlockDiagonal(b) => b,
                Subalgebra::Corner(_) => unreachable!(),
            };
            let kraus = blocks
                .iter()
                .map(|block| {
                    let mut p = CMatrix::zeros(dim, dim);
                    for &i in block {
                        p[(i, i)] = c64(1.0, 0.0);
                    }
                    p
                })
                .collect();
            QuantumMap::from_kraus(kraus, dim, dim)
        }
        ChannelSpec::Embedding(sub) => match sub {
            Subalgebra::BlockDiagonal(blocks) => make_channel(&ChannelSpec::Pinching(blocks.clone())),
            Subalgebra::Corner(p) => {
                let v = projector_basis(p)?;
                let rank = v.ncols();
                if rank == 0 {
                    return Err(Error::MalformedChannel("zero projector".into()));
                }
                QuantumMap::from_kraus(vec![v.adjoint()], p.dim(), rank)
            }
        },
        ChannelSpec::RandomCptp {
            dim_in,
            dim_out,
            seed,
        } => {
            let (din, dout) = (*dim_in, *dim_out);
            if din == 0 || dout == 0 {
                return Err(Error::MalformedChannel("zero-dimensional algebra".into()));
            }
            if dout > din * din {
                return Err(Error::MalformedChannel(format!(
                    "isometry dilation needs dim_out <= dim_in^2 (got {dout} > {})",
                    din * din
                )));
            }
            let mut rng = crate::sample::rng(*seed);
            let v = crate::sample::random_isometry(din * din, dout, &mut rng)?;
            let kraus = (0..din)
                .map(|e| CMatrix::from_fn(din, dout, |a, j| v[(a * din + e, j)]).adjoint())
                .collect();
            QuantumMap::from_kraus(kraus, din, dout)
        }
    }
}

fn require_unital_positive(gamma: &QuantumMap, what: &'static str) -> Result<()> {
    if !gamma.flags.unital || !gamma.flags.positive {
        return Err(Error::MapRequirement(what));
    }
    Ok(())
}

/// Pushes a density through the predual of `gamma`, collapsing round-off
/// negatives.
fn pushforward(predual: &QuantumMap, h: &PositiveOperator) -> Result<PositiveOperator> {
    PositiveOperator::from_hermitian(predual.apply_matrix(h.entries())?)
}

/// The Petz dual of `gamma` with respect to the state `rho`: the map
/// determined by
/// `h_{rho.gamma}^{1/2} dual(a) h_{rho.gamma}^{1/2} = gamma_*(h_rho^{1/2} a h_rho^{1/2})`,
/// with inverses taken on supports. It reverses the direction of `gamma`
/// and recovers `rho` exactly: `rho . gamma . dual = rho`.
pub fn petz_dual(gamma: &QuantumMap, rho: &PositiveOperator) -> Result<QuantumMap> {
    require_unital_positive(gamma, "the Petz dual needs a unital positive map")?;
    if rho.dim() != gamma.dim_out {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: gamma.dim_out,
        });
    }
    if rho.is_zero() {
        return Err(Error::ZeroOperator("Petz dual reference state"));
    }
    let predual = gamma.predual();
    let g = pushforward(&predual, rho)?;
    let g_inv_sqrt = g.power(-0.5)?;
    let rho_sqrt = rho.sqrt();
    let transfer = sandwich_transfer(g_inv_sqrt.entries(), g_inv_sqrt.entries())
        * &predual.transfer
        * sandwich_transfer(rho_sqrt.entries(), rho_sqrt.entries());
    let kraus = gamma.kraus.as_ref().map(|ks| {
        ks.iter()
            .map(|k| g_inv_sqrt.entries() * k.adjoint() * rho_sqrt.entries())
            .collect::<Vec<_>>()
    });
    let mut flags = MapFlags {
        unital: false,
        positive: true,
        completely_positive: gamma.flags.completely_positive,
        two_positive: gamma.flags.two_positive,
    };
    let out = QuantumMap {
        dim_in: gamma.dim_out,
        dim_out: gamma.dim_in,
        transfer,
        kraus,
        flags,
    };
    flags.unital = out.unital_defect() <= tol::MAP_CONSISTENCY * out.transfer.norm().max(1.0);
    QuantumMap { flags, ..out }.validate()
}

/// The `L^p` extension of the Petz dual:
/// `k -> h_rho^{1/2p} gamma(h_{rho.gamma}^{-1/2p} k h_{rho.gamma}^{-1/2p}) h_rho^{1/2p}`,
/// a `p`-norm contraction on elements supported in the support of
/// `rho . gamma`. At `p = 1` it coincides with the predual of the Petz
/// dual; `p` may be infinite, in which case the weights degenerate to
/// support projections.
pub fn petz_dual_p(
    gamma: &QuantumMap,
    rho: &PositiveOperator,
    p: f64,
    k: &CMatrix,
) -> Result<CMatrix> {
    require_unital_positive(gamma, "the Petz dual needs a unital positive map")?;
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "the dual extension is defined for p >= 1",
        });
    }
    if rho.dim() != gamma.dim_out {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: gamma.dim_out,
        });
    }
    if rho.is_zero() {
        return Err(Error::ZeroOperator("Petz dual reference state"));
    }
    if k.nrows() != gamma.dim_in || k.ncols() != gamma.dim_in {
        return Err(Error::DimensionMismatch {
            left: k.nrows(),
            right: gamma.dim_in,
        });
    }
    let g = pushforward(&gamma.predual(), rho)?;
    let s = g.support_projection();
    let leakage = (k - s.entries() * k * s.entries()).norm();
    let knorm = schatten_norm(k, f64::INFINITY)?;
    if leakage > tol::SUPPORT_LEAK * knorm.max(1.0) {
        return Err(Error::SupportViolation { leakage });
    }
    let (g_w, rho_w) = if p.is_finite() {
        (g.power(-0.5 / p)?, rho.power(0.5 / p)?)
    } else {
        let sr = rho.support_projection();
        (
            PositiveOperator::from_hermitian(s.entries().clone())?,
            PositiveOperator::from_hermitian(sr.entries().clone())?,
        )
    };
    let inner = gamma.apply_matrix(&(g_w.entries() * k * g_w.entries()))?;
    Ok(rho_w.entries() * inner * rho_w.entries())
}

/// Before/after divergences across a map, with their difference when it is
/// defined (`None` when both sides are infinite).
#[derive(Debug, Clone, Copy)]
pub struct DpiOutcome {
    pub before: DivValue,
    pub after: DivValue,
    pub gap: Option<DivValue>,
    pub region: DpiRegion,
}

/// Measures the data-processing gap `D(psi||phi) - D(psi.gamma||phi.gamma)`
/// for a unital positive map. Parameters outside the two monotonicity
/// regions are evaluated anyway (the region tag tells the caller the result
/// is exploratory).
pub fn dpi_gap(
    psi: &PositiveOperator,
    phi: &PositiveOperator,
    gamma: &QuantumMap,
    par: &AlphaZ,
) -> Result<DpiOutcome> {
    require_unital_positive(gamma, "the data-processing gap needs a unital positive map")?;
    if psi.dim() != gamma.dim_out {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: gamma.dim_out,
        });
    }
    let predual = gamma.predual();
    let psi_after = pushforward(&predual, psi)?;
    let phi_after = pushforward(&predual, phi)?;
    let before = d_alpha_z(psi, phi, par)?;
    let after = d_alpha_z(&psi_after, &phi_after, par)?;
    let gap = match (before, after) {
        (DivValue::Finite(b), DivValue::Finite(a)) => Some(DivValue::Finite(b - a)),
        (DivValue::PlusInfinity, DivValue::Finite(_)) => Some(DivValue::PlusInfinity),
        _ => None,
    };
    Ok(DpiOutcome {
        before,
        after,
        gap,
        region: par.classify(),
    })
}

/// Outcome of a sufficiency (reversibility) test.
#[derive(Debug, Clone, Copy)]
pub struct SufficiencyOutcome {
    /// Divergence preserved across the map (both sides finite and equal to
    /// 1e-7 relative).
    pub equality: bool,
    /// The universal recovery map restores the first state (trace-norm
    /// defect at most 1e-7 of its trace).
    pub recovered: bool,
    /// The trace-norm recovery defect.
    pub residual: f64,
}

/// Tests whether a 2-positive unital map is sufficient for the pair
/// `(psi, phi)`: divergence equality across the map on one hand, recovery
/// of `psi` by the universal recovery map (the Petz dual taken at `phi`) on
/// the other. The two characterizations agree inside the admissible
/// parameter range, which is enforced here; the agreement itself is
/// asserted by the test suite.
pub fn sufficiency_test(
    psi: &PositiveOperator,
    phi: &PositiveOperator,
    gamma: &QuantumMap,
    par: &AlphaZ,
) -> Result<SufficiencyOutcome> {
    if !gamma.flags.unital || !gamma.flags.two_positive {
        return Err(Error::MapRequirement(
            "sufficiency testing needs a unital 2-positive map",
        ));
    }
    if psi.dim() != gamma.dim_out || phi.dim() != gamma.dim_out {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: gamma.dim_out,
        });
    }
    let (alpha, z) = (par.alpha(), par.z());
    match par.sufficiency_range() {
        SufficiencyRange::None => {
            return Err(Error::OutOfRange {
                alpha,
                z,
                what: "sufficiency is characterized only for alpha < 1 with alpha < z or \
                       1 - alpha < z, and for the high-alpha monotonicity region with \
                       alpha < z + 1",
            });
        }
        SufficiencyRange::BelowOne {
            alpha_lt_z,
            complement_lt_z,
        } => {
            let phi_in_psi = support_leak(phi, psi) <= tol::SUPPORT_LEAK;
            let psi_in_phi = support_leak(psi, phi) <= tol::SUPPORT_LEAK;
            let ok = (alpha_lt_z && phi_in_psi) || (complement_lt_z && psi_in_phi);
            if !ok {
                return Err(Error::OutOfRange {
                    alpha,
                    z,
                    what: "supports do not satisfy a sufficiency hypothesis: alpha < z needs \
                           s(phi) <= s(psi), 1 - alpha < z needs s(psi) <= s(phi)",
                });
            }
        }
        SufficiencyRange::AboveOne => {}
    }

    let before = d_alpha_z(psi, phi, par)?;
    if par.alpha() > 1.0 && !before.is_finite() {
        return Err(Error::InfiniteDivergence);
    }
    let predual = gamma.predual();
    let psi_after = pushforward(&predual, psi)?;
    let phi_after = pushforward(&predual, phi)?;
    let after = d_alpha_z(&psi_after, &phi_after, par)?;
    let equality = match (before, after) {
        (DivValue::Finite(b), DivValue::Finite(a)) => (b - a).abs() <= tol::SUFFICIENCY * b.abs().max(1.0),
        _ => false,
    };

    let recovery = petz_dual(gamma, phi)?.predual();
    let recovered_psi = recovery.apply_matrix(psi_after.entries())?;
    let residual = schatten_norm(&(recovered_psi - psi.entries()), 1.0)?;
    let recovered = residual <= tol::SUFFICIENCY * psi.trace();
    Ok(SufficiencyOutcome {
        equality,
        recovered,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::q_alpha_z;
    use crate::matcore::matrix_power;
    use crate::sample;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_density(dim: usize, rng: &mut impl Rng) -> PositiveOperator {
        let a = sample::random_positive_definite(dim, rng);
        let t = a.trace();
        a.scale(1.0 / t).unwrap()
    }

    fn depolarizing(dim: usize, t: f64) -> QuantumMap {
        make_channel(&ChannelSpec::Depolarizing { dim, strength: t }).unwrap()
    }

    fn partial_trace_second(c: &CMatrix, first: usize, second: usize) -> CMatrix {
        CMatrix::from_fn(first, first, |i, j| {
            (0..second).map(|e| c[(i * second + e, j * second + e)]).sum()
        })
    }

    #[test]
    fn identity_channel_fixes_everything() {
        let gamma = make_channel(&ChannelSpec::Identity(3)).unwrap();
        assert!(gamma.flags().unital && gamma.flags().completely_positive);
        let mut rng = sample::rng(1);
        let b = sample::random_hermitian(3, &mut rng);
        let out = gamma.apply(&b).unwrap();
        assert!((out.entries() - b.entries()).norm() < 1e-14);
    }

    #[test]
    fn unitary_conjugation_matches_direct_product() {
        let mut rng = sample::rng(2);
        let u = sample::random_unitary(3, &mut rng);
        let gamma = make_channel(&ChannelSpec::UnitaryConj(u.clone())).unwrap();
        let b = sample::random_hermitian(3, &mut rng);
        let out = gamma.apply(&b).unwrap();
        let direct = u.adjoint() * b.entries() * &u;
        assert!((out.entries() - direct).norm() < 1e-12);
    }

    #[test]
    fn pinching_kills_off_diagonal_blocks() {
        let gamma = make_channel(&ChannelSpec::Pinching(vec![vec![0], vec![1, 2]])).unwrap();
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = c64(1.0, 0.5);
        m[(1, 0)] = c64(1.0, -0.5);
        m[(0, 2)] = c64(0.0, 2.0);
        m[(2, 0)] = c64(0.0, -2.0);
        let b = HermitianOperator::new(m).unwrap();
        let out = gamma.apply(&b).unwrap();
        assert!(out.entries().norm() < 1e-14);
    }

    #[test]
    fn non_hermiticity_preserving_transfer_rejected() {
        // b -> (first column of b) placed everywhere: not *-preserving.
        let mut t = CMatrix::zeros(4, 4);
        t[(0, 0)] = c64(1.0, 0.0);
        t[(1, 1)] = c64(1.0, 0.0);
        t[(2, 1)] = c64(1.0, 0.0);
        assert!(matches!(
            QuantumMap::from_transfer(t, 2, 2),
            Err(Error::MalformedChannel(_))
        ));
    }

    #[test]
    fn predual_is_trace_preserving_adjoint_involution() {
        let gamma = make_channel(&ChannelSpec::RandomCptp {
            dim_in: 3,
            dim_out: 2,
            seed: 5,
        })
        .unwrap();
        let predual = gamma.predual();
        let mut rng = sample::rng(6);
        for _ in 0..20 {
            let b = sample::random_hermitian(3, &mut rng);
            let h = sample::random_hermitian(2, &mut rng);
            let lhs = trace_re(&(gamma.apply_matrix(b.entries()).unwrap() * h.entries()));
            let rhs = trace_re(&(b.entries() * predual.apply_matrix(h.entries()).unwrap()));
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
            // Unital duality: the predual preserves traces.
            let moved = predual.apply_matrix(h.entries()).unwrap();
            assert_abs_diff_eq!(trace_re(&moved), h.trace(), epsilon = 1e-10);
        }
        let back = predual.predual();
        assert!((back.transfer() - gamma.transfer()).norm() < 1e-14);
    }

    #[test]
    fn predual_of_identity_is_identity() {
        let gamma = make_channel(&ChannelSpec::Identity(2)).unwrap();
        let predual = gamma.predual();
        assert!((predual.transfer() - CMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn random_cptp_choi_is_psd_with_identity_partial_trace() {
        for seed in 0..5 {
            let gamma = make_channel(&ChannelSpec::RandomCptp {
                dim_in: 3,
                dim_out: 4,
                seed,
            })
            .unwrap();
            assert!(gamma.flags().unital);
            assert!(gamma.unital_defect() < 1e-12);
            let predual = gamma.predual();
            let choi = predual.choi();
            let h = HermitianOperator::new((&choi + choi.adjoint()).map(|v| v * 0.5)).unwrap();
            let sd = SpectralDecomposition::new(&h).unwrap();
            let top = sd.eigenvalues().first().copied().unwrap();
            assert!(sd.eigenvalues().last().copied().unwrap() >= -1e-10 * top.max(1.0));
            let pt = partial_trace_second(&choi, 4, 3);
            assert!((pt - CMatrix::identity(4, 4)).norm() < 1e-10);
        }
    }

    #[test]
    fn depolarizing_at_zero_is_identity_and_transpose_flags_are_honest() {
        let gamma = depolarizing(2, 0.0);
        let id = make_channel(&ChannelSpec::Identity(2)).unwrap();
        assert!((gamma.transfer() - id.transfer()).norm() < 1e-14);

        let tm = transpose_map(2).unwrap();
        assert!(tm.flags().unital && tm.flags().positive);
        assert!(!tm.flags().completely_positive && !tm.flags().two_positive);
        let twisted = compose(&tm, &depolarizing(2, 0.3)).unwrap();
        assert!(twisted.flags().unital && twisted.flags().positive);
        assert!(!twisted.flags().completely_positive);
    }

    #[test]
    fn single_block_pinching_is_identity() {
        let gamma = make_channel(&ChannelSpec::Pinching(vec![vec![0, 1, 2]])).unwrap();
        let id = make_channel(&ChannelSpec::Identity(3)).unwrap();
        assert!((gamma.transfer() - id.transfer()).norm() < 1e-14);
    }

    #[test]
    fn petz_dual_of_identity_is_identity() {
        let gamma = make_channel(&ChannelSpec::Identity(3)).unwrap();
        let mut rng = sample::rng(9);
        let rho = random_density(3, &mut rng);
        let dual = petz_dual(&gamma, &rho).unwrap();
        assert!((dual.transfer() - CMatrix::identity(9, 9)).norm() < 1e-10);
    }

    #[test]
    fn petz_dual_of_unitary_conjugation_is_the_inverse() {
        let mut rng = sample::rng(10);
        let u = sample::random_unitary(3, &mut rng);
        let gamma = make_channel(&ChannelSpec::UnitaryConj(u.clone())).unwrap();
        let rho = random_density(3, &mut rng);
        let dual = petz_dual(&gamma, &rho).unwrap();
        let inverse = make_channel(&ChannelSpec::UnitaryConj(u.adjoint())).unwrap();
        assert!((dual.transfer() - inverse.transfer()).norm() < 1e-9);

        // Defining identity on a basis:
        // h^{1/2} dual(E_ij) h^{1/2} = gamma_*(rho^{1/2} E_ij rho^{1/2}).
        let predual = gamma.predual();
        let g = PositiveOperator::from_hermitian(
            predual.apply_matrix(rho.entries()).unwrap(),
        )
        .unwrap();
        let gs = g.sqrt();
        let rs = rho.sqrt();
        for i in 0..3 {
            for j in 0..3 {
                let mut e = CMatrix::zeros(3, 3);
                e[(i, j)] = c64(1.0, 0.0);
                let lhs = gs.entries() * dual.apply_matrix(&e).unwrap() * gs.entries();
                let rhs = predual
                    .apply_matrix(&(rs.entries() * &e * rs.entries()))
                    .unwrap();
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn petz_dual_recovers_the_reference_state() {
        let mut rng = sample::rng(11);
        for trial in 0..20 {
            let gamma = make_channel(&ChannelSpec::RandomCptp {
                dim_in: 3,
                dim_out: 3,
                seed: 100 + trial,
            })
            .unwrap();
            // Mix full-rank and rank-deficient reference states.
            let rank = 2 + (trial as usize % 2);
            let rho = sample::random_state(3, rank, &mut rng).unwrap();
            let dual = petz_dual(&gamma, &rho).unwrap();
            let forward = gamma.predual().apply_matrix(rho.entries()).unwrap();
            let back = dual.predual().apply_matrix(&forward).unwrap();
            let defect = schatten_norm(&(back - rho.entries()), 1.0).unwrap();
            assert!(
                defect <= 1e-10 * rho.trace(),
                "recovery defect {defect:.3e} on trial {trial}"
            );
        }
    }

    #[test]
    fn petz_dual_of_the_petz_dual_returns_the_map() {
        let mut rng = sample::rng(12);
        let gamma = make_channel(&ChannelSpec::RandomCptp {
            dim_in: 2,
            dim_out: 3,
            seed: 31,
        })
        .unwrap();
        let rho = random_density(3, &mut rng);
        let dual = petz_dual(&gamma, &rho).unwrap();
        let rho_after =
            PositiveOperator::from_hermitian(gamma.predual().apply_matrix(rho.entries()).unwrap())
                .unwrap();
        let double = petz_dual(&dual, &rho_after).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut e = CMatrix::zeros(2, 2);
                e[(i, j)] = c64(1.0, 0.0);
                let lhs = double.apply_matrix(&e).unwrap();
                let rhs = gamma.apply_matrix(&e).unwrap();
                assert!(
                    (lhs - rhs).norm() < 1e-9,
                    "double dual differs on basis unit ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn dual_extension_interpolates_and_contracts() {
        let mut rng = sample::rng(13);
        let gamma = make_channel(&ChannelSpec::RandomCptp {
            dim_in: 3,
            dim_out: 3,
            seed: 77,
        })
        .unwrap();
        let rho = random_density(3, &mut rng);
        let g = PositiveOperator::from_hermitian(
            gamma.predual().apply_matrix(rho.entries()).unwrap(),
        )
        .unwrap();

        // p = 1 agrees with the predual of the Petz dual.
        let dual_predual = petz_dual(&gamma, &rho).unwrap().predual();
        for _ in 0..5 {
            let k = sample::random_hermitian(3, &mut rng);
            let via_p = petz_dual_p(&gamma, &rho, 1.0, k.entries()).unwrap();
            let via_dual = dual_predual.apply_matrix(k.entries()).unwrap();
            assert!((via_p - via_dual).norm() < 1e-9);
        }

        // Weighted elements map to weighted images of the original map.
        for p in [1.0, 1.5, 2.0, 4.0] {
            let gw = g.power(0.5 / p).unwrap();
            let rw = rho.power(0.5 / p).unwrap();
            let b = sample::random_hermitian(3, &mut rng);
            let k = gw.entries() * b.entries() * gw.entries();
            let out = petz_dual_p(&gamma, &rho, p, &k).unwrap();
            let expect = rw.entries() * gamma.apply_matrix(b.entries()).unwrap() * rw.entries();
            assert!((out - expect).norm() < 1e-9);
        }

        // Contraction in every p-norm, including p = infinity.
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            for _ in 0..5 {
                let k = sample::random_hermitian(3, &mut rng);
                let out = petz_dual_p(&gamma, &rho, p, k.entries()).unwrap();
                let before = schatten_norm(k.entries(), p).unwrap();
                let after = schatten_norm(&out, p).unwrap();
                assert!(after <= before + 1e-9, "p={p}: {after} > {before}");
            }
        }

        // Identity channel, faithful rho: the extension is the identity.
        let id = make_channel(&ChannelSpec::Identity(3)).unwrap();
        let k = sample::random_hermitian(3, &mut rng);
        let out = petz_dual_p(&id, &rho, 2.0, k.entries()).unwrap();
        assert!((out - k.entries()).norm() < 1e-9);
    }

    #[test]
    fn dual_extension_rejects_unsupported_elements() {
        let gamma = make_channel(&ChannelSpec::Identity(2)).unwrap();
        let rho = PositiveOperator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let mut k = CMatrix::zeros(2, 2);
        k[(1, 1)] = c64(1.0, 0.0);
        assert!(matches!(
            petz_dual_p(&gamma, &rho, 1.0, &k),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn weighted_norm_inequalities_flip_at_p_one() {
        let mut rng = sample::rng(14);
        for trial in 0..10 {
            let gamma = make_channel(&ChannelSpec::RandomCptp {
                dim_in: 3,
                dim_out: 3,
                seed: 200 + trial,
            })
            .unwrap();
            let rho = random_density(3, &mut rng);
            let g = PositiveOperator::from_hermitian(
                gamma.predual().apply_matrix(rho.entries()).unwrap(),
            )
            .unwrap();
            let b = sample::random_state(3, 3, &mut rng).unwrap();
            let gb = PositiveOperator::from_hermitian(
                gamma.apply_matrix(b.entries()).unwrap(),
            )
            .unwrap();
            for p in [0.5, 0.7, 0.9, 1.0, 1.5, 2.0, f64::INFINITY] {
                let (gw, rw) = if p.is_finite() {
                    (g.power(0.5 / p).unwrap(), rho.power(0.5 / p).unwrap())
                } else {
                    (
                        PositiveOperator::from_hermitian(g.support_projection().entries().clone())
                            .unwrap(),
                        PositiveOperator::from_hermitian(
                            rho.support_projection().entries().clone(),
                        )
                        .unwrap(),
                    )
                };
                let lhs =
                    schatten_norm(&(gw.entries() * b.entries() * gw.entries()), p).unwrap();
                let rhs =
                    schatten_norm(&(rw.entries() * gb.entries() * rw.entries()), p).unwrap();
                if p < 1.0 {
                    assert!(lhs <= rhs + 1e-9, "p={p}: {lhs} > {rhs}");
                } else {
                    assert!(rhs <= lhs + 1e-9, "p={p}: {rhs} > {lhs}");
                }
            }
        }
    }

    #[test]
    fn dpi_identity_gap_is_zero() {
        let mut rng = sample::rng(15);
        let psi = random_density(2, &mut rng);
        let phi = random_density(2, &mut rng);
        let gamma = make_channel(&ChannelSpec::Identity(2)).unwrap();
        let par = AlphaZ::new(2.0, 1.5).unwrap();
        let out = dpi_gap(&psi, &phi, &gamma, &par).unwrap();
        let gap = out.gap.unwrap().finite().unwrap();
        assert_abs_diff_eq!(gap, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn dpi_depolarizing_qubit_example() {
        let psi = PositiveOperator::from_real_diagonal(&[0.5, 0.5]).unwrap();
        let phi = PositiveOperator::from_real_diagonal(&[0.25, 0.75]).unwrap();
        let gamma = depolarizing(2, 0.5);
        let par = AlphaZ::new(2.0, 1.0).unwrap();
        let out = dpi_gap(&psi, &phi, &gamma, &par).unwrap();
        let before = out.before.finite().unwrap();
        let after = out.after.finite().unwrap();
        assert_abs_diff_eq!(before, (4.0f64 / 3.0).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(after, (16.0f64 / 15.0).ln(), epsilon = 1e-12);
        assert!(out.gap.unwrap().finite().unwrap() > 0.0);
    }

    #[test]
    fn dpi_pinching_fixed_points_give_zero_gap() {
        let psi = PositiveOperator::from_real_diagonal(&[0.3, 0.3, 0.4]).unwrap();
        let phi = PositiveOperator::from_real_diagonal(&[0.5, 0.2, 0.3]).unwrap();
        let gamma = make_channel(&ChannelSpec::Pinching(vec![vec![0, 1], vec![2]])).unwrap();
        let par = AlphaZ::new(0.5, 1.0).unwrap();
        let out = dpi_gap(&psi, &phi, &gamma, &par).unwrap();
        assert_abs_diff_eq!(out.gap.unwrap().finite().unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn dpi_gap_nonnegative_across_regions_including_non_cp_maps() {
        let mut rng = sample::rng(16);
        let params = [
            AlphaZ::new(0.3, 0.8).unwrap(),
            AlphaZ::new(0.7, 0.7).unwrap(),
            AlphaZ::new(1.5, 1.2).unwrap(),
            AlphaZ::new(2.0, 1.5).unwrap(),
        ];
        for trial in 0..30u64 {
            let psi = random_density(3, &mut rng);
            let phi = random_density(3, &mut rng);
            let base = make_channel(&ChannelSpec::RandomCptp {
                dim_in: 3,
                dim_out: 3,
                seed: 300 + trial,
            })
            .unwrap();
            let gamma = if trial % 3 == 0 {
                compose(&transpose_map(3).unwrap(), &base).unwrap()
            } else {
                base
            };
            for par in &params {
                let out = dpi_gap(&psi, &phi, &gamma, par).unwrap();
                let gap = out.gap.unwrap().finite().unwrap();
                assert!(gap >= -1e-8, "gap {gap:.3e} at alpha={}", par.alpha());
            }
        }
    }

    #[test]
    fn q_is_jointly_concave_then_convex() {
        let mut rng = sample::rng(17);
        let low = AlphaZ::new(0.5, 0.8).unwrap();
        let high = AlphaZ::new(1.6, 1.4).unwrap();
        for _ in 0..20 {
            let psi1 = random_density(2, &mut rng);
            let psi2 = random_density(2, &mut rng);
            let phi1 = random_density(2, &mut rng);
            let phi2 = random_density(2, &mut rng);
            let psi_mix = psi1.scale(0.5).unwrap().add(&psi2.scale(0.5).unwrap()).unwrap();
            let phi_mix = phi1.scale(0.5).unwrap().add(&phi2.scale(0.5).unwrap()).unwrap();
            for (par, concave) in [(&low, true), (&high, false)] {
                let mix = q_alpha_z(&psi_mix, &phi_mix, par).unwrap().finite().unwrap();
                let q1 = q_alpha_z(&psi1, &phi1, par).unwrap().finite().unwrap();
                let q2 = q_alpha_z(&psi2, &phi2, par).unwrap().finite().unwrap();
                let avg = 0.5 * (q1 + q2);
                if concave {
                    assert!(mix >= avg - 1e-8, "concavity: {mix} < {avg}");
                } else {
                    assert!(mix <= avg + 1e-8, "convexity: {mix} > {avg}");
                }
            }
        }
    }

    #[test]
    fn pinching_is_a_conditional_expectation_bimodule_map() {
        let mut rng = sample::rng(18);
        let blocks = vec![vec![0, 1], vec![2, 3]];
        let gamma = make_channel(&ChannelSpec::Pinching(blocks.clone())).unwrap();
        for _ in 0..10 {
            let x = sample::complex_gaussian(4, 4, &mut rng);
            let a_h = sample::random_hermitian(2, &mut rng);
            let b_h = sample::random_hermitian(2, &mut rng);
            let mut a = CMatrix::zeros(4, 4);
            let mut b = CMatrix::zeros(4, 4);
            for r in 0..2 {
                for c in 0..2 {
                    a[(r, c)] = a_h.entries()[(r, c)];
                    b[(r + 2, c + 2)] = b_h.entries()[(r, c)];
                }
            }
            let a = &a + CMatrix::identity(4, 4);
            let b = &b + CMatrix::identity(4, 4);
            let lhs = gamma.apply_matrix(&(&a * &x * &b)).unwrap();
            let rhs = &a * gamma.apply_matrix(&x).unwrap() * &b;
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn sufficiency_unitary_channel_is_reversible() {
        let mut rng = sample::rng(19);
        let u = sample::random_unitary(3, &mut rng);
        let gamma = make_channel(&ChannelSpec::UnitaryConj(u)).unwrap();
        let psi = random_density(3, &mut rng);
        let phi = random_density(3, &mut rng);
        for par in [AlphaZ::new(0.5, 1.0).unwrap(), AlphaZ::new(1.5, 1.2).unwrap()] {
            let out = sufficiency_test(&psi, &phi, &gamma, &par).unwrap();
            assert!(out.equality && out.recovered);
            assert!(out.residual <= 1e-10);
        }
    }

    #[test]
    fn sufficiency_pinching_with_block_diagonal_states() {
        let mut rng = sample::rng(20);
        let blocks = vec![vec![0, 1], vec![2]];
        let gamma = make_channel(&ChannelSpec::Pinching(blocks.clone())).unwrap();
        let sub = Subalgebra::block_diagonal(blocks, 3).unwrap();
        let psi = restrict(&random_density(3, &mut rng), &sub).unwrap();
        let phi = restrict(&random_density(3, &mut rng), &sub).unwrap();
        let par = AlphaZ::new(0.5, 1.0).unwrap();
        let out = sufficiency_test(&psi, &phi, &gamma, &par).unwrap();
        assert!(out.equality && out.recovered, "residual {}", out.residual);
    }

    #[test]
    fn sufficiency_depolarizing_generic_pair_fails_cleanly() {
        let mut rng = sample::rng(23);
        let psi = random_density(2, &mut rng);
        let phi = random_density(2, &mut rng);
        let gamma = depolarizing(2, 0.5);
        let par = AlphaZ::new(0.5, 1.0).unwrap();
        let out = sufficiency_test(&psi, &phi, &gamma, &par).unwrap();
        assert!(!out.equality && !out.recovered);
        assert!(out.residual > 1e-3, "residual {}", out.residual);
    }

    #[test]
    fn sufficiency_range_gate_rejects_bad_parameters_and_maps() {
        let mut rng = sample::rng(24);
        let psi = random_density(2, &mut rng);
        let phi = random_density(2, &mut rng);
        let gamma = depolarizing(2, 0.3);
        // alpha >= z and 1 - alpha >= z: no hypothesis applies.
        let par = AlphaZ::new(0.5, 0.5).unwrap();
        assert!(matches!(
            sufficiency_test(&psi, &phi, &gamma, &par),
            Err(Error::OutOfRange { .. })
        ));
        // Merely positive maps are not accepted.
        let twisted = compose(&transpose_map(2).unwrap(), &gamma).unwrap();
        let good = AlphaZ::new(0.5, 1.0).unwrap();
        assert!(matches!(
            sufficiency_test(&psi, &phi, &twisted, &good),
            Err(Error::MapRequirement(_))
        ));
    }

    #[test]
    fn embedding_corner_is_a_reversible_compression() {
        let mut rng = sample::rng(25);
        // Projector onto a random 2-dimensional subspace of dimension 4.
        let u = sample::random_unitary(4, &mut rng);
        let basis = u.columns(0, 2).into_owned();
        let p = HermitianOperator::new(&basis * basis.adjoint()).unwrap();
        let sub = Subalgebra::corner(p.clone()).unwrap();
        let gamma = make_channel(&ChannelSpec::Embedding(sub)).unwrap();
        assert_eq!(gamma.dim_in(), 4);
        assert_eq!(gamma.dim_out(), 2);
        assert!(gamma.flags().unital);
        // States on the corner push to corner-supported states and back
        // without loss, so the divergence is preserved.
        let psi = random_density(2, &mut rng);
        let phi = random_density(2, &mut rng);
        let par = AlphaZ::new(1.5, 1.2).unwrap();
        let out = sufficiency_test(&psi, &phi, &gamma, &par).unwrap();
        assert!(out.equality && out.recovered, "residual {}", out.residual);
    }

    #[test]
    fn restrict_examples() {
        let mut rng = sample::rng(26);
        let psi = random_density(3, &mut rng);
        let full = Subalgebra::corner(HermitianOperator::identity(3)).unwrap();
        let same = restrict(&psi, &full).unwrap();
        assert!((same.entries() - psi.entries()).norm() < 1e-12);

        let diag = Subalgebra::block_diagonal(vec![vec![0], vec![1], vec![2]], 3).unwrap();
        let pinched = restrict(&psi, &diag).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert_eq!(pinched.entries()[(r, c)], c64(0.0, 0.0));
                } else {
                    assert_abs_diff_eq!(
                        pinched.entries()[(r, c)].re,
                        psi.entries()[(r, c)].re,
                        epsilon = 1e-14
                    );
                }
            }
        }

        let u = sample::random_unitary(3, &mut rng);
        let basis = u.columns(0, 2).into_owned();
        let p = HermitianOperator::new(&basis * basis.adjoint()).unwrap();
        let corner = restrict(&psi, &Subalgebra::corner(p.clone()).unwrap()).unwrap();
        let expect = trace_re(&(p.entries() * psi.entries() * p.entries()));
        assert_abs_diff_eq!(corner.trace(), expect, epsilon = 1e-12);
    }

    #[test]
    fn malformed_subalgebras_rejected() {
        assert!(Subalgebra::block_diagonal(vec![vec![0, 1], vec![1]], 3).is_err());
        assert!(Subalgebra::block_diagonal(vec![vec![0]], 2).is_err());
        let mut rng = sample::rng(27);
        let not_projector = sample::random_hermitian(2, &mut rng);
        assert!(Subalgebra::corner(not_projector).is_err());
    }

    #[test]
    fn block_refinement_chain_is_monotone_to_the_top() {
        let mut rng = sample::rng(28);
        let chains: Vec<Vec<Vec<Vec<usize>>>> = vec![vec![
            vec![vec![0], vec![1], vec![2], vec![3]],
            vec![vec![0, 1], vec![2], vec![3]],
            vec![vec![0, 1], vec![2, 3]],
            vec![vec![0, 1, 2, 3]],
        ]];
        for chain in &chains {
            let psi = random_density(4, &mut rng);
            let phi = random_density(4, &mut rng);
            for par in [AlphaZ::new(0.4, 0.7).unwrap(), AlphaZ::new(1.8, 1.3).unwrap()] {
                let full = d_alpha_z(&psi, &phi, &par).unwrap().finite().unwrap();
                let mut last = f64::NEG_INFINITY;
                for blocks in chain {
                    let sub = Subalgebra::block_diagonal(blocks.clone(), 4).unwrap();
                    let d = d_alpha_z(
                        &restrict(&psi, &sub).unwrap(),
                        &restrict(&phi, &sub).unwrap(),
                        &par,
                    )
                    .unwrap()
                    .finite()
                    .unwrap();
                    assert!(d >= last - 1e-9, "chain not monotone: {d} < {last}");
                    last = d;
                }
                assert_abs_diff_eq!(last, full, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn corner_chain_with_scalar_tails_is_monotone_to_the_top() {
        let mut rng = sample::rng(29);
        let psi = random_density(4, &mut rng);
        let phi = random_density(4, &mut rng);
        let u = sample::random_unitary(4, &mut rng);
        for par in [AlphaZ::new(0.6, 0.9).unwrap(), AlphaZ::new(1.5, 1.1).unwrap()] {
            let full = d_alpha_z(&psi, &phi, &par).unwrap().finite().unwrap();
            let mut last = f64::NEG_INFINITY;
            for rank in 1..=4 {
                let basis = u.columns(0, rank).into_owned();
                let p = HermitianOperator::new(&basis * basis.adjoint()).unwrap();
                let d = d_alpha_z(
                    &corner_with_scalar_tail(&psi, &p).unwrap(),
                    &corner_with_scalar_tail(&phi, &p).unwrap(),
                    &par,
                )
                .unwrap()
                .finite()
                .unwrap();
                assert!(d >= last - 1e-9, "corner chain not monotone: {d} < {last}");
                last = d;
            }
            assert_abs_diff_eq!(last, full, epsilon = 1e-9);
        }
    }

    #[test]
    fn corner_tail_at_full_projector_returns_the_state() {
        let mut rng = sample::rng(30);
        let psi = random_density(3, &mut rng);
        let out = corner_with_scalar_tail(&psi, &HermitianOperator::identity(3)).unwrap();
        assert!((out.entries() - psi.entries()).norm() < 1e-12);
        // Trace is preserved for any projector.
        let u = sample::random_unitary(3, &mut rng);
        let basis = u.columns(0, 1).into_owned();
        let p = HermitianOperator::new(&basis * basis.adjoint()).unwrap();
        let restricted = corner_with_scalar_tail(&psi, &p).unwrap();
        assert_abs_diff_eq!(restricted.trace(), psi.trace(), epsilon = 1e-12);
    }

    #[test]
    fn depolarizing_strength_out_of_range_rejected() {
        assert!(make_channel(&ChannelSpec::Depolarizing {
            dim: 2,
            strength: 1.5
        })
        .is_err());
        assert!(make_channel(&ChannelSpec::UnitaryConj(CMatrix::from_fn(2, 2, |r, c| {
            c64((r + c) as f64, 0.0)
        })))
        .is_err());
        assert!(make_channel(&ChannelSpec::RandomCptp {
            dim_in: 2,
            dim_out: 5,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn petz_dual_choi_stays_psd_for_cp_maps() {
        let mut rng = sample::rng(33);
        let gamma = make_channel(&ChannelSpec::RandomCptp {
            dim_in: 2,
            dim_out: 3,
            seed: 55,
        })
        .unwrap();
        let rho = random_density(3, &mut rng);
        let dual = petz_dual(&gamma, &rho).unwrap();
        assert!(dual.flags().two_positive);
        let choi = dual.choi();
        let h = HermitianOperator::new((&choi + choi.adjoint()).map(|v| v * 0.5)).unwrap();
        let sd = SpectralDecomposition::new(&h).unwrap();
        let top = sd.eigenvalues().first().copied().unwrap().max(1.0);
        assert!(sd.eigenvalues().last().copied().unwrap() >= -1e-10 * top);
    }

    #[test]
    fn doubled_space_positivity_spot_check() {
        // For a 2-positive map, id_2 (x) gamma maps PSD to PSD: assemble the
        // block image of a random PSD element of M_2(M_din) and check.
        let mut rng = sample::rng(34);
        let gamma = make_channel(&ChannelSpec::RandomCptp {
            dim_in: 2,
            dim_out: 2,
            seed: 88,
        })
        .unwrap();
        for _ in 0..10 {
            let x = sample::random_state(4, 4, &mut rng).unwrap();
            let mut out = CMatrix::zeros(4, 4);
            for bi in 0..2 {
                for bj in 0..2 {
                    let block = CMatrix::from_fn(2, 2, |r, c| x.entries()[(bi * 2 + r, bj * 2 + c)]);
                    let img = gamma.apply_matrix(&block).unwrap();
                    for r in 0..2 {
                        for c in 0..2 {
                            out[(bi * 2 + r, bj * 2 + c)] = img[(r, c)];
                        }
                    }
                }
            }
            let h = HermitianOperator::new((&out + out.adjoint()).map(|v| v * 0.5)).unwrap();
            let sd = SpectralDecomposition::new(&h).unwrap();
            let top = sd.eigenvalues().first().copied().unwrap().max(1.0);
            assert!(sd.eigenvalues().last().copied().unwrap() >= -1e-10 * top);
        }
        // The transpose map fails the same check on an entangled input.
        let tm = transpose_map(2).unwrap();
        let mut ent = CMatrix::zeros(4, 4);
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            ent[(r, c)] = c64(0.5, 0.0);
        }
        let mut out = CMatrix::zeros(4, 4);
        for bi in 0..2 {
            for bj in 0..2 {
                let block = CMatrix::from_fn(2, 2, |r, c| ent[(bi * 2 + r, bj * 2 + c)]);
                let img = tm.apply_matrix(&block).unwrap();
                for r in 0..2 {
                    for c in 0..2 {
                        out[(bi * 2 + r, bj * 2 + c)] = img[(r, c)];
                    }
                }
            }
        }
        let h = HermitianOperator::new(out).unwrap();
        let sd = SpectralDecomposition::new(&h).unwrap();
        assert!(sd.eigenvalues().last().copied().unwrap() < -0.4);
    }

    #[test]
    fn predual_moves_densities_like_matrix_powers_commute() {
        // Unitary covariance sanity: conjugation channel preduals act as
        // the inverse conjugation on densities.
        let mut rng = sample::rng(35);
        let u = sample::random_unitary(2, &mut rng);
        let gamma = make_channel(&ChannelSpec::UnitaryConj(u.clone())).unwrap();
        let rho = random_density(2, &mut rng);
        let moved = gamma.predual().apply_matrix(rho.entries()).unwrap();
        let expect = &u * rho.entries() * u.adjoint();
        assert!((moved - expect).norm() < 1e-12);
        let _ = matrix_power(&rho, 0.5).unwrap();
    }
}
