use std::ops::Deref;
use std::sync::Arc;

use super::hermitian::{CMatrix, HermitianOperator, C64};
use super::spectral::{eigh, SpectralDecomposition};
use crate::error::{Error, Result};

/// Negative eigenvalues down to `-PSD_TOL · λ_max` are accepted as roundoff.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues at or below `dim · RANK_TOL · λ_max` count as zero.
pub const RANK_TOL: f64 = 1e-14;
/// Allowed deviation of a density operator's trace from 1.
pub const TRACE_TOL: f64 = 1e-10;

/// A positive semidefinite operator together with its cached spectrum.
///
/// Eigenvalues in the cached spectrum are clamped at zero.
#[derive(Clone, Debug)]
pub struct PositiveOperator {
    op: HermitianOperator,
    spectrum: Arc<SpectralDecomposition>,
}

impl PositiveOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let sd = eigh(&op, None)?;
        let ev = sd.eigenvalues();
        let scale = ev.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let tol = PSD_TOL * scale;
        let min = ev.last().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::NotPositive { min_eigenvalue: min, tolerance: tol });
        }
        let sd = if min < 0.0 { sd.with_eigenvalues(&clamp(ev), None) } else { sd };
        Ok(Self { op, spectrum: Arc::new(sd) })
    }

    pub fn from_dense(matrix: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(matrix)?)
    }

    pub fn from_diagonal(diagonal: Vec<f64>) -> Result<Self> {
        Self::new(HermitianOperator::from_diagonal(diagonal)?)
    }

    /// Builds the operator directly from a spectrum with non-negative eigenvalues.
    pub fn from_spectrum(spectrum: SpectralDecomposition) -> Result<Self> {
        if spectrum.eigenvalues().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(&min) = spectrum.eigenvalues().last() {
            if min < 0.0 {
                return Err(Error::NotPositive { min_eigenvalue: min, tolerance: 0.0 });
            }
        }
        let op = spectrum.compose(spectrum.eigenvalues());
        Ok(Self { op, spectrum: Arc::new(spectrum) })
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_spectrum(eigh(&HermitianOperator::zeros(dim), None).expect("diagonal")).expect("zero is positive")
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_spectrum(eigh(&HermitianOperator::identity(dim), None).expect("diagonal"))
            .expect("identity is positive")
    }

    /// |ψ⟩⟨ψ| for an arbitrary (unnormalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        Self::new(HermitianOperator::ket_bra(psi))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.op.trace()
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.lambda_max().max(0.0)
    }

    /// `dim · 1e-14 · λ_max`.
    pub fn rank_tolerance(&self) -> f64 {
        self.dim() as f64 * RANK_TOL * self.lambda_max()
    }

    /// Number of eigenvalues above `tol` (default: [`Self::rank_tolerance`]).
    pub fn rank(&self, tol: Option<f64>) -> usize {
        let t = tol.unwrap_or_else(|| self.rank_tolerance());
        self.eigenvalues().iter().filter(|&&x| x > t).count()
    }

    pub fn is_zero(&self) -> bool {
        self.lambda_max() == 0.0
    }

    /// `c · A` for `c ≥ 0`; reuses the eigenbasis.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor {c} must be finite and non-negative")));
        }
        let values: Vec<f64> = self.eigenvalues().iter().map(|x| x * c).collect();
        let sd = self.spectrum.with_eigenvalues(&values, None);
        Ok(Self { op: self.op.scale(c), spectrum: Arc::new(sd) })
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        Self::new(self.op.add(&other.op)?)
    }

    /// `self − other`, failing unless the difference is positive semidefinite.
    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        Self::new(self.op.sub(&other.op)?)
    }

    /// `(1 − p)·a + p·b`.
    pub fn mix(a: &Self, b: &Self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("mixing weight {p} outside [0, 1]")));
        }
        Self::new(a.op.linear_combination(1.0 - p, &b.op, p)?)
    }

    /// `B A B`.
    pub fn sandwich(&self, b: &HermitianOperator) -> Result<Self> {
        Self::new(self.op.sandwich(b)?)
    }
}

fn clamp(values: &[f64]) -> Vec<f64> {
    values.iter().map(|x| x.max(0.0)).collect()
}

/// A positive operator with unit trace.
#[derive(Clone, Debug)]
pub struct DensityOperator(PositiveOperator);

impl DensityOperator {
    pub fn new(op: PositiveOperator) -> Result<Self> {
        let t = op.trace();
        if (t - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized { trace: t });
        }
        Ok(Self(op))
    }

    pub fn from_dense(matrix: CMatrix) -> Result<Self> {
        Self::new(PositiveOperator::from_dense(matrix)?)
    }

    pub fn from_diagonal(diagonal: Vec<f64>) -> Result<Self> {
        Self::new(PositiveOperator::from_diagonal(diagonal)?)
    }

    /// The normalized pure state of `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(PositiveOperator::pure(&v)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(PositiveOperator::identity(dim).scaled(1.0 / dim as f64).expect("positive scale"))
    }

    pub fn basis_state(dim: usize, i: usize) -> Self {
        let mut d = vec![0.0; dim];
        d[i] = 1.0;
        Self::from_diagonal(d).expect("basis state")
    }

    pub fn into_inner(self) -> PositiveOperator {
        self.0
    }

    pub fn as_positive(&self) -> &PositiveOperator {
        &self.0
    }
}

impl Deref for DensityOperator {
    type Target = PositiveOperator;

    fn deref(&self) -> &PositiveOperator {
        &self.0
    }
}

/// Tolerance used when testing idempotency and containment of projectors.
pub const PROJECTOR_TOL: f64 = 1e-10;

/// An orthogonal projector.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    op: HermitianOperator,
    rank: usize,
}

impl Projector {
    /// Checks `P² = P` within [`PROJECTOR_TOL`] and reads the rank off the trace.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let err = idempotency_error(&op)?;
        if err > PROJECTOR_TOL {
            return Err(Error::InvalidArgument(format!("operator is not idempotent (deviation {err:.3e})")));
        }
        let rank = op.trace().round().max(0.0) as usize;
        Ok(Self { op, rank })
    }

    /// Projector onto the given coordinate axes.
    pub fn coordinate(dim: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut d = vec![0.0; dim];
        for i in indices {
            d[i] = 1.0;
        }
        let rank = d.iter().filter(|&&x| x == 1.0).count();
        Self { op: HermitianOperator::diagonal_unchecked(d), rank }
    }

    /// Projector onto the first `indices` eigenvectors of a decomposition.
    pub fn spectral(sd: &SpectralDecomposition, indices: impl IntoIterator<Item = usize>) -> Self {
        let idx: Vec<usize> = indices.into_iter().collect();
        let rank = idx.len();
        Self { op: sd.span_projector(idx), rank }
    }

    pub fn zero(dim: usize) -> Self {
        Self::coordinate(dim, std::iter::empty())
    }

    pub fn identity(dim: usize) -> Self {
        Self::coordinate(dim, 0..dim)
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// `I − P`.
    pub fn complement(&self) -> Self {
        let id = HermitianOperator::identity(self.dim());
        Self { op: id.sub(&self.op).expect("same dimension"), rank: self.dim() - self.rank }
    }

    pub fn idempotency_error(&self) -> f64 {
        idempotency_error(&self.op).unwrap_or(f64::INFINITY)
    }

    /// `P A P` for a positive operator.
    pub fn compress(&self, a: &PositiveOperator) -> Result<PositiveOperator> {
        a.sandwich(&self.op)
    }

    /// Entrywise max of `|P Q − Q|`; zero exactly when `range Q ⊆ range P`.
    pub fn containment_error(&self, q: &HermitianOperator) -> Result<f64> {
        if let (Some(p), Some(d)) = (self.op.diagonal(), q.diagonal()) {
            if p.len() != d.len() {
                return Err(crate::error::Error::DimensionMismatch { expected: p.len(), actual: d.len() });
            }
            return Ok(p.iter().zip(d).map(|(a, b)| (a * b - b).abs()).fold(0.0, f64::max));
        }
        let pq = self.op.matmul(q)?;
        let qd = q.dense();
        Ok((pq - qd.as_ref()).iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

fn idempotency_error(op: &HermitianOperator) -> Result<f64> {
    if let Some(d) = op.diagonal() {
        return Ok(d.iter().map(|x| (x * x - x).abs()).fold(0.0, f64::max));
    }
    let sq = op.matmul(op)?;
    let d = op.dense();
    Ok((sq - d.as_ref()).iter().map(|z| z.norm()).fold(0.0, f64::max))
}
