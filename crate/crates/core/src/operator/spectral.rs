use std::cmp::Ordering;
use std::ops::Range;

use nalgebra::linalg::SymmetricEigen;

use super::hermitian::{CMatrix, CVector, HermitianOperator, C64};
use crate::error::{Error, Result};

/// Eigenvalue gap (relative to the largest |λ|) below which neighbouring
/// eigenvalues are treated as one degenerate group.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

/// Components smaller than this (in modulus) are skipped when fixing the
/// phase of an eigenvector.
const PHASE_PIVOT_TOL: f64 = 1e-10;

/// Orthonormal eigenbasis of a decomposition.
#[derive(Clone, Debug, PartialEq)]
pub enum EigenBasis {
    /// Column `i` is the standard basis vector `e_{perm[i]}`.
    Permutation(Vec<usize>),
    /// Column `i` of the matrix is the `i`-th eigenvector.
    Dense(CMatrix),
}

/// Eigendecomposition with eigenvalues sorted in non-increasing order,
/// canonical eigenvector phases, and explicit degenerate groups.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    basis: EigenBasis,
    groups: Vec<Range<usize>>,
}

fn sort_desc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    idx
}

fn group(values: &[f64], gap_tol: Option<f64>) -> Vec<Range<usize>> {
    if values.is_empty() {
        return Vec::new();
    }
    let scale = values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let tol = gap_tol.unwrap_or(DEFAULT_GAP_TOL * scale);
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i - 1] - values[i] > tol {
            groups.push(start..i);
            start = i;
        }
    }
    groups.push(start..values.len());
    groups
}

/// Rotates each column so that its first non-negligible entry is real and positive.
fn canonicalize_phases(m: &mut CMatrix) {
    for mut col in m.column_iter_mut() {
        if let Some(pivot) = col.iter().copied().find(|z| z.norm() > PHASE_PIVOT_TOL) {
            let phase = pivot.conj() / pivot.norm();
            for z in col.iter_mut() {
                *z *= phase;
            }
        }
    }
}

/// Hermitian eigendecomposition.
///
/// `gap_tol` is the absolute gap used to form degenerate groups; `None` means
/// `1e-9 · max|λ|`.
pub fn eigh(a: &HermitianOperator, gap_tol: Option<f64>) -> Result<SpectralDecomposition> {
    if let Some(d) = a.diagonal() {
        let perm = sort_desc(d);
        let eigenvalues: Vec<f64> = perm.iter().map(|&i| d[i]).collect();
        let groups = group(&eigenvalues, gap_tol);
        return Ok(SpectralDecomposition { eigenvalues, basis: EigenBasis::Permutation(perm), groups });
    }
    let m = a.to_dense();
    let dim = m.nrows();
    let max_iter = 1000 * dim.max(10);
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, max_iter).ok_or_else(|| Error::EigenNonConvergence {
        dim,
        max_abs: a.max_abs(),
        frobenius: a.frobenius_norm(),
    })?;
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenNonConvergence { dim, max_abs: a.max_abs(), frobenius: a.frobenius_norm() });
    }
    let order = sort_desc(&raw);
    let eigenvalues: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let mut vectors = CMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    canonicalize_phases(&mut vectors);
    let groups = group(&eigenvalues, gap_tol);
    Ok(SpectralDecomposition { eigenvalues, basis: EigenBasis::Dense(vectors), groups })
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    /// Largest eigenvalue (0 for an empty decomposition).
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Multiplicity of the top eigenvalue group.
    pub fn top_multiplicity(&self) -> usize {
        self.groups.first().map_or(0, |g| g.len())
    }

    pub fn is_permutation(&self) -> bool {
        matches!(self.basis, EigenBasis::Permutation(_))
    }

    /// The `i`-th eigenvector.
    pub fn vector(&self, i: usize) -> CVector {
        match &self.basis {
            EigenBasis::Permutation(p) => {
                let mut v = CVector::zeros(self.dim());
                v[p[i]] = C64::new(1.0, 0.0);
                v
            }
            EigenBasis::Dense(m) => m.column(i).into_owned(),
        }
    }

    /// ⟨v_i|A|v_i⟩.
    pub fn expectation(&self, i: usize, a: &HermitianOperator) -> f64 {
        match (&self.basis, a.diagonal()) {
            (EigenBasis::Permutation(p), Some(d)) => d[p[i]],
            (EigenBasis::Permutation(p), None) => a.entry(p[i], p[i]).re,
            (EigenBasis::Dense(m), Some(d)) => m.column(i).iter().zip(d).map(|(z, x)| z.norm_sqr() * x).sum(),
            (EigenBasis::Dense(m), None) => {
                let v: Vec<C64> = m.column(i).iter().copied().collect();
                a.quad_form(&v)
            }
        }
    }

    /// All diagonal entries ⟨v_i|A|v_i⟩.
    pub fn expectations(&self, a: &HermitianOperator) -> Vec<f64> {
        if let (EigenBasis::Dense(m), None) = (&self.basis, a.diagonal()) {
            let am = a.dense();
            let prod = am.as_ref() * m;
            return (0..self.dim())
                .map(|i| m.column(i).iter().zip(prod.column(i).iter()).map(|(v, w)| (v.conj() * w).re).sum())
                .collect();
        }
        (0..self.dim()).map(|i| self.expectation(i, a)).collect()
    }

    /// Σ_i values[i] |v_i⟩⟨v_i|.
    pub fn compose(&self, values: &[f64]) -> HermitianOperator {
        assert_eq!(values.len(), self.dim(), "one value per eigenvector");
        match &self.basis {
            EigenBasis::Permutation(p) => {
                let mut d = vec![0.0; self.dim()];
                for (i, &pi) in p.iter().enumerate() {
                    d[pi] = values[i];
                }
                HermitianOperator::diagonal_unchecked(d)
            }
            EigenBasis::Dense(m) => {
                let n = self.dim();
                let mut scaled = m.clone();
                for (i, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= C64::new(values[i], 0.0);
                }
                let mut out = &scaled * m.adjoint();
                for i in 0..n {
                    out[(i, i)].im = 0.0;
                    for j in (i + 1)..n {
                        let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                        out[(i, j)] = avg;
                        out[(j, i)] = avg.conj();
                    }
                }
                HermitianOperator::dense_unchecked(out)
            }
        }
    }

    /// Projector onto the span of the eigenvectors with the given indices.
    pub fn span_projector(&self, indices: impl IntoIterator<Item = usize>) -> HermitianOperator {
        let mut values = vec![0.0; self.dim()];
        for i in indices {
            values[i] = 1.0;
        }
        self.compose(&values)
    }

    /// Same eigenbasis with new eigenvalues, re-sorted into non-increasing order.
    pub fn with_eigenvalues(&self, values: &[f64], gap_tol: Option<f64>) -> SpectralDecomposition {
        assert_eq!(values.len(), self.dim(), "one value per eigenvector");
        let order = sort_desc(values);
        let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let basis = match &self.basis {
            EigenBasis::Permutation(p) => EigenBasis::Permutation(order.iter().map(|&i| p[i]).collect()),
            EigenBasis::Dense(m) => {
                let n = self.dim();
                EigenBasis::Dense(CMatrix::from_fn(n, n, |r, c| m[(r, order[c])]))
            }
        };
        let groups = group(&eigenvalues, gap_tol);
        SpectralDecomposition { eigenvalues, basis, groups }
    }

    /// Same basis with the eigenvalues mapped by `f` and re-sorted.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> SpectralDecomposition {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        self.with_eigenvalues(&values, None)
    }

    /// Entrywise maximum of `|V diag(λ) V* − A|`.
    pub fn reconstruction_error(&self, a: &HermitianOperator) -> f64 {
        self.compose(&self.eigenvalues).max_abs_diff(a).unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let h = HermitianOperator::new(x).unwrap();
        let sd = eigh(&h, None).unwrap();
        assert_abs_diff_eq!(sd.eigenvalues()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sd.eigenvalues()[1], -1.0, epsilon = 1e-14);
        let v = sd.vector(0);
        assert!(v[0].re > 0.0 && v[0].im.abs() < 1e-15);
        assert!(sd.reconstruction_error(&h) < 1e-14);
    }

    #[test]
    fn diagonal_fast_path_groups() {
        let h = HermitianOperator::from_diagonal(vec![0.25, 0.5, 0.25]).unwrap();
        let sd = eigh(&h, None).unwrap();
        assert_eq!(sd.eigenvalues(), &[0.5, 0.25, 0.25]);
        assert_eq!(sd.groups(), &[0..1, 1..3]);
        assert_eq!(sd.basis(), &EigenBasis::Permutation(vec![1, 0, 2]));
        assert_eq!(sd.compose(sd.eigenvalues()), h);
    }

    #[test]
    fn degenerate_groups_within_gap() {
        let h = HermitianOperator::from_diagonal(vec![0.5, 0.5 - 1e-12, 0.0]).unwrap();
        let sd = eigh(&h.scale(1.0), None).unwrap();
        assert_eq!(sd.top_multiplicity(), 2);
    }

    #[test]
    fn reorder_keeps_basis() {
        let x = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let h = HermitianOperator::new(x).unwrap();
        let sd = eigh(&h, None).unwrap();
        let inv = sd.map_eigenvalues(|x| 1.0 / x);
        assert_abs_diff_eq!(inv.eigenvalues()[0], 1.0, epsilon = 1e-13);
        let prod = inv.compose(inv.eigenvalues()).matmul(&h).unwrap();
        assert_abs_diff_eq!(prod[(0, 0)].re, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(prod[(0, 1)].norm(), 0.0, epsilon = 1e-13);
    }
}
