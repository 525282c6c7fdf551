use std::borrow::Cow;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative deviation from Hermiticity accepted (and then symmetrized away)
/// by [`HermitianOperator::new`].
const HERMITIAN_REJECT_TOL: f64 = 1e-9;

/// A dense or diagonal Hermitian operator on a `dim`-dimensional space.
///
/// Diagonal operators keep only their (real) diagonal; every operation that
/// stays inside the diagonal algebra keeps that representation.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    repr: Repr,
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Diagonal(Vec<f64>),
    Dense(CMatrix),
}

impl HermitianOperator {
    /// Builds an operator from a dense matrix, replacing it with `(A + A*)/2`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let adjoint = matrix.adjoint();
        let deviation = (&matrix - &adjoint).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > HERMITIAN_REJECT_TOL * (1.0 + scale) {
            return Err(Error::NotHermitian { deviation });
        }
        let sym = (matrix + adjoint) * C64::new(0.5, 0.0);
        Ok(Self { repr: Repr::Dense(sym) })
    }

    pub fn from_diagonal(diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.is_empty() {
            return Err(Error::InvalidArgument("empty diagonal".into()));
        }
        if diagonal.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { repr: Repr::Diagonal(diagonal) })
    }

    pub(crate) fn diagonal_unchecked(diagonal: Vec<f64>) -> Self {
        Self { repr: Repr::Diagonal(diagonal) }
    }

    pub(crate) fn dense_unchecked(matrix: CMatrix) -> Self {
        debug_assert!(matrix.is_square());
        Self { repr: Repr::Dense(matrix) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal_unchecked(vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::diagonal_unchecked(vec![0.0; dim])
    }

    /// The rank-one operator |ψ⟩⟨ψ| (ψ is not normalized).
    pub fn ket_bra(psi: &[C64]) -> Self {
        let v = CVector::from_column_slice(psi);
        Self::dense_unchecked(&v * v.adjoint())
    }

    /// The coordinate projector |i⟩⟨i| in dimension `dim`.
    pub fn basis_state(dim: usize, i: usize) -> Self {
        let mut d = vec![0.0; dim];
        d[i] = 1.0;
        Self::diagonal_unchecked(d)
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Diagonal(d) => d.len(),
            Repr::Dense(m) => m.nrows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    /// The diagonal, when the operator is stored in diagonal form.
    pub fn diagonal(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Diagonal(d) => Some(d),
            Repr::Dense(_) => None,
        }
    }

    pub fn dense(&self) -> Cow<'_, CMatrix> {
        match &self.repr {
            Repr::Dense(m) => Cow::Borrowed(m),
            Repr::Diagonal(d) => {
                let n = d.len();
                Cow::Owned(CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) }))
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        self.dense().into_owned()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match &self.repr {
            Repr::Diagonal(d) => {
                if i == j {
                    C64::new(d[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Repr::Dense(m) => m[(i, j)],
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().sum(),
            Repr::Dense(m) => (0..m.nrows()).map(|i| m[(i, i)].re).sum(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        match &self.repr {
            Repr::Diagonal(d) => Self::diagonal_unchecked(d.iter().map(|x| x * c).collect()),
            Repr::Dense(m) => Self::dense_unchecked(m * C64::new(c, 0.0)),
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_dim(other)?;
        Ok(match (&self.repr, &other.repr) {
            (Repr::Diagonal(x), Repr::Diagonal(y)) => {
                Self::diagonal_unchecked(x.iter().zip(y).map(|(p, q)| a * p + b * q).collect())
            }
            _ => Self::dense_unchecked(
                self.dense().as_ref() * C64::new(a, 0.0) + other.dense().as_ref() * C64::new(b, 0.0),
            ),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, -1.0)
    }

    /// Re⟨v|A|v⟩.
    pub fn quad_form(&self, v: &[C64]) -> f64 {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().zip(v).map(|(a, z)| a * z.norm_sqr()).sum(),
            Repr::Dense(m) => {
                let n = m.nrows();
                let mut acc = 0.0;
                for j in 0..n {
                    let mut col = C64::new(0.0, 0.0);
                    for i in 0..n {
                        col += v[i].conj() * m[(i, j)];
                    }
                    acc += (col * v[j]).re;
                }
                acc
            }
        }
    }

    /// The product `self · other` as a plain (not necessarily Hermitian) matrix.
    pub fn matmul(&self, other: &Self) -> Result<CMatrix> {
        self.check_dim(other)?;
        Ok(match (&self.repr, &other.repr) {
            (Repr::Diagonal(x), Repr::Diagonal(y)) => {
                let n = x.len();
                CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(x[i] * y[i], 0.0) } else { C64::new(0.0, 0.0) })
            }
            (Repr::Diagonal(x), Repr::Dense(m)) => CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * x[i]),
            (Repr::Dense(m), Repr::Diagonal(y)) => CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * y[j]),
            (Repr::Dense(a), Repr::Dense(b)) => a * b,
        })
    }

    /// `B A B` for Hermitian `B` (typically a projector).
    pub fn sandwich(&self, b: &Self) -> Result<Self> {
        self.check_dim(b)?;
        Ok(match (&self.repr, &b.repr) {
            (Repr::Diagonal(x), Repr::Diagonal(y)) => {
                Self::diagonal_unchecked(x.iter().zip(y).map(|(a, p)| p * a * p).collect())
            }
            _ => {
                let bd = b.dense();
                let prod = bd.as_ref() * self.dense().as_ref() * bd.as_ref();
                let sym = (&prod + prod.adjoint()) * C64::new(0.5, 0.0);
                Self::dense_unchecked(sym)
            }
        })
    }

    pub fn max_abs(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().map(|x| x.abs()).fold(0.0, f64::max),
            Repr::Dense(m) => m.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Repr::Dense(m) => m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// Largest entrywise deviation between two operators.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }
}
