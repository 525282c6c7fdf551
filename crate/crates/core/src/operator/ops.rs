use super::hermitian::{CMatrix, CVector, HermitianOperator, C64};
use super::positive::{DensityOperator, PositiveOperator, Projector};
use super::spectral::eigh;
use crate::error::{Error, Result};

/// `f(A) = Σ f(λ_i)|v_i⟩⟨v_i|`, with eigenvalues `≤ tau` treated as exactly zero.
///
/// `tau` defaults to the rank tolerance of `a`. Fails if `f` is not finite at
/// some (thresholded) eigenvalue.
pub fn apply_spectral_function(
    a: &PositiveOperator,
    f: impl Fn(f64) -> f64,
    tau: Option<f64>,
) -> Result<HermitianOperator> {
    let tau = tau.unwrap_or_else(|| a.rank_tolerance());
    let mut values = Vec::with_capacity(a.dim());
    for &l in a.eigenvalues() {
        let x = if l > tau { l } else { 0.0 };
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::FunctionUndefined { eigenvalue: x });
        }
        values.push(y);
    }
    Ok(a.spectrum().compose(&values))
}

/// Projector onto the span of eigenvectors with eigenvalue `> tau`.
pub fn support_projector(a: &PositiveOperator, tau: Option<f64>) -> Projector {
    let r = a.rank(tau);
    Projector::spectral(a.spectrum(), 0..r)
}

/// Moore–Penrose pseudo-inverse: eigenvalues `> tau` are inverted, the rest set to zero.
pub fn moore_penrose_inverse(a: &PositiveOperator, tau: Option<f64>) -> PositiveOperator {
    let tau = tau.unwrap_or_else(|| a.rank_tolerance());
    let values: Vec<f64> = a.eigenvalues().iter().map(|&l| if l > tau { 1.0 / l } else { 0.0 }).collect();
    let sd = a.spectrum().with_eigenvalues(&values, None);
    PositiveOperator::from_spectrum(sd).expect("inverse eigenvalues are non-negative")
}

/// Kronecker product `A ⊗ B` (first factor is the slow index).
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    match (a.diagonal(), b.diagonal()) {
        (Some(x), Some(y)) => {
            HermitianOperator::diagonal_unchecked(x.iter().flat_map(|p| y.iter().map(move |q| p * q)).collect())
        }
        _ => HermitianOperator::dense_unchecked(a.dense().kronecker(b.dense().as_ref())),
    }
}

pub fn tensor_positive(a: &PositiveOperator, b: &PositiveOperator) -> Result<PositiveOperator> {
    PositiveOperator::new(tensor(a.op(), b.op()))
}

/// Which factor of a bipartite space `A ⊗ B` to keep in a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of an operator on `C^{d_a} ⊗ C^{d_b}`, keeping `keep`.
pub fn partial_trace(x: &HermitianOperator, d_a: usize, d_b: usize, keep: Subsystem) -> Result<HermitianOperator> {
    if d_a * d_b != x.dim() {
        return Err(Error::DimensionMismatch { expected: d_a * d_b, actual: x.dim() });
    }
    if let Some(d) = x.diagonal() {
        let out = match keep {
            Subsystem::A => (0..d_a).map(|i| (0..d_b).map(|k| d[i * d_b + k]).sum()).collect(),
            Subsystem::B => (0..d_b).map(|k| (0..d_a).map(|i| d[i * d_b + k]).sum()).collect(),
        };
        return Ok(HermitianOperator::diagonal_unchecked(out));
    }
    let m = x.dense();
    let out = match keep {
        Subsystem::A => CMatrix::from_fn(d_a, d_a, |i, j| (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()),
        Subsystem::B => CMatrix::from_fn(d_b, d_b, |k, l| (0..d_a).map(|i| m[(i * d_b + k, i * d_b + l)]).sum()),
    };
    HermitianOperator::new(out)
}

pub fn partial_trace_positive(
    x: &PositiveOperator,
    d_a: usize,
    d_b: usize,
    keep: Subsystem,
) -> Result<PositiveOperator> {
    PositiveOperator::new(partial_trace(x.op(), d_a, d_b, keep)?)
}

/// A purification `ψ ∈ C^d ⊗ C^r` of a state, with `r` its numerical rank.
#[derive(Clone, Debug)]
pub struct Purification {
    pub vector: CVector,
    pub system_dim: usize,
    pub env_dim: usize,
}

impl Purification {
    /// `ψ` reshaped as the `d × r` matrix `Ψ` with `ψ = Σ Ψ[a,k] |a⟩⊗|k⟩`.
    pub fn as_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.system_dim, self.env_dim, |a, k| self.vector[a * self.env_dim + k])
    }

    pub fn state(&self) -> Result<PositiveOperator> {
        PositiveOperator::pure(self.vector.as_slice())
    }
}

/// `ψ = Σ_k √λ_k v_k ⊗ |k⟩` over the support of `rho`.
pub fn purify(rho: &PositiveOperator) -> Purification {
    let d = rho.dim();
    let r = rho.rank(None).max(1);
    let sd = rho.spectrum();
    let mut vector = CVector::zeros(d * r);
    for k in 0..r {
        let s = rho.eigenvalues()[k].max(0.0).sqrt();
        let v = sd.vector(k);
        for a in 0..d {
            vector[a * r + k] = v[a] * s;
        }
    }
    Purification { vector, system_dim: d, env_dim: r }
}

/// `‖A‖₁ = Σ |λ_i|`.
pub fn trace_norm(a: &HermitianOperator) -> Result<f64> {
    if let Some(d) = a.diagonal() {
        return Ok(d.iter().map(|x| x.abs()).sum());
    }
    Ok(eigh(a, None)?.eigenvalues().iter().map(|x| x.abs()).sum())
}

/// `‖A − B‖₁`.
pub fn trace_norm_distance(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    trace_norm(&a.sub(b)?)
}

/// `‖AB − BA‖₁`, computed from the Hermitian operator `i(AB − BA)`.
pub fn commutator_trace_norm(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.is_diagonal() && b.is_diagonal() {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.dim() });
        }
        return Ok(0.0);
    }
    let ab = a.matmul(b)?;
    let comm = &ab - ab.adjoint();
    let herm = comm * C64::new(0.0, 1.0);
    trace_norm(&HermitianOperator::new(herm)?)
}

/// `A ⊗ B` for density operators.
pub fn product_state(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    DensityOperator::new(tensor_positive(a, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bell() -> DensityOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        DensityOperator::pure(&[C64::new(s, 0.0), z, z, C64::new(s, 0.0)]).unwrap()
    }

    #[test]
    fn bell_marginals_are_maximally_mixed() {
        let rho = bell();
        for keep in [Subsystem::A, Subsystem::B] {
            let m = partial_trace(rho.op(), 2, 2, keep).unwrap();
            assert_abs_diff_eq!(m.entry(0, 0).re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(m.entry(0, 1).norm(), 0.0, epsilon = 1e-15);
        }
        assert!(partial_trace(rho.op(), 3, 2, Subsystem::A).is_err());
    }

    #[test]
    fn purification_reduces_to_state() {
        let rho = PositiveOperator::from_diagonal(vec![0.7, 0.0, 0.3]).unwrap();
        let p = purify(&rho);
        assert_eq!(p.env_dim, 2);
        let back = partial_trace(p.state().unwrap().op(), 3, 2, Subsystem::A).unwrap();
        assert!(back.max_abs_diff(rho.op()).unwrap() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_and_support() {
        let a = PositiveOperator::from_diagonal(vec![2.0, 0.0, 0.5]).unwrap();
        let inv = moore_penrose_inverse(&a, None);
        assert_eq!(inv.op().diagonal(), Some(&[0.5, 0.0, 2.0][..]));
        assert_eq!(support_projector(&a, None).rank(), 2);
        assert!(apply_spectral_function(&a, |x| x.ln(), None).is_err());
        let l = apply_spectral_function(&a, |x| if x > 0.0 { x.ln() } else { 0.0 }, None).unwrap();
        assert_abs_diff_eq!(l.entry(0, 0).re, 2f64.ln());
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let a = DensityOperator::basis_state(2, 0);
        let b = DensityOperator::basis_state(2, 1);
        assert_abs_diff_eq!(trace_norm_distance(a.op(), b.op()).unwrap(), 2.0);
        assert_eq!(commutator_trace_norm(a.op(), b.op()).unwrap(), 0.0);
    }

    #[test]
    fn commutator_of_paulis() {
        let z = HermitianOperator::from_diagonal(vec![1.0, -1.0]).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let x = HermitianOperator::new(CMatrix::from_row_slice(2, 2, &[zero, one, one, zero])).unwrap();
        // [Z, X] = 2iY, trace norm 4.
        assert_abs_diff_eq!(commutator_trace_norm(&z, &x).unwrap(), 4.0, epsilon = 1e-13);
    }
}
