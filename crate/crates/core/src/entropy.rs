//! Entropy, relative entropy, mutual information and the regularized-log ladder.
//!
//! Functionals that are always finite in finite dimension return `f64`; those
//! that can be `+∞` (support violations) return [`ExtendedReal`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::operator::{partial_trace_positive, tensor_positive, PositiveOperator, Subsystem};

/// Mass of `ρ` outside `supp σ` above which `supp ρ ⊄ supp σ` is declared.
pub const SUPPORT_TOL: f64 = 1e-10;

/// `η(x) = −x ln x`, with `η(0) = 0`.
pub fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// `h₂(p) = η(p) + η(1 − p)`.
pub fn binary_entropy(p: f64) -> f64 {
    eta(p) + eta(1.0 - p)
}

/// `H({x, y}) = η(x) + η(y) − η(x + y)`, the homogeneous extension of `h₂`.
pub fn binary_entropy_extension(x: f64, y: f64) -> Result<f64> {
    if !(x >= 0.0 && y >= 0.0) {
        return Err(Error::InvalidArgument(format!("binary entropy needs non-negative inputs, got ({x}, {y})")));
    }
    Ok(eta(x) + eta(y) - eta(x + y))
}

/// Eigenvalues of `a` with those at or below the rank tolerance set to zero.
fn thresholded(a: &PositiveOperator) -> impl Iterator<Item = f64> + '_ {
    let tau = a.rank_tolerance();
    a.eigenvalues().iter().map(move |&l| if l > tau { l } else { 0.0 })
}

/// `S(ρ) = Tr η(ρ) − η(Tr ρ)`; equals `Tr η(ρ)` for states and is homogeneous of degree one.
pub fn von_neumann_entropy(rho: &PositiveOperator) -> f64 {
    let (mut s, mut t) = (0.0, 0.0);
    for l in thresholded(rho) {
        s += eta(l);
        t += l;
    }
    s - eta(t)
}

fn check_dims(a: &PositiveOperator, b: &PositiveOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(())
}

/// `Tr(Π̄_σ ρ Π̄_σ)`: the weight of `ρ` outside the support of `σ`.
pub fn mass_outside_support(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    let tau = sigma.rank_tolerance();
    let sd = sigma.spectrum();
    let mut mass = 0.0;
    for (k, &s) in sd.eigenvalues().iter().enumerate() {
        if s <= tau {
            mass += sd.expectation(k, rho.op());
        }
    }
    Ok(mass.max(0.0))
}

/// `Tr ρ(−ln σ)`, evaluated on `supp σ`; `+∞` when `supp ρ ⊄ supp σ`.
pub fn trace_neg_log(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<ExtendedReal> {
    check_dims(rho, sigma)?;
    let tau = sigma.rank_tolerance();
    let sd = sigma.spectrum();
    let weights = sd.expectations(rho.op());
    let mut acc = 0.0;
    let mut outside = 0.0;
    for (&s, &w) in sd.eigenvalues().iter().zip(&weights) {
        if s > tau {
            acc += -s.ln() * w;
        } else {
            outside += w;
        }
    }
    if outside > SUPPORT_TOL {
        return Ok(ExtendedReal::PosInfinity);
    }
    Ok(ExtendedReal::finite(acc))
}

/// Lindblad relative entropy `D(ρ‖σ) = Tr ρ ln ρ − Tr ρ ln σ + Tr σ − Tr ρ`.
///
/// `D(0‖σ) = Tr σ`, and the value is `+∞` when `supp ρ ⊄ supp σ`.
pub fn relative_entropy(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<ExtendedReal> {
    let tnl = trace_neg_log(rho, sigma)?;
    let tr_rho: f64 = thresholded(rho).sum();
    let offset = -von_neumann_entropy(rho) - eta(tr_rho) + sigma.trace() - tr_rho;
    Ok(match tnl {
        ExtendedReal::Finite(x) => ExtendedReal::finite(x + offset),
        ExtendedReal::PosInfinity => ExtendedReal::PosInfinity,
    })
}

/// `I(A:B) = S(ρ_A) + S(ρ_B) − S(ρ)` on `C^{d_a} ⊗ C^{d_b}`.
pub fn quantum_mutual_information(rho: &PositiveOperator, d_a: usize, d_b: usize) -> Result<f64> {
    let ra = partial_trace_positive(rho, d_a, d_b, Subsystem::A)?;
    let rb = partial_trace_positive(rho, d_a, d_b, Subsystem::B)?;
    Ok(von_neumann_entropy(&ra) + von_neumann_entropy(&rb) - von_neumann_entropy(rho))
}

/// `D(ρ ‖ ρ_A ⊗ ρ_B)`, the relative-entropy form of the mutual information of a state.
pub fn mutual_information_relative(rho: &PositiveOperator, d_a: usize, d_b: usize) -> Result<ExtendedReal> {
    let ra = partial_trace_positive(rho, d_a, d_b, Subsystem::A)?;
    let rb = partial_trace_positive(rho, d_a, d_b, Subsystem::B)?;
    relative_entropy(rho, &tensor_positive(&ra, &rb)?)
}

/// Values `a_k = −Tr ρ ln(σ + k⁻¹ I)` along a schedule of `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderResult {
    pub k_values: Vec<u64>,
    pub a_k: Vec<f64>,
    pub limit_estimate: ExtendedReal,
}

impl LadderResult {
    /// Largest drop `a_{k_i} − a_{k_{i+1}}` (non-positive for a monotone ladder).
    pub fn max_decrease(&self) -> f64 {
        self.a_k.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max).max(0.0)
    }
}

/// `a_k = −Tr ρ ln(σ + k⁻¹ I)`, summed over the full eigensystem of `σ`.
pub fn regularized_log(rho: &PositiveOperator, sigma: &PositiveOperator, k: u64) -> Result<f64> {
    check_dims(rho, sigma)?;
    if k == 0 {
        return Err(Error::InvalidArgument("regularization index k must be positive".into()));
    }
    let sd = sigma.spectrum();
    let weights = sd.expectations(rho.op());
    let inv = 1.0 / k as f64;
    Ok(sd.eigenvalues().iter().zip(&weights).map(|(&s, &w)| -(s.max(0.0) + inv).ln() * w).sum())
}

pub fn regularized_log_ladder(rho: &PositiveOperator, sigma: &PositiveOperator, ks: &[u64]) -> Result<LadderResult> {
    if ks.first() == Some(&0) || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("k schedule must be strictly increasing positive integers".into()));
    }
    let a_k = ks.iter().map(|&k| regularized_log(rho, sigma, k)).collect::<Result<Vec<_>>>()?;
    Ok(LadderResult { k_values: ks.to_vec(), a_k, limit_estimate: trace_neg_log(rho, sigma)? })
}

/// `(S(ρ+σ) − S(ρ) − S(σ), S(ρ) + S(σ) + H({Tr ρ, Tr σ}) − S(ρ+σ))`; both are `≥ 0`.
pub fn subadditivity_slacks(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<(f64, f64)> {
    check_dims(rho, sigma)?;
    let sum = rho.sum(sigma)?;
    let (s, a, b) = (von_neumann_entropy(&sum), von_neumann_entropy(rho), von_neumann_entropy(sigma));
    let h = binary_entropy_extension(rho.trace().max(0.0), sigma.trace().max(0.0))?;
    Ok((s - a - b, a + b + h - s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DensityOperator, C64};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn diag(v: &[f64]) -> PositiveOperator {
        PositiveOperator::from_diagonal(v.to_vec()).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(von_neumann_entropy(&diag(&[1.0, 0.0])), 0.0);
        assert_abs_diff_eq!(von_neumann_entropy(&DensityOperator::maximally_mixed(5)), 5f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(von_neumann_entropy(&diag(&[1.0, 1.0])), 2.0 * LN_2, epsilon = 1e-14);
    }

    #[test]
    fn binary_entropy_values() {
        assert_abs_diff_eq!(binary_entropy_extension(0.5, 0.5).unwrap(), LN_2, epsilon = 1e-15);
        assert_eq!(binary_entropy_extension(0.3, 0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy_extension(0.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy_extension(0.3, 0.7).unwrap(), 0.610864302, epsilon = 1e-9);
        assert!(binary_entropy_extension(-0.1, 0.5).is_err());
    }

    #[test]
    fn trace_neg_log_and_support() {
        let m = DensityOperator::maximally_mixed(2);
        assert_abs_diff_eq!(trace_neg_log(&m, &m).unwrap().to_f64(), LN_2, epsilon = 1e-15);
        let e0 = DensityOperator::basis_state(2, 0);
        let e1 = DensityOperator::basis_state(2, 1);
        assert_eq!(trace_neg_log(&e1, &e0).unwrap(), ExtendedReal::PosInfinity);
        assert_eq!(relative_entropy(&e1, &e0).unwrap(), ExtendedReal::PosInfinity);
    }

    #[test]
    fn relative_entropy_conventions() {
        let s = diag(&[0.3, 0.2]);
        assert_abs_diff_eq!(relative_entropy(&PositiveOperator::zero(2), &s).unwrap().to_f64(), 0.5, epsilon = 1e-15);
        let r = diag(&[0.6, 0.4]);
        assert_abs_diff_eq!(relative_entropy(&r, &r).unwrap().to_f64(), 0.0, epsilon = 1e-15);
        // D(ρ‖2σ) − D(ρ‖σ) = −Tr ρ ln 2 + Tr σ.
        let d1 = relative_entropy(&r, &s).unwrap().to_f64();
        let d2 = relative_entropy(&r, &s.scaled(2.0).unwrap()).unwrap().to_f64();
        assert_abs_diff_eq!(d2 - d1, -LN_2 + 0.5, epsilon = 1e-13);
    }

    #[test]
    fn bell_state_information() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let bell = DensityOperator::pure(&[C64::new(s, 0.0), z, z, C64::new(s, 0.0)]).unwrap();
        assert_abs_diff_eq!(quantum_mutual_information(&bell, 2, 2).unwrap(), 2.0 * LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(mutual_information_relative(&bell, 2, 2).unwrap().to_f64(), 2.0 * LN_2, epsilon = 1e-12);
        let prod = diag(&[0.42, 0.18, 0.28, 0.12]);
        assert_abs_diff_eq!(quantum_mutual_information(&prod, 2, 2).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn ladder_scalar_case() {
        let m = DensityOperator::maximally_mixed(2);
        let l = regularized_log_ladder(&m, &m, &[1, 10, 100]).unwrap();
        for (k, a) in l.k_values.iter().zip(&l.a_k) {
            assert_abs_diff_eq!(*a, -(0.5 + 1.0 / *k as f64).ln(), epsilon = 1e-15);
        }
        assert_eq!(l.max_decrease(), 0.0);
        assert!(regularized_log_ladder(&m, &m, &[3, 3]).is_err());
        let e0 = DensityOperator::basis_state(2, 0);
        let e1 = DensityOperator::basis_state(2, 1);
        let l = regularized_log_ladder(&e1, &e0, &[1, 1000, 1_000_000]).unwrap();
        assert!(l.a_k[2] > 13.0);
        assert_eq!(l.limit_estimate, ExtendedReal::PosInfinity);
    }

    #[test]
    fn subadditivity_saturates_on_orthogonal_supports() {
        let (lo, hi) = subadditivity_slacks(&diag(&[0.5, 0.0]), &diag(&[0.0, 0.5])).unwrap();
        assert_abs_diff_eq!(hi, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lo, LN_2, epsilon = 1e-15);
    }
}
