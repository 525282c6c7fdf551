//! Normalization, spectral truncation, stable index sets, the dominated
//! truncation map and consistent projector schedules.

mod schedule;
mod sequence;

pub use schedule::{commuting_schedule, fixed_basis_schedule, validate_schedule, ProjectorSchedule};
pub use sequence::OperatorSequence;

use crate::entropy::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::operator::{DensityOperator, PositiveOperator, DEFAULT_GAP_TOL};

/// `[σ] = σ / Tr σ`, or `None` for (numerically) zero `σ`.
pub fn normalize(sigma: &PositiveOperator) -> Option<DensityOperator> {
    let t = sigma.trace();
    if sigma.is_zero() || t <= sigma.rank_tolerance() {
        return None;
    }
    let mut scaled = sigma.scaled(1.0 / t).ok()?;
    // Absorb rounding so the result passes the unit-trace check.
    let drift = scaled.trace() - 1.0;
    if drift.abs() > 1e-12 {
        scaled = scaled.scaled(1.0 / scaled.trace()).ok()?;
    }
    DensityOperator::new(scaled).ok()
}

/// Head `Ψ_m(ρ)`, tail `ρ − Ψ_m(ρ)` and mass `Tr Ψ_m(ρ)` of a truncation.
#[derive(Clone, Debug)]
pub struct TruncationResult {
    pub head: PositiveOperator,
    pub tail: PositiveOperator,
    pub mass: f64,
    /// Set when `m` splits a group of equal eigenvalues, so the head depends on
    /// the eigenvector tie-break.
    pub ambiguous: bool,
}

/// `Ψ_m(ρ) = P_m^ρ ρ`: keeps the `m` largest eigenvalues of `ρ`.
pub fn spectral_truncation(rho: &PositiveOperator, m: usize) -> Result<TruncationResult> {
    if m == 0 {
        return Err(Error::InvalidArgument("truncation rank m must be at least 1".into()));
    }
    let rank = rho.rank(None);
    if m >= rank {
        return Ok(TruncationResult {
            head: rho.clone(),
            tail: PositiveOperator::zero(rho.dim()),
            mass: rho.trace(),
            ambiguous: false,
        });
    }
    let sd = rho.spectrum();
    let ev = sd.eigenvalues();
    let head_vals: Vec<f64> = ev.iter().enumerate().map(|(i, &l)| if i < m { l } else { 0.0 }).collect();
    let tail_vals: Vec<f64> = ev.iter().enumerate().map(|(i, &l)| if i < m { 0.0 } else { l }).collect();
    let ambiguous = sd.groups().iter().any(|g| g.start < m && m < g.end);
    let mass = head_vals.iter().sum();
    Ok(TruncationResult {
        head: PositiveOperator::from_spectrum(sd.with_eigenvalues(&head_vals, None))?,
        tail: PositiveOperator::from_spectrum(sd.with_eigenvalues(&tail_vals, None))?,
        mass,
        ambiguous,
    })
}

/// `S([Ψ_m(ρ)])`, zero for a zero head.
pub fn truncated_state_entropy(rho: &PositiveOperator, m: usize) -> Result<f64> {
    let t = spectral_truncation(rho, m)?;
    Ok(normalize(&t.head).map_or(0.0, |h| von_neumann_entropy(&h)))
}

/// Whether `S([Ψ_m(ρ)]) ≤ ln m + 1e-10`.
pub fn truncated_state_entropy_bound(rho: &PositiveOperator, m: usize) -> Result<bool> {
    Ok(truncated_state_entropy(rho, m)? <= (m as f64).ln() + 1e-10)
}

/// Eigenvalue `λ_m` (1-based), zero beyond the dimension.
fn lambda(ev: &[f64], m: usize) -> f64 {
    ev.get(m - 1).copied().unwrap_or(0.0).max(0.0)
}

/// `{m ≤ m_max : λ_{m+1} < λ_m − δ·λ_max or λ_m ≤ τ_rank}`; `gap_tol` is the
/// relative gap `δ` (default `1e-9`).
pub fn stable_index_set(rho: &PositiveOperator, m_max: usize, gap_tol: Option<f64>) -> Vec<usize> {
    let ev = rho.eigenvalues();
    let delta = gap_tol.unwrap_or(DEFAULT_GAP_TOL) * rho.lambda_max();
    let tau = rho.rank_tolerance();
    (1..=m_max)
        .filter(|&m| {
            let (a, b) = (lambda(ev, m), lambda(ev, m + 1));
            b < a - delta || a <= tau
        })
        .collect()
}

/// Largest stable index of `rho` not exceeding `m`.
pub fn stable_floor(rho: &PositiveOperator, m: usize) -> Option<usize> {
    stable_index_set(rho, m, None).last().copied()
}

/// Multiplicity of the top eigenvalue (0 for the zero operator).
pub fn top_multiplicity(rho: &PositiveOperator) -> usize {
    if rho.is_zero() {
        0
    } else {
        rho.spectrum().top_multiplicity()
    }
}

/// The map `τ ↦ c·Ψ_{m̂(ρ_0)}(ρ) + Ψ_{m̂(σ_0)}(σ)` with `σ = τ − cρ`, where `m̂(x)`
/// is the largest stable index of the limit `x` not above `m`.
pub fn dominated_truncation(
    tau: &PositiveOperator,
    rho: &PositiveOperator,
    c: f64,
    m: usize,
    rho_limit: &PositiveOperator,
    sigma_limit: &PositiveOperator,
) -> Result<TruncationResult> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("domination constant c = {c} must be positive")));
    }
    let m_star = top_multiplicity(rho_limit).max(top_multiplicity(sigma_limit));
    if m < m_star {
        return Err(Error::BelowStableIndex { m, m_star });
    }
    let c_rho = rho.scaled(c)?;
    let sigma = tau.checked_sub(&c_rho)?;
    let part = |x: &PositiveOperator, limit: &PositiveOperator| -> Result<TruncationResult> {
        match stable_floor(limit, m) {
            Some(mh) => spectral_truncation(x, mh),
            None => Ok(TruncationResult {
                head: PositiveOperator::zero(x.dim()),
                tail: x.clone(),
                mass: 0.0,
                ambiguous: false,
            }),
        }
    };
    let r = part(rho, rho_limit)?;
    let s = part(&sigma, sigma_limit)?;
    let head = r.head.scaled(c)?.sum(&s.head)?;
    let tail = r.tail.scaled(c)?.sum(&s.tail)?;
    let mass = c * r.mass + s.mass;
    Ok(TruncationResult { head, tail, mass, ambiguous: r.ambiguous || s.ambiguous })
}

/// The approximating maps `Ψ_m` applied to a sequence.
#[derive(Clone, Debug)]
pub enum ApproximationScheme {
    SpectralTruncation,
    /// Truncation of `τ_n` split along `τ_n = c·ρ_n + σ_n`.
    DominatedTruncation {
        c: f64,
        dominated: OperatorSequence,
    },
}

/// A scheme bound to a window of the approximated sequence, with limits and
/// dominated members materialized.
#[derive(Clone, Debug)]
pub struct PreparedScheme {
    scheme: ApproximationScheme,
    dominated: Vec<PositiveOperator>,
    rho_limit: Option<PositiveOperator>,
    sigma_limit: Option<PositiveOperator>,
    m_star: usize,
}

impl ApproximationScheme {
    /// Materializes the dominated members for `n = 0..=n_max` and checks
    /// `c·ρ_n ≤ τ_n` on the window.
    pub fn prepare(&self, taus: &[PositiveOperator], exec: Execution) -> Result<PreparedScheme> {
        match self {
            ApproximationScheme::SpectralTruncation => Ok(PreparedScheme {
                scheme: self.clone(),
                dominated: Vec::new(),
                rho_limit: None,
                sigma_limit: None,
                m_star: 1,
            }),
            ApproximationScheme::DominatedTruncation { c, dominated } => {
                let rhos = try_map_range(exec, taus.len(), |n| dominated.get(n))?;
                let sigmas = try_map_range(exec, taus.len(), |n| {
                    let c_rho = rhos[n].scaled(*c)?;
                    taus[n].checked_sub(&c_rho).map_err(|e| domination_error(n, *c, e))
                })?;
                let rho_limit = rhos[0].clone();
                let sigma_limit = sigmas[0].clone();
                let m_star = top_multiplicity(&rho_limit).max(top_multiplicity(&sigma_limit)).max(1);
                Ok(PreparedScheme {
                    scheme: self.clone(),
                    dominated: rhos,
                    rho_limit: Some(rho_limit),
                    sigma_limit: Some(sigma_limit),
                    m_star,
                })
            }
        }
    }
}

pub(crate) fn domination_error(n: usize, c: f64, e: Error) -> Error {
    match e {
        Error::NotPositive { min_eigenvalue, .. } => {
            Error::Domination { n, inequality: format!("{c}·rho_n <= tau_n"), min_eigenvalue }
        }
        other => other,
    }
}

impl PreparedScheme {
    /// Smallest `m` for which `Ψ_m` is defined (`m_*`).
    pub fn m_star(&self) -> usize {
        self.m_star
    }

    /// `Ψ_m` applied to member `n`, which must be `x`.
    pub fn apply(&self, n: usize, x: &PositiveOperator, m: usize) -> Result<TruncationResult> {
        match &self.scheme {
            ApproximationScheme::SpectralTruncation => spectral_truncation(x, m),
            ApproximationScheme::DominatedTruncation { c, .. } => {
                let rho = self
                    .dominated
                    .get(n)
                    .ok_or_else(|| Error::InvalidArgument(format!("index {n} outside the prepared window")))?;
                dominated_truncation(
                    x,
                    rho,
                    *c,
                    m,
                    self.rho_limit.as_ref().expect("dominated scheme"),
                    self.sigma_limit.as_ref().expect("dominated scheme"),
                )
                .map_err(|e| domination_error(n, *c, e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> PositiveOperator {
        PositiveOperator::from_diagonal(v.to_vec()).unwrap()
    }

    #[test]
    fn normalize_cases() {
        let n = normalize(&diag(&[1.0, 1.0])).unwrap();
        assert_eq!(n.op().diagonal(), Some(&[0.5, 0.5][..]));
        assert!(normalize(&PositiveOperator::zero(3)).is_none());
    }

    #[test]
    fn truncation_of_diagonal_state() {
        let t = spectral_truncation(&diag(&[0.5, 0.3, 0.2]), 1).unwrap();
        assert_eq!(t.head.op().diagonal(), Some(&[0.5, 0.0, 0.0][..]));
        assert_abs_diff_eq!(t.mass, 0.5);
        assert!(!t.ambiguous);
        let full = spectral_truncation(&diag(&[0.5, 0.5, 0.0]), 2).unwrap();
        assert_abs_diff_eq!(full.mass, 1.0);
        assert!(full.tail.is_zero());
        assert!(spectral_truncation(&diag(&[0.4, 0.4, 0.2]), 1).unwrap().ambiguous);
        assert!(spectral_truncation(&diag(&[1.0]), 0).is_err());
    }

    #[test]
    fn stable_sets() {
        assert_eq!(stable_index_set(&diag(&[0.5, 0.3, 0.2]), 3, None), vec![1, 2, 3]);
        assert_eq!(stable_index_set(&diag(&[0.25; 4]), 4, None), vec![4]);
        assert_eq!(stable_index_set(&diag(&[0.4, 0.25, 0.25, 0.1]), 4, None), vec![1, 3, 4]);
        assert_eq!(stable_floor(&diag(&[0.4, 0.25, 0.25, 0.1]), 2), Some(1));
    }

    #[test]
    fn truncated_entropy_saturates_on_uniform_spectrum() {
        let rho = DensityOperator::maximally_mixed(8);
        assert_abs_diff_eq!(truncated_state_entropy(&rho, 4).unwrap(), 4f64.ln(), epsilon = 1e-14);
        assert!(truncated_state_entropy_bound(&rho, 4).unwrap());
    }

    #[test]
    fn dominated_truncation_splits_disjoint_parts() {
        let rho = diag(&[0.6, 0.4, 0.0, 0.0]);
        let sigma = diag(&[0.0, 0.0, 0.3, 0.1]);
        let c = 0.5;
        let tau = rho.scaled(c).unwrap().sum(&sigma).unwrap();
        let t = dominated_truncation(&tau, &rho, c, 1, &rho, &sigma).unwrap();
        assert_eq!(t.head.op().diagonal(), Some(&[0.3, 0.0, 0.3, 0.0][..]));
        let t = dominated_truncation(&tau, &rho, c, 4, &rho, &sigma).unwrap();
        assert!(t.tail.op().max_abs() < 1e-15);
        assert!(matches!(dominated_truncation(&rho, &tau, 1.0, 1, &rho, &sigma), Err(Error::NotPositive { .. })));
        let flat = diag(&[0.5, 0.5, 0.0, 0.0]);
        assert!(matches!(
            dominated_truncation(&flat, &flat, 1.0, 1, &flat, &PositiveOperator::zero(4)),
            Err(Error::BelowStableIndex { m: 1, m_star: 2 })
        ));
    }
}
