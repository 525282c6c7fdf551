use serde::{Deserialize, Serialize};

use super::family::FunctionalFamily;
use super::real::serde_real;
use crate::dini::{normalize, ApproximationScheme, OperatorSequence};
use crate::error::Result;
use crate::exec::{try_map_range, Execution};
use crate::extended::ExtendedReal;

/// Slack for the per-cell lower bound `f_n(ρ_n) ≥ μ f_n([Ψ_m ρ_n]) − a_f(1 − μ)`.
pub const CELL_BOUND_TOL: f64 = 1e-8;
/// Slack for `μ_n^m ≤ Tr ρ_n` and monotonicity of `μ_n^m` in `m`.
pub const MASS_TOL: f64 = 1e-12;

/// One `(n, m)` cell. Infinite values serialize as `"+inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub n: usize,
    pub m: usize,
    /// `μ_n^m = Tr Ψ_m(ρ_n)`.
    #[serde(with = "serde_real")]
    pub mu: f64,
    /// `f_n([ρ_n]) − f_n([Ψ_m(ρ_n)])`.
    #[serde(with = "serde_real")]
    pub gap: f64,
    /// `(Tr Δ_m(ρ_n) / Tr ρ_n) · f_n([Δ_m(ρ_n)])`.
    #[serde(with = "serde_real")]
    pub tail: f64,
    /// `f_n([ρ_n]) − μ̂ f_n([Ψ_m ρ_n]) + a_f(1 − μ̂)` with `μ̂ = μ / Tr ρ_n`.
    #[serde(with = "serde_real")]
    pub cell_bound_slack: f64,
    pub flags: Vec<String>,
}

/// Per-`m` reductions over `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridColumn {
    pub m: usize,
    #[serde(with = "serde_real")]
    pub sup_gap: f64,
    #[serde(with = "serde_real")]
    pub sup_tail: f64,
    /// `sup_n (1 − μ_n^m / Tr ρ_n)`.
    #[serde(with = "serde_real")]
    pub sup_mass_deficit: f64,
}

/// Truncation diagnostics over `0 ≤ n ≤ n_max`, `m_lo ≤ m ≤ m_hi`, cells in row-major `(n, m)` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsGrid {
    pub family: String,
    pub sequence: String,
    pub scheme: String,
    pub n_range: (usize, usize),
    pub m_range: (usize, usize),
    pub cells: Vec<GridCell>,
    pub columns: Vec<GridColumn>,
    /// `μ_n^m ∈ [0, Tr ρ_n]` and non-decreasing in `m` on every row.
    pub mass_sane: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl DiagnosticsGrid {
    pub fn cell(&self, n: usize, m: usize) -> Option<&GridCell> {
        if n < self.n_range.0 || n > self.n_range.1 || m < self.m_range.0 || m > self.m_range.1 {
            return None;
        }
        let width = self.m_range.1 - self.m_range.0 + 1;
        self.cells.get((n - self.n_range.0) * width + (m - self.m_range.0))
    }

    /// Smallest cell-bound slack over cells with finite values, and where it occurs.
    pub fn min_cell_bound_slack(&self) -> Option<(f64, usize, usize)> {
        self.cells
            .iter()
            .filter(|c| !c.cell_bound_slack.is_nan())
            .map(|c| (c.cell_bound_slack, c.n, c.m))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    pub fn column(&self, m: usize) -> Option<&GridColumn> {
        self.columns.iter().find(|c| c.m == m)
    }
}

fn scheme_name(scheme: &ApproximationScheme) -> String {
    match scheme {
        ApproximationScheme::SpectralTruncation => "spectral-truncation".into(),
        ApproximationScheme::DominatedTruncation { c, dominated } => {
            format!("dominated-truncation(c = {c}, {})", dominated.label())
        }
    }
}

/// Evaluates `μ`, gap, tail and the cell-bound slack on every cell of the window.
/// Cells start at `max(m_lo, m_*)`; infinite values are flagged, never fatal.
pub fn approximation_gap_grid(
    family: &FunctionalFamily,
    seq: &OperatorSequence,
    scheme: &ApproximationScheme,
    n_max: usize,
    m_range: (usize, usize),
    exec: Execution,
) -> Result<DiagnosticsGrid> {
    let bound = family.bind(n_max, exec)?;
    let states = seq.window(n_max, exec)?;
    let prepared = scheme.prepare(&states, exec)?;
    let m_lo = m_range.0.max(prepared.m_star());
    let m_hi = m_range.1.max(m_lo);
    let a_f = family.a().clone();
    let mut notes = Vec::new();
    if !family.is_nonnegative() {
        notes.push(format!("family {} is not nonnegative; cell-bound slack is informational", family.name()));
    }

    let rows = try_map_range(exec, n_max + 1, |n| -> Result<Vec<GridCell>> {
        let rho = &states[n];
        let total = rho.trace();
        let full = bound.value_normalized(n, rho)?;
        (m_lo..=m_hi)
            .map(|m| {
                let t = prepared.apply(n, rho, m)?;
                let mut flags = Vec::new();
                if t.ambiguous {
                    flags.push("ambiguous".to_string());
                }
                let head = match normalize(&t.head) {
                    Some(h) => bound.value(n, &h)?,
                    None => {
                        flags.push("empty-head".to_string());
                        ExtendedReal::ZERO
                    }
                };
                let tail_state = normalize(&t.tail);
                let tail_mass = if total > 0.0 { (total - t.mass).max(0.0) / total } else { 0.0 };
                let tail = match tail_state {
                    Some(s) => bound.value(n, &s)?.scale(tail_mass),
                    None => ExtendedReal::ZERO,
                };
                let gap = match (full, head) {
                    (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a - b,
                    (ExtendedReal::PosInfinity, ExtendedReal::Finite(_)) => f64::INFINITY,
                    (ExtendedReal::Finite(_), ExtendedReal::PosInfinity) => f64::NEG_INFINITY,
                    _ => f64::NAN,
                };
                if full.is_infinite() || head.is_infinite() {
                    flags.push("infinite-value".to_string());
                }
                if tail.is_infinite() {
                    flags.push("infinite-tail".to_string());
                }
                let mu_rel = if total > 0.0 { (t.mass / total).clamp(0.0, 1.0) } else { 1.0 };
                let cell_bound_slack = match (full, head) {
                    (ExtendedReal::PosInfinity, _) => f64::NAN,
                    (ExtendedReal::Finite(f), ExtendedReal::Finite(h)) => f - mu_rel * h + a_f.eval(1.0 - mu_rel),
                    (ExtendedReal::Finite(_), ExtendedReal::PosInfinity) if mu_rel == 0.0 => f64::NAN,
                    (ExtendedReal::Finite(_), ExtendedReal::PosInfinity) => f64::NEG_INFINITY,
                };
                Ok(GridCell { n, m, mu: t.mass, gap, tail: tail.to_f64(), cell_bound_slack, flags })
            })
            .collect()
    })?;

    let mut mass_sane = true;
    for (n, row) in rows.iter().enumerate() {
        let total = states[n].trace();
        let mut prev = f64::NEG_INFINITY;
        for c in row {
            if c.mu < -MASS_TOL || c.mu > total + MASS_TOL || c.mu < prev - MASS_TOL {
                mass_sane = false;
            }
            prev = c.mu;
        }
    }
    let columns = (m_lo..=m_hi)
        .enumerate()
        .map(|(j, m)| {
            let col = || rows.iter().map(move |r| &r[j]);
            GridColumn {
                m,
                sup_gap: col().map(|c| c.gap.abs()).fold(0.0, nan_max),
                sup_tail: col().map(|c| c.tail).fold(0.0, nan_max),
                sup_mass_deficit: col()
                    .map(|c| {
                        let t = states[c.n].trace();
                        if t > 0.0 {
                            1.0 - c.mu / t
                        } else {
                            0.0
                        }
                    })
                    .fold(0.0, nan_max),
            }
        })
        .collect();

    Ok(DiagnosticsGrid {
        family: family.name().to_string(),
        sequence: seq.label().to_string(),
        scheme: scheme_name(scheme),
        n_range: (0, n_max),
        m_range: (m_lo, m_hi),
        cells: rows.into_iter().flatten().collect(),
        columns,
        mass_sane,
        notes,
    })
}

fn nan_max(a: f64, b: f64) -> f64 {
    if b.is_nan() {
        a
    } else {
        a.max(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::PositiveOperator;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_maximally_mixed_closes_at_full_rank() {
        let seq = OperatorSequence::constant(PositiveOperator::from_diagonal(vec![0.25; 4]).unwrap(), "mm4");
        let g = approximation_gap_grid(
            &FunctionalFamily::entropy(),
            &seq,
            &ApproximationScheme::SpectralTruncation,
            2,
            (1, 4),
            Execution::Sequential,
        )
        .unwrap();
        assert!(g.mass_sane);
        assert_eq!(g.cell(1, 4).unwrap().gap, 0.0);
        assert_abs_diff_eq!(g.cell(1, 1).unwrap().gap, 4f64.ln(), epsilon = 1e-14);
        assert!(g.cell(1, 2).unwrap().flags.contains(&"ambiguous".to_string()));
        assert!(g.min_cell_bound_slack().unwrap().0 >= -CELL_BOUND_TOL);
        // Tail at m = 1: mass 3/4 times ln 3.
        assert_abs_diff_eq!(g.column(1).unwrap().sup_tail, 0.75 * 3f64.ln(), epsilon = 1e-14);
    }
}
