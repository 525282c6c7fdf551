use std::cmp::Ordering;

use super::{stable_floor, top_multiplicity, OperatorSequence};
use crate::diagnostics::{ResidualSeries, Verdict};
use crate::error::{Error, Result};
use crate::exec::{map_range, try_map_range, Execution};
use crate::operator::{
    commutator_trace_norm, support_projector, HermitianOperator, PositiveOperator, Projector, DEFAULT_GAP_TOL,
    PROJECTOR_TOL,
};

/// Tolerance for the support-covering condition `P^n_{m_max} Q_n = Q_n`.
pub const SUPPORT_COVER_TOL: f64 = 1e-9;
/// Commutator bound `‖[P^n_m, ρ_n]‖₁ ≤ COMMUTATOR_TOL · ‖ρ_n‖₁` for commuting schedules.
pub const COMMUTATOR_TOL: f64 = 1e-12;

/// Double-indexed projectors `P^n_m` for `n = 0..=n_max` and `m = m_0..=m_max`.
#[derive(Clone, Debug)]
pub struct ProjectorSchedule {
    m_0: usize,
    m_max: usize,
    commuting: bool,
    label: String,
    projectors: Vec<Vec<Projector>>,
}

impl ProjectorSchedule {
    /// Builds a schedule from `projectors[n][m − m_0]`.
    pub fn from_parts(
        m_0: usize,
        commuting: bool,
        label: impl Into<String>,
        projectors: Vec<Vec<Projector>>,
    ) -> Result<Self> {
        if m_0 == 0 || projectors.is_empty() || projectors[0].is_empty() {
            return Err(Error::Schedule("empty schedule".into()));
        }
        let width = projectors[0].len();
        if projectors.iter().any(|row| row.len() != width) {
            return Err(Error::Schedule("ragged projector table".into()));
        }
        Ok(Self { m_0, m_max: m_0 + width - 1, commuting, label: label.into(), projectors })
    }

    pub fn m_0(&self) -> usize {
        self.m_0
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn n_max(&self) -> usize {
        self.projectors.len() - 1
    }

    pub fn is_commuting(&self) -> bool {
        self.commuting
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn get(&self, n: usize, m: usize) -> Option<&Projector> {
        if m < self.m_0 {
            return None;
        }
        self.projectors.get(n)?.get(m - self.m_0)
    }

    /// Replaces `P^n_m`; used to plant defects in tests and control scenarios.
    pub fn set(&mut self, n: usize, m: usize, p: Projector) -> Result<()> {
        let slot = m
            .checked_sub(self.m_0)
            .and_then(|i| self.projectors.get_mut(n)?.get_mut(i))
            .ok_or_else(|| Error::Schedule(format!("no slot (n = {n}, m = {m})")))?;
        *slot = p;
        Ok(())
    }
}

/// `P^n_m = P_m`, the coordinate projector onto the first `m` basis vectors.
pub fn fixed_basis_schedule(
    seq: &OperatorSequence,
    m_max: usize,
    n_max: usize,
    exec: Execution,
) -> Result<ProjectorSchedule> {
    let dim = seq.dim();
    let m_max = m_max.min(dim);
    if m_max == 0 {
        return Err(Error::Schedule("m_max must be at least 1".into()));
    }
    let states = seq.window(n_max, exec)?;
    for (n, rho) in states.iter().enumerate() {
        let tau = rho.rank_tolerance();
        let diag: Vec<f64> = (0..dim).map(|i| rho.op().entry(i, i).re).collect();
        let mut mass = 0.0;
        for (m, d) in diag.iter().take(m_max).enumerate() {
            mass += d;
            if mass <= tau {
                return Err(Error::Schedule(format!(
                    "Tr P_m rho_n = {mass:e} is not positive at (n = {n}, m = {})",
                    m + 1
                )));
            }
        }
    }
    let row: Vec<Projector> = (1..=m_max).map(|m| Projector::coordinate(dim, 0..m)).collect();
    ProjectorSchedule::from_parts(1, false, "fixed-basis", vec![row; n_max + 1])
}

/// Geometric auxiliary spectrum `κ·g^j`, `j = 0..len`.
fn auxiliary_spectrum(kappa: f64, len: usize) -> Vec<f64> {
    let g = 1.0 / 3f64.sqrt();
    (0..len).map(|j| kappa * g.powi(j as i32)).collect()
}

/// For each leading count `m̂` of the merged spectrum of `ρ ⊕ σ`, how many of the
/// top entries belong to `ρ` (zero eigenvalues of `ρ` sort after all of `σ`).
fn rho_counts(rho_eigs: &[f64], tau: f64, aux: &[f64]) -> Vec<usize> {
    let mut merged: Vec<(f64, bool)> = rho_eigs
        .iter()
        .map(|&l| (if l > tau { l } else { 0.0 }, true))
        .chain(aux.iter().map(|&s| (s, false)))
        .collect();
    merged.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(b.1.cmp(&a.1)));
    let mut counts = Vec::with_capacity(merged.len() + 1);
    let mut k = 0;
    counts.push(0);
    for (_, is_rho) in merged {
        if is_rho {
            k += 1;
        }
        counts.push(k);
    }
    counts
}

/// Commuting schedule: `P^n_m` is a spectral projector of `ρ_n`.
///
/// When every `ρ_n` in the window has full rank, `P^n_m` projects onto the top
/// `m̂` eigenvectors of `ρ_n`, with `m̂` the largest stable index of `ρ_0` not
/// above `m`. Otherwise the construction runs on `ρ_n ⊕ σ` for a fixed
/// auxiliary diagonal `σ` with `‖σ‖ < min_n ‖ρ_n‖` and spectrum disjoint from
/// that of `ρ_0`, and the projectors are restricted back to the original space.
pub fn commuting_schedule(
    seq: &OperatorSequence,
    m_max: usize,
    n_max: usize,
    exec: Execution,
) -> Result<ProjectorSchedule> {
    let dim = seq.dim();
    let states = seq.window(n_max, exec)?;
    if let Some(n) = states.iter().position(|x| x.is_zero()) {
        return Err(Error::Schedule(format!("rho_{n} is zero")));
    }
    let min_rank = states.iter().map(|x| x.rank(None)).min().unwrap_or(dim);
    let aux_len = dim - min_rank;
    let limit = &states[0];
    let lam_max = limit.lambda_max();
    let delta = DEFAULT_GAP_TOL * lam_max;
    let min_norm = states.iter().map(|x| x.lambda_max()).fold(f64::INFINITY, f64::min);

    let aux = if aux_len == 0 {
        Vec::new()
    } else {
        let base = (2f64.sqrt() - 1.0) * min_norm;
        let mut found = None;
        for attempt in 0..64 {
            let frac = (attempt as f64 * 2f64.sqrt()).fract();
            let kappa = base * (1.0 - 0.25 * frac);
            let cand = auxiliary_spectrum(kappa, aux_len);
            let tau = limit.rank_tolerance();
            let clash = cand.iter().any(|&s| {
                limit.eigenvalues().iter().any(|&l| l > tau && (l - s).abs() <= 10.0 * delta.max(f64::MIN_POSITIVE))
            });
            if !clash {
                found = Some(cand);
                break;
            }
        }
        found.ok_or_else(|| Error::Schedule("could not separate the auxiliary spectrum from rho_0".into()))?
    };

    // Stable indices of ρ_0 ⊕ σ.
    let ext_dim = dim + aux_len;
    let mut ext_diag: Vec<f64> =
        limit.eigenvalues().iter().map(|&l| if l > limit.rank_tolerance() { l } else { 0.0 }).collect();
    ext_diag.extend_from_slice(&aux);
    let extended = PositiveOperator::from_diagonal(ext_diag)?;
    let m_max = m_max.min(ext_dim);
    let m_0 = top_multiplicity(&extended).max(1);
    if m_0 > m_max {
        return Err(Error::Schedule(format!(
            "m_max = {m_max} is below the top multiplicity {m_0} of rho_0; use a larger m_max"
        )));
    }
    let m_hat: Vec<usize> = (m_0..=m_max).map(|m| stable_floor(&extended, m).expect("m_0 is stable")).collect();

    let projectors = map_range(exec, states.len(), |n| {
        let rho = &states[n];
        let counts = rho_counts(rho.eigenvalues(), rho.rank_tolerance(), &aux);
        m_hat.iter().map(|&mh| Projector::spectral(rho.spectrum(), 0..counts[mh])).collect::<Vec<_>>()
    });
    let label = if aux_len == 0 { "commuting" } else { "commuting(direct-sum)" };
    let mut schedule = ProjectorSchedule::from_parts(m_0, true, label, projectors)?;
    schedule.m_max = m_max;
    Ok(schedule)
}

fn max_column_deviation(
    p: &HermitianOperator,
    p0: &HermitianOperator,
    basis: Option<&crate::operator::CMatrix>,
) -> Result<f64> {
    let diff = p.sub(p0)?;
    // A permutation basis (passed as `None`) has unit vectors as columns.
    let Some(basis) = basis else {
        if let Some(d) = diff.diagonal() {
            return Ok(d.iter().map(|x| x.abs()).fold(0.0, f64::max));
        }
        let d = diff.dense();
        return Ok(d.column_iter().map(|c| c.norm()).fold(0.0, f64::max));
    };
    let prod = diff.dense().as_ref() * basis;
    Ok(prod.column_iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// Checks the five consistency conditions on the window `n ≤ n_max`, `m_0 ≤ m ≤ m_max`:
/// rank `P^n_m ≤ m`, `Tr P^n_m ρ_n > 0`, `P^n_m ≤ P^n_{m+1}`, `P^n_{m_max}` covering
/// `supp ρ_n`, and the decay of `max_v ‖(P^n_m − P^0_m)v‖` over the eigenbasis of `ρ_0`
/// as a trend. Commuting schedules also get the commutator bound.
pub fn validate_schedule(
    schedule: &ProjectorSchedule,
    seq: &OperatorSequence,
    n_max: usize,
    m_max: usize,
    exec: Execution,
) -> Result<Verdict> {
    let n_max = n_max.min(schedule.n_max());
    let m_max = m_max.min(schedule.m_max());
    let m_0 = schedule.m_0();
    let mut b = Verdict::builder("validate_schedule");
    b.note(format!("schedule {} on window n <= {n_max}, {m_0} <= m <= {m_max}", schedule.label()));
    if m_0 > m_max {
        b.hypothesis("window", false, (m_max as f64) - (m_0 as f64), "window is empty");
        return Ok(b.finish());
    }
    let states = seq.window(n_max, exec)?;
    let ms: Vec<usize> = (m_0..=m_max).collect();

    struct Row {
        rank: Option<(usize, usize, f64)>,
        mass: (f64, usize),
        nested: Option<(usize, f64)>,
        cover: f64,
        commutator: Option<(usize, f64)>,
    }

    let rows = try_map_range(exec, n_max + 1, |n| -> Result<Row> {
        let rho = &states[n];
        let mut rank = None;
        let mut mass = (f64::INFINITY, m_0);
        let mut nested = None;
        let mut commutator = None;
        for &m in &ms {
            let p = schedule.get(n, m).expect("inside window");
            let idem = p.idempotency_error();
            let true_rank = p.op().trace();
            if (p.rank() > m || true_rank > m as f64 + 1e-8 || idem > PROJECTOR_TOL) && rank.is_none() {
                rank = Some((m, p.rank(), idem));
            }
            let w = rho.op().sandwich(p.op())?.trace();
            let margin = w - rho.rank_tolerance();
            if margin < mass.0 {
                mass = (margin, m);
            }
            if m < m_max {
                let q = schedule.get(n, m + 1).expect("inside window");
                let e = q.containment_error(p.op())?;
                if e > PROJECTOR_TOL && nested.is_none() {
                    nested = Some((m, e));
                }
            }
            if schedule.is_commuting() {
                let c = commutator_trace_norm(p.op(), rho.op())?;
                let bound = COMMUTATOR_TOL * rho.trace().max(f64::MIN_POSITIVE);
                if c > bound && commutator.is_none_or(|(_, old)| c > old) {
                    commutator = Some((m, c));
                }
            }
        }
        let support = support_projector(rho, None);
        let top = schedule.get(n, m_max).expect("inside window");
        let cover = top.containment_error(support.op())?;
        Ok(Row { rank, mass, nested, cover, commutator })
    })?;

    let first = |f: &dyn Fn(&Row) -> Option<String>| rows.iter().enumerate().find_map(|(n, r)| f(r).map(|s| (n, s)));

    match first(&|r: &Row| r.rank.map(|(m, k, e)| format!("m = {m}: rank {k}, idempotency error {e:.2e}"))) {
        Some((n, s)) => b.inequality("rank P^n_m <= m", false, -1.0, format!("n = {n}, {s}")),
        None => b.inequality("rank P^n_m <= m", true, 0.0, "all projectors idempotent with rank <= m"),
    };
    let (mass_n, (mass_margin, mass_m)) = rows
        .iter()
        .enumerate()
        .map(|(n, r)| (n, r.mass))
        .min_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap_or(Ordering::Equal))
        .expect("non-empty window");
    b.inequality(
        "Tr P^n_m rho_n > 0",
        mass_margin > 0.0,
        mass_margin,
        format!("smallest margin at (n = {mass_n}, m = {mass_m})"),
    );
    match first(&|r: &Row| r.nested.map(|(m, e)| format!("m = {m}: |P_(m+1) P_m - P_m| = {e:.2e}"))) {
        Some((n, s)) => b.inequality("P^n_m <= P^n_(m+1)", false, -1.0, format!("n = {n}, {s}")),
        None => b.inequality("P^n_m <= P^n_(m+1)", true, 0.0, "nested on the whole window"),
    };
    let (cover_n, cover) = rows
        .iter()
        .enumerate()
        .map(|(n, r)| (n, r.cover))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
        .expect("non-empty window");
    b.inequality(
        "P^n_(m_max) covers supp rho_n",
        cover <= SUPPORT_COVER_TOL,
        SUPPORT_COVER_TOL - cover,
        format!("largest |P Q - Q| = {cover:.2e} at n = {cover_n}"),
    );
    if schedule.is_commuting() {
        match first(&|r: &Row| r.commutator.map(|(m, c)| format!("m = {m}: |[P, rho]|_1 = {c:.2e}"))) {
            Some((n, s)) => b.inequality("[P^n_m, rho_n] = 0", false, -1.0, format!("n = {n}, {s}")),
            None => b.inequality("[P^n_m, rho_n] = 0", true, 0.0, format!("all within {COMMUTATOR_TOL:e}·Tr rho_n")),
        };
    }

    if n_max >= 2 {
        let basis = {
            let sd = states[0].spectrum();
            let d = seq.dim();
            (!sd.is_permutation()).then(|| crate::operator::CMatrix::from_fn(d, d, |r, c| sd.vector(c)[r]))
        };
        let series = try_map_range(exec, ms.len(), |i| -> Result<ResidualSeries> {
            let m = ms[i];
            let p0 = schedule.get(0, m).expect("inside window").op();
            let values = (1..=n_max)
                .map(|n| max_column_deviation(schedule.get(n, m).expect("inside window").op(), p0, basis.as_ref()))
                .collect::<Result<Vec<_>>>()?;
            Ok(ResidualSeries::new(format!("P^n_{m} -> P^0_{m}"), 1, values))
        })?;
        for s in series {
            b.hypothesis_series(s);
        }
    } else {
        b.note("window too short for a convergence trend (n_max < 2)");
    }
    Ok(b.finish())
}
