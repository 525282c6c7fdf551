use super::dct::nontrivial_stable_indices;
use super::{fold_worst, record_min_slack, require_finite, residual_series, window_values};
use crate::diagnostics::family::{FamilyKind, FunctionalFamily};
use crate::diagnostics::trend::ResidualSeries;
use crate::diagnostics::verdict::{Signal, Status, Verdict};
use crate::dini::{
    normalize, spectral_truncation, stable_index_set, validate_schedule, OperatorSequence, ProjectorSchedule,
};
use crate::entropy::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::extended::ExtendedReal;
use crate::operator::PositiveOperator;

/// `p_n`, repeating the last entry beyond the list.
pub(crate) fn weight(p_seq: &[f64], n: usize) -> f64 {
    p_seq[n.min(p_seq.len() - 1)]
}

pub(crate) fn check_weights(p_seq: &[f64]) -> Result<()> {
    if p_seq.is_empty() {
        return Err(Error::InvalidArgument("weight sequence p_n is empty".into()));
    }
    if let Some(p) = p_seq.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("weight {p} outside [0, 1]")));
    }
    Ok(())
}

/// `p·x + (1−p)·y`.
fn combine(x: &PositiveOperator, y: &PositiveOperator, p: f64) -> Result<PositiveOperator> {
    PositiveOperator::mix(y, x, p)
}

/// Continuity under convex mixtures: if `f_n(ρ_n) → f_0(ρ_0)` and
/// `f_n(σ_n) → f_0(σ_0)`, then `f_n(p_nρ_n + p̄_nσ_n)` is expected to converge.
///
/// The condition on truncated mixtures is checked for up to two of the largest
/// common stable indices of `ρ_0` and `σ_0` in the window, preferring indices where
/// the truncation is non-trivial. Only a non-empty common stable set is required.
pub fn check_convex_mixture(
    f: &FunctionalFamily,
    rho_seq: &OperatorSequence,
    sigma_seq: &OperatorSequence,
    p_seq: &[f64],
    n_max: usize,
    m_max: usize,
    exec: Execution,
) -> Result<Verdict> {
    check_weights(p_seq)?;
    let mut b = Verdict::builder("check_convex_mixture");
    b.note(format!("f = {}, rho = {}, sigma = {}", f.name(), rho_seq.label(), sigma_seq.label()));
    let fb = f.bind(n_max, exec)?;
    let rhos = rho_seq.window(n_max, exec)?;
    let sigmas = sigma_seq.window(n_max, exec)?;
    let fr = window_values(&fb, &rhos, exec)?;
    let fs = window_values(&fb, &sigmas, exec)?;
    require_finite(&mut b, "f_0(rho_0)", fr[0]);
    require_finite(&mut b, "f_0(sigma_0)", fs[0]);
    let mixes = try_map_range(exec, n_max + 1, |n| combine(&rhos[n], &sigmas[n], weight(p_seq, n)))?;
    let fm = window_values(&fb, &mixes, exec)?;

    let m_max = m_max.min(rho_seq.dim()).max(1);
    let sr = stable_index_set(&rhos[0], m_max, None);
    let ss = stable_index_set(&sigmas[0], m_max, None);
    let common: Vec<usize> = sr.iter().copied().filter(|m| ss.contains(m)).collect();
    b.hypothesis(
        "M_rho0 and M_sigma0 intersect in the window",
        !common.is_empty(),
        common.len() as f64,
        format!("common stable indices {common:?}"),
    );
    let mut chosen: Vec<usize> = {
        let r = nontrivial_stable_indices(&rhos[0], m_max, usize::MAX);
        let s = nontrivial_stable_indices(&sigmas[0], m_max, usize::MAX);
        let nontrivial = |m: &usize| r.contains(m) || s.contains(m);
        common.iter().copied().filter(nontrivial).collect()
    };
    if chosen.is_empty() {
        chosen.extend(common.last());
    }
    let keep = chosen.len().saturating_sub(2);
    chosen.drain(..keep);

    if n_max >= 1 {
        b.hypothesis_series(residual_series("|f_n(rho_n) - f_0(rho_0)|", &fr));
        b.hypothesis_series(residual_series("|f_n(sigma_n) - f_0(sigma_0)|", &fs));
        for &m in &chosen {
            let vals = try_map_range(exec, n_max + 1, |n| -> Result<ExtendedReal> {
                let hr = normalize(&spectral_truncation(&rhos[n], m)?.head);
                let hs = normalize(&spectral_truncation(&sigmas[n], m)?.head);
                match (hr, hs) {
                    (Some(x), Some(y)) => fb.value(n, &combine(&x, &y, weight(p_seq, n))?),
                    _ => Ok(ExtendedReal::PosInfinity),
                }
            })?;
            b.hypothesis_series(residual_series(
                format!("|f_n(p_n[Psi_{m} rho_n] + (1-p_n)[Psi_{m} sigma_n]) - limit|"),
                &vals,
            ));
        }
        b.conclusion_series(residual_series("|f_n(p_n rho_n + (1-p_n) sigma_n) - limit|", &fm));
    }
    b.note("an infinite common stable set is checked only as a non-empty intersection in the window");
    Ok(b.finish())
}

/// Convergence criterion through a consistent projector schedule `P^n_m`.
///
/// Per `m`, records the head residual `|f̃_n(P ρ_n P) − f̃_0(P⁰ ρ_0 P⁰)|` as a
/// hypothesis trend and reduces the tails `sup_{n ≥ n_0} f̃_n(P̄ ρ_n P̄)` into one
/// series over the upper half of the `m`-window, whose trend sets the convergence
/// signal. The direct residual `|f_n(ρ_n) − f_0(ρ_0)|` is reported alongside. Pinching bounds are checked per
/// cell: the upper almost-affinity bound for every family with `b_f`, and the
/// Lindblad–Ozawa inequality for the entropy.
pub fn truncation_criterion(
    family: &FunctionalFamily,
    seq: &OperatorSequence,
    schedule: &ProjectorSchedule,
    n_0: usize,
    n_max: usize,
    m_max: usize,
    exec: Execution,
) -> Result<Verdict> {
    let n_max = n_max.min(schedule.n_max());
    let m_0 = schedule.m_0();
    let m_max = m_max.min(schedule.m_max());
    if m_0 > m_max {
        return Err(Error::InvalidArgument(format!("empty m-window: m_0 = {m_0} exceeds m_max = {m_max}")));
    }
    if n_0 > n_max {
        return Err(Error::InvalidArgument(format!("n_0 = {n_0} exceeds n_max = {n_max}")));
    }
    let mut b = Verdict::builder("truncation_criterion");
    b.note(format!(
        "f = {}, sequence {}, schedule {}, n_0 = {n_0}, m in {m_0}..={m_max}",
        family.name(),
        seq.label(),
        schedule.label()
    ));

    let validation = validate_schedule(schedule, seq, n_max, m_max, exec)?;
    let mut problems: Vec<String> = validation.failed_checks().map(|c| c.name.clone()).collect();
    problems.extend(validation.hypothesis_trend.iter().filter(|s| !s.shrinks()).map(|s| s.name.clone()));
    b.hypothesis(
        "schedule is consistent with the sequence",
        validation.status == Status::Consistent,
        if problems.is_empty() { 0.0 } else { -(problems.len() as f64) },
        if problems.is_empty() { "all conditions hold on the window".to_string() } else { problems.join("; ") },
    );

    let fb = family.bind(n_max, exec)?;
    let states = seq.window(n_max, exec)?;
    let ms: Vec<usize> = (m_0..=m_max).collect();
    let is_entropy = matches!(family.kind(), FamilyKind::Entropy);
    let b_f = family.b().cloned();

    struct Cell {
        head: ExtendedReal,
        tail: ExtendedReal,
        pinch: Option<f64>,
        ozawa: Option<f64>,
    }
    let rows = try_map_range(exec, n_max + 1, |n| -> Result<Vec<Cell>> {
        let rho = match normalize(&states[n]) {
            Some(s) => s.into_inner(),
            None => return Err(Error::InvalidArgument(format!("rho_{n} is zero"))),
        };
        let s_rho = if is_entropy { von_neumann_entropy(&rho) } else { 0.0 };
        ms.iter()
            .map(|&m| {
                let p = schedule.get(n, m).expect("inside the schedule window");
                let head_op = p.compress(&rho)?;
                let tail_op = p.complement().compress(&rho)?;
                let head = fb.homogeneous(n, &head_op)?;
                let tail = fb.homogeneous(n, &tail_op)?;
                let pinch = match (&b_f, head, tail) {
                    (Some(bf), ExtendedReal::Finite(h), ExtendedReal::Finite(t)) => {
                        let pinched = head_op.sum(&tail_op)?;
                        match fb.value(n, &pinched)? {
                            ExtendedReal::Finite(v) => Some(h + t + bf.eval(tail_op.trace().clamp(0.0, 1.0)) - v),
                            ExtendedReal::PosInfinity => Some(f64::NEG_INFINITY),
                        }
                    }
                    _ => None,
                };
                let ozawa = is_entropy.then(|| s_rho - head.to_f64() - tail.to_f64());
                Ok(Cell { head, tail, pinch, ozawa })
            })
            .collect()
    })?;

    let mut pinch_worst = None;
    let mut ozawa_worst = None;
    for (n, row) in rows.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let at = |s: f64| Some((s, format!("(n = {n}, m = {})", ms[j])));
            pinch_worst = fold_worst(pinch_worst, c.pinch.and_then(at));
            ozawa_worst = fold_worst(ozawa_worst, c.ozawa.and_then(at));
        }
    }
    if b_f.is_some() {
        record_min_slack(
            &mut b,
            "f_n(P rho P + Pbar rho Pbar) <= f~_n(P rho P) + f~_n(Pbar rho Pbar) + b_f",
            pinch_worst,
        );
    }
    if is_entropy {
        record_min_slack(&mut b, "S(P rho P) + S(Pbar rho Pbar) <= S(rho)", ozawa_worst);
    }

    if n_max >= 1 {
        for (j, &m) in ms.iter().enumerate() {
            let heads: Vec<ExtendedReal> = rows.iter().map(|r| r[j].head).collect();
            b.hypothesis_series(residual_series(
                format!("|f~_n(P^n_{m} rho_n P^n_{m}) - f~_0(P^0_{m} rho_0 P^0_{m})|"),
                &heads,
            ));
        }
    }
    // The limit is m → ∞, so the trend is read on the upper half of the m-window.
    let m_half = (ms.len() - 1) / 2;
    let tails: Vec<f64> =
        (m_half..ms.len()).map(|j| rows[n_0..].iter().map(|r| r[j].tail.to_f64()).fold(0.0, f64::max)).collect();
    let tail_series =
        ResidualSeries::new(format!("sup_(n>={n_0}) f~_n(Pbar^n_m rho_n Pbar^n_m) over m"), ms[m_half], tails);
    b.signal(if tail_series.shrinks() { Signal::Convergent } else { Signal::NonConvergent });
    b.conclusion_series(tail_series);
    if n_max >= 1 {
        let direct = window_values(&fb, &states, exec)?;
        b.conclusion_series(residual_series("|f_n(rho_n) - f_0(rho_0)| (direct)", &direct));
    }
    Ok(b.finish())
}
