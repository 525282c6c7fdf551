use super::{
    check_domination, fold_worst, laa_slacks, record_min_slack, require_finite, residual_series, window_values,
    INEQUALITY_TOL,
};
use crate::diagnostics::family::FunctionalFamily;
use crate::diagnostics::grid::{approximation_gap_grid, DiagnosticsGrid};
use crate::diagnostics::trend::windowed_max;
use crate::diagnostics::verdict::{Verdict, VerdictBuilder};
use crate::dini::{normalize, spectral_truncation, stable_index_set, ApproximationScheme, OperatorSequence};
use crate::error::Result;
use crate::exec::{try_map_range, Execution};
use crate::extended::ExtendedReal;
use crate::operator::PositiveOperator;

const MIX_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.75];

/// `[Ψ_m(ρ)]`, or `None` when the head is zero.
fn truncated_state(rho: &PositiveOperator, m: usize) -> Result<Option<PositiveOperator>> {
    Ok(normalize(&spectral_truncation(rho, m)?.head).map(|s| s.into_inner()))
}

/// Records the per-cell lower bound of a grid as an inequality.
pub(crate) fn record_cell_bound(b: &mut VerdictBuilder, family: &FunctionalFamily, grid: &DiagnosticsGrid) {
    if !family.is_nonnegative() {
        b.note(format!("cell bound skipped for {}: family is not nonnegative", grid.sequence));
        return;
    }
    let name = format!("f_n(rho_n) >= mu f_n([Psi_m rho_n]) - a_f(1 - mu) on {}", grid.sequence);
    record_min_slack(b, &name, grid.min_cell_bound_slack().map(|(s, n, m)| (s, format!("(n = {n}, m = {m})"))));
    b.inequality(
        format!("mu_n^m in [0, Tr rho_n] and non-decreasing in m on {}", grid.sequence),
        grid.mass_sane,
        0.0,
        grid.scheme.clone(),
    );
}

/// Largest stable indices of `rho` strictly below its rank, at most `count` of them.
pub(crate) fn nontrivial_stable_indices(rho: &PositiveOperator, m_max: usize, count: usize) -> Vec<usize> {
    let r = rho.rank(None);
    let mut ms: Vec<usize> =
        stable_index_set(rho, m_max.min(r.saturating_sub(1)), None).into_iter().filter(|&m| m < r).collect();
    ms.reverse();
    ms.truncate(count);
    ms.reverse();
    ms
}

/// Basic dominated convergence: `|g_n| ≤ f_n`, both families almost affine. If
/// `f_n(ρ_n) → f_0(ρ_0)` then `g_n(ρ_n) → g_0(ρ_0)` is expected.
///
/// Checks domination on members, their truncations `[Ψ_m ρ_n]` and midpoints of
/// consecutive members; the almost-affinity bounds of `f` (lower side) and `g`
/// (both sides); the cell bound for `f`; and the two residual trends. The
/// convergence of `g` along truncations is checked only for the canonical
/// subsequences `[Ψ_m ρ_n]`.
pub fn check_dct_basic(
    f: &FunctionalFamily,
    g: &FunctionalFamily,
    seq: &OperatorSequence,
    n_max: usize,
    m_max: usize,
    exec: Execution,
) -> Result<Verdict> {
    let mut b = Verdict::builder("check_dct_basic");
    b.note(format!("f = {}, g = {}, sequence {}", f.name(), g.name(), seq.label()));
    let fb = f.bind(n_max, exec)?;
    let gb = g.bind(n_max, exec)?;
    let states = seq.window(n_max, exec)?;
    let m_max = m_max.min(seq.dim()).max(1);

    type Worst = Option<(f64, String)>;
    let per_n = try_map_range(exec, n_max + 1, |n| -> Result<(Worst, Worst, Worst, Worst)> {
        let rho = &states[n];
        let mut samples = vec![(rho.clone(), format!("rho_{n}"))];
        for m in 1..=m_max {
            if let Some(t) = truncated_state(rho, m)? {
                samples.push((t, format!("[Psi_{m} rho_{n}]")));
            }
        }
        if n < n_max {
            samples.push((PositiveOperator::mix(rho, &states[n + 1], 0.5)?, format!("(rho_{n} + rho_{})/2", n + 1)));
        }
        let mut dom = None;
        for (x, label) in &samples {
            let slack = match (fb.value(n, x)?, gb.value(n, x)?) {
                (ExtendedReal::PosInfinity, _) => continue,
                (ExtendedReal::Finite(fv), ExtendedReal::Finite(gv)) => fv - gv.abs(),
                (ExtendedReal::Finite(_), ExtendedReal::PosInfinity) => f64::NEG_INFINITY,
            };
            dom = fold_worst(dom, Some((slack, format!("n = {n}, {label}"))));
        }
        let mut pairs = Vec::new();
        if n < n_max {
            pairs.push((rho.clone(), states[n + 1].clone(), format!("(rho_{n}, rho_{})", n + 1)));
        }
        if let Some(t) = truncated_state(rho, 1)? {
            pairs.push((rho.clone(), t, format!("(rho_{n}, [Psi_1 rho_{n}])")));
        }
        let (mut fa, mut ga, mut gbnd) = (None, None, None);
        for (x, y, label) in &pairs {
            for p in MIX_WEIGHTS {
                let at = |s: f64| Some((s, format!("n = {n}, p = {p}, {label}")));
                let (lo, _) = laa_slacks(&fb, n, x, y, p)?;
                fa = fold_worst(fa, lo.and_then(at));
                let (lo, hi) = laa_slacks(&gb, n, x, y, p)?;
                ga = fold_worst(ga, lo.and_then(at));
                gbnd = fold_worst(gbnd, hi.and_then(at));
            }
        }
        Ok((dom, fa, ga, gbnd))
    })?;
    let fold = |i: usize| {
        per_n.iter().fold(None, |acc, r| {
            let item = match i {
                0 => r.0.clone(),
                1 => r.1.clone(),
                2 => r.2.clone(),
                _ => r.3.clone(),
            };
            fold_worst(acc, item)
        })
    };
    record_min_slack(&mut b, "|g_n| <= f_n", fold(0));
    record_min_slack(&mut b, "f lower almost-affinity (a_f)", fold(1));
    record_min_slack(&mut b, "g lower almost-affinity (a_g)", fold(2));
    if g.b().is_some() {
        record_min_slack(&mut b, "g upper almost-affinity (b_g)", fold(3));
    } else {
        b.note("g declares no upper almost-affinity modulus");
    }

    let grid = approximation_gap_grid(f, seq, &ApproximationScheme::SpectralTruncation, n_max, (1, m_max), exec)?;
    record_cell_bound(&mut b, f, &grid);
    b.grid(grid);

    let fv = window_values(&fb, &states, exec)?;
    let gv = window_values(&gb, &states, exec)?;
    require_finite(&mut b, "f_0(rho_0)", fv[0]);
    if n_max >= 1 {
        b.hypothesis_series(residual_series("|f_n(rho_n) - f_0(rho_0)|", &fv));
        for m in nontrivial_stable_indices(&states[0], m_max, 2) {
            let vals = try_map_range(exec, n_max + 1, |n| match truncated_state(&states[n], m)? {
                Some(t) => gb.value(n, &t),
                None => Ok(ExtendedReal::ZERO),
            })?;
            b.hypothesis_series(residual_series(format!("|g_n([Psi_{m} rho_n]) - g_0([Psi_{m} rho_0])|"), &vals));
        }
        b.conclusion_series(residual_series("|g_n(rho_n) - g_0(rho_0)|", &gv));
    }
    b.note("convergence of g along bounded-rank sequences is checked only on the truncations [Psi_m rho_n]");
    Ok(b.finish())
}

/// Simon-type dominated convergence for `c·ρ_n ≤ τ_n`.
///
/// Fails with a domination error naming `n` when `c·ρ_n ≤ τ_n` breaks. Otherwise
/// records `f_0(τ_0) < ∞`, the windowed excess `A = max_tail f_n(τ_n) − f_0(τ_0)`,
/// the bound `max_tail f_n(ρ_n) − f_0(ρ_0) ≤ A/c + G_c(A)`, cell bounds on
/// the spectral grid of `ρ` and the dominated grid of `τ`, and both residual trends.
pub fn check_dct_simon(
    f: &FunctionalFamily,
    rho_seq: &OperatorSequence,
    tau_seq: &OperatorSequence,
    c: f64,
    n_max: usize,
    m_max: usize,
    exec: Execution,
) -> Result<Verdict> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(crate::error::Error::InvalidArgument(format!("domination constant c = {c} must be positive")));
    }
    let rhos = rho_seq.window(n_max, exec)?;
    let taus = tau_seq.window(n_max, exec)?;
    check_domination(&rhos, &taus, c, &format!("{c}·rho_n <= tau_n"), exec)?;

    let mut b = Verdict::builder("check_dct_simon");
    b.note(format!("f = {}, rho = {}, tau = {}, c = {c}", f.name(), rho_seq.label(), tau_seq.label()));
    let fb = f.bind(n_max, exec)?;
    let ft = window_values(&fb, &taus, exec)?;
    let fr = window_values(&fb, &rhos, exec)?;
    require_finite(&mut b, "f_0(tau_0)", ft[0]);
    require_finite(&mut b, "f_0(rho_0)", fr[0]);

    if n_max >= 1 {
        let excess = |v: &[ExtendedReal]| -> f64 {
            let base = v[0].to_f64();
            let d: Vec<f64> = v[1..].iter().map(|x| x.to_f64() - base).collect();
            windowed_max(&d)
        };
        let a = excess(&ft);
        let lhs = excess(&fr);
        let a_plus = a.max(0.0);
        let g_c = f.g_c(c);
        let bound = a_plus / c + g_c.eval(a_plus);
        b.hypothesis("windowed A = max_tail f_n(tau_n) - f_0(tau_0) < +inf", a.is_finite(), -a, format!("A = {a:.6e}"));
        let slack = bound + INEQUALITY_TOL - lhs;
        b.hypothesis(
            "max_tail f_n(rho_n) - f_0(rho_0) <= A/c + G_c(A)",
            slack >= 0.0 || slack.is_nan(),
            slack,
            format!("lhs = {lhs:.6e}, bound = {bound:.6e} with G_c = {}", g_c.name()),
        );
        b.hypothesis_series(residual_series("|f_n(tau_n) - f_0(tau_0)|", &ft));
        b.conclusion_series(residual_series("|f_n(rho_n) - f_0(rho_0)|", &fr));
    }

    let m_max = m_max.min(rho_seq.dim()).max(1);
    let rho_grid =
        approximation_gap_grid(f, rho_seq, &ApproximationScheme::SpectralTruncation, n_max, (1, m_max), exec)?;
    record_cell_bound(&mut b, f, &rho_grid);
    b.grid(rho_grid);
    let scheme = ApproximationScheme::DominatedTruncation { c, dominated: rho_seq.clone() };
    let tau_grid = approximation_gap_grid(f, tau_seq, &scheme, n_max, (1, m_max), exec)?;
    record_cell_bound(&mut b, f, &tau_grid);
    b.grid(tau_grid);
    b.note(
        "condition on dominated bounded-rank sequences is taken on trust; G_c is the family default unless overridden",
    );
    Ok(b.finish())
}
