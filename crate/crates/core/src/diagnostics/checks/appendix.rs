use super::{check_domination, fold_worst, record_min_slack, INEQUALITY_TOL};
use crate::diagnostics::trend::windowed_max;
use crate::diagnostics::verdict::Verdict;
use crate::dini::OperatorSequence;
use crate::entropy::{regularized_log, trace_neg_log};
use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::operator::{apply_spectral_function, PositiveOperator};

/// Relative slack for the monotonicity of the ladder in `k`.
const LADDER_TOL: f64 = 1e-10;

type Worst = Option<(f64, String)>;

/// `H = ln(I + k⁻¹ σ⁻¹)` on `supp σ`, with `σ⁻¹` the Moore–Penrose inverse.
fn log_inverse_regularizer(sigma: &PositiveOperator, k: u64) -> Result<crate::operator::HermitianOperator> {
    let inv_k = 1.0 / k as f64;
    apply_spectral_function(sigma, |x| if x > 0.0 { (1.0 + inv_k / x).ln() } else { 0.0 }, None)
}

/// `Tr Hρ` through the eigenbasis of `σ` (where `H` is diagonal) and through the
/// eigenvectors of `ρ` as `Σ_i λ_i ⟨v_i|H|v_i⟩`.
fn trace_two_ways(
    h: &crate::operator::HermitianOperator,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
) -> (f64, f64) {
    let sd = sigma.spectrum();
    let hs = sd.expectations(h);
    let ws = sd.expectations(rho.op());
    let via_sigma = hs.iter().zip(&ws).map(|(h, w)| h * w).sum();
    let via_rho = rho.eigenvalues().iter().zip(rho.spectrum().expectations(h)).map(|(l, e)| l.max(0.0) * e).sum();
    (via_sigma, via_rho)
}

#[derive(Default)]
struct Cell {
    ladder: Worst,
    order: Worst,
    direct: Worst,
    lemma3: Worst,
}

/// Trace-log domination: with `ρ¹_n ≥ ρ²_n` and `σ¹_n ≤ σ²_n`, the excess
/// `A₂ − Tr ρ²_0(−ln σ²_0)` of `A_i = limsup Tr ρ^i_n(−ln σ^i_n)` is at most
/// `Δ = A₁ − Tr ρ¹_0(−ln σ¹_0)`.
///
/// The limsups are estimated by the maximum over the last half of the window, and
/// negative estimates of either excess are read as zero. Per
/// `(n, k)` the regularized values `a^i_{k,n} = −Tr ρ^i_n ln(σ^i_n + k⁻¹I)` are
/// checked for monotonicity in `k`, the gaps `d^i = a^i_n − a^i_{k,n}` for
/// `0 ≤ d² ≤ d¹` and against `Tr ρ^i_n ln(I + k⁻¹(σ^i_n)⁻¹)`, and that trace for
/// agreement between the two eigenbases.
pub fn appendix_domination(
    rho1: &OperatorSequence,
    rho2: &OperatorSequence,
    sigma1: &OperatorSequence,
    sigma2: &OperatorSequence,
    ks: &[u64],
    n_max: usize,
    exec: Execution,
) -> Result<Verdict> {
    if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "k schedule must be a non-empty increasing list of positive integers".into(),
        ));
    }
    let r1 = rho1.window(n_max, exec)?;
    let r2 = rho2.window(n_max, exec)?;
    let s1 = sigma1.window(n_max, exec)?;
    let s2 = sigma2.window(n_max, exec)?;
    check_domination(&r2, &r1, 1.0, "rho2_n <= rho1_n", exec)?;
    check_domination(&s1, &s2, 1.0, "sigma1_n <= sigma2_n", exec)?;

    let mut b = Verdict::builder("appendix_domination");
    b.note(format!(
        "rho1 = {}, rho2 = {}, sigma1 = {}, sigma2 = {}, k in {ks:?}",
        rho1.label(),
        rho2.label(),
        sigma1.label(),
        sigma2.label()
    ));

    let a1 = try_map_range(exec, n_max + 1, |n| trace_neg_log(&r1[n], &s1[n]))?;
    let a2 = try_map_range(exec, n_max + 1, |n| trace_neg_log(&r2[n], &s2[n]))?;
    let tail = |a: &[crate::extended::ExtendedReal]| {
        if a.len() > 1 {
            windowed_max(&a[1..].iter().map(|v| v.to_f64()).collect::<Vec<_>>())
        } else {
            a[0].to_f64()
        }
    };
    let (big_a1, big_a2) = (tail(&a1), tail(&a2));
    let (a1_0, a2_0) = (a1[0].to_f64(), a2[0].to_f64());
    b.hypothesis(
        "A1 < +inf",
        big_a1.is_finite(),
        if big_a1.is_finite() { 0.0 } else { f64::NEG_INFINITY },
        format!("A1 ~ {big_a1:.6e}"),
    );
    if big_a1.is_finite() && a1_0.is_finite() {
        // Both excesses are non-negative by lower semicontinuity; negative window
        // estimates come from sequences approaching their limit from below.
        let delta = (big_a1 - a1_0).max(0.0);
        let excess = (big_a2 - a2_0).max(0.0);
        let slack = delta - excess;
        b.hypothesis(
            "A2 - Tr rho2_0(-ln sigma2_0) <= Delta",
            big_a2.is_finite() && slack >= -INEQUALITY_TOL,
            slack,
            format!("Delta = {delta:.6e}, A2 = {big_a2:.6e}, excess = {excess:.6e}"),
        );
    }

    let cells = try_map_range(exec, n_max + 1, |n| -> Result<Cell> {
        let mut cell = Cell::default();
        let (Some(a1n), Some(a2n)) = (a1[n].value(), a2[n].value()) else {
            if a1[n].is_finite() {
                cell.order = Some((f64::NEG_INFINITY, format!("n = {n}: supp rho2 not in supp sigma2")));
            }
            return Ok(cell);
        };
        let mut prev: Option<(f64, f64)> = None;
        for &k in ks {
            let at = |s: f64| Some((s, format!("(n = {n}, k = {k})")));
            let (k1, k2) = (regularized_log(&r1[n], &s1[n], k)?, regularized_log(&r2[n], &s2[n], k)?);
            if let Some((p1, p2)) = prev {
                let s = (k1 - p1 + LADDER_TOL * (1.0 + k1.abs())).min(k2 - p2 + LADDER_TOL * (1.0 + k2.abs()));
                cell.ladder = fold_worst(cell.ladder.take(), at(s));
            }
            prev = Some((k1, k2));
            let (d1, d2) = (a1n - k1, a2n - k2);
            cell.order = fold_worst(cell.order.take(), at(d2.min(d1 - d2)));
            for (d, rho, sigma) in [(d1, &r1[n], &s1[n]), (d2, &r2[n], &s2[n])] {
                let h = log_inverse_regularizer(sigma, k)?;
                let (via_sigma, via_rho) = trace_two_ways(&h, rho, sigma);
                let scale = 1.0 + via_sigma.abs();
                cell.direct = fold_worst(cell.direct.take(), at(INEQUALITY_TOL * scale - (d - via_sigma).abs()));
                cell.lemma3 = fold_worst(cell.lemma3.take(), at(INEQUALITY_TOL * scale - (via_sigma - via_rho).abs()));
            }
        }
        Ok(cell)
    })?;

    let (mut ladder, mut order, mut direct, mut lemma3): (Worst, Worst, Worst, Worst) = (None, None, None, None);
    for c in cells {
        ladder = fold_worst(ladder, c.ladder);
        order = fold_worst(order, c.order);
        direct = fold_worst(direct, c.direct);
        lemma3 = fold_worst(lemma3, c.lemma3);
    }
    record_min_slack(&mut b, "a^i_{k,n} non-decreasing in k", ladder);
    record_min_slack(&mut b, "0 <= a2_n - a2_{k,n} <= a1_n - a1_{k,n}", order);
    record_min_slack(&mut b, "a^i_n - a^i_{k,n} = Tr rho^i_n ln(I + k^-1 (sigma^i_n)^-1)", direct);
    record_min_slack(&mut b, "Tr H rho = sum_i <phi_i|H|phi_i>", lemma3);
    Ok(b.finish())
}
