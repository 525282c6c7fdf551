use super::{check_domination, fold_worst, le_slack, record_min_slack, require_finite, residual_series};
use crate::diagnostics::verdict::Verdict;
use crate::dini::OperatorSequence;
use crate::entropy::{binary_entropy_extension, relative_entropy};
use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::extended::ExtendedReal;

type Worst = Option<(f64, String)>;

fn at(n: usize, s: Option<f64>) -> Worst {
    s.map(|s| (s, format!("n = {n}")))
}

/// Relative-entropy dominated convergence: with `c_ρ ρ²_n ≤ ρ¹_n` and
/// `c_σ σ¹_n ≤ σ²_n`, convergence of `D(ρ¹_n‖σ¹_n)` to a finite limit is expected to
/// carry over to `D(ρ¹_n‖σ²_n)` and `D(ρ²_n‖σ²_n)`.
///
/// Per `n`, checks finiteness transfer and the bound
/// `D(ρ¹‖σ²) ≤ D(ρ¹‖σ¹) − Tr ρ¹ ln c_σ + (c_σ − 1) Tr σ¹ + Tr(σ² − c_σ σ¹)`.
#[allow(clippy::too_many_arguments)]
pub fn relative_entropy_domination(
    rho1: &OperatorSequence,
    rho2: &OperatorSequence,
    sigma1: &OperatorSequence,
    sigma2: &OperatorSequence,
    c_rho: f64,
    c_sigma: f64,
    n_max: usize,
    exec: Execution,
) -> Result<Verdict> {
    if !(c_rho > 0.0 && c_sigma > 0.0 && c_rho.is_finite() && c_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "domination constants must be positive, got c_rho = {c_rho}, c_sigma = {c_sigma}"
        )));
    }
    let r1 = rho1.window(n_max, exec)?;
    let r2 = rho2.window(n_max, exec)?;
    let s1 = sigma1.window(n_max, exec)?;
    let s2 = sigma2.window(n_max, exec)?;
    check_domination(&r2, &r1, c_rho, &format!("{c_rho} rho2_n <= rho1_n"), exec)?;
    check_domination(&s1, &s2, c_sigma, &format!("{c_sigma} sigma1_n <= sigma2_n"), exec)?;

    let mut b = Verdict::builder("relative_entropy_domination");
    b.note(format!(
        "rho1 = {}, rho2 = {}, sigma1 = {}, sigma2 = {}, c_rho = {c_rho}, c_sigma = {c_sigma}",
        rho1.label(),
        rho2.label(),
        sigma1.label(),
        sigma2.label()
    ));

    struct Row {
        d11: ExtendedReal,
        d12: ExtendedReal,
        d22: ExtendedReal,
        transfer: Option<f64>,
        bound: Option<f64>,
        identity: Option<f64>,
    }
    let rows = try_map_range(exec, n_max + 1, |n| -> Result<Row> {
        let d11 = relative_entropy(&r1[n], &s1[n])?;
        let d12 = relative_entropy(&r1[n], &s2[n])?;
        let d22 = relative_entropy(&r2[n], &s2[n])?;
        let transfer =
            d11.is_finite().then(|| if d22.is_finite() && d12.is_finite() { 0.0 } else { f64::NEG_INFINITY });
        let (tr_r, tr_s) = (r1[n].trace(), s1[n].trace());
        let via_identity = d11.add_f64(-tr_r * c_sigma.ln() + (c_sigma - 1.0) * tr_s);
        let bound = le_slack(d12, via_identity.add_f64(s2[n].trace() - c_sigma * tr_s));
        let direct = relative_entropy(&r1[n], &s1[n].scaled(c_sigma)?)?;
        let identity = match (direct, via_identity) {
            (ExtendedReal::Finite(x), ExtendedReal::Finite(y)) => Some(1e-8 * (1.0 + x.abs()) - (x - y).abs()),
            (ExtendedReal::PosInfinity, ExtendedReal::PosInfinity) => None,
            _ => Some(f64::NEG_INFINITY),
        };
        Ok(Row { d11, d12, d22, transfer, bound, identity })
    })?;

    require_finite(&mut b, "D(rho1_0 || sigma1_0)", rows[0].d11);
    let (mut transfer, mut bound, mut identity): (Worst, Worst, Worst) = (None, None, None);
    for (n, r) in rows.iter().enumerate() {
        transfer = fold_worst(transfer, at(n, r.transfer));
        bound = fold_worst(bound, at(n, r.bound));
        identity = fold_worst(identity, at(n, r.identity));
    }
    record_min_slack(&mut b, "D(rho1_n || sigma1_n) < +inf implies D(rho2_n || sigma2_n) < +inf", transfer);
    record_min_slack(
        &mut b,
        "D(rho1 || sigma2) <= D(rho1 || sigma1) - Tr rho1 ln c + (c - 1) Tr sigma1 + Tr(sigma2 - c sigma1)",
        bound,
    );
    record_min_slack(&mut b, "D(rho || c sigma) = D(rho || sigma) - Tr rho ln c + (c - 1) Tr sigma", identity);

    if n_max >= 1 {
        let col = |f: fn(&Row) -> ExtendedReal| rows.iter().map(f).collect::<Vec<_>>();
        b.hypothesis_series(residual_series("|D(rho1_n || sigma1_n) - D(rho1_0 || sigma1_0)|", &col(|r| r.d11)));
        b.conclusion_series(residual_series("|D(rho1_n || sigma2_n) - D(rho1_0 || sigma2_0)|", &col(|r| r.d12)));
        b.conclusion_series(residual_series("|D(rho2_n || sigma2_n) - D(rho2_0 || sigma2_0)|", &col(|r| r.d22)));
    }
    Ok(b.finish())
}

/// Relative entropy under summation: if `D(ρ_n‖ω_n)` and `D(σ_n‖ω_n)` converge to
/// finite limits, so should `D(ρ_n + σ_n‖ω_n)`, and with an extra sequence `ϑ_n`
/// also `D(ρ_n + σ_n‖ω_n + ϑ_n)`.
///
/// Per `n`, guards the two-sided bounds
/// `D(ρ‖ω) + D(σ‖ω) − Tr ω ≤ D(ρ+σ‖ω) ≤ D(ρ‖ω) + D(σ‖ω) + H({Tr ρ, Tr σ}) − Tr ω`
/// and, with `ϑ`, `D(ρ+σ‖ω+ϑ) ≤ D(ρ+σ‖ω) + Tr ϑ`.
pub fn relative_entropy_sum(
    rho: &OperatorSequence,
    sigma: &OperatorSequence,
    omega: &OperatorSequence,
    theta: Option<&OperatorSequence>,
    n_max: usize,
    exec: Execution,
) -> Result<Verdict> {
    let rs = rho.window(n_max, exec)?;
    let ss = sigma.window(n_max, exec)?;
    let ws = omega.window(n_max, exec)?;
    let ts = theta.map(|t| t.window(n_max, exec)).transpose()?;

    let mut b = Verdict::builder("relative_entropy_sum");
    b.note(format!("rho = {}, sigma = {}, omega = {}", rho.label(), sigma.label(), omega.label()));
    if let Some(t) = theta {
        b.note(format!("theta = {}", t.label()));
    }

    struct Row {
        dr: ExtendedReal,
        ds: ExtendedReal,
        dsum: ExtendedReal,
        dshift: Option<ExtendedReal>,
        lower: Option<f64>,
        upper: Option<f64>,
        shift: Option<f64>,
    }
    let rows = try_map_range(exec, n_max + 1, |n| -> Result<Row> {
        let sum = rs[n].sum(&ss[n])?;
        let dr = relative_entropy(&rs[n], &ws[n])?;
        let ds = relative_entropy(&ss[n], &ws[n])?;
        let dsum = relative_entropy(&sum, &ws[n])?;
        let tr_w = ws[n].trace();
        let both = dr.add(ds);
        let lower = le_slack(both.add_f64(-tr_w), dsum);
        let h = binary_entropy_extension(rs[n].trace().max(0.0), ss[n].trace().max(0.0))?;
        let upper = le_slack(dsum, both.add_f64(h - tr_w));
        let (dshift, shift) = match &ts {
            Some(ts) => {
                let d = relative_entropy(&sum, &ws[n].sum(&ts[n])?)?;
                (Some(d), le_slack(d, dsum.add_f64(ts[n].trace())))
            }
            None => (None, None),
        };
        Ok(Row { dr, ds, dsum, dshift, lower, upper, shift })
    })?;

    require_finite(&mut b, "D(rho_0 || omega_0)", rows[0].dr);
    require_finite(&mut b, "D(sigma_0 || omega_0)", rows[0].ds);
    let (mut lower, mut upper, mut shift): (Worst, Worst, Worst) = (None, None, None);
    for (n, r) in rows.iter().enumerate() {
        lower = fold_worst(lower, at(n, r.lower));
        upper = fold_worst(upper, at(n, r.upper));
        shift = fold_worst(shift, at(n, r.shift));
    }
    record_min_slack(&mut b, "D(rho + sigma || omega) >= D(rho || omega) + D(sigma || omega) - Tr omega", lower);
    record_min_slack(
        &mut b,
        "D(rho + sigma || omega) <= D(rho || omega) + D(sigma || omega) + H({Tr rho, Tr sigma}) - Tr omega",
        upper,
    );
    if ts.is_some() {
        record_min_slack(&mut b, "D(rho + sigma || omega + theta) <= D(rho + sigma || omega) + Tr theta", shift);
    }

    if n_max >= 1 {
        let col = |f: fn(&Row) -> ExtendedReal| rows.iter().map(f).collect::<Vec<_>>();
        b.hypothesis_series(residual_series("|D(rho_n || omega_n) - D(rho_0 || omega_0)|", &col(|r| r.dr)));
        b.hypothesis_series(residual_series("|D(sigma_n || omega_n) - D(sigma_0 || omega_0)|", &col(|r| r.ds)));
        b.conclusion_series(residual_series("|D(rho_n + sigma_n || omega_n) - limit|", &col(|r| r.dsum)));
        if ts.is_some() {
            let shifted: Vec<ExtendedReal> = rows.iter().map(|r| r.dshift.expect("theta present")).collect();
            b.conclusion_series(residual_series("|D(rho_n + sigma_n || omega_n + theta_n) - limit|", &shifted));
        }
    }
    Ok(b.finish())
}
