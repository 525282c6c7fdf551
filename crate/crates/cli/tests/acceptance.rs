//! Acceptance suite: ten desk-scale criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so that every line is printed even when all
//! criteria pass. Exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qdini::{
    builtin_names, builtin_scenario, inequality_fuzz, run_scenario, suite_names, Expectation, Report, RunOptions,
};
use qdini_core::channel::Channel;
use qdini_core::diagnostics::{classify, Status, Verdict, CELL_BOUND_TOL};
use qdini_core::dini::{
    commuting_schedule, fixed_basis_schedule, normalize, spectral_truncation, stable_index_set,
    truncated_state_entropy, validate_schedule, OperatorSequence,
};
use qdini_core::entropy::{regularized_log_ladder, relative_entropy, trace_neg_log, von_neumann_entropy};
use qdini_core::operator::{commutator_trace_norm, trace_norm_distance, PositiveOperator};
use qdini_core::random::{haar_unitary, random_density, trial_rng};
use qdini_core::{Execution, ExtendedReal};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn run_builtin(name: &str, seed: u64, exec: Execution) -> Result<Report, String> {
    let s = builtin_scenario(name).map_err(|e| e.to_string())?;
    run_scenario(&s, seed, &RunOptions { exec, ..RunOptions::default() }).map_err(|e| e.to_string())
}

fn verdict<'a>(r: &'a Report, label: &str) -> Result<&'a Verdict, String> {
    r.checks.iter().find(|c| c.label == label).map(|c| &c.verdict).ok_or_else(|| format!("no check '{label}'"))
}

fn identity_channel() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for t in 0..100 {
        let mut rng = trial_rng(1, "identity-channel", t);
        let d = rng.random_range(2..=8);
        let rank = rng.random_range(1..=d);
        let rho = random_density(&mut rng, d, rank).into_inner();
        let i = Channel::identity(d).mutual_information(&rho).map_err(|e| e.to_string())?;
        worst = worst.max((i - 2.0 * von_neumann_entropy(&rho)).abs());
    }
    let elapsed = start.elapsed();
    ensure!(worst <= 1e-9, "max |I(Id, rho) - 2S(rho)| = {worst:.3e}");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("100 states, max deviation {worst:.2e}, {elapsed:.2?}"))
}

fn inequality_fuzz_suites() -> Outcome {
    let start = Instant::now();
    let mut evaluated = 0;
    let mut suites = 0;
    for suite in suite_names().into_iter().filter(|s| *s != "all") {
        let r = inequality_fuzz(suite, 6, 1000, 2024, Execution::Parallel).map_err(|e| e.to_string())?;
        if let Some(f) = r.failures.first() {
            return Err(format!(
                "{suite}: {} violation(s), first '{}' at trial {} (slack {:.3e})",
                r.violations, f.inequality, f.trial, f.slack
            ));
        }
        ensure!(r.passed, "{suite}: report not passed");
        evaluated += r.inequalities.iter().map(|s| s.evaluated).sum::<usize>();
        suites += 1;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(180), "took {elapsed:?}");
    Ok(format!("{suites} suites x 1000 trials, {evaluated} evaluations, 0 violations, {elapsed:.2?}"))
}

fn truncation_entropy_bound() -> Outcome {
    let mut min_slack = f64::INFINITY;
    for t in 0..300 {
        let mut rng = trial_rng(3, "truncation-bound", t);
        let d = rng.random_range(2..=10);
        let rank = rng.random_range(1..=d);
        let m = rng.random_range(1..=d);
        let rho = random_density(&mut rng, d, rank).into_inner();
        let s = truncated_state_entropy(&rho, m).map_err(|e| e.to_string())?;
        let slack = (m as f64).ln() + 1e-10 - s;
        ensure!(slack >= 0.0, "trial {t}: S([Psi_m rho]) = {s} > ln {m}");
        min_slack = min_slack.min(slack);
    }
    Ok(format!("300 pairs, min slack {min_slack:.2e}"))
}

fn approximation_convergence() -> Outcome {
    let d: usize = 16;
    let weights: Vec<f64> = (0..d).map(|i| 0.8f64.powi(i as i32)).collect();
    let z: f64 = weights.iter().sum();
    let sigma = PositiveOperator::from_diagonal(weights.iter().map(|w| w / z).collect()).map_err(|e| e.to_string())?;
    let mut worst_final = 0.0f64;
    let mut strict_violations = 0;
    for t in 0..20 {
        let mut rng = trial_rng(4, "approximation", t);
        let rho = random_density(&mut rng, d, d).into_inner();
        let full = relative_entropy(&rho, &sigma).map_err(|e| e.to_string())?.to_f64();
        let gap = |m: usize| -> Result<f64, String> {
            let head = spectral_truncation(&rho, m).map_err(|e| e.to_string())?.head;
            let state = normalize(&head).ok_or("zero head")?.into_inner();
            Ok((relative_entropy(&state, &sigma).map_err(|e| e.to_string())?.to_f64() - full).abs())
        };
        let ms = stable_index_set(&rho, d, None);
        let gaps = ms.iter().map(|&m| gap(m)).collect::<Result<Vec<_>, _>>()?;
        let last = gap(d)?;
        worst_final = worst_final.max(last);
        ensure!(last <= 1e-8, "trial {t}: gap at m = 16 is {last:.3e}");
        let summary = classify(&gaps);
        ensure!(summary.trend.shrinks(), "trial {t}: gaps over stable m do not shrink ({:?})", summary.trend);
        strict_violations += gaps.windows(2).filter(|w| w[1] > w[0]).count();
    }
    Ok(format!("20 states, max gap at m = 16 {worst_final:.2e}, trend shrinking; {strict_violations} strict increases"))
}

fn ladder_ks(k_max: u64) -> Vec<u64> {
    let mut ks: Vec<u64> =
        std::iter::successors(Some(1u64), |k| k.checked_mul(10)).take_while(|&k| k < k_max).collect();
    ks.push(k_max);
    ks
}

fn appendix_ladder() -> Outcome {
    let mut worst_drop = 0.0f64;
    let mut worst_limit = 0.0f64;
    for t in 0..200 {
        let mut rng = trial_rng(5, "ladder", t);
        let d = rng.random_range(2..=6);
        let rho = random_density(&mut rng, d, d).into_inner();
        let sigma = random_density(&mut rng, d, d).into_inner();
        let lambda_min = sigma.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        let k_max = (1e8 / lambda_min).ceil() as u64;
        let ladder = regularized_log_ladder(&rho, &sigma, &ladder_ks(k_max)).map_err(|e| e.to_string())?;
        for w in ladder.a_k.windows(2) {
            let drop = w[0] - w[1];
            ensure!(drop <= 1e-10 * (1.0 + w[0].abs()), "trial {t}: a_k drops by {drop:.3e}");
            worst_drop = worst_drop.max(drop);
        }
        let limit = trace_neg_log(&rho, &sigma).map_err(|e| e.to_string())?.to_f64();
        let err = (ladder.a_k.last().copied().unwrap_or(f64::NAN) - limit).abs();
        ensure!(err <= 1e-6, "trial {t}: |a_kmax - Tr rho(-ln sigma)| = {err:.3e}");
        worst_limit = worst_limit.max(err);
    }
    Ok(format!("200 pairs, largest drop {worst_drop:.2e}, largest limit error {worst_limit:.2e}"))
}

fn entropy_discontinuity() -> Outcome {
    let start = Instant::now();
    let s = builtin_scenario("entropy-discontinuity").map_err(|e| e.to_string())?;
    let bindings = s.resolve(0).map_err(|e| e.to_string())?;
    let seq = bindings.sequence("rho").map_err(|e| e.to_string())?;
    let window = seq.window(6, Execution::Parallel).map_err(|e| e.to_string())?;
    ensure!(window.iter().all(|x| x.op().is_diagonal()), "sequence is not diagonal");
    let s0 = von_neumann_entropy(&window[0]);
    let mut distances = Vec::new();
    for (n, rho) in window.iter().enumerate().skip(1) {
        let p = 1.0 / ((n as f64).exp().ceil()).ln();
        let dist = trace_norm_distance(rho.op(), window[0].op()).map_err(|e| e.to_string())?;
        ensure!(dist <= 2.0 * p + 1e-12, "n = {n}: distance {dist} > 2p_n = {}", 2.0 * p);
        distances.push(dist);
        let gap = von_neumann_entropy(rho) - s0;
        ensure!(n < 3 || (0.9..=1.1).contains(&gap), "n = {n}: entropy gap {gap}");
    }
    ensure!(classify(&distances).trend.shrinks(), "trace distances do not shrink: {distances:?}");

    let schedule = fixed_basis_schedule(seq, 24, 6, Execution::Parallel).map_err(|e| e.to_string())?;
    let mut min_tail = f64::INFINITY;
    for m in schedule.m_0()..=24 {
        let mut sup = f64::NEG_INFINITY;
        for (n, rho) in window.iter().enumerate().skip(1) {
            let p = schedule.get(n, m).ok_or("schedule window")?;
            let tail = p.complement().compress(rho).map_err(|e| e.to_string())?;
            sup = sup.max(von_neumann_entropy(&tail));
        }
        min_tail = min_tail.min(sup);
    }
    ensure!(min_tail >= 0.9, "tail sup drops to {min_tail}");

    let report = run_builtin("entropy-discontinuity", 0, Execution::Parallel)?;
    let check = report.checks.iter().find(|c| c.label == "truncation-criterion").ok_or("no truncation check")?;
    ensure!(check.observed == Expectation::NonConvergent, "truncation criterion observed {:?}", check.observed);
    let reported = check.verdict.conclusion_trend.first().ok_or("no tail series")?;
    let reported_min = reported.values.iter().copied().fold(f64::INFINITY, f64::min);
    ensure!(reported_min >= 0.9, "reported tail sup drops to {reported_min}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("max distance {:.3}, min tail sup {min_tail:.3}, non-convergent, {elapsed:.2?}", distances[0]))
}

fn simon_dct() -> Outcome {
    let report = run_builtin("simon-dct", 0, Execution::Parallel)?;
    let v = verdict(&report, "simon")?;
    ensure!(!v.hypothesis_trend.is_empty() && !v.conclusion_trend.is_empty(), "missing residual series");
    for s in v.hypothesis_trend.iter().chain(&v.conclusion_trend) {
        ensure!(s.shrinks(), "series '{}' does not shrink: {:?}", s.name, s.summary.trend);
    }
    let mut cells = 0;
    let mut min_slack = f64::INFINITY;
    for g in &v.grids {
        for c in g.cells.iter().filter(|c| !c.cell_bound_slack.is_nan()) {
            ensure!(
                c.cell_bound_slack >= -CELL_BOUND_TOL,
                "{}: slack {:.3e} at (n = {}, m = {})",
                g.sequence,
                c.cell_bound_slack,
                c.n,
                c.m
            );
            min_slack = min_slack.min(c.cell_bound_slack);
            cells += 1;
        }
    }
    ensure!(cells > 0, "no grid cells");
    ensure!(report.all_matched(), "scenario status mismatch");
    Ok(format!(
        "{} series shrinking, {cells} cells, min slack {min_slack:.2e}",
        v.hypothesis_trend.len() + v.conclusion_trend.len()
    ))
}

/// `Σ λ ln(λ/μ) + Σ μ − Σ λ` on diagonals, `+∞` on a support break.
fn closed_form(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<f64, String> {
    let (l, m) = (rho.op().diagonal().ok_or("rho not diagonal")?, sigma.op().diagonal().ok_or("sigma not diagonal")?);
    let mut d = m.iter().sum::<f64>() - l.iter().sum::<f64>();
    for (&a, &b) in l.iter().zip(m) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            d += a * (a / b).ln();
        }
    }
    Ok(d)
}

/// Checks `D` against the closed form on every `n` and returns the per-`n` values.
fn closed_form_series(rho: &OperatorSequence, sigma: &OperatorSequence, n_max: usize) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for n in 0..=n_max {
        let (r, s) = (rho.get(n).map_err(|e| e.to_string())?, sigma.get(n).map_err(|e| e.to_string())?);
        let exact = closed_form(&r, &s)?;
        let d = relative_entropy(&r, &s).map_err(|e| e.to_string())?;
        match d {
            ExtendedReal::Finite(x) => {
                ensure!((x - exact).abs() <= 1e-9, "{} vs {} at n = {n}: {x} != {exact}", rho.label(), sigma.label())
            }
            ExtendedReal::PosInfinity => ensure!(exact.is_infinite(), "{} at n = {n}: +inf != {exact}", rho.label()),
        }
        out.push(exact);
    }
    Ok(out)
}

fn residuals_match(reported: &[f64], values: &[f64], what: &str) -> Result<(), String> {
    ensure!(reported.len() + 1 == values.len(), "{what}: length mismatch");
    for (n, (&r, &v)) in reported.iter().zip(&values[1..]).enumerate() {
        let expected = (v - values[0]).abs();
        ensure!((r - expected).abs() <= 1e-9, "{what}: residual at n = {} is {r}, closed form {expected}", n + 1);
    }
    Ok(())
}

fn relative_entropy_scenarios() -> Outcome {
    let mut compared = 0;
    for name in ["re-sum", "re-domination"] {
        let report = run_builtin(name, 0, Execution::Parallel)?;
        for c in &report.checks {
            ensure!(c.matched, "{name}/{}: expected {:?}, observed {:?}", c.label, c.expected, c.observed);
        }
    }
    let s = builtin_scenario("re-sum").map_err(|e| e.to_string())?;
    let b = s.resolve(0).map_err(|e| e.to_string())?;
    let seq = |n: &str| b.sequence(n).map_err(|e| e.to_string());
    let sum = seq("rho")?.sum(seq("sigma")?, "rho+sigma").map_err(|e| e.to_string())?;
    let dr = closed_form_series(seq("rho")?, seq("omega")?, 10)?;
    let ds = closed_form_series(seq("sigma")?, seq("omega")?, 10)?;
    let dsum = closed_form_series(&sum, seq("omega")?, 10)?;
    let shifted = seq("omega")?.sum(seq("theta")?, "omega+theta").map_err(|e| e.to_string())?;
    closed_form_series(&sum, &shifted, 10)?;
    let report = run_builtin("re-sum", 0, Execution::Parallel)?;
    let v = verdict(&report, "sum")?;
    residuals_match(&v.hypothesis_trend[0].values, &dr, "D(rho || omega)")?;
    residuals_match(&v.hypothesis_trend[1].values, &ds, "D(sigma || omega)")?;
    residuals_match(&v.conclusion_trend[0].values, &dsum, "D(rho + sigma || omega)")?;
    compared += 4 * 11;

    let s = builtin_scenario("re-domination").map_err(|e| e.to_string())?;
    let b = s.resolve(0).map_err(|e| e.to_string())?;
    let seq = |n: &str| b.sequence(n).map_err(|e| e.to_string());
    let d11 = closed_form_series(seq("rho-star")?, seq("sigma-star")?, 10)?;
    let d12 = closed_form_series(seq("rho-star")?, seq("sigma")?, 10)?;
    let d22 = closed_form_series(seq("rho")?, seq("sigma")?, 10)?;
    closed_form_series(seq("rho-star-half")?, seq("sigma-star")?, 10)?;
    let broken = closed_form_series(seq("flat")?, seq("broken")?, 1)?;
    ensure!(broken[0].is_infinite(), "planted control is finite at n = 0");
    let report = run_builtin("re-domination", 0, Execution::Parallel)?;
    let v = verdict(&report, "dominated-pairs")?;
    residuals_match(&v.hypothesis_trend[0].values, &d11, "D(rho1 || sigma1)")?;
    residuals_match(&v.conclusion_trend[0].values, &d12, "D(rho1 || sigma2)")?;
    residuals_match(&v.conclusion_trend[1].values, &d22, "D(rho2 || sigma2)")?;
    compared += 4 * 11 + 2;
    ensure!(verdict(&report, "planted-infinite-control")?.status == Status::Violated, "planted control not violated");
    Ok(format!("6 checks at expected status, {compared} values match the closed form"))
}

/// `U ρ_n U*` for a fixed Haar unitary, so the schedule is built in a dense basis.
fn rotated(dim: usize, label: &str, seed: u64, diag: fn(usize) -> Vec<f64>) -> Result<OperatorSequence, String> {
    let mut rng = trial_rng(seed, label, 0);
    let u = Channel::isometry(haar_unitary(&mut rng, dim)).map_err(|e| e.to_string())?;
    Ok(OperatorSequence::from_fn(dim, label, move |n| u.apply(&PositiveOperator::from_diagonal(diag(n))?)))
}

fn schedule_validation() -> Outcome {
    let full = rotated(6, "full-rank", 9, |n| {
        let t = if n == 0 { 0.0 } else { 0.3 / (n as f64 + 1.0) };
        let base = [0.35, 0.25, 0.17, 0.11, 0.08, 0.04];
        base.iter().enumerate().map(|(i, &b)| (1.0 - t) * b + if i == 5 { t } else { 0.0 }).collect()
    })?;
    // Rank 3 at the limit, rank 4 or 5 along the sequence. Kept in its eigenbasis:
    // the kernel vectors chosen for rho_0 must be the limits of the small
    // eigenvectors of rho_n, which a generic rotation does not preserve.
    let mixed = OperatorSequence::from_fn(6, "mixed-rank", |n| {
        if n == 0 {
            return PositiveOperator::from_diagonal(vec![0.5, 0.3, 0.2, 0.0, 0.0, 0.0]);
        }
        let e = 0.1 / (n as f64 + 4.0);
        let f = if n % 2 == 0 { 0.5 * e } else { 0.0 };
        PositiveOperator::from_diagonal(vec![0.5, 0.3, 0.2 - e - f, e, f, 0.0])
    });
    let mut labels = Vec::new();
    let mut worst = 0.0f64;
    for seq in [&full, &mixed] {
        // m runs up to the dimension of the space the schedule is built on, which for
        // the direct sum includes the auxiliary block.
        let schedule = commuting_schedule(seq, 2 * seq.dim(), 12, Execution::Parallel).map_err(|e| e.to_string())?;
        let m_max = schedule.m_max();
        let v = validate_schedule(&schedule, seq, 12, m_max, Execution::Parallel).map_err(|e| e.to_string())?;
        let failed: Vec<&str> = v.failed_checks().map(|c| c.name.as_str()).collect();
        ensure!(v.status == Status::Consistent, "{}: {:?}, failed {failed:?}", seq.label(), v.status);
        for n in 0..=12 {
            let rho = seq.get(n).map_err(|e| e.to_string())?;
            for m in schedule.m_0()..=schedule.m_max() {
                let p = schedule.get(n, m).ok_or("schedule window")?;
                worst = worst.max(commutator_trace_norm(p.op(), rho.op()).map_err(|e| e.to_string())?);
            }
        }
        labels.push(format!("{} (m <= {m_max})", schedule.label()));
    }
    ensure!(worst <= 1e-12, "commutator norm {worst:.3e}");
    ensure!(labels[1].starts_with("commuting(direct-sum)"), "mixed-rank sequence built '{}'", labels[1]);
    Ok(format!("schedules {labels:?} consistent on n <= 12, max commutator {worst:.2e}"))
}

fn determinism() -> Outcome {
    let mut count = 0;
    for name in builtin_names() {
        let a = run_builtin(name, 11, Execution::Parallel)?.to_json().map_err(|e| e.to_string())?;
        let b = run_builtin(name, 11, Execution::Parallel)?.to_json().map_err(|e| e.to_string())?;
        let c = run_builtin(name, 11, Execution::Sequential)?.to_json().map_err(|e| e.to_string())?;
        ensure!(a == b, "{name}: reruns differ");
        ensure!(a == c, "{name}: parallel and sequential differ");
        count += 1;
    }
    let f1 = inequality_fuzz("all", 5, 40, 3, Execution::Parallel).map_err(|e| e.to_string())?;
    let f2 = inequality_fuzz("all", 5, 40, 3, Execution::Sequential).map_err(|e| e.to_string())?;
    ensure!(f1.to_json().ok() == f2.to_json().ok(), "fuzz reports differ");
    Ok(format!("{count} builtin scenarios and a fuzz report byte-identical across reruns and execution modes"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("identity channel: I(Id, rho) = 2S(rho)", identity_channel),
        ("inequality fuzz, 1000 trials per suite", inequality_fuzz_suites),
        ("truncated-state entropy <= ln m", truncation_entropy_bound),
        ("truncation approximation of relative entropy", approximation_convergence),
        ("regularized-log ladder", appendix_ladder),
        ("entropy-discontinuity demo", entropy_discontinuity),
        ("dominated thermal-state demo", simon_dct),
        ("relative-entropy sum and domination scenarios", relative_entropy_scenarios),
        ("commuting schedule validation", schedule_validation),
        ("deterministic reports", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
