//! Scenario execution with a compute budget.

use qdini_core::diagnostics::{
    appendix_domination, approximation_gap_grid, channel_mi_checks, check_convex_mixture, check_dct_basic,
    check_dct_simon, relative_entropy_domination, relative_entropy_sum, truncation_criterion, ChannelChecks,
    FamilyKind, FunctionalFamily, ResidualSeries, Verdict, CELL_BOUND_TOL, MASS_TOL,
};
use qdini_core::dini::{
    commuting_schedule, fixed_basis_schedule, validate_schedule, ApproximationScheme, OperatorSequence,
    ProjectorSchedule,
};
use qdini_core::exec::map_range;
use qdini_core::{Error, Execution};

use crate::error::{config, CliError, Result};
use crate::report::{CheckReport, Expectation, Report};
use crate::scenario::{Bindings, CheckSpec, Procedure, Scenario, ScheduleKind, DEFAULT_N_MAX};

/// Default cap on the estimated flop count of a run.
pub const DEFAULT_BUDGET: f64 = 1e12;

/// Flops charged per `(n, m)` cell per unit of the per-operator cost.
const FLOPS_PER_CELL: f64 = 50.0;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub n_max: Option<usize>,
    pub m_max: Option<usize>,
    pub exec: Execution,
    pub budget: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { n_max: None, m_max: None, exec: Execution::Parallel, budget: DEFAULT_BUDGET }
    }
}

/// `QDINI_BUDGET` if set, else [`DEFAULT_BUDGET`].
pub fn budget_from_env() -> Result<f64> {
    match std::env::var("QDINI_BUDGET") {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|b| *b > 0.0)
            .ok_or_else(|| config(format!("QDINI_BUDGET must be a positive number, got '{v}'"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

/// Effective `(n_max, m_max)` of a check: command line, then check, then defaults.
fn window(check: &CheckSpec, opts: &RunOptions, seq: &OperatorSequence) -> (usize, usize) {
    let n_max = opts.n_max.or(check.n_max).unwrap_or(DEFAULT_N_MAX);
    let m_max = opts.m_max.or(check.m_max).unwrap_or(seq.dim()).clamp(1, seq.dim().max(1));
    (n_max, m_max)
}

/// Joint input-output dimension of any channel inside a family.
fn channel_dim(f: &FunctionalFamily) -> usize {
    match f.kind() {
        FamilyKind::ChannelMutualInformation(c) | FamilyKind::CoherentInformation(c) | FamilyKind::OutputEntropy(c) => {
            c.d_in() * c.d_out()
        }
        FamilyKind::Scaled { inner, .. } | FamilyKind::Shifted { inner, .. } => channel_dim(inner),
        _ => 0,
    }
}

/// Estimated flops: per-operator cost times cell count times a constant. Diagonal
/// operators cost `d log d`, dense ones `d³`.
fn estimate(check: &CheckSpec, b: &Bindings, opts: &RunOptions) -> Result<f64> {
    let seq = b.sequence(check.run.primary_sequence())?;
    let (n_max, m_max) = window(check, opts, seq);
    let limit = seq.get(0).map_err(|source| CliError::Check { label: check.label.clone(), source })?;
    let d = seq.dim() as f64;
    let mut dense = 0usize;
    if let Procedure::ChannelMi { channel, .. } = &check.run {
        let c = b.channel(channel)?;
        dense = c.d_in() * c.d_out();
    }
    for (kind, name) in check.run.references() {
        if kind == crate::scenario::Binding::Family {
            dense = dense.max(channel_dim(b.family(name)?));
        }
    }
    let per_op = if dense > 0 {
        (dense.max(seq.dim()) as f64).powi(3)
    } else if limit.op().is_diagonal() {
        d * (1.0 + d.log2())
    } else {
        d.powi(3)
    };
    Ok(per_op * (n_max as f64 + 1.0) * m_max as f64 * FLOPS_PER_CELL)
}

/// Total estimated flops of a scenario under the given options.
pub fn estimate_cost(s: &Scenario, b: &Bindings, opts: &RunOptions) -> Result<f64> {
    s.checks.iter().map(|c| estimate(c, b, opts)).sum()
}

fn schedule(
    kind: ScheduleKind,
    seq: &OperatorSequence,
    m_max: usize,
    n_max: usize,
    exec: Execution,
) -> qdini_core::Result<ProjectorSchedule> {
    match kind {
        ScheduleKind::FixedBasis => fixed_basis_schedule(seq, m_max, n_max, exec),
        ScheduleKind::Commuting => commuting_schedule(seq, m_max, n_max, exec),
    }
}

fn approximation_grid_verdict(
    family: &FunctionalFamily,
    seq: &OperatorSequence,
    scheme: &ApproximationScheme,
    n_max: usize,
    m_max: usize,
    exec: Execution,
) -> qdini_core::Result<Verdict> {
    let grid = approximation_gap_grid(family, seq, scheme, n_max, (1, m_max), exec)?;
    let mut b = Verdict::builder("approximation_gap_grid");
    b.note(format!("f = {}, sequence {}, scheme {}", family.name(), seq.label(), grid.scheme));
    if let Some((slack, n, m)) = grid.min_cell_bound_slack() {
        b.inequality(
            "f_n(rho_n) >= mu f_n([Psi_m rho_n]) - a_f(1 - mu)",
            slack >= -CELL_BOUND_TOL,
            slack,
            format!("smallest slack at (n = {n}, m = {m})"),
        );
    }
    b.inequality(
        "0 <= mu_n^m <= Tr rho_n, non-decreasing in m",
        grid.mass_sane,
        if grid.mass_sane { 0.0 } else { -MASS_TOL },
        "mass of the truncations",
    );
    // As m → ∞ is the limit of interest, the trend is read on the upper half of the m-window.
    let half = grid.columns.len().saturating_sub(1) / 2;
    if let Some(first) = grid.columns.get(half) {
        let sup_gaps: Vec<f64> = grid.columns[half..].iter().map(|c| c.sup_gap).collect();
        b.conclusion_series(ResidualSeries::new("sup_n gap over m", first.m, sup_gaps));
    }
    b.grid(grid);
    Ok(b.finish())
}

fn execute(
    check: &CheckSpec,
    b: &Bindings,
    n_max: usize,
    m_max: usize,
    exec: Execution,
) -> Result<qdini_core::Result<Verdict>> {
    Ok(match &check.run {
        Procedure::DctBasic { f, g, sequence } => {
            check_dct_basic(b.family(f)?, b.family(g)?, b.sequence(sequence)?, n_max, m_max, exec)
        }
        Procedure::DctSimon { f, rho, tau, c } => {
            check_dct_simon(b.family(f)?, b.sequence(rho)?, b.sequence(tau)?, *c, n_max, m_max, exec)
        }
        Procedure::ConvexMixture { f, rho, sigma, p } => {
            check_convex_mixture(b.family(f)?, b.sequence(rho)?, b.sequence(sigma)?, p, n_max, m_max, exec)
        }
        Procedure::TruncationCriterion { family, sequence, schedule: kind, n_0 } => {
            let seq = b.sequence(sequence)?;
            let family = b.family(family)?;
            schedule(*kind, seq, m_max, n_max, exec)
                .and_then(|s| truncation_criterion(family, seq, &s, *n_0, n_max, m_max, exec))
        }
        Procedure::ValidateSchedule { sequence, schedule: kind } => {
            let seq = b.sequence(sequence)?;
            match schedule(*kind, seq, m_max, n_max, exec) {
                Ok(s) => validate_schedule(&s, seq, n_max, m_max, exec),
                Err(Error::Schedule(msg)) => {
                    let mut v = Verdict::builder("validate_schedule");
                    v.inequality("schedule construction", false, f64::NEG_INFINITY, msg);
                    Ok(v.finish())
                }
                Err(e) => Err(e),
            }
        }
        Procedure::ApproximationGrid { family, sequence, dominated } => {
            let scheme = match dominated {
                Some(d) => {
                    ApproximationScheme::DominatedTruncation { c: d.c, dominated: b.sequence(&d.sequence)?.clone() }
                }
                None => ApproximationScheme::SpectralTruncation,
            };
            approximation_grid_verdict(b.family(family)?, b.sequence(sequence)?, &scheme, n_max, m_max, exec)
        }
        Procedure::RelativeEntropyDomination { rho1, rho2, sigma1, sigma2, c_rho, c_sigma } => {
            relative_entropy_domination(
                b.sequence(rho1)?,
                b.sequence(rho2)?,
                b.sequence(sigma1)?,
                b.sequence(sigma2)?,
                *c_rho,
                *c_sigma,
                n_max,
                exec,
            )
        }
        Procedure::RelativeEntropySum { rho, sigma, omega, theta } => {
            let theta = theta.as_deref().map(|t| b.sequence(t)).transpose()?;
            relative_entropy_sum(b.sequence(rho)?, b.sequence(sigma)?, b.sequence(omega)?, theta, n_max, exec)
        }
        Procedure::ChannelMi { channel, rho, sigma, c, p, schedule: kind, n_0 } => {
            let rho = b.sequence(rho)?;
            let sched = match kind.map(|k| schedule(k, rho, m_max, n_max, exec)).transpose() {
                Ok(s) => s,
                Err(e) => return Ok(Err(e)),
            };
            let params = ChannelChecks {
                channels: b.channel(channel)?,
                rho,
                sigma: b.sequence(sigma)?,
                c: *c,
                p_seq: p.clone(),
                schedule: sched.as_ref(),
                n_0: *n_0,
                n_max,
            };
            channel_mi_checks(&params, exec)
        }
        Procedure::AppendixDomination { rho1, rho2, sigma1, sigma2, k } => appendix_domination(
            b.sequence(rho1)?,
            b.sequence(rho2)?,
            b.sequence(sigma1)?,
            b.sequence(sigma2)?,
            k,
            n_max,
            exec,
        ),
    })
}

fn run_check(check: &CheckSpec, b: &Bindings, opts: &RunOptions) -> Result<CheckReport> {
    let seq = b.sequence(check.run.primary_sequence())?;
    let (n_max, m_max) = window(check, opts, seq);
    let verdict = match execute(check, b, n_max, m_max, opts.exec)? {
        Ok(v) => v,
        // A broken operator domination is a failed premise stated by the scenario.
        Err(e @ Error::Domination { .. }) => Verdict::failed(check.run.name(), e.to_string()),
        Err(source) => return Err(CliError::Check { label: check.label.clone(), source }),
    };
    let observed = Expectation::observed(&verdict);
    Ok(CheckReport {
        label: check.label.clone(),
        procedure: check.run.name().into(),
        n_max,
        m_max,
        expected: check.expected,
        observed,
        matched: observed == check.expected,
        verdict,
    })
}

/// Resolves the scenario under `seed`, enforces the budget, runs every check and
/// compares each verdict with its expected status. Checks run concurrently; the
/// report keeps scenario order.
pub fn run_scenario(s: &Scenario, seed: u64, opts: &RunOptions) -> Result<Report> {
    s.validate()?;
    let bindings = s.resolve(seed)?;
    let cost = estimate_cost(s, &bindings, opts)?;
    if cost > opts.budget {
        return Err(CliError::Budget { estimate: cost, budget: opts.budget });
    }
    let results = map_range(opts.exec, s.checks.len(), |i| run_check(&s.checks[i], &bindings, opts));
    let checks = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Report::new(s.name.clone(), seed, checks))
}
