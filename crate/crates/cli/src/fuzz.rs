//! Randomized checks of the entropy, relative-entropy, mutual-information and
//! ladder inequalities. Every trial draws from its own seeded stream, so a failing
//! trial is reproduced by `(suite, seed, trial)` alone.

use qdini_core::diagnostics::serde_real;
use qdini_core::dini::{normalize, truncated_state_entropy};
use qdini_core::entropy::{
    binary_entropy, binary_entropy_extension, mutual_information_relative, quantum_mutual_information,
    regularized_log_ladder, relative_entropy, subadditivity_slacks, trace_neg_log, von_neumann_entropy,
};
use qdini_core::exec::map_range;
use qdini_core::operator::{eigh, partial_trace_positive, PositiveOperator, Projector, Subsystem};
use qdini_core::random::{random_channel, random_density, random_hermitian, random_positive, trial_rng};
use qdini_core::{Channel, Execution, ExtendedReal};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};
use crate::report::TOOL;

/// Largest violation tolerated before a trial counts as a failure.
pub const FUZZ_TOL: f64 = 1e-8;

/// Tolerance of the ladder convergence check once `k_max · λ_min(σ) ≥ 10⁸`.
pub const LADDER_LIMIT_TOL: f64 = 1e-6;

/// At most this many failures are listed individually.
const MAX_LISTED_FAILURES: usize = 100;

const BIPARTITE_MAX: usize = 4;

type Trial = fn(&mut ChaCha8Rng, usize) -> qdini_core::Result<(usize, Vec<Option<f64>>)>;

struct Suite {
    name: &'static str,
    inequalities: &'static [&'static str],
    trial: Trial,
}

const SUITES: &[Suite] = &[
    Suite {
        name: "entropy",
        inequalities: &[
            "S(p rho + (1-p) sigma) <= p S(rho) + (1-p) S(sigma) + h2(p)",
            "S(p rho + (1-p) sigma) >= p S(rho) + (1-p) S(sigma)",
            "S(x) + S(y) <= S(x + y)",
            "S(x + y) <= S(x) + S(y) + H({Tr x, Tr y})",
            "S(c x) = c S(x)",
            "S(P rho P) + S(Pbar rho Pbar) <= S(rho)",
            "S([Psi_m rho]) <= ln m",
        ],
        trial: entropy_trial,
    },
    Suite {
        name: "relative-entropy",
        inequalities: &[
            "D(x||w) >= 0",
            "D(c x||c w) = c D(x||w)",
            "D(x||c w) - D(x||w) = -Tr x ln c + (c-1) Tr w",
            "D(x+y||w) >= D(x||w) + D(y||w) - Tr w",
            "D(x+y||w) <= D(x||w) + D(y||w) + H({Tr x, Tr y}) - Tr w",
            "D(x||w+t) <= D(x||w) + Tr t",
            "D(p rho + (1-p) sigma||w) >= p D(rho||w) + (1-p) D(sigma||w) - h2(p)",
            "D(p rho + (1-p) sigma||w) <= p D(rho||w) + (1-p) D(sigma||w)",
        ],
        trial: relative_entropy_trial,
    },
    Suite {
        name: "mutual-information",
        inequalities: &[
            "I(A:B) <= 2 min(S(A), S(B))",
            "I(A:B) >= 0",
            "S(A) + S(B) - S(AB) = D(rho_AB||rho_A x rho_B)",
            "I(Phi, rho) <= 2 min(S(rho), S(Phi(rho)))",
            "I(Id, rho) = 2 S(rho)",
        ],
        trial: mutual_information_trial,
    },
    Suite {
        name: "channel",
        inequalities: &[
            "I(Psi o Phi, rho) <= I(Phi, rho)",
            "I(Phi, p rho + (1-p) sigma) <= p I(Phi, rho) + (1-p) I(Phi, sigma) + 2 h2(p)",
            "I(Phi, p rho + (1-p) sigma) >= p I(Phi, rho) + (1-p) I(Phi, sigma)",
            "S(Phi(rho)) <= S(rho) + ln(Choi rank)",
        ],
        trial: channel_trial,
    },
    Suite {
        name: "ladder",
        inequalities: &[
            "a_k non-decreasing in k",
            "a_k <= Tr rho(-ln sigma)",
            "|a_kmax - Tr rho(-ln sigma)| <= 1e-6 when k_max lambda_min(sigma) >= 1e8",
        ],
        trial: ladder_trial,
    },
];

/// Registered suite names, including the aggregate `all`.
pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).chain(["all"]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityStats {
    pub suite: String,
    pub inequality: String,
    /// Trials where both sides were comparable.
    pub evaluated: usize,
    /// Trials where the inequality held trivially (an infinite right-hand side or an
    /// excluded `+∞` case).
    pub vacuous: usize,
    pub violations: usize,
    /// `+inf` when nothing was evaluated.
    #[serde(with = "serde_real")]
    pub min_slack: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_trial: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzFailure {
    pub suite: String,
    pub inequality: String,
    pub seed: u64,
    pub trial: u64,
    pub dim: usize,
    #[serde(with = "serde_real")]
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub tool: String,
    pub version: String,
    pub suite: String,
    pub dim: usize,
    pub trials: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub inequalities: Vec<InequalityStats>,
    pub violations: usize,
    pub failures: Vec<FuzzFailure>,
    pub passed: bool,
}

impl FuzzReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Runs `trials` random instances of a suite (or of every suite for `all`) with
/// dimensions drawn from `2..=dim`; bipartite instances use factors up to 4.
pub fn inequality_fuzz(suite: &str, dim: usize, trials: u64, seed: u64, exec: Execution) -> Result<FuzzReport> {
    let selected: Vec<&Suite> = if suite == "all" {
        SUITES.iter().collect()
    } else {
        let s = SUITES.iter().find(|s| s.name == suite).ok_or_else(|| CliError::UnknownSuite {
            name: suite.to_string(),
            available: suite_names().into_iter().map(String::from).collect(),
        })?;
        vec![s]
    };
    if dim < 2 {
        return Err(config(format!("fuzz dimension must be at least 2, got {dim}")));
    }
    let mut inequalities = Vec::new();
    let mut failures = Vec::new();
    let mut violations = 0;
    for s in selected {
        let outcomes = map_range(exec, trials as usize, |t| {
            let mut rng = trial_rng(seed, s.name, t as u64);
            (s.trial)(&mut rng, dim)
        });
        let outcomes = outcomes.into_iter().collect::<qdini_core::Result<Vec<_>>>()?;
        for (i, name) in s.inequalities.iter().enumerate() {
            let mut st = InequalityStats {
                suite: s.name.into(),
                inequality: (*name).into(),
                evaluated: 0,
                vacuous: 0,
                violations: 0,
                min_slack: f64::INFINITY,
                worst_trial: None,
            };
            for (t, (d, slacks)) in outcomes.iter().enumerate() {
                let Some(slack) = slacks[i] else {
                    st.vacuous += 1;
                    continue;
                };
                st.evaluated += 1;
                if slack < st.min_slack || slack.is_nan() {
                    st.min_slack = slack;
                    st.worst_trial = Some(t as u64);
                }
                if slack.is_nan() || slack < -FUZZ_TOL {
                    st.violations += 1;
                    if failures.len() < MAX_LISTED_FAILURES {
                        failures.push(FuzzFailure {
                            suite: s.name.into(),
                            inequality: (*name).into(),
                            seed,
                            trial: t as u64,
                            dim: *d,
                            slack,
                        });
                    }
                }
            }
            violations += st.violations;
            inequalities.push(st);
        }
    }
    Ok(FuzzReport {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        suite: suite.into(),
        dim,
        trials,
        seed,
        tolerance: FUZZ_TOL,
        inequalities,
        violations,
        failures,
        passed: violations == 0,
    })
}

/// `rhs − lhs` for `lhs ≤ rhs`; `None` when the right side is `+∞`.
fn le(lhs: ExtendedReal, rhs: ExtendedReal) -> Option<f64> {
    match (lhs, rhs) {
        (_, ExtendedReal::PosInfinity) => None,
        (ExtendedReal::PosInfinity, _) => Some(f64::NEG_INFINITY),
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => Some(b - a),
    }
}

/// `−|a − b|`, with two infinities counted as equal.
fn eq(a: ExtendedReal, b: ExtendedReal) -> Option<f64> {
    match (a, b) {
        (ExtendedReal::Finite(x), ExtendedReal::Finite(y)) => Some(-(x - y).abs()),
        (ExtendedReal::PosInfinity, ExtendedReal::PosInfinity) => None,
        _ => Some(f64::NEG_INFINITY),
    }
}

fn fin(x: f64) -> ExtendedReal {
    ExtendedReal::Finite(x)
}

/// Full rank with probability 2/3, otherwise a uniformly drawn lower rank.
fn rank<R: Rng>(rng: &mut R, dim: usize) -> usize {
    if dim > 1 && rng.random_bool(1.0 / 3.0) {
        rng.random_range(1..dim)
    } else {
        dim
    }
}

fn state<R: Rng>(rng: &mut R, dim: usize) -> PositiveOperator {
    let r = rank(rng, dim);
    random_density(rng, dim, r).into_inner()
}

fn positive<R: Rng>(rng: &mut R, dim: usize) -> PositiveOperator {
    let r = rank(rng, dim);
    let t = rng.random_range(0.2..2.0);
    random_positive(rng, dim, r, t)
}

fn weight<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(0.01..0.99)
}

fn entropy_trial(rng: &mut ChaCha8Rng, max_dim: usize) -> qdini_core::Result<(usize, Vec<Option<f64>>)> {
    let d = rng.random_range(2..=max_dim);
    let (rho, sigma, p) = (state(rng, d), state(rng, d), weight(rng));
    let mix = PositiveOperator::mix(&sigma, &rho, p)?;
    let avg = p * von_neumann_entropy(&rho) + (1.0 - p) * von_neumann_entropy(&sigma);
    let s_mix = von_neumann_entropy(&mix);

    let (x, y) = (positive(rng, d), positive(rng, d));
    let (lower, upper) = subadditivity_slacks(&x, &y)?;
    let c = rng.random_range(0.1..5.0);
    let homogeneity = -(von_neumann_entropy(&x.scaled(c)?) - c * von_neumann_entropy(&x)).abs();

    let k = rng.random_range(1..d);
    let p_proj = Projector::spectral(&eigh(&random_hermitian(rng, d), None)?, 0..k);
    let ozawa = von_neumann_entropy(&rho)
        - von_neumann_entropy(&p_proj.compress(&rho)?)
        - von_neumann_entropy(&p_proj.complement().compress(&rho)?);

    let m = rng.random_range(1..=d);
    let truncated = (m as f64).ln() - truncated_state_entropy(&rho, m)?;

    Ok((
        d,
        vec![
            Some(avg + binary_entropy(p) - s_mix),
            Some(s_mix - avg),
            Some(lower),
            Some(upper),
            Some(homogeneity),
            Some(ozawa),
            Some(truncated),
        ],
    ))
}

fn relative_entropy_trial(rng: &mut ChaCha8Rng, max_dim: usize) -> qdini_core::Result<(usize, Vec<Option<f64>>)> {
    let d = rng.random_range(2..=max_dim);
    let (x, y, w, t) = (positive(rng, d), positive(rng, d), positive(rng, d), positive(rng, d));
    let c = rng.random_range(0.1..3.0);
    let p = weight(rng);
    let dx = relative_entropy(&x, &w)?;
    let dy = relative_entropy(&y, &w)?;
    let xy = x.sum(&y)?;
    let dxy = relative_entropy(&xy, &w)?;
    let (trx, tr_w) = (x.trace(), w.trace());

    let nonneg = match dx {
        ExtendedReal::Finite(v) => Some(v),
        ExtendedReal::PosInfinity => None,
    };
    let scaling = eq(relative_entropy(&x.scaled(c)?, &w.scaled(c)?)?, dx.scale(c));
    let shift = eq(relative_entropy(&x, &w.scaled(c)?)?, dx.add_f64(-trx * c.ln() + (c - 1.0) * tr_w));
    // The lower bound is asserted only when every term is finite.
    let lower = if dx.is_finite() && dy.is_finite() { le(dx.add(dy).add_f64(-tr_w), dxy) } else { None };
    let h = binary_entropy_extension(trx, y.trace())?;
    let upper = le(dxy, dx.add(dy).add_f64(h - tr_w));
    let theta = le(relative_entropy(&x, &w.sum(&t)?)?, dx.add_f64(t.trace()));

    let rho = normalize(&x).expect("non-zero").into_inner();
    let sigma = normalize(&y).expect("non-zero").into_inner();
    let mix = PositiveOperator::mix(&sigma, &rho, p)?;
    let dm = relative_entropy(&mix, &w)?;
    let avg = relative_entropy(&rho, &w)?.scale(p).add(relative_entropy(&sigma, &w)?.scale(1.0 - p));
    let laa = le(avg.add_f64(-binary_entropy(p)), dm);
    let convex = le(dm, avg);

    Ok((d, vec![nonneg, scaling, shift, lower, upper, theta, laa, convex]))
}

fn mutual_information_trial(rng: &mut ChaCha8Rng, max_dim: usize) -> qdini_core::Result<(usize, Vec<Option<f64>>)> {
    let top = max_dim.min(BIPARTITE_MAX);
    let (da, db) = (rng.random_range(2..=top), rng.random_range(2..=top));
    let ab = state(rng, da * db);
    let sa = von_neumann_entropy(&partial_trace_positive(&ab, da, db, Subsystem::A)?);
    let sb = von_neumann_entropy(&partial_trace_positive(&ab, da, db, Subsystem::B)?);
    let i = quantum_mutual_information(&ab, da, db)?;
    let formulas = eq(fin(i), mutual_information_relative(&ab, da, db)?);

    let d = rng.random_range(2..=max_dim);
    let d_out = rng.random_range(2..=max_dim);
    let kraus = kraus_count(rng, d, d_out);
    let phi = random_channel(rng, d, d_out, kraus)?;
    let rho = state(rng, d);
    let s_rho = von_neumann_entropy(&rho);
    let mi = phi.mutual_information(&rho)?;
    let bound = 2.0 * s_rho.min(phi.output_entropy(&rho)?) - mi;
    let identity = -(Channel::identity(d).mutual_information(&rho)? - 2.0 * s_rho).abs();

    Ok((da * db, vec![Some(2.0 * sa.min(sb) - i), Some(i), formulas, Some(bound), Some(identity)]))
}

/// Between 1 and 3 Kraus operators, but at least enough for a `d_in → d_out` isometry.
fn kraus_count(rng: &mut ChaCha8Rng, d_in: usize, d_out: usize) -> usize {
    let lo = d_in.div_ceil(d_out);
    rng.random_range(lo..=lo.max(3))
}

fn channel_trial(rng: &mut ChaCha8Rng, max_dim: usize) -> qdini_core::Result<(usize, Vec<Option<f64>>)> {
    let d_in = rng.random_range(2..=max_dim);
    let d_mid = rng.random_range(2..=max_dim);
    let d_out = rng.random_range(2..=max_dim);
    let (k1, k2) = (kraus_count(rng, d_in, d_mid), kraus_count(rng, d_mid, d_out));
    let phi = random_channel(rng, d_in, d_mid, k1)?;
    let psi = random_channel(rng, d_mid, d_out, k2)?;
    let (rho, sigma, p) = (state(rng, d_in), state(rng, d_in), weight(rng));

    let i_rho = phi.mutual_information(&rho)?;
    let i_sigma = phi.mutual_information(&sigma)?;
    let chain = i_rho - phi.compose(&psi)?.mutual_information(&rho)?;
    let i_mix = phi.mutual_information(&PositiveOperator::mix(&sigma, &rho, p)?)?;
    let avg = p * i_rho + (1.0 - p) * i_sigma;
    let choi = von_neumann_entropy(&rho) + (phi.choi_rank() as f64).ln() - phi.output_entropy(&rho)?;

    Ok((d_in, vec![Some(chain), Some(avg + 2.0 * binary_entropy(p) - i_mix), Some(i_mix - avg), Some(choi)]))
}

/// `1, 10, 100, …` below `k_max`, then `k_max`.
fn ladder_schedule(k_max: u64) -> Vec<u64> {
    let mut ks: Vec<u64> =
        std::iter::successors(Some(1u64), |k| k.checked_mul(10)).take_while(|&k| k < k_max).collect();
    ks.push(k_max);
    ks
}

fn ladder_trial(rng: &mut ChaCha8Rng, max_dim: usize) -> qdini_core::Result<(usize, Vec<Option<f64>>)> {
    let d = rng.random_range(2..=max_dim);
    let rho = state(rng, d);
    // A quarter of the trials break the support of sigma, where the ladder diverges.
    let sigma_rank = if rng.random_bool(0.25) { rng.random_range(1..d) } else { d };
    let trace = rng.random_range(0.2..2.0);
    let sigma = random_positive(rng, d, sigma_rank, trace);
    let lambda_min = sigma.eigenvalues()[sigma_rank - 1].max(1e-12);
    let k_max = (1e8 / lambda_min).ceil().min(1e15) as u64;
    let ladder = regularized_log_ladder(&rho, &sigma, &ladder_schedule(k_max))?;
    let monotone = -ladder.max_decrease();
    let top = *ladder.a_k.last().expect("non-empty schedule");
    let below = le(fin(top), ladder.limit_estimate);
    let limit = trace_neg_log(&rho, &sigma)?;
    let converged = match (sigma_rank == d, limit) {
        (true, ExtendedReal::Finite(v)) if k_max as f64 * lambda_min >= 1e8 => Some(LADDER_LIMIT_TOL - (top - v).abs()),
        _ => None,
    };
    Ok((d, vec![Some(monotone), below, converged]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_give_an_empty_passing_report() {
        let r = inequality_fuzz("entropy", 4, 0, 1, Execution::Sequential).unwrap();
        assert!(r.passed);
        assert!(r.inequalities.iter().all(|s| s.evaluated == 0 && s.min_slack == f64::INFINITY));
    }

    #[test]
    fn unknown_suite_lists_registry() {
        let err = inequality_fuzz("nope", 4, 1, 1, Execution::Sequential).unwrap_err().to_string();
        assert!(err.contains("relative-entropy"), "{err}");
    }

    #[test]
    fn ladder_schedule_is_increasing() {
        assert_eq!(ladder_schedule(250), vec![1, 10, 100, 250]);
        assert_eq!(ladder_schedule(100), vec![1, 10, 100]);
    }

    #[test]
    fn small_runs_pass_and_agree_across_modes() {
        for suite in suite_names() {
            let a = inequality_fuzz(suite, 4, 20, 7, Execution::Parallel).unwrap();
            let b = inequality_fuzz(suite, 4, 20, 7, Execution::Sequential).unwrap();
            assert!(a.passed, "{}", a.to_json().unwrap());
            assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        }
    }
}
