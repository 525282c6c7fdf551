//! Declarative scenario files and their resolution into live sequences and families.
//!
//! A scenario binds named operator sequences, channel sequences and functional
//! families, then lists checks that refer to those bindings by name. Every
//! parametric object is a named constructor with a parameter object; there is no
//! inline code. Random constructors draw from [`trial_rng`] keyed by the run seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use qdini_core::diagnostics::{FunctionalFamily, Modulus};
use qdini_core::dini::{normalize, OperatorSequence};
use qdini_core::operator::{MatrixJson, PositiveOperator, Projector};
use qdini_core::random::{random_channel, random_density, trial_rng};
use qdini_core::{Channel, ChannelSequence};
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};
use crate::report::Expectation;

pub const SCENARIO_VERSION: u32 = 1;

/// Window length used when neither the check nor the command line sets `n_max`.
pub const DEFAULT_N_MAX: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sequences: BTreeMap<String, SequenceSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub channels: BTreeMap<String, ChannelSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub families: BTreeMap<String, FamilySpec>,
    pub checks: Vec<CheckSpec>,
}

/// A single positive operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    Matrix {
        matrix: MatrixJson,
    },
    Diagonal {
        values: Vec<f64>,
    },
    /// Normalized `q^i` on the first `support` basis vectors (default: all).
    Geometric {
        dim: usize,
        ratio: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<usize>,
    },
    MaximallyMixed {
        dim: usize,
    },
    Basis {
        dim: usize,
        index: usize,
    },
    Zero {
        dim: usize,
    },
    Identity {
        dim: usize,
    },
    Scaled {
        factor: f64,
        of: Box<OperatorSpec>,
    },
    Sum {
        terms: Vec<OperatorSpec>,
    },
    /// Random state with Dirichlet spectrum and Haar eigenbasis.
    Random {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank: Option<usize>,
        stream: String,
    },
}

/// An operator sequence `n ↦ ρ_n`; index 0 is the limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceSpec {
    Constant {
        operator: OperatorSpec,
    },
    /// `operators[n]`, repeating the last entry.
    List {
        operators: Vec<OperatorSpec>,
    },
    /// `(1 − t_n) limit + t_n target` with `t_n = min(1, scale · n^(−power))`, `t_0 = 0`.
    Interpolate {
        limit: OperatorSpec,
        target: OperatorSpec,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        power: f64,
    },
    /// `members[(n − 1) mod len]` for `n ≥ 1`.
    Cycle {
        limit: OperatorSpec,
        members: Vec<OperatorSpec>,
    },
    /// Normalized `q^i` cut to the first `min(dim, base + n)` levels; the limit is uncut.
    TruncatedThermal {
        dim: usize,
        ratio: f64,
        base: usize,
    },
    /// `[Q ρ_n Q]` for the coordinate projector `Q` onto `indices`.
    Compressed {
        of: String,
        indices: Vec<usize>,
    },
    /// `(1 − p_n)` times the maximally mixed state on a reference block plus `p_n`
    /// times the uniform state on a disjoint block of size `d_n = ⌈e^n⌉`, with
    /// `p_n = 1 / ln d_n`. Defined for `n ≤ n_max`.
    EntropyDiscontinuity {
        reference_dim: usize,
        n_max: usize,
    },
    Scaled {
        of: String,
        factor: f64,
    },
    Sum {
        of: Vec<String>,
    },
    WithLimit {
        of: String,
        limit: OperatorSpec,
    },
    /// `(1 − t_n) limit + t_n ω_n` with `ω_n` an independent random state per `n`.
    RandomPerturbation {
        limit: OperatorSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank: Option<usize>,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        power: f64,
        stream: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelSpec {
    Identity {
        dim: usize,
    },
    Depolarizing {
        dim: usize,
        p: f64,
    },
    /// Depolarizing with parameter `min(1, scale/n)`; the limit is the identity.
    DepolarizingSequence {
        dim: usize,
        scale: f64,
    },
    Kraus {
        d_in: usize,
        d_out: usize,
        kraus: Vec<MatrixJson>,
    },
    /// Constant channel with `rank` Kraus operators cut from a random isometry.
    RandomKraus {
        d_in: usize,
        d_out: usize,
        rank: usize,
        stream: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Entropy,
    RelativeEntropy {
        sigma: String,
    },
    TraceNegLog {
        sigma: String,
    },
    ChannelMutualInformation {
        channel: String,
    },
    CoherentInformation {
        channel: String,
    },
    OutputEntropy {
        channel: String,
    },
    Scaled {
        factor: f64,
        of: String,
    },
    Shifted {
        offset: f64,
        of: String,
    },
    /// Overrides the function `G` of the generalized convergence condition.
    WithG {
        of: String,
        g: Modulus,
    },
}

/// Projector schedule constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    FixedBasis,
    Commuting,
}

/// A domination split `τ_n = c ρ_n + σ_n` for approximation grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominatedSpec {
    pub c: f64,
    pub sequence: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Procedure {
    DctBasic {
        f: String,
        g: String,
        sequence: String,
    },
    DctSimon {
        f: String,
        rho: String,
        tau: String,
        c: f64,
    },
    ConvexMixture {
        f: String,
        rho: String,
        sigma: String,
        p: Vec<f64>,
    },
    TruncationCriterion {
        family: String,
        sequence: String,
        schedule: ScheduleKind,
        #[serde(default = "one_usize")]
        n_0: usize,
    },
    ValidateSchedule {
        sequence: String,
        schedule: ScheduleKind,
    },
    ApproximationGrid {
        family: String,
        sequence: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dominated: Option<DominatedSpec>,
    },
    RelativeEntropyDomination {
        rho1: String,
        rho2: String,
        sigma1: String,
        sigma2: String,
        #[serde(default = "one")]
        c_rho: f64,
        #[serde(default = "one")]
        c_sigma: f64,
    },
    RelativeEntropySum {
        rho: String,
        sigma: String,
        omega: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<String>,
    },
    ChannelMi {
        channel: String,
        rho: String,
        sigma: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        p: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schedule: Option<ScheduleKind>,
        #[serde(default = "one_usize")]
        n_0: usize,
    },
    AppendixDomination {
        rho1: String,
        rho2: String,
        sigma1: String,
        sigma2: String,
        k: Vec<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub label: String,
    pub expected: Expectation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    pub run: Procedure,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Binding {
    Sequence,
    Channel,
    Family,
}

impl Binding {
    fn noun(self) -> &'static str {
        match self {
            Binding::Sequence => "sequence",
            Binding::Channel => "channel",
            Binding::Family => "family",
        }
    }
}

impl Procedure {
    pub fn name(&self) -> &'static str {
        match self {
            Procedure::DctBasic { .. } => "dct-basic",
            Procedure::DctSimon { .. } => "dct-simon",
            Procedure::ConvexMixture { .. } => "convex-mixture",
            Procedure::TruncationCriterion { .. } => "truncation-criterion",
            Procedure::ValidateSchedule { .. } => "validate-schedule",
            Procedure::ApproximationGrid { .. } => "approximation-grid",
            Procedure::RelativeEntropyDomination { .. } => "relative-entropy-domination",
            Procedure::RelativeEntropySum { .. } => "relative-entropy-sum",
            Procedure::ChannelMi { .. } => "channel-mi",
            Procedure::AppendixDomination { .. } => "appendix-domination",
        }
    }

    pub(crate) fn references(&self) -> Vec<(Binding, &str)> {
        use Binding::*;
        match self {
            Procedure::DctBasic { f, g, sequence } => vec![(Family, f), (Family, g), (Sequence, sequence)],
            Procedure::DctSimon { f, rho, tau, .. } => vec![(Family, f), (Sequence, rho), (Sequence, tau)],
            Procedure::ConvexMixture { f, rho, sigma, .. } => vec![(Family, f), (Sequence, rho), (Sequence, sigma)],
            Procedure::TruncationCriterion { family, sequence, .. } => vec![(Family, family), (Sequence, sequence)],
            Procedure::ValidateSchedule { sequence, .. } => vec![(Sequence, sequence)],
            Procedure::ApproximationGrid { family, sequence, dominated } => {
                let mut r = vec![(Family, family.as_str()), (Sequence, sequence.as_str())];
                if let Some(d) = dominated {
                    r.push((Sequence, &d.sequence));
                }
                r
            }
            Procedure::RelativeEntropyDomination { rho1, rho2, sigma1, sigma2, .. }
            | Procedure::AppendixDomination { rho1, rho2, sigma1, sigma2, .. } => {
                vec![(Sequence, rho1), (Sequence, rho2), (Sequence, sigma1), (Sequence, sigma2)]
            }
            Procedure::RelativeEntropySum { rho, sigma, omega, theta } => {
                let mut r = vec![(Sequence, rho.as_str()), (Sequence, sigma.as_str()), (Sequence, omega.as_str())];
                if let Some(t) = theta {
                    r.push((Sequence, t));
                }
                r
            }
            Procedure::ChannelMi { channel, rho, sigma, .. } => {
                vec![(Channel, channel), (Sequence, rho), (Sequence, sigma)]
            }
        }
    }

    /// The sequence whose dimension and diagonality drive the cost estimate.
    pub(crate) fn primary_sequence(&self) -> &str {
        match self {
            Procedure::DctBasic { sequence, .. }
            | Procedure::TruncationCriterion { sequence, .. }
            | Procedure::ValidateSchedule { sequence, .. }
            | Procedure::ApproximationGrid { sequence, .. } => sequence,
            Procedure::DctSimon { tau, .. } => tau,
            Procedure::ConvexMixture { rho, .. }
            | Procedure::RelativeEntropySum { rho, .. }
            | Procedure::ChannelMi { rho, .. } => rho,
            Procedure::RelativeEntropyDomination { rho1, .. } | Procedure::AppendixDomination { rho1, .. } => rho1,
        }
    }
}

impl SequenceSpec {
    fn references(&self) -> Vec<&str> {
        match self {
            SequenceSpec::Compressed { of, .. }
            | SequenceSpec::Scaled { of, .. }
            | SequenceSpec::WithLimit { of, .. } => {
                vec![of]
            }
            SequenceSpec::Sum { of } => of.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }
}

impl FamilySpec {
    fn references(&self) -> Vec<(Binding, &str)> {
        match self {
            FamilySpec::Entropy => Vec::new(),
            FamilySpec::RelativeEntropy { sigma } | FamilySpec::TraceNegLog { sigma } => {
                vec![(Binding::Sequence, sigma)]
            }
            FamilySpec::ChannelMutualInformation { channel }
            | FamilySpec::CoherentInformation { channel }
            | FamilySpec::OutputEntropy { channel } => vec![(Binding::Channel, channel)],
            FamilySpec::Scaled { of, .. } | FamilySpec::Shifted { of, .. } | FamilySpec::WithG { of, .. } => {
                vec![(Binding::Family, of)]
            }
        }
    }
}

fn geometric(dim: usize, ratio: f64, support: usize) -> Result<Vec<f64>> {
    if !(ratio > 0.0 && ratio.is_finite()) || support == 0 || support > dim {
        return Err(config(format!("geometric spectrum needs ratio > 0 and 1 <= support <= dim, got ratio {ratio}, support {support}, dim {dim}")));
    }
    let mut w: Vec<f64> = (0..support).map(|i| ratio.powi(i as i32)).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w.resize(dim, 0.0);
    Ok(w)
}

fn interpolation_weight(n: usize, scale: f64, power: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (scale * (n as f64).powf(-power)).clamp(0.0, 1.0)
    }
}

impl OperatorSpec {
    pub fn build(&self, seed: u64) -> Result<PositiveOperator> {
        Ok(match self {
            OperatorSpec::Matrix { matrix } => PositiveOperator::new(matrix.to_hermitian()?)?,
            OperatorSpec::Diagonal { values } => PositiveOperator::from_diagonal(values.clone())?,
            OperatorSpec::Geometric { dim, ratio, support } => {
                PositiveOperator::from_diagonal(geometric(*dim, *ratio, support.unwrap_or(*dim))?)?
            }
            OperatorSpec::MaximallyMixed { dim } => PositiveOperator::from_diagonal(vec![1.0 / *dim as f64; *dim])?,
            OperatorSpec::Basis { dim, index } => {
                if index >= dim {
                    return Err(config(format!("basis index {index} out of range for dim {dim}")));
                }
                let mut v = vec![0.0; *dim];
                v[*index] = 1.0;
                PositiveOperator::from_diagonal(v)?
            }
            OperatorSpec::Zero { dim } => PositiveOperator::zero(*dim),
            OperatorSpec::Identity { dim } => PositiveOperator::identity(*dim),
            OperatorSpec::Scaled { factor, of } => {
                if !(*factor >= 0.0 && factor.is_finite()) {
                    return Err(config(format!("scale factor must be non-negative, got {factor}")));
                }
                of.build(seed)?.scaled(*factor)?
            }
            OperatorSpec::Sum { terms } => {
                let (first, rest) = terms.split_first().ok_or_else(|| config("sum of no operators"))?;
                let mut acc = first.build(seed)?;
                for t in rest {
                    acc = acc.sum(&t.build(seed)?)?;
                }
                acc
            }
            OperatorSpec::Random { dim, rank, stream } => {
                let rank = rank.unwrap_or(*dim);
                if rank == 0 || rank > *dim {
                    return Err(config(format!("random state rank {rank} must lie in 1..={dim}")));
                }
                random_density(&mut trial_rng(seed, stream, 0), *dim, rank).into_inner()
            }
        })
    }
}

/// Live objects for every binding of a scenario.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    sequences: BTreeMap<String, OperatorSequence>,
    channels: BTreeMap<String, ChannelSequence>,
    families: BTreeMap<String, FunctionalFamily>,
}

impl Bindings {
    pub fn sequence(&self, name: &str) -> Result<&OperatorSequence> {
        self.sequences.get(name).ok_or_else(|| missing(Binding::Sequence, name, "scenario"))
    }

    pub fn channel(&self, name: &str) -> Result<&ChannelSequence> {
        self.channels.get(name).ok_or_else(|| missing(Binding::Channel, name, "scenario"))
    }

    pub fn family(&self, name: &str) -> Result<&FunctionalFamily> {
        self.families.get(name).ok_or_else(|| missing(Binding::Family, name, "scenario"))
    }
}

fn missing(kind: Binding, name: &str, at: &str) -> CliError {
    config(format!("{at}: unknown {} '{name}'", kind.noun()))
}

struct Resolver<'a> {
    scenario: &'a Scenario,
    seed: u64,
    out: Bindings,
    stack: Vec<String>,
}

impl Resolver<'_> {
    fn enter(&mut self, kind: Binding, name: &str) -> Result<()> {
        let key = format!("{}:{name}", kind.noun());
        if self.stack.contains(&key) {
            return Err(config(format!("cyclic {} binding '{name}'", kind.noun())));
        }
        self.stack.push(key);
        Ok(())
    }

    fn sequence(&mut self, name: &str, at: &str) -> Result<OperatorSequence> {
        if let Some(s) = self.out.sequences.get(name) {
            return Ok(s.clone());
        }
        let spec = self.scenario.sequences.get(name).ok_or_else(|| missing(Binding::Sequence, name, at))?;
        self.enter(Binding::Sequence, name)?;
        let at = format!("sequence '{name}'");
        let seq = self.build_sequence(name, spec, &at)?;
        self.stack.pop();
        self.out.sequences.insert(name.to_string(), seq.clone());
        Ok(seq)
    }

    fn build_sequence(&mut self, name: &str, spec: &SequenceSpec, at: &str) -> Result<OperatorSequence> {
        let seed = self.seed;
        let wrap = |e: CliError| config(format!("{at}: {e}"));
        Ok(match spec {
            SequenceSpec::Constant { operator } => {
                OperatorSequence::constant(operator.build(seed).map_err(wrap)?, name)
            }
            SequenceSpec::List { operators } => {
                let ops = operators.iter().map(|o| o.build(seed)).collect::<Result<Vec<_>>>().map_err(wrap)?;
                OperatorSequence::from_list(ops, name).map_err(|e| wrap(e.into()))?
            }
            SequenceSpec::Interpolate { limit, target, scale, power } => {
                let a = limit.build(seed).map_err(wrap)?;
                let b = target.build(seed).map_err(wrap)?;
                if a.dim() != b.dim() {
                    return Err(wrap(config(format!("limit has dim {}, target has dim {}", a.dim(), b.dim()))));
                }
                let (scale, power) = (*scale, *power);
                OperatorSequence::from_fn(a.dim(), name, move |n| {
                    PositiveOperator::mix(&a, &b, interpolation_weight(n, scale, power))
                })
            }
            SequenceSpec::Cycle { limit, members } => {
                let limit = limit.build(seed).map_err(wrap)?;
                let ops = members.iter().map(|o| o.build(seed)).collect::<Result<Vec<_>>>().map_err(wrap)?;
                if ops.is_empty() {
                    return Err(wrap(config("cycle needs at least one member")));
                }
                if let Some(bad) = ops.iter().find(|x| x.dim() != limit.dim()) {
                    return Err(wrap(config(format!(
                        "member dim {} differs from limit dim {}",
                        bad.dim(),
                        limit.dim()
                    ))));
                }
                OperatorSequence::from_fn(limit.dim(), name, move |n| {
                    Ok(if n == 0 { limit.clone() } else { ops[(n - 1) % ops.len()].clone() })
                })
            }
            SequenceSpec::TruncatedThermal { dim, ratio, base } => {
                let (dim, ratio, base) = (*dim, *ratio, *base);
                geometric(dim, ratio, dim).map_err(wrap)?;
                OperatorSequence::from_fn(dim, name, move |n| {
                    let k = if n == 0 { dim } else { (base + n).clamp(1, dim) };
                    let v = geometric(dim, ratio, k).expect("parameters validated");
                    PositiveOperator::from_diagonal(v)
                })
            }
            SequenceSpec::Compressed { of, indices } => {
                let inner = self.sequence(of, at)?;
                let dim = inner.dim();
                if let Some(i) = indices.iter().find(|&&i| i >= dim) {
                    return Err(wrap(config(format!("index {i} out of range for dim {dim}"))));
                }
                let q = Projector::coordinate(dim, indices.iter().copied());
                OperatorSequence::from_fn(dim, name, move |n| {
                    let x = q.compress(&inner.get(n)?)?;
                    Ok(match normalize(&x) {
                        Some(s) => s.into_inner(),
                        None => x,
                    })
                })
            }
            SequenceSpec::EntropyDiscontinuity { reference_dim, n_max } => {
                let (reference, n_max) = (*reference_dim, *n_max);
                if reference == 0 {
                    return Err(wrap(config("reference_dim must be positive")));
                }
                let block = |n: usize| (n as f64).exp().ceil() as usize;
                let dim = reference + block(n_max);
                OperatorSequence::from_fn(dim, name, move |n| {
                    if n > n_max {
                        return Err(qdini_core::Error::InvalidArgument(format!(
                            "entropy-discontinuity sequence is defined for n <= {n_max}, got n = {n}"
                        )));
                    }
                    let mut v = vec![0.0; dim];
                    let (d, p) = if n == 0 { (0, 0.0) } else { (block(n), 1.0 / (block(n) as f64).ln()) };
                    for x in v.iter_mut().take(reference) {
                        *x = (1.0 - p) / reference as f64;
                    }
                    for x in v.iter_mut().skip(reference).take(d) {
                        *x = p / d as f64;
                    }
                    PositiveOperator::from_diagonal(v)
                })
            }
            SequenceSpec::Scaled { of, factor } => {
                if !(*factor >= 0.0 && factor.is_finite()) {
                    return Err(wrap(config(format!("scale factor must be non-negative, got {factor}"))));
                }
                self.sequence(of, at)?.scaled(*factor, name)
            }
            SequenceSpec::Sum { of } => {
                let (first, rest) = of.split_first().ok_or_else(|| wrap(config("sum of no sequences")))?;
                let mut acc = self.sequence(first, at)?;
                for s in rest {
                    let next = self.sequence(s, at)?;
                    acc = acc.sum(&next, name).map_err(|e| wrap(e.into()))?;
                }
                acc.scaled(1.0, name)
            }
            SequenceSpec::WithLimit { of, limit } => {
                let limit = limit.build(seed).map_err(wrap)?;
                self.sequence(of, at)?.with_limit(limit, name).map_err(|e| wrap(e.into()))?
            }
            SequenceSpec::RandomPerturbation { limit, rank, scale, power, stream } => {
                let a = limit.build(seed).map_err(wrap)?;
                let dim = a.dim();
                let rank = rank.unwrap_or(dim);
                if rank == 0 || rank > dim {
                    return Err(wrap(config(format!("perturbation rank {rank} must lie in 1..={dim}"))));
                }
                let (scale, power, stream) = (*scale, *power, stream.clone());
                OperatorSequence::from_fn(dim, name, move |n| {
                    if n == 0 {
                        return Ok(a.clone());
                    }
                    let omega = random_density(&mut trial_rng(seed, &stream, n as u64), dim, rank);
                    PositiveOperator::mix(&a, omega.as_positive(), interpolation_weight(n, scale, power))
                })
            }
        })
    }

    fn channel(&mut self, name: &str, at: &str) -> Result<ChannelSequence> {
        if let Some(c) = self.out.channels.get(name) {
            return Ok(c.clone());
        }
        let spec = self.scenario.channels.get(name).ok_or_else(|| missing(Binding::Channel, name, at))?;
        let wrap = |e: qdini_core::Error| config(format!("channel '{name}': {e}"));
        let ch = match spec {
            ChannelSpec::Identity { dim } => ChannelSequence::constant(Channel::identity(*dim), name),
            ChannelSpec::Depolarizing { dim, p } => {
                ChannelSequence::constant(Channel::depolarizing(*dim, *p).map_err(wrap)?, name)
            }
            ChannelSpec::DepolarizingSequence { dim, scale } => ChannelSequence::depolarizing(*dim, *scale),
            ChannelSpec::Kraus { d_in, d_out, kraus } => {
                let ops =
                    kraus.iter().map(MatrixJson::to_matrix).collect::<qdini_core::Result<Vec<_>>>().map_err(wrap)?;
                let ch = Channel::from_kraus(ops).map_err(wrap)?;
                if ch.d_in() != *d_in || ch.d_out() != *d_out {
                    return Err(config(format!(
                        "channel '{name}': Kraus operators map {} -> {}, declared {d_in} -> {d_out}",
                        ch.d_in(),
                        ch.d_out()
                    )));
                }
                ChannelSequence::constant(ch, name)
            }
            ChannelSpec::RandomKraus { d_in, d_out, rank, stream } => {
                if *rank == 0 || *d_in == 0 || *d_out == 0 {
                    return Err(config(format!("channel '{name}': dimensions and rank must be positive")));
                }
                let ch = random_channel(&mut trial_rng(self.seed, stream, 0), *d_in, *d_out, *rank).map_err(wrap)?;
                ChannelSequence::constant(ch, name)
            }
        };
        self.out.channels.insert(name.to_string(), ch.clone());
        Ok(ch)
    }

    fn family(&mut self, name: &str, at: &str) -> Result<FunctionalFamily> {
        if let Some(f) = self.out.families.get(name) {
            return Ok(f.clone());
        }
        let spec = self.scenario.families.get(name).ok_or_else(|| missing(Binding::Family, name, at))?;
        self.enter(Binding::Family, name)?;
        let at = format!("family '{name}'");
        let f = match spec {
            FamilySpec::Entropy => FunctionalFamily::entropy(),
            FamilySpec::RelativeEntropy { sigma } => FunctionalFamily::relative_entropy(self.sequence(sigma, &at)?),
            FamilySpec::TraceNegLog { sigma } => FunctionalFamily::trace_neg_log(self.sequence(sigma, &at)?),
            FamilySpec::ChannelMutualInformation { channel } => {
                FunctionalFamily::channel_mutual_information(self.channel(channel, &at)?)
            }
            FamilySpec::CoherentInformation { channel } => {
                FunctionalFamily::coherent_information(self.channel(channel, &at)?)
            }
            FamilySpec::OutputEntropy { channel } => FunctionalFamily::output_entropy(self.channel(channel, &at)?),
            FamilySpec::Scaled { factor, of } => {
                if !(*factor >= 0.0 && factor.is_finite()) {
                    return Err(config(format!("{at}: scale factor must be non-negative, got {factor}")));
                }
                FunctionalFamily::scaled(*factor, self.family(of, &at)?)
            }
            FamilySpec::Shifted { offset, of } => {
                if !offset.is_finite() {
                    return Err(config(format!("{at}: offset must be finite")));
                }
                FunctionalFamily::shifted(*offset, self.family(of, &at)?)
            }
            FamilySpec::WithG { of, g } => {
                if !g.is_admissible() {
                    return Err(config(format!("{at}: modulus {} is not admissible", g.name())));
                }
                self.family(of, &at)?.with_g(g.clone())
            }
        };
        self.stack.pop();
        self.out.families.insert(name.to_string(), f.clone());
        Ok(f)
    }
}

impl Scenario {
    /// Builds every binding and checks that each check's references exist.
    pub fn resolve(&self, seed: u64) -> Result<Bindings> {
        if self.version != SCENARIO_VERSION {
            return Err(config(format!("unsupported scenario version {} (expected {SCENARIO_VERSION})", self.version)));
        }
        let mut r = Resolver { scenario: self, seed, out: Bindings::default(), stack: Vec::new() };
        for name in self.sequences.keys() {
            r.sequence(name, "scenario")?;
        }
        for name in self.channels.keys() {
            r.channel(name, "scenario")?;
        }
        for name in self.families.keys() {
            r.family(name, "scenario")?;
        }
        for check in &self.checks {
            for (kind, name) in check.run.references() {
                let present = match kind {
                    Binding::Sequence => r.out.sequences.contains_key(name),
                    Binding::Channel => r.out.channels.contains_key(name),
                    Binding::Family => r.out.families.contains_key(name),
                };
                if !present {
                    return Err(missing(kind, name, &format!("check '{}'", check.label)));
                }
            }
        }
        Ok(r.out)
    }

    /// Static reference check: every name used anywhere is bound.
    pub fn validate(&self) -> Result<()> {
        let has = |kind: Binding, name: &str| match kind {
            Binding::Sequence => self.sequences.contains_key(name),
            Binding::Channel => self.channels.contains_key(name),
            Binding::Family => self.families.contains_key(name),
        };
        for (name, spec) in &self.sequences {
            for r in spec.references() {
                if !has(Binding::Sequence, r) {
                    return Err(missing(Binding::Sequence, r, &format!("sequence '{name}'")));
                }
            }
        }
        for (name, spec) in &self.families {
            for (kind, r) in spec.references() {
                if !has(kind, r) {
                    return Err(missing(kind, r, &format!("family '{name}'")));
                }
            }
        }
        for check in &self.checks {
            for (kind, r) in check.run.references() {
                if !has(kind, r) {
                    return Err(missing(kind, r, &format!("check '{}'", check.label)));
                }
            }
        }
        let mut labels: Vec<&str> = self.checks.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(config(format!("duplicate check label '{}'", w[0])));
        }
        Ok(())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|source| CliError::Parse { path: origin.to_string(), source })?;
        s.validate()?;
        if s.version != SCENARIO_VERSION {
            return Err(config(format!(
                "{origin}: unsupported scenario version {} (expected {SCENARIO_VERSION})",
                s.version
            )));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    Scenario::from_json(&text, &path.display().to_string())
}
