use super::modulus::Modulus;
use crate::channel::{Channel, ChannelSequence};
use crate::dini::{normalize, OperatorSequence};
use crate::entropy::{relative_entropy, trace_neg_log, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::extended::ExtendedReal;
use crate::operator::PositiveOperator;

/// Which functional `f_n` a family evaluates.
#[derive(Clone, Debug)]
pub enum FamilyKind {
    /// `S(ρ)`.
    Entropy,
    /// `D(ρ ‖ σ_n)`.
    RelativeEntropy(OperatorSequence),
    /// `Tr ρ(−ln σ_n)`.
    TraceNegLog(OperatorSequence),
    /// `I(Φ_n, ρ)`.
    ChannelMutualInformation(ChannelSequence),
    /// `I_c(Φ_n, ρ)`.
    CoherentInformation(ChannelSequence),
    /// `S(Φ_n(ρ))`.
    OutputEntropy(ChannelSequence),
    /// `factor · inner_n(ρ)`.
    Scaled { factor: f64, inner: Box<FunctionalFamily> },
    /// `inner_n(ρ) + offset`.
    Shifted { offset: f64, inner: Box<FunctionalFamily> },
}

/// A sequence of functionals `f_n` with the moduli of its almost-affinity bounds:
/// `f(pρ + (1−p)σ) ≥ p f(ρ) + (1−p) f(σ) − a_f(p)` and, when `b_f` is present,
/// `f(pρ + (1−p)σ) ≤ p f(ρ) + (1−p) f(σ) + b_f(p)`.
#[derive(Clone, Debug)]
pub struct FunctionalFamily {
    name: String,
    kind: FamilyKind,
    a: Modulus,
    b: Option<Modulus>,
    g: Option<Modulus>,
}

impl FunctionalFamily {
    fn new(name: impl Into<String>, kind: FamilyKind, a: Modulus, b: Option<Modulus>) -> Self {
        Self { name: name.into(), kind, a, b, g: None }
    }

    pub fn entropy() -> Self {
        Self::new("entropy", FamilyKind::Entropy, Modulus::Zero, Some(Modulus::h2()))
    }

    pub fn relative_entropy(sigma: OperatorSequence) -> Self {
        let name = format!("relative-entropy(vs {})", sigma.label());
        Self::new(name, FamilyKind::RelativeEntropy(sigma), Modulus::h2(), Some(Modulus::Zero))
    }

    pub fn trace_neg_log(sigma: OperatorSequence) -> Self {
        let name = format!("trace-neg-log(vs {})", sigma.label());
        Self::new(name, FamilyKind::TraceNegLog(sigma), Modulus::Zero, Some(Modulus::Zero))
    }

    pub fn channel_mutual_information(channels: ChannelSequence) -> Self {
        let name = format!("channel-mi({})", channels.label());
        let b = Modulus::scaled(2.0, Modulus::h2());
        Self::new(name, FamilyKind::ChannelMutualInformation(channels), Modulus::Zero, Some(b))
    }

    pub fn coherent_information(channels: ChannelSequence) -> Self {
        let name = format!("coherent-info({})", channels.label());
        Self::new(name, FamilyKind::CoherentInformation(channels), Modulus::h2(), Some(Modulus::h2()))
    }

    pub fn output_entropy(channels: ChannelSequence) -> Self {
        let name = format!("output-entropy({})", channels.label());
        Self::new(name, FamilyKind::OutputEntropy(channels), Modulus::Zero, Some(Modulus::h2()))
    }

    /// `factor · f_n`, with both moduli scaled by `|factor|`.
    pub fn scaled(factor: f64, inner: FunctionalFamily) -> Self {
        let name = format!("{factor}*{}", inner.name);
        let k = factor.abs();
        let (a, b) = if factor >= 0.0 {
            (Modulus::scaled(k, inner.a.clone()), inner.b.clone().map(|b| Modulus::scaled(k, b)))
        } else {
            (
                inner.b.clone().map_or(Modulus::Zero, |b| Modulus::scaled(k, b)),
                Some(Modulus::scaled(k, inner.a.clone())),
            )
        };
        let g = inner.g.clone();
        let mut f = Self::new(name, FamilyKind::Scaled { factor, inner: Box::new(inner) }, a, b);
        f.g = g;
        f
    }

    /// `f_n + offset`, with the moduli of `f`.
    pub fn shifted(offset: f64, inner: FunctionalFamily) -> Self {
        let name = format!("{}+{offset}", inner.name);
        let (a, b, g) = (inner.a.clone(), inner.b.clone(), inner.g.clone());
        let mut f = Self::new(name, FamilyKind::Shifted { offset, inner: Box::new(inner) }, a, b);
        f.g = g;
        f
    }

    /// Overrides the `G_c` modulus used by the dominated-convergence check.
    pub fn with_g(mut self, g: Modulus) -> Self {
        self.g = Some(g);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn a(&self) -> &Modulus {
        &self.a
    }

    pub fn b(&self) -> Option<&Modulus> {
        self.b.as_ref()
    }

    /// `G_c`, defaulting to `x / c`.
    pub fn g_c(&self, c: f64) -> Modulus {
        self.g.clone().unwrap_or_else(|| Modulus::over_c(c))
    }

    /// Whether every `f_n` is non-negative.
    pub fn is_nonnegative(&self) -> bool {
        match &self.kind {
            FamilyKind::Entropy
            | FamilyKind::RelativeEntropy(_)
            | FamilyKind::ChannelMutualInformation(_)
            | FamilyKind::OutputEntropy(_) => true,
            FamilyKind::TraceNegLog(_) | FamilyKind::CoherentInformation(_) => false,
            FamilyKind::Scaled { factor, inner } => *factor >= 0.0 && inner.is_nonnegative(),
            FamilyKind::Shifted { offset, inner } => *offset >= 0.0 && inner.is_nonnegative(),
        }
    }

    /// Materializes the embedded sequence members for `n = 0..=n_max`.
    pub fn bind(&self, n_max: usize, exec: Execution) -> Result<BoundFamily> {
        let members = match &self.kind {
            FamilyKind::Entropy => Members::None,
            FamilyKind::RelativeEntropy(s) | FamilyKind::TraceNegLog(s) => Members::Operators(s.window(n_max, exec)?),
            FamilyKind::ChannelMutualInformation(c)
            | FamilyKind::CoherentInformation(c)
            | FamilyKind::OutputEntropy(c) => Members::Channels(try_map_range(exec, n_max + 1, |n| c.get(n))?),
            FamilyKind::Scaled { factor, inner } => Members::Scaled(*factor, Box::new(inner.bind(n_max, exec)?)),
            FamilyKind::Shifted { offset, inner } => Members::Shifted(*offset, Box::new(inner.bind(n_max, exec)?)),
        };
        Ok(BoundFamily { family: self.clone(), n_max, members })
    }
}

#[derive(Clone, Debug)]
enum Members {
    None,
    Operators(Vec<PositiveOperator>),
    Channels(Vec<Channel>),
    Scaled(f64, Box<BoundFamily>),
    Shifted(f64, Box<BoundFamily>),
}

/// A family with its sequence members materialized on a window.
#[derive(Clone, Debug)]
pub struct BoundFamily {
    family: FunctionalFamily,
    n_max: usize,
    members: Members,
}

impl BoundFamily {
    pub fn family(&self) -> &FunctionalFamily {
        &self.family
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn out_of_window(&self, n: usize) -> Error {
        Error::InvalidArgument(format!("index {n} outside the bound window 0..={}", self.n_max))
    }

    /// `f_n(x)`.
    pub fn value(&self, n: usize, x: &PositiveOperator) -> Result<ExtendedReal> {
        let op = |v: &Vec<PositiveOperator>| v.get(n).ok_or_else(|| self.out_of_window(n)).cloned();
        let ch = |v: &Vec<Channel>| v.get(n).ok_or_else(|| self.out_of_window(n)).cloned();
        Ok(match (&self.family.kind, &self.members) {
            (FamilyKind::Entropy, _) => ExtendedReal::finite(von_neumann_entropy(x)),
            (FamilyKind::RelativeEntropy(_), Members::Operators(v)) => relative_entropy(x, &op(v)?)?,
            (FamilyKind::TraceNegLog(_), Members::Operators(v)) => trace_neg_log(x, &op(v)?)?,
            (FamilyKind::ChannelMutualInformation(_), Members::Channels(v)) => {
                ExtendedReal::finite(ch(v)?.mutual_information(x)?)
            }
            (FamilyKind::CoherentInformation(_), Members::Channels(v)) => {
                ExtendedReal::finite(ch(v)?.coherent_information(x)?)
            }
            (FamilyKind::OutputEntropy(_), Members::Channels(v)) => ExtendedReal::finite(ch(v)?.output_entropy(x)?),
            (FamilyKind::Scaled { .. }, Members::Scaled(k, inner)) => match inner.value(n, x)? {
                ExtendedReal::Finite(v) => ExtendedReal::finite(k * v),
                ExtendedReal::PosInfinity if *k >= 0.0 => ExtendedReal::PosInfinity,
                ExtendedReal::PosInfinity => {
                    return Err(Error::InvalidArgument("negative multiple of +inf".into()));
                }
            },
            (FamilyKind::Shifted { .. }, Members::Shifted(c, inner)) => inner.value(n, x)?.add_f64(*c),
            _ => unreachable!("members match the family kind"),
        })
    }

    /// `f_n` at the normalized operator `[x]`; `f_n(0)` for zero `x`.
    pub fn value_normalized(&self, n: usize, x: &PositiveOperator) -> Result<ExtendedReal> {
        match normalize(x) {
            Some(s) => self.value(n, &s),
            None => self.value(n, &PositiveOperator::zero(x.dim())),
        }
    }

    /// Homogeneous extension `f̃_n(x) = Tr x · f_n([x])`, zero at `x = 0`.
    pub fn homogeneous(&self, n: usize, x: &PositiveOperator) -> Result<ExtendedReal> {
        match normalize(x) {
            Some(s) => Ok(self.value(n, &s)?.scale(x.trace())),
            None => Ok(ExtendedReal::ZERO),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DensityOperator;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_family_and_scaling() {
        let f = FunctionalFamily::entropy().bind(0, Execution::Sequential).unwrap();
        let rho = PositiveOperator::from_diagonal(vec![1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(f.homogeneous(0, &rho).unwrap().to_f64(), 2.0 * std::f64::consts::LN_2, epsilon = 1e-14);
        let g = FunctionalFamily::scaled(1.5, FunctionalFamily::entropy());
        assert_eq!(g.b().unwrap().name(), "1.5*h2");
        let gb = g.bind(0, Execution::Sequential).unwrap();
        let m = DensityOperator::maximally_mixed(2);
        assert_abs_diff_eq!(gb.value(0, &m).unwrap().to_f64(), 1.5 * std::f64::consts::LN_2, epsilon = 1e-14);
    }

    #[test]
    fn relative_entropy_family_uses_nth_member() {
        let sigma =
            OperatorSequence::from_fn(2, "s", |n| PositiveOperator::from_diagonal(vec![0.5, 0.5 / (n as f64 + 1.0)]));
        let f = FunctionalFamily::relative_entropy(sigma).bind(2, Execution::Sequential).unwrap();
        let rho = DensityOperator::basis_state(2, 1);
        let d0 = f.value(0, &rho).unwrap().to_f64();
        let d1 = f.value(1, &rho).unwrap().to_f64();
        assert_abs_diff_eq!(d0, -(0.5f64).ln() + 1.0 - 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d1, -(0.25f64).ln() + 0.75 - 1.0, epsilon = 1e-14);
        assert!(f.value(3, &rho).is_err());
        let zero = f.value_normalized(0, &PositiveOperator::zero(2)).unwrap();
        assert_abs_diff_eq!(zero.to_f64(), 1.0, epsilon = 1e-15);
    }
}
