use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::operator::{DensityOperator, PositiveOperator};

type Generator = dyn Fn(usize) -> Result<PositiveOperator> + Send + Sync;

/// An indexed family `n ↦ ρ_n` of positive operators; index 0 is the declared limit.
#[derive(Clone)]
pub struct OperatorSequence {
    dim: usize,
    label: String,
    generator: Arc<Generator>,
}

impl fmt::Debug for OperatorSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorSequence").field("label", &self.label).field("dim", &self.dim).finish()
    }
}

impl OperatorSequence {
    pub fn from_fn(
        dim: usize,
        label: impl Into<String>,
        f: impl Fn(usize) -> Result<PositiveOperator> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, label: label.into(), generator: Arc::new(f) }
    }

    pub fn constant(op: PositiveOperator, label: impl Into<String>) -> Self {
        Self::from_fn(op.dim(), label, move |_| Ok(op.clone()))
    }

    /// `items[n]`, repeating the last item beyond the list.
    pub fn from_list(items: Vec<PositiveOperator>, label: impl Into<String>) -> Result<Self> {
        let dim = items.first().ok_or_else(|| Error::InvalidArgument("empty operator list".into()))?.dim();
        if let Some(bad) = items.iter().find(|x| x.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.dim() });
        }
        let items = Arc::new(items);
        Ok(Self::from_fn(dim, label, move |n| Ok(items[n.min(items.len() - 1)].clone())))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn get(&self, n: usize) -> Result<PositiveOperator> {
        let x = (self.generator)(n)?;
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.dim() });
        }
        Ok(x)
    }

    pub fn limit(&self) -> Result<PositiveOperator> {
        self.get(0)
    }

    /// The state `ρ_n`, failing unless it has unit trace.
    pub fn state(&self, n: usize) -> Result<DensityOperator> {
        DensityOperator::new(self.get(n)?)
    }

    /// Members `0..=n_max`, generated in parallel when requested.
    pub fn window(&self, n_max: usize, exec: Execution) -> Result<Vec<PositiveOperator>> {
        try_map_range(exec, n_max + 1, |n| self.get(n))
    }

    /// `n ↦ c·ρ_n`.
    pub fn scaled(&self, c: f64, label: impl Into<String>) -> Self {
        let inner = self.clone();
        Self::from_fn(self.dim, label, move |n| inner.get(n)?.scaled(c))
    }

    /// `n ↦ ρ_n + σ_n`.
    pub fn sum(&self, other: &OperatorSequence, label: impl Into<String>) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: other.dim });
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(Self::from_fn(self.dim, label, move |n| a.get(n)?.sum(&b.get(n)?)))
    }

    /// Same members for `n ≥ 1`, with the declared limit replaced.
    pub fn with_limit(&self, limit: PositiveOperator, label: impl Into<String>) -> Result<Self> {
        if limit.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: limit.dim() });
        }
        let inner = self.clone();
        Ok(Self::from_fn(self.dim, label, move |n| if n == 0 { Ok(limit.clone()) } else { inner.get(n) }))
    }
}
