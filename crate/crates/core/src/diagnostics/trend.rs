//! The finite-window trend rule used for every asymptotic claim.
//!
//! A residual series *shrinks* if it is numerically zero over its second half,
//! or if its last value is below half its first value and at least 60% of its
//! consecutive steps decrease. Nothing stronger is ever claimed.

use serde::{Deserialize, Serialize};

use super::real::{serde_real, serde_reals};

/// Residuals at or below this are treated as exactly zero.
pub const VANISHING_TOL: f64 = 1e-9;
/// Required ratio `last / first` for a shrinking series.
pub const SHRINK_RATIO: f64 = 0.5;
/// Required fraction of strictly decreasing steps.
pub const DECREASING_FRACTION: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    /// Second half of the window is within [`VANISHING_TOL`] of zero.
    Vanishing,
    /// Halved over the window with a decreasing majority of steps.
    Shrinking,
    NotShrinking,
    /// Fewer than two finite values.
    Insufficient,
}

impl Trend {
    pub fn shrinks(self) -> bool {
        matches!(self, Trend::Vanishing | Trend::Shrinking)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendSummary {
    pub trend: Trend,
    #[serde(with = "serde_real")]
    pub first: f64,
    #[serde(with = "serde_real")]
    pub last: f64,
    pub decreasing_steps: usize,
    pub steps: usize,
}

pub fn classify(values: &[f64]) -> TrendSummary {
    let first = values.first().copied().unwrap_or(f64::NAN);
    let last = values.last().copied().unwrap_or(f64::NAN);
    let steps = values.len().saturating_sub(1);
    let decreasing_steps = values.windows(2).filter(|w| w[1] < w[0]).count();
    let trend = if values.len() < 2 || values.iter().any(|v| v.is_nan()) {
        Trend::Insufficient
    } else if values.iter().any(|v| v.is_infinite()) && !last.is_finite() {
        Trend::NotShrinking
    } else {
        let half = values.len().div_ceil(2);
        let tail = &values[values.len() - half..];
        if tail.iter().all(|v| v.abs() <= VANISHING_TOL) {
            Trend::Vanishing
        } else if last < SHRINK_RATIO * first && decreasing_steps as f64 >= DECREASING_FRACTION * steps as f64 {
            Trend::Shrinking
        } else {
            Trend::NotShrinking
        }
    };
    TrendSummary { trend, first, last, decreasing_steps, steps }
}

/// A named residual series indexed from `start`, with its trend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries {
    pub name: String,
    pub start: usize,
    #[serde(with = "serde_reals")]
    pub values: Vec<f64>,
    pub summary: TrendSummary,
}

impl ResidualSeries {
    pub fn new(name: impl Into<String>, start: usize, values: Vec<f64>) -> Self {
        let summary = classify(&values);
        Self { name: name.into(), start, values, summary }
    }

    pub fn shrinks(&self) -> bool {
        self.summary.trend.shrinks()
    }
}

/// Largest value over the last `⌈len/2⌉` entries: the finite-window stand-in for a limsup.
pub fn windowed_max(values: &[f64]) -> f64 {
    let half = values.len().div_ceil(2);
    values[values.len() - half..].iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(classify(&[1.0, 0.5, 0.25, 0.1]).trend, Trend::Shrinking);
        assert_eq!(classify(&[1.0, 1.0, 1.0]).trend, Trend::NotShrinking);
        assert_eq!(classify(&[0.3, 0.0, 0.0, 0.0]).trend, Trend::Vanishing);
        assert_eq!(classify(&[1.0, 0.4, 0.6, 0.3, 0.4]).trend, Trend::NotShrinking);
        assert_eq!(classify(&[1.0, 0.4, 0.6, 0.3, 0.2]).trend, Trend::Shrinking);
        assert_eq!(classify(&[1.0]).trend, Trend::Insufficient);
        assert_eq!(classify(&[1.0, f64::INFINITY]).trend, Trend::NotShrinking);
    }

    #[test]
    fn windowed_max_uses_second_half() {
        assert_eq!(windowed_max(&[9.0, 1.0, 2.0, 0.5]), 2.0);
        assert_eq!(windowed_max(&[9.0, 1.0, 2.0]), 2.0);
    }
}
