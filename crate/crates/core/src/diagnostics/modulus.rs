use serde::{Deserialize, Serialize};

use crate::entropy::binary_entropy;

/// Modulus functions `a_f`, `b_f` and `G_c`: non-negative, zero at zero and
/// non-decreasing on `[0, 1/2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Modulus {
    Zero,
    /// `h₂(p)`.
    BinaryEntropy,
    /// `slope · x`.
    Linear {
        slope: f64,
    },
    /// `factor · inner(x)`.
    Scaled {
        factor: f64,
        inner: Box<Modulus>,
    },
}

impl Modulus {
    pub fn h2() -> Self {
        Modulus::BinaryEntropy
    }

    pub fn scaled(factor: f64, inner: Modulus) -> Self {
        match inner {
            Modulus::Zero => Modulus::Zero,
            other => Modulus::Scaled { factor, inner: Box::new(other) },
        }
    }

    /// `G_c(x) = x / c`.
    pub fn over_c(c: f64) -> Self {
        Modulus::Linear { slope: 1.0 / c }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Modulus::Zero => 0.0,
            Modulus::BinaryEntropy => binary_entropy(x.clamp(0.0, 1.0)),
            Modulus::Linear { slope } => slope * x,
            Modulus::Scaled { factor, inner } => factor * inner.eval(x),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Modulus::Zero => "0".into(),
            Modulus::BinaryEntropy => "h2".into(),
            Modulus::Linear { slope } => format!("{slope}*x"),
            Modulus::Scaled { factor, inner } => format!("{factor}*{}", inner.name()),
        }
    }

    /// Spot-checks `m(0) = 0`, non-negativity and monotonicity on `[0, 1/2]`.
    pub fn is_admissible(&self) -> bool {
        if self.eval(0.0) != 0.0 {
            return false;
        }
        let grid: Vec<f64> = (0..=100).map(|i| self.eval(0.005 * i as f64)).collect();
        grid.iter().all(|&v| v >= 0.0) && grid.windows(2).all(|w| w[1] >= w[0] - 1e-15)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_admissibility() {
        let two_h2 = Modulus::scaled(2.0, Modulus::h2());
        assert_eq!(two_h2.name(), "2*h2");
        assert!((two_h2.eval(0.5) - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!(two_h2.is_admissible());
        assert!(Modulus::over_c(0.5).is_admissible());
        assert_eq!(Modulus::over_c(0.5).eval(0.3), 0.6);
        assert!(!Modulus::Linear { slope: -1.0 }.is_admissible());
        assert_eq!(Modulus::scaled(3.0, Modulus::Zero), Modulus::Zero);
    }
}
