//! Reals extended by `+∞`, used for relative entropies and trace-log terms.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite real or `+∞`. Serialized as a JSON number or the string `"+inf"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    pub fn finite(x: f64) -> Self {
        debug_assert!(x.is_finite(), "finite value expected, got {x}");
        ExtendedReal::Finite(x)
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    pub fn value(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            ExtendedReal::PosInfinity => None,
        }
    }

    /// The value as an `f64`, with `+∞` mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }

    // Inherent rather than `std::ops` so that `add` and the fallible `sub` read alike.
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Self) -> Self {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::PosInfinity,
        }
    }

    pub fn add_f64(self, x: f64) -> Self {
        self.add(ExtendedReal::Finite(x))
    }

    /// `self − other`; fails whenever `other` is infinite.
    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Self) -> Result<Self> {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => Ok(ExtendedReal::Finite(a - b)),
            (ExtendedReal::PosInfinity, ExtendedReal::Finite(_)) => Ok(ExtendedReal::PosInfinity),
            _ => Err(Error::InfiniteDifference),
        }
    }

    /// `c · self` for `c ≥ 0`, with `0 · ∞ = 0`.
    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c >= 0.0);
        match self {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(c * x),
            ExtendedReal::PosInfinity if c == 0.0 => ExtendedReal::ZERO,
            ExtendedReal::PosInfinity => ExtendedReal::PosInfinity,
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtendedReal::PosInfinity
        } else {
            ExtendedReal::Finite(x)
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => fmt::Display::fmt(x, f),
            ExtendedReal::PosInfinity => f.write_str("+inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(x) => s.serialize_f64(*x),
            ExtendedReal::PosInfinity => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ExtendedReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"+inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtendedReal, E> {
                match v {
                    "+inf" | "inf" => Ok(ExtendedReal::PosInfinity),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_order() {
        let inf = ExtendedReal::PosInfinity;
        let one = ExtendedReal::finite(1.0);
        assert!(one < inf);
        assert_eq!(one.add(inf), inf);
        assert_eq!(inf.sub(one).unwrap(), inf);
        assert!(inf.sub(inf).is_err());
        assert!(one.sub(inf).is_err());
        assert_eq!(inf.scale(0.0), ExtendedReal::ZERO);
        assert_eq!(one.max(inf), inf);
    }

    #[test]
    fn json_roundtrip() {
        let v = vec![ExtendedReal::finite(0.5), ExtendedReal::PosInfinity];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[0.5,"+inf"]"#);
        let back: Vec<ExtendedReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
