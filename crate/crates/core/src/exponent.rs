use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exponent in `[1, ∞]` carrying its reciprocal, so that `1/∞ = 0`
/// arithmetic is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    value: f64,
    recip: f64,
}

impl Exponent {
    pub const ONE: Exponent = Exponent { value: 1.0, recip: 1.0 };
    pub const INFINITY: Exponent = Exponent { value: f64::INFINITY, recip: 0.0 };

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 1.0 {
            return Err(Error::InvalidArgument(format!("exponent {value} is not in [1, inf]")));
        }
        if value.is_infinite() {
            return Ok(Self::INFINITY);
        }
        Ok(Self { value, recip: 1.0 / value })
    }

    /// Builds the exponent whose reciprocal is `recip` (must be in `[0, 1]`).
    pub fn from_recip(recip: f64) -> Result<Self> {
        if !(0.0..=1.0 + 1e-12).contains(&recip) {
            return Err(Error::InvalidArgument(format!("reciprocal {recip} is not in [0, 1]")));
        }
        let recip = recip.min(1.0);
        if recip == 0.0 {
            Ok(Self::INFINITY)
        } else {
            Ok(Self { value: 1.0 / recip, recip })
        }
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn recip(self) -> f64 {
        self.recip
    }

    pub fn is_infinite(self) -> bool {
        self.recip == 0.0
    }

    /// Hölder conjugate `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(self) -> Self {
        Self::from_recip(1.0 - self.recip).expect("1 - recip lies in [0, 1]")
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.value)
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(Self::INFINITY),
            other => {
                let v: f64 = other.parse().map_err(|_| Error::Config(format!("cannot parse exponent '{other}'")))?;
                Self::new(v)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.value)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(v) => Exponent::new(v),
            Raw::Text(t) => t.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_arithmetic() {
        let q = Exponent::new(4.0).unwrap();
        assert_eq!(q.recip() * q.value(), 1.0);
        assert_eq!(Exponent::INFINITY.recip(), 0.0);
        assert_eq!(Exponent::ONE.conjugate(), Exponent::INFINITY);
        assert_eq!(Exponent::new(2.0).unwrap().conjugate().value(), 2.0);
    }

    #[test]
    fn rejects_below_one() {
        assert!(Exponent::new(0.5).is_err());
        assert!(Exponent::new(f64::NAN).is_err());
        assert!(Exponent::from_recip(1.5).is_err());
    }

    #[test]
    fn json_accepts_inf_string() {
        let e: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(e.is_infinite());
        let e: Exponent = serde_json::from_str("2.5").unwrap();
        assert_eq!(e.value(), 2.5);
        assert_eq!(serde_json::to_string(&Exponent::INFINITY).unwrap(), "\"inf\"");
    }
}
