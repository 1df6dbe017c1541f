//! Numeric backends: IEEE doubles for speed, exact rationals for
//! bit-exact comparisons against the oracle.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

/// Field operations the recursion needs.
pub trait Scalar: Num + Clone + PartialOrd + Send + Sync + fmt::Debug + 'static {
    fn ratio(num: u64, den: u64) -> Self;
    fn to_f64(&self) -> f64;
    fn into_probability(self) -> Probability;
}

impl Scalar for f64 {
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn into_probability(self) -> Probability {
        Probability::Float(self)
    }
}

impl Scalar for BigRational {
    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn into_probability(self) -> Probability {
        Probability::Rational(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Float,
    Rational,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Float => "float",
            Backend::Rational => "rational",
        })
    }
}

/// A marginal estimate in whichever backend produced it.
#[derive(Clone, Debug, PartialEq)]
pub enum Probability {
    Float(f64),
    Rational(BigRational),
}

impl Probability {
    pub fn to_f64(&self) -> f64 {
        match self {
            Probability::Float(x) => *x,
            Probability::Rational(r) => Scalar::to_f64(r),
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Probability::Rational(r) => Some(r),
            Probability::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Probability::Float(x) => *x == 0.0,
            Probability::Rational(r) => r.is_zero(),
        }
    }

    /// Exact comparison with 1/2 (floats compare exactly too).
    pub fn is_half(&self) -> bool {
        match self {
            Probability::Float(x) => *x == 0.5,
            Probability::Rational(r) => *r == BigRational::new(BigInt::one(), BigInt::from(2)),
        }
    }
}

/// Floats serialize as numbers, rationals as `"p/q"` strings.
impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Probability::Float(x) => s.serialize_f64(*x),
            Probability::Rational(r) => s.serialize_str(&r.to_string()),
        }
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probability::Float(x) => write!(f, "{x}"),
            Probability::Rational(r) => write!(f, "{r}"),
        }
    }
}
