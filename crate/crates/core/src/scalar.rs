//! Exact rational scalars and norm values.
//!
//! Every weight, measure and integral in the crate is a [`Scalar`]. Norms
//! that involve a q-th root are carried as [`NormValue`], which stays exact
//! for q = 1 (the value itself) and q = 2 (the exact square), and falls back
//! to a tagged `f64` for other exponents.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Scalar = BigRational;

/// Declared relative precision of approximate norm values.
pub const APPROX_PRECISION: f64 = 1e-12;

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn frac(num: i64, den: i64) -> Scalar {
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

/// `base^exp` for a possibly negative integer exponent.
pub fn pow_i(base: u32, exp: i64) -> Scalar {
    let magnitude = BigInt::from(base).pow(exp.unsigned_abs() as u32);
    if exp >= 0 {
        Scalar::from_integer(magnitude)
    } else {
        Scalar::new(BigInt::one(), magnitude)
    }
}

/// Integer power of a scalar.
pub fn powu(x: &Scalar, exp: u32) -> Scalar {
    let mut acc = Scalar::one();
    for _ in 0..exp {
        acc *= x;
    }
    acc
}

pub fn to_f64(x: &Scalar) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Formats as `p/q`, always with an explicit denominator.
pub fn format_scalar(x: &Scalar) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("not an integer: {t:?}")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let q = parse_int(q)?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Scalar::new(parse_int(p)?, q))
        }
        None => Ok(Scalar::from_integer(parse_int(s)?)),
    }
}

/// Value of a norm-like quantity.
#[derive(Clone, Debug)]
pub enum NormValue {
    /// The value itself, exactly.
    Exact(Scalar),
    /// A nonnegative value given by its exact square.
    Sqrt(Scalar),
    /// Floating-point value with relative error at most [`APPROX_PRECISION`].
    Approx(f64),
}

impl NormValue {
    pub fn zero() -> Self {
        NormValue::Exact(Scalar::zero())
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, NormValue::Approx(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            NormValue::Exact(x) | NormValue::Sqrt(x) => x.is_zero(),
            NormValue::Approx(v) => *v == 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            NormValue::Exact(x) => to_f64(x),
            NormValue::Sqrt(x) => to_f64(x).sqrt(),
            NormValue::Approx(v) => *v,
        }
    }

    /// The exact value, when it is rational.
    pub fn exact(&self) -> Option<&Scalar> {
        match self {
            NormValue::Exact(x) => Some(x),
            _ => None,
        }
    }

    /// The exact square of the value, when available.
    pub fn exact_square(&self) -> Option<Scalar> {
        match self {
            NormValue::Exact(x) => Some(x * x),
            NormValue::Sqrt(x) => Some(x.clone()),
            NormValue::Approx(_) => None,
        }
    }

    /// Total order; exact whenever neither side is approximate.
    ///
    /// Values are assumed nonnegative, so comparing squares is sound.
    pub fn cmp_value(&self, other: &NormValue) -> Ordering {
        match (self, other) {
            (NormValue::Exact(a), NormValue::Exact(b)) => a.cmp(b),
            (NormValue::Approx(_), _) | (_, NormValue::Approx(_)) => {
                self.to_f64().total_cmp(&other.to_f64())
            }
            _ => self
                .exact_square()
                .unwrap()
                .cmp(&other.exact_square().unwrap()),
        }
    }

    pub fn scale(&self, factor: &Scalar) -> NormValue {
        let factor = factor.abs();
        match self {
            NormValue::Exact(x) => NormValue::Exact(x * &factor),
            NormValue::Sqrt(x) => NormValue::Sqrt(x * &factor * &factor),
            NormValue::Approx(v) => NormValue::Approx(v * to_f64(&factor)),
        }
    }
}

impl PartialEq for NormValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Exact(x) => write!(f, "{}", format_scalar(x)),
            NormValue::Sqrt(x) => write!(f, "sqrt({}) ~ {:.12}", format_scalar(x), self.to_f64()),
            NormValue::Approx(v) => write!(f, "~{v:.12}"),
        }
    }
}

impl Serialize for NormValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        match self {
            NormValue::Exact(x) => {
                map.serialize_entry("mode", "exact")?;
                map.serialize_entry("value", &format_scalar(x))?;
            }
            NormValue::Sqrt(x) => {
                map.serialize_entry("mode", "exact-sqrt")?;
                map.serialize_entry("square", &format_scalar(x))?;
                map.serialize_entry("value", &self.to_f64())?;
            }
            NormValue::Approx(v) => {
                map.serialize_entry("mode", "approx")?;
                map.serialize_entry("value", v)?;
                map.serialize_entry("precision", &APPROX_PRECISION)?;
            }
        }
        map.end()
    }
}

/// Decides `sqrt(u) + v < sqrt(s)` exactly for `u, v, s >= 0`.
pub fn sqrt_plus_lt_sqrt(u: &Scalar, v: &Scalar, s: &Scalar) -> bool {
    // v < sqrt(s) and u < s - 2 v sqrt(s) + v^2
    if v * v >= *s {
        return false;
    }
    let rest = s + v * v - u;
    if !rest.is_positive() {
        return false;
    }
    let four_v2_s = int(4) * v * v * s;
    four_v2_s < &rest * &rest
}
