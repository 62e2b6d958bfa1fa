//! Exact nonnegative dyadic rationals `mantissa * 2^exponent`.
//!
//! All cap geometry is carried out in this type so that partition, nesting,
//! and rescaling identities can be checked by exact comparison rather than
//! within floating-point tolerances. Mantissas are arbitrary-precision, so
//! deep scales (R = 2^(m*l) with l up to 16) never overflow.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use crate::scalar::Scalar;

/// Canonical form: `mantissa` is odd, or zero with `exponent == 0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    mantissa: BigUint,
    exponent: i64,
}

impl DyadicRational {
    /// Builds `mantissa * 2^exponent`, reducing to canonical form.
    pub fn new(mantissa: BigUint, exponent: i64) -> Self {
        if mantissa.is_zero() {
            return Self {
                mantissa,
                exponent: 0,
            };
        }
        let tz = mantissa.trailing_zeros().unwrap_or(0) as i64;
        Self {
            mantissa: mantissa >> tz as u64,
            exponent: exponent + tz,
        }
    }

    pub fn zero() -> Self {
        Self {
            mantissa: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            mantissa: BigUint::one(),
            exponent: 0,
        }
    }

    /// 2^e.
    pub fn pow2(e: i64) -> Self {
        Self {
            mantissa: BigUint::one(),
            exponent: e,
        }
    }

    pub fn from_u64(v: u64) -> Self {
        Self::new(BigUint::from(v), 0)
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.mantissa.is_one() && self.exponent == 0
    }

    /// True iff the value is exactly a power of two.
    pub fn is_pow2(&self) -> bool {
        self.mantissa.is_one()
    }

    /// Exact sum.
    pub fn add_exact(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << (self.exponent - e) as u64;
        let b = &other.mantissa << (other.exponent - e) as u64;
        Self::new(a + b, e)
    }

    /// Exact difference; `None` when the result would be negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        match self.cmp(other) {
            Ordering::Less => None,
            Ordering::Equal => Some(Self::zero()),
            Ordering::Greater => {
                let e = self.exponent.min(other.exponent);
                let a = &self.mantissa << (self.exponent - e) as u64;
                let b = &other.mantissa << (other.exponent - e) as u64;
                Some(Self::new(a - b, e))
            }
        }
    }

    /// Exact product.
    pub fn mul_exact(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        // product of odd mantissas is odd: already canonical
        Self {
            mantissa: &self.mantissa * &other.mantissa,
            exponent: self.exponent + other.exponent,
        }
    }

    /// Exact multiplication by 2^e (e may be negative: exact division).
    pub fn mul_pow2(&self, e: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent + e,
        }
    }

    /// Exact quotient, `None` when `other` does not divide `self` exactly
    /// (or is zero). Division by powers of two always succeeds.
    pub fn exact_div(&self, other: &Self) -> Option<Self> {
        if other.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        let r = &self.mantissa % &other.mantissa;
        if !r.is_zero() {
            return None;
        }
        let q = &self.mantissa / &other.mantissa;
        Some(Self::new(q, self.exponent - other.exponent))
    }

    /// One-way lossy conversion used only at the numerics boundary.
    pub fn to_f64_lossy(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits() as i64;
        // keep at most 64 mantissa bits for the conversion
        let shift = (bits - 64).max(0);
        let m: BigUint = &self.mantissa >> shift as u64;
        let m = m.to_u64_digits();
        let m = if m.is_empty() { 0u64 } else { m[0] };
        (m as f64) * 2f64.powi((self.exponent + shift) as i32)
    }

    /// One-way lossy conversion to a generic scalar.
    pub fn to_scalar_lossy<S: Scalar>(&self) -> S {
        S::from_f64c(self.to_f64_lossy())
    }
}

impl Default for DyadicRational {
    fn default() -> Self {
        Self::zero()
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    /// Exact comparison by aligning exponents; never via floating point.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << (self.exponent - e) as u64;
        let b = &other.mantissa << (other.exponent - e) as u64;
        a.cmp(&b)
    }
}

impl Add for &DyadicRational {
    type Output = DyadicRational;
    fn add(self, rhs: Self) -> DyadicRational {
        self.add_exact(rhs)
    }
}

impl Mul for &DyadicRational {
    type Output = DyadicRational;
    fn mul(self, rhs: Self) -> DyadicRational {
        self.mul_exact(rhs)
    }
}

impl fmt::Display for DyadicRational {
    /// Serialized form `m*2^e`, e.g. `3*2^-3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, self.exponent)
    }
}

impl fmt::Debug for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for DyadicRational {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (m, e) = s
            .split_once("*2^")
            .ok_or_else(|| format!("dyadic literal must look like m*2^e, got {s:?}"))?;
        let mantissa = BigUint::from_str(m.trim()).map_err(|err| err.to_string())?;
        let exponent: i64 = e.trim().parse().map_err(|err: std::num::ParseIntError| {
            err.to_string()
        })?;
        Ok(Self::new(mantissa, exponent))
    }
}

impl Serialize for DyadicRational {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DyadicRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}
