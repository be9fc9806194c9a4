//! Scalar abstraction over binary64 and double-double.

use std::fmt;
use std::ops::{AddAssign, DivAssign, MulAssign, Neg, SubAssign};

use num_traits::Num;
use serde::{Deserialize, Serialize};
use super::dd::{self, Dd};


/// Working precision of a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// IEEE binary64.
    #[default]
    Double,
    /// Double-double, about 31 significant digits.
    Extended,
}

impl Precision {
    pub fn default_tolerance(self) -> f64 {
        match self {
            Precision::Double => 1e-10,
            Precision::Extended => 1e-25,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        })
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" | "f64" | "binary64" => Ok(Precision::Double),
            "extended" | "dd" | "double-double" => Ok(Precision::Extended),
            other => Err(format!("unknown precision `{other}` (expected double or extended)")),
        }
    }
}

/// Real scalar used throughout the engine.
///
/// Implemented for `f64` and [`Dd`].
pub trait Real:
    Copy
    + Send
    + Sync
    + Default
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Num
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    /// Unit roundoff.
    const EPS: f64;
    const PRECISION: Precision;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn pi() -> Self;
    fn ln2() -> Self;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn floor(self) -> Self;
    fn is_finite(self) -> bool;
    /// Exact widening to double-double.
    fn to_dd(self) -> Dd;
    /// Rounding from double-double.
    fn from_dd(x: Dd) -> Self;

    fn from_i64(n: i64) -> Self {
        debug_assert!(n.unsigned_abs() < (1u64 << 53));
        Self::from_f64(n as f64)
    }

    fn ratio(p: i64, q: i64) -> Self {
        Self::from_i64(p) / Self::from_i64(q)
    }

    fn two_pi() -> Self {
        Self::pi() + Self::pi()
    }

    fn half() -> Self {
        Self::from_f64(0.5)
    }

    fn round(self) -> Self {
        (self + Self::half()).floor()
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }

    fn hypot(self, other: Self) -> Self {
        let (a, b) = (self.abs(), other.abs());
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if big == Self::zero() {
            return big;
        }
        let r = small / big;
        big * (Self::one() + r * r).sqrt()
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON / 2.0;
    const PRECISION: Precision = Precision::Double;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn ln2() -> Self {
        std::f64::consts::LN_2
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn floor(self) -> Self {
        f64::floor(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn to_dd(self) -> Dd {
        Dd::from(self)
    }
    fn from_dd(x: Dd) -> Self {
        x.hi() + x.lo()
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn hypot(self, other: Self) -> Self {
        f64::hypot(self, other)
    }
}

impl Real for Dd {
    const EPS: f64 = 1.0e-32;
    const PRECISION: Precision = Precision::Extended;

    fn from_f64(x: f64) -> Self {
        Dd::from(x)
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn pi() -> Self {
        dd::pi()
    }
    fn ln2() -> Self {
        dd::ln2()
    }
    fn abs(self) -> Self {
        if self.hi() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        dd::sqrt(self)
    }
    fn exp(self) -> Self {
        dd::exp(self)
    }
    fn ln(self) -> Self {
        dd::ln(self)
    }
    fn sin(self) -> Self {
        dd::sin_cos(self).0
    }
    fn cos(self) -> Self {
        dd::sin_cos(self).1
    }
    fn sin_cos(self) -> (Self, Self) {
        dd::sin_cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        dd::atan2(self, x)
    }
    fn floor(self) -> Self {
        self.floor()
    }
    fn is_finite(self) -> bool {
        self.hi().is_finite() && self.lo().is_finite()
    }
    fn to_dd(self) -> Dd {
        self
    }
    fn from_dd(x: Dd) -> Self {
        x
    }
}
