//! Double-double arithmetic: a value is the unevaluated sum hi + lo with
//! |lo| ≤ ulp(hi)/2, giving about 32 significant digits.
//!
//! Arithmetic follows the standard error-free transformations; the
//! transcendental kernels use argument reduction plus Taylor series or one
//! Newton step from the binary64 value.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Num, One, Zero};

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const NAN: Dd = Dd { hi: f64::NAN, lo: f64::NAN };
    pub const INFINITY: Dd = Dd { hi: f64::INFINITY, lo: 0.0 };
    pub const NEG_INFINITY: Dd = Dd { hi: f64::NEG_INFINITY, lo: 0.0 };

    /// Exact sum a + b, normalized.
    pub fn new_add(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn floor(self) -> Dd {
        let h = self.hi.floor();
        if h == self.hi {
            let (hi, lo) = quick_two_sum(h, self.lo.floor());
            Dd { hi, lo }
        } else {
            Dd { hi: h, lo: 0.0 }
        }
    }

    fn finite_or(self, v: f64) -> Dd {
        if v.is_finite() {
            self
        } else {
            Dd { hi: v, lo: 0.0 }
        }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&(self.hi + self.lo), f)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }.finite_or(s1)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }.finite_or(p)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Dd::from(q1);
        }
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, b: Dd) -> Dd {
        let q = self / b;
        let n = if q.hi < 0.0 { -(-q).floor() } else { q.floor() };
        self - b * n
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $f:ident $atr:ident $af:ident),*) => {$(
        impl $tr<f64> for Dd {
            type Output = Dd;
            fn $f(self, b: f64) -> Dd {
                $tr::$f(self, Dd::from(b))
            }
        }
        impl $atr for Dd {
            fn $af(&mut self, b: Dd) {
                *self = $tr::$f(*self, b);
            }
        }
    )*};
}
scalar_ops!(Add add AddAssign add_assign, Sub sub SubAssign sub_assign, Mul mul MulAssign mul_assign, Div div DivAssign div_assign, Rem rem RemAssign rem_assign);

impl Zero for Dd {
    fn zero() -> Dd {
        Dd::default()
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Dd {
    fn one() -> Dd {
        Dd::from(1.0)
    }
}

impl Num for Dd {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Dd, Self::FromStrRadixErr> {
        if radix != 10 {
            // only decimal literals are meaningful here
            return "invalid radix".parse::<f64>().map(Dd::from);
        }
        s.parse::<f64>().map(Dd::from)
    }
}

const PI_HI: f64 = std::f64::consts::PI;
const PI_LO: f64 = 1.224_646_799_147_353_2e-16;
const LN2_HI: f64 = std::f64::consts::LN_2;
const LN2_LO: f64 = 2.319_046_813_846_299_6e-17;

pub fn pi() -> Dd {
    Dd::new_add(PI_HI, PI_LO)
}

pub fn ln2() -> Dd {
    Dd::new_add(LN2_HI, LN2_LO)
}

fn scale_pow2(x: Dd, k: i32) -> Dd {
    // two steps so that 2^k itself never overflows
    let k1 = k / 2;
    let k2 = k - k1;
    x * 2f64.powi(k1) * 2f64.powi(k2)
}

pub fn exp(x: Dd) -> Dd {
    let h = x.hi();
    if h.is_nan() {
        return Dd::NAN;
    }
    if h > 709.78 {
        return Dd::INFINITY;
    }
    if h < -745.2 {
        return Dd::from(0.0);
    }
    let k = (h / LN2_HI).round();
    let r = x - ln2() * k;
    let s = r * (1.0 / 1024.0);
    // expm1(s) for |s| < 4e-4; nine terms reach 1e-33
    let mut term = s;
    let mut sum = s;
    for n in 2..=10 {
        term = term * s / (n as f64);
        sum += term;
    }
    for _ in 0..10 {
        sum = sum * (sum + 2.0);
    }
    scale_pow2(sum + 1.0, k as i32)
}

pub fn ln(x: Dd) -> Dd {
    let h = x.hi();
    if h.is_nan() || h < 0.0 {
        return Dd::NAN;
    }
    if h == 0.0 {
        return Dd::NEG_INFINITY;
    }
    if h.is_infinite() {
        return Dd::INFINITY;
    }
    let y = Dd::from(h.ln());
    y + x * exp(-y) - 1.0
}

pub fn sqrt(x: Dd) -> Dd {
    let h = x.hi();
    if h <= 0.0 {
        return if h == 0.0 { Dd::from(0.0) } else { Dd::NAN };
    }
    let y = Dd::from(h.sqrt());
    y + (x - y * y) / (y * 2.0)
}

fn sin_cos_taylor(r: Dd) -> (Dd, Dd) {
    let r2 = r * r;
    let mut s = Dd::from(0.0);
    let mut c = Dd::from(0.0);
    // Horner from the top; |r| <= pi/4 needs terms through r^27.
    for n in (0..14).rev() {
        let ks = (2 * n + 2) as f64 * (2 * n + 3) as f64;
        let kc = (2 * n + 1) as f64 * (2 * n + 2) as f64;
        s = Dd::from(1.0) - r2 * s / ks;
        c = Dd::from(1.0) - r2 * c / kc;
    }
    (r * s, c)
}

pub fn sin_cos(x: Dd) -> (Dd, Dd) {
    let h = x.hi();
    if !h.is_finite() {
        return (Dd::NAN, Dd::NAN);
    }
    let half_pi = pi() * 0.5;
    let k = (h / (PI_HI * 0.5)).round();
    let r = x - half_pi * k;
    let (s, c) = sin_cos_taylor(r);
    match (k as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

pub fn atan2(y: Dd, x: Dd) -> Dd {
    if y.hi() == 0.0 && x.hi() == 0.0 {
        return Dd::from(0.0f64.atan2(x.hi()));
    }
    let z = Dd::from(y.hi().atan2(x.hi()));
    let (s, c) = sin_cos(z);
    // Newton on y cos z - x sin z = 0
    z + (y * c - x * s) / (x * c + y * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, hi: f64, lo: f64, tol: f64) {
        let d = (a - Dd::new_add(hi, lo)).hi().abs();
        assert!(d <= tol * hi.abs().max(1e-300), "{a:?} vs {hi} + {lo}: diff {d:e}");
    }

    // reference digits from mpmath at 40 digits, split into hi + lo
    #[test]
    fn exp_ln_against_reference() {
        close(exp(Dd::from(1.0)), std::f64::consts::E, 1.4456468917292502e-16, 4e-32);
        close(exp(Dd::from(3.0)), 20.085536923187668, -1.8275625525512858e-16, 4e-32);
        close(exp(Dd::from(-10.5)), 2.7536449349747158e-05, -2.499189668339766e-22, 4e-32);
        close(ln(Dd::from(10.0)), std::f64::consts::LN_10, -2.1707562233822494e-16, 4e-32);
        close(ln(Dd::from(1e100)), 230.25850929940458, -1.1033518306311232e-14, 1e-30);
        close(exp(ln2()), 2.0, 0.0, 4e-32);
    }

    #[test]
    fn trig_against_reference() {
        close(sin_cos(Dd::from(1.0)).0, 0.8414709848078965, 1.776845092935536e-18, 4e-32);
        close(sin_cos(Dd::from(1.0)).1, 0.5403023058681398, -4.760954612604417e-17, 4e-32);
        close(sin_cos(Dd::from(100.0)).0, -0.5063656411097588, -3.050947053792115e-18, 1e-30);
        close(atan2(Dd::from(1.0), Dd::from(1.0)) * 4.0, PI_HI, PI_LO, 4e-32);
        close(sqrt(Dd::from(2.0)), std::f64::consts::SQRT_2, -9.667293313452913e-17, 4e-32);
    }
}
