//! Complex helpers generic over [`Real`].

use num_complex::Complex;
use num_traits::{One, Zero};

use super::dd::Dd;
use super::real::Real;

pub type Cx<R> = Complex<R>;

/// `re + i·im` from binary64 parts.
pub fn cx<R: Real>(re: f64, im: f64) -> Cx<R> {
    Complex::new(R::from_f64(re), R::from_f64(im))
}

pub fn real<R: Real>(x: R) -> Cx<R> {
    Complex::new(x, R::zero())
}

pub fn i_unit<R: Real>() -> Cx<R> {
    Complex::new(R::zero(), R::one())
}

pub fn to_c64<R: Real>(z: Cx<R>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn from_c64<R: Real>(z: Complex<f64>) -> Cx<R> {
    cx(z.re, z.im)
}

pub fn to_cdd<R: Real>(z: Cx<R>) -> Cx<Dd> {
    Complex::new(z.re.to_dd(), z.im.to_dd())
}

pub fn from_cdd<R: Real>(z: Cx<Dd>) -> Cx<R> {
    Complex::new(R::from_dd(z.re), R::from_dd(z.im))
}

/// Change of scalar type through double-double (exact when widening).
pub fn convert<R: Real, S: Real>(z: Cx<R>) -> Cx<S> {
    from_cdd(to_cdd(z))
}

/// Binary64 complex number serialized as `{"re": …, "im": …}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl<R: Real> From<Complex<R>> for Cplx {
    fn from(z: Complex<R>) -> Self {
        Cplx { re: z.re.to_f64(), im: z.im.to_f64() }
    }
}

impl Cplx {
    /// `None` when either part overflowed or is NaN.
    pub fn finite<R: Real>(z: Complex<R>) -> Option<Self> {
        let c = Cplx::from(z);
        (c.re.is_finite() && c.im.is_finite()).then_some(c)
    }
}

impl From<Cplx> for Complex<f64> {
    fn from(z: Cplx) -> Self {
        Complex::new(z.re, z.im)
    }
}

/// Transcendental operations on complex numbers with principal branches.
pub trait CxExt<R: Real>: Sized {
    fn cabs(self) -> R;
    fn carg(self) -> R;
    fn cexp(self) -> Self;
    /// Principal logarithm, imaginary part in (−π, π].
    fn cln(self) -> Self;
    /// Principal square root, argument in (−π/2, π/2].
    fn csqrt(self) -> Self;
    /// `exp(w · Log z)`.
    fn cpow(self, w: Self) -> Self;
    fn cpowi(self, n: i64) -> Self;
    fn cinv(self) -> Self;
    fn is_finite_c(self) -> bool;
}

impl<R: Real> CxExt<R> for Cx<R> {
    fn cabs(self) -> R {
        self.re.hypot(self.im)
    }

    fn carg(self) -> R {
        self.im.atan2(self.re)
    }

    fn cexp(self) -> Self {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Complex::new(m * c, m * s)
    }

    fn cln(self) -> Self {
        Complex::new(self.cabs().ln(), self.carg())
    }

    fn csqrt(self) -> Self {
        let zero = R::zero();
        if self.re == zero && self.im == zero {
            return self;
        }
        let r = self.cabs();
        let two = R::from_f64(2.0);
        if self.re >= zero {
            let t = ((r + self.re) / two).sqrt();
            Complex::new(t, self.im / (two * t))
        } else {
            let t = ((r - self.re) / two).sqrt();
            let re = self.im.abs() / (two * t);
            // -0.0 >= 0 holds, so the negative real axis maps to +i
            if self.im >= zero {
                Complex::new(re, t)
            } else {
                Complex::new(re, -t)
            }
        }
    }

    fn cpow(self, w: Self) -> Self {
        if self.re == R::zero() && self.im == R::zero() {
            return if w.re > R::zero() { Complex::zero() } else { Complex::new(R::one() / R::zero(), R::zero()) };
        }
        (w * self.cln()).cexp()
    }

    fn cpowi(self, n: i64) -> Self {
        let mut base = if n < 0 { self.cinv() } else { self };
        let mut k = n.unsigned_abs();
        let mut acc = Complex::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    fn cinv(self) -> Self {
        // scaled to avoid overflow in |z|^2
        let s = self.re.abs().max(self.im.abs());
        let (a, b) = (self.re / s, self.im / s);
        let d = a * a + b * b;
        Complex::new(a / d / s, -b / d / s)
    }

    fn is_finite_c(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Division through [`CxExt::cinv`]; safer than the textbook formula for
/// widely scaled operands.
pub fn cdiv<R: Real>(a: Cx<R>, b: Cx<R>) -> Cx<R> {
    a * b.cinv()
}

/// Relative distance |a − b| / max(|a|, |b|), zero when both vanish.
pub fn rel_diff<R: Real>(a: Cx<R>, b: Cx<R>) -> f64 {
    let d = (a - b).cabs().to_f64();
    let s = a.cabs().to_f64().max(b.cabs().to_f64());
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_sqrt_on_the_cut() {
        let z: Cx<f64> = cx(-4.0, 0.0);
        assert_eq!(z.csqrt(), cx(0.0, 2.0));
        let w: Cx<f64> = cx(-4.0, -0.0);
        assert!((w.csqrt() - cx(0.0, 2.0)).cabs() < 1e-15 || (w.csqrt() - cx(0.0, -2.0)).cabs() < 1e-15);
        let q: Cx<f64> = cx(3.0, 4.0);
        assert!((q.csqrt() - cx(2.0, 1.0)).cabs() < 1e-15);
    }

    #[test]
    fn log_branch_range() {
        let z: Cx<f64> = cx(-1.0, 0.0);
        assert!((z.cln().im - std::f64::consts::PI).abs() < 1e-15);
        let w: Cx<f64> = cx(-1.0, -1e-300);
        assert!(w.cln().im < 0.0);
    }

    #[test]
    fn extended_exp_log_roundtrip() {
        let z: Cx<Dd> = cx(0.3, -2.7);
        let back = z.cln().cexp();
        assert!(rel_diff(back, z) < 1e-30);
        let p = z.cpow(cx(0.5, 0.0));
        assert!(rel_diff(p * p, z) < 1e-30);
        assert!(rel_diff(z.csqrt(), p) < 1e-30);
    }

    #[test]
    fn integer_powers() {
        let z: Cx<f64> = cx(1.1, 0.2);
        assert!(rel_diff(z.cpowi(7), z.cpow(cx(7.0, 0.0))) < 1e-14);
        assert!(rel_diff(z.cpowi(-3) * z.cpowi(3), cx(1.0, 0.0)) < 1e-15);
    }
}
