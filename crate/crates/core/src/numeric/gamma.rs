//! Complex log-Gamma: Lanczos in binary64, shifted Stirling series in
//! double-double, reflection for Re z < 1/2.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::complex::{real, Cx, CxExt};
use super::real::{Precision, Real};

// g = 7, n = 9
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

// B_{2k} as (numerator, denominator), k = 1..15
const BERNOULLI: [(i64, i64); 15] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43_867, 798),
    (-174_611, 330),
    (854_513, 138),
    (-236_364_091, 2730),
    (8_553_103, 6),
    (-23_749_461_029, 870),
    (8_615_841_276_005, 14_322),
];

const STIRLING_MIN: f64 = 25.0;

fn sin_pi<R: Real>(z: Cx<R>) -> Cx<R> {
    let x = z.re * R::pi();
    let y = z.im * R::pi();
    let (s, c) = x.sin_cos();
    let ey = y.exp();
    let emy = R::one() / ey;
    let two = R::from_f64(2.0);
    Complex::new(s * (ey + emy) / two, c * (ey - emy) / two)
}

fn ln_gamma_lanczos<R: Real>(z: Cx<R>) -> Cx<R> {
    let z = z - Cx::<R>::one();
    let mut a = real(R::from_f64(LANCZOS[0]));
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + real::<R>(R::from_f64(c)) / (z + real(R::from_i64(k as i64)));
    }
    let t = z + real(R::from_f64(LANCZOS_G + 0.5));
    let half_ln_two_pi = R::two_pi().ln() * R::half();
    real::<R>(half_ln_two_pi) + (z + real(R::half())) * t.cln() - t + a.cln()
}

fn ln_gamma_stirling<R: Real>(z: Cx<R>) -> Cx<R> {
    let mut w = z;
    let mut shift = Cx::<R>::zero();
    while w.re < R::from_f64(STIRLING_MIN) {
        shift = shift + w.cln();
        w = w + Cx::<R>::one();
    }
    let half_ln_two_pi = R::two_pi().ln() * R::half();
    let mut acc = (w - real(R::half())) * w.cln() - w + real(half_ln_two_pi);
    let inv = w.cinv();
    let inv2 = inv * inv;
    let mut pow = inv;
    for (k, &(num, den)) in BERNOULLI.iter().enumerate() {
        let n = 2 * (k as i64 + 1);
        let coeff = R::from_i64(num) / (R::from_i64(den) * R::from_i64(n * (n - 1)));
        acc = acc + pow * real(coeff);
        pow = pow * inv2;
    }
    acc - shift
}

/// log Γ(z). The imaginary part is a continuous branch on each half-plane
/// Re z ≥ 1/2; callers that only exponentiate need not care.
pub fn ln_gamma<R: Real>(z: Cx<R>) -> Cx<R> {
    if z.re < R::half() {
        let ln_pi = real::<R>(R::pi().ln());
        return ln_pi - sin_pi(z).cln() - ln_gamma(Cx::<R>::one() - z);
    }
    match R::PRECISION {
        Precision::Double => ln_gamma_lanczos(z),
        Precision::Extended => ln_gamma_stirling(z),
    }
}

pub fn gamma<R: Real>(z: Cx<R>) -> Cx<R> {
    ln_gamma(z).cexp()
}

pub fn gamma_real<R: Real>(x: R) -> R {
    gamma(real(x)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::complex::{cx, rel_diff};
    use crate::numeric::Dd;

    fn check<R: Real>(tol: f64) {
        let pi = R::pi();
        let g = |p: i64, q: i64| gamma(real::<R>(R::ratio(p, q)));
        assert!(rel_diff(g(1, 2), real(pi.sqrt())) < tol);
        assert!(rel_diff(g(1, 1) * g(3, 2), real(pi.sqrt() / R::from_f64(2.0))) < tol);
        let third = g(1, 3) * g(2, 3);
        let four_pi2_3 = R::from_f64(4.0) * pi * pi / R::from_f64(3.0);
        assert!(rel_diff(third * third, real(four_pi2_3)) < tol);
        // mpmath: loggamma(100.5)
        let l = ln_gamma(real::<R>(R::from_f64(100.5)));
        assert!((l.re - R::from_f64(361.435_540_467_777_6)).abs().to_f64() < 361.0 * tol.max(1e-16));
        let z = gamma::<R>(cx(1.0, 1.0));
        assert!(rel_diff(z, cx(0.498_015_668_118_356, -0.154_949_828_301_810_7)) < tol.max(1e-15));
        // reflection
        let r = gamma::<R>(cx(-0.5, 0.0));
        assert!(rel_diff(r, real(R::from_f64(-2.0) * pi.sqrt())) < tol.max(1e-15));
    }

    #[test]
    fn binary64_identities() {
        check::<f64>(1e-13);
    }

    #[test]
    fn extended_identities() {
        check::<Dd>(1e-29);
    }

    #[test]
    fn extended_digits_against_reference() {
        // mpmath, 50 digits, split into hi + lo
        let l = ln_gamma(real::<Dd>(Dd::from_f64(100.5))).re;
        let want = Dd::new_add(361.4355404677776, -6.226945756445924e-15);
        assert!(((l - want) / want).abs().to_f64() < 1e-30, "{l:?}");
        let g = gamma_real(Dd::ratio(1, 3));
        let want = Dd::new_add(2.6789385347077475, 1.7947798648225244e-16);
        assert!(((g - want) / want).abs().to_f64() < 1e-29, "{g:?}");
    }
}
