//! Stated closed forms, evaluated independently of the engine so that
//! discrepancies show up as numbers rather than being reconciled.
//!
//! All values are logarithms with principal powers. Functions marked
//! `stated_` reproduce the published expressions verbatim; `corrected_`
//! ones are the values the product formula and quadrature actually give.

use num_traits::One;

use crate::curve::CriticalData;
use crate::numeric::complex::real;
use crate::numeric::gamma::ln_gamma;
use crate::numeric::{Cx, CxExt, Real};
use crate::product::LogValue;

fn ln<R: Real>(z: Cx<R>) -> Cx<R> {
    z.cln()
}

fn r<R: Real>(p: i64, q: i64) -> Cx<R> {
    real(R::ratio(p, q))
}

fn mm<R: Real>(m: u32) -> Cx<R> {
    real(R::from_i64(i64::from(m)))
}

fn ln_pi<R: Real>() -> Cx<R> {
    real(R::pi().ln())
}

/// Where a tame symbol of the regularized connection is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TameAt {
    S1,
    MinusM,
    Infinity,
}

/// (2s1)^{5/2}(c1−c2)^{5/2}(s1+m)^{2(m+1)}, ((m²−c1)(m²−c2))^{5/2}, 1.
pub fn stated_tame<R: Real>(cd: &CriticalData<R>, m: u32, at: TameAt) -> LogValue<R> {
    let m_ = mm::<R>(m);
    let m2 = m_ * m_;
    LogValue::new(match at {
        TameAt::S1 => {
            r::<R>(5, 2) * (ln(cd.s1 + cd.s1) + ln(cd.c1 - cd.c2)) + r::<R>(2, 1) * (m_ + Cx::one()) * ln(cd.s1 + m_)
        }
        TameAt::MinusM => r::<R>(5, 2) * (ln(m2 - cd.c1) + ln(m2 - cd.c2)),
        TameAt::Infinity => Cx::new(R::zero(), R::zero()),
    })
}

/// log Γ(m+1)² − log Γ(m+1+a) − log Γ(m+1+b).
fn gamma_ratio<R: Real>(m: u32, a: Cx<R>, b: Cx<R>) -> Cx<R> {
    let m1 = mm::<R>(m) + Cx::one();
    r::<R>(2, 1) * ln_gamma(m1) - ln_gamma(m1 + a) - ln_gamma(m1 + b)
}

/// 2⁶π²c1^{5/2}c2^{5/2}(c1−c2)(m²−c1)^{2(m+1)+5/2}(m²−c2)^{2(m+1)+5/2}
/// · Γ(m+1)²/(Γ(m+1+14/3)Γ(m+1+16/3)).
pub fn stated_d_m<R: Real>(cd: &CriticalData<R>, m: u32) -> LogValue<R> {
    let m_ = mm::<R>(m);
    let m2 = m_ * m_;
    let e = r::<R>(2, 1) * (m_ + Cx::one()) + r::<R>(5, 2);
    LogValue::new(
        r::<R>(6, 1) * real(R::ln2())
            + r::<R>(2, 1) * ln_pi()
            + r::<R>(5, 2) * (ln(cd.c1) + ln(cd.c2))
            + ln(cd.c1 - cd.c2)
            + e * (ln(m2 - cd.c1) + ln(m2 - cd.c2))
            + gamma_ratio(m, r(14, 3), r(16, 3)),
    )
}

/// The same product with the four tame symbols at D each contributing
/// (c1−c2)^{5/2}: exponent 10 instead of 1.
pub fn corrected_d_m<R: Real>(cd: &CriticalData<R>, m: u32) -> LogValue<R> {
    let s = stated_d_m(cd, m);
    LogValue::new(s.log + r::<R>(9, 1) * ln(cd.c1 - cd.c2))
}

/// −4·s1·s2·(c2−c1)²·(m²−c1)(m²−c2).
pub fn stated_delta_m<R: Real>(cd: &CriticalData<R>, m: u32) -> Cx<R> {
    let m_ = mm::<R>(m);
    let m2 = m_ * m_;
    let d = cd.c2 - cd.c1;
    -(cd.s1 * cd.s2 * d * d * (m2 - cd.c1) * (m2 - cd.c2) * r::<R>(4, 1))
}

/// 4·s1·s2·(c2−c1)².
pub fn stated_delta_sigma<R: Real>(cd: &CriticalData<R>) -> Cx<R> {
    let d = cd.c2 - cd.c1;
    cd.s1 * cd.s2 * d * d * r::<R>(4, 1)
}

/// 4π²c1^{3/2}c2^{3/2}/(c1−c2)³.
pub fn stated_p<R: Real>(cd: &CriticalData<R>) -> LogValue<R> {
    LogValue::new(
        r::<R>(2, 1) * real(R::ln2()) + r::<R>(2, 1) * ln_pi() + r::<R>(3, 2) * (ln(cd.c1) + ln(cd.c2))
            - r::<R>(3, 1) * ln(cd.c1 - cd.c2),
    )
}

/// 4π²c1^{3/2}c2^{3/2}(c1−c2)⁶.
pub fn corrected_p<R: Real>(cd: &CriticalData<R>) -> LogValue<R> {
    LogValue::new(
        r::<R>(2, 1) * real(R::ln2()) + r::<R>(2, 1) * ln_pi() + r::<R>(3, 2) * (ln(cd.c1) + ln(cd.c2))
            + r::<R>(6, 1) * ln(cd.c1 - cd.c2),
    )
}

/// 4·s1·s2·(c1−c2)², the rank-one factor of the pushforward.
pub fn stated_rank_one<R: Real>(cd: &CriticalData<R>) -> Cx<R> {
    let d = cd.c1 - cd.c2;
    cd.s1 * cd.s2 * d * d * r::<R>(4, 1)
}

/// 16π²c1²c2²/(c1−c2).
pub fn stated_pushforward<R: Real>(cd: &CriticalData<R>) -> LogValue<R> {
    LogValue::new(r::<R>(4, 1) * real(R::ln2()) + r::<R>(2, 1) * ln_pi() + r::<R>(2, 1) * (ln(cd.c1) + ln(cd.c2)) - ln(cd.c1 - cd.c2))
}

/// The three convergence factors of P₍ₘ₎, as logarithms:
/// m^{−8m}(m²−c1)^{2m}(m²−c2)^{2m}, m^{−10}((m²−c1)(m²−c2))^{5/2},
/// m^{10}Γ(m+1)²/(Γ(m+1+14/3)Γ(m+1+16/3)).
pub fn convergence_factors<R: Real>(cd: &CriticalData<R>, m: u32) -> [Cx<R>; 3] {
    let m_ = mm::<R>(m);
    let m2 = m_ * m_;
    let lm = ln(m_);
    let lp = ln(m2 - cd.c1) + ln(m2 - cd.c2);
    [
        -r::<R>(8, 1) * m_ * lm + r::<R>(2, 1) * m_ * lp,
        -r::<R>(10, 1) * lm + r::<R>(5, 2) * lp,
        r::<R>(10, 1) * lm + gamma_ratio(m, r(14, 3), r(16, 3)),
    ]
}

/// Exceptional factors: (m²−c1)^{2m}/m^{4m}, (m²−c1)/m²,
/// m²Γ(m+1)²/(Γ(m+1+2/3)Γ(m+1+4/3)).
pub fn exceptional_factors<R: Real>(cd: &CriticalData<R>, m: u32) -> [Cx<R>; 3] {
    let m_ = mm::<R>(m);
    let m2 = m_ * m_;
    let lm = ln(m_);
    let l1 = ln(m2 - cd.c1);
    [
        r::<R>(2, 1) * m_ * l1 - r::<R>(4, 1) * m_ * lm,
        l1 - r::<R>(2, 1) * lm,
        r::<R>(2, 1) * lm + gamma_ratio(m, r(2, 3), r(4, 3)),
    ]
}

/// Γ(1/3)²Γ(2/3)² = 4π²/3.
pub fn exceptional_limit<R: Real>() -> LogValue<R> {
    LogValue::new(r::<R>(2, 1) * real(R::ln2()) + r::<R>(2, 1) * ln_pi() - real(R::from_f64(3.0).ln()))
}

/// 2π²/(−3)^{1/4}, principal fourth root.
pub fn exceptional_final<R: Real>() -> LogValue<R> {
    let minus3 = Cx::new(-R::from_f64(3.0), R::zero());
    LogValue::new(real(R::ln2()) + r::<R>(2, 1) * ln_pi() - r::<R>(1, 4) * ln(minus3))
}

/// (λ²−λ+1)²c1c2(c2−c1)⁴.
pub fn stated_det_q<R: Real>(cd: &CriticalData<R>) -> Cx<R> {
    let l = cd.lambda;
    let q = l * l - l + Cx::one();
    let d = cd.c2 - cd.c1;
    q * q * cd.c1 * cd.c2 * d * d * d * d
}

/// 4π²c1c2/((λ²−λ+1)²(c1−c2)²).
pub fn stated_per_f<R: Real>(cd: &CriticalData<R>) -> Cx<R> {
    let l = cd.lambda;
    let q = l * l - l + Cx::one();
    let d = cd.c1 - cd.c2;
    let pi2 = R::pi() * R::pi();
    cd.c1 * cd.c2 * real(pi2 * R::from_f64(4.0)) / (q * q * d * d)
}

/// −2⁻⁶3¹²π²λ²(λ−1)²/((λ²−λ+1)⁹√(λ²−λ+1)).
pub fn stated_per_lambda<R: Real>(lambda: Cx<R>) -> Cx<R> {
    let q = lambda * lambda - lambda + Cx::one();
    let k = R::from_f64(531441.0 / 64.0) * R::pi() * R::pi();
    let lm1 = lambda - Cx::one();
    -(lambda * lambda * lm1 * lm1 * real(k)) / (q.cpowi(9) * q.csqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::cx;

    #[test]
    fn factors_at_m80() {
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
        let f = convergence_factors(&cd, 80);
        assert!((f[0].exp() - cx(1.0, 0.0)).norm() < 1e-2);
        assert!((f[1].exp() - cx(1.0, 0.0)).norm() < 1e-2);
        // exp(−271/(9m)) to leading order
        assert!((f[2].exp().re - 0.6921).abs() < 1e-3, "{}", f[2].exp());
    }

    #[test]
    fn exceptional_constants() {
        let l = exceptional_limit::<f64>().value();
        assert!((l.re - 4.0 * std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-12);
        let g = ln_gamma(cx::<f64>(1.0 / 3.0, 0.0)) + ln_gamma(cx(2.0 / 3.0, 0.0));
        assert!(((g * 2.0).exp() - l).norm() < 1e-12 * l.norm());
    }

    #[test]
    fn corrected_p_ratio() {
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
        let ratio = (corrected_p(&cd).log - stated_p(&cd).log).exp();
        assert!((ratio - (cd.c1 - cd.c2).powi(9)).norm() < 1e-12 * ratio.norm());
    }
}
