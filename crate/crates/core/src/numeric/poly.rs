//! Exact bivariate polynomials in (λ, y) with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_rational::Ratio;
use num_traits::{One, Zero};

use super::complex::{Cx, CxExt};
use super::real::Real;

pub type Rat = Ratio<i128>;

/// Σ c_{ij} λ^i y^j, keyed by (i, j). Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), Rat>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rat) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn int(n: i128) -> Self {
        Self::constant(Rat::from_integer(n))
    }

    pub fn frac(p: i128, q: i128) -> Self {
        Self::constant(Rat::new(p, q))
    }

    pub fn monomial(c: Rat, lambda_deg: u32, y_deg: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((lambda_deg, y_deg), c);
        }
        Self { terms }
    }

    pub fn lambda() -> Self {
        Self::monomial(Rat::one(), 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(Rat::one(), 0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(&k, &v)| (k, v * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::int(1), |acc, _| &acc * self)
    }

    /// Exact division by y^k; `None` if some term has lower y-degree.
    pub fn div_y_pow(&self, k: u32) -> Option<Self> {
        let mut terms = BTreeMap::new();
        for (&(i, j), &c) in &self.terms {
            if j < k {
                return None;
            }
            terms.insert((i, j - k), c);
        }
        Some(Self { terms })
    }

    /// Highest y-degree and the λ-polynomial coefficient of it.
    pub fn leading_in_y(&self) -> Option<(u32, Poly2)> {
        let top = self.terms.keys().map(|&(_, j)| j).max()?;
        let lead = self
            .terms
            .iter()
            .filter(|(&(_, j), _)| j == top)
            .fold(Self::zero(), |acc, (&(i, _), &c)| acc + Self::monomial(c, i, 0));
        Some((top, lead))
    }

    /// The rational c with self = c·other, if one exists.
    pub fn ratio_to(&self, other: &Poly2) -> Option<Rat> {
        let (&key, &c_other) = other.terms.iter().next()?;
        let c_self = *self.terms.get(&key)?;
        let c = c_self / c_other;
        (self == &other.scale(c)).then_some(c)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Rat)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn eval<R: Real>(&self, lambda: Cx<R>, y: Cx<R>) -> Cx<R> {
        let mut acc = Cx::<R>::zero();
        for (&(i, j), c) in &self.terms {
            let coeff = R::from_f64(*c.numer() as f64) / R::from_f64(*c.denom() as f64);
            acc = acc + lambda.cpowi(i as i64) * y.cpowi(j as i64) * Complex::new(coeff, R::zero());
        }
        acc
    }

    fn add_term(&mut self, key: (u32, u32), c: Rat) {
        let entry = self.terms.entry(key).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }
}

impl fmt::Debug for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(&(i, j), c)| format!("({c})·λ^{i}·y^{j}")).collect();
        f.write_str(&parts.join(" + "))
    }
}

impl Add for &Poly2 {
    type Output = Poly2;
    fn add(self, rhs: &Poly2) -> Poly2 {
        let mut out = self.clone();
        for (&k, &c) in &rhs.terms {
            out.add_term(k, c);
        }
        out
    }
}

impl Add for Poly2 {
    type Output = Poly2;
    fn add(self, rhs: Poly2) -> Poly2 {
        &self + &rhs
    }
}

impl Neg for &Poly2 {
    type Output = Poly2;
    fn neg(self) -> Poly2 {
        self.scale(-Rat::one())
    }
}

impl Sub for &Poly2 {
    type Output = Poly2;
    fn sub(self, rhs: &Poly2) -> Poly2 {
        self + &(-rhs)
    }
}

impl Sub for Poly2 {
    type Output = Poly2;
    fn sub(self, rhs: Poly2) -> Poly2 {
        &self - &rhs
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: &Poly2) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(i1, j1), &c1) in &self.terms {
            for (&(i2, j2), &c2) in &rhs.terms {
                out.add_term((i1 + i2, j1 + j2), c1 * c2);
            }
        }
        out
    }
}

impl Mul for Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: Poly2) -> Poly2 {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::complex::{cx, rel_diff};

    #[test]
    fn ring_laws_and_eval() {
        let l = Poly2::lambda();
        let y = Poly2::y();
        let p = &(&l + &Poly2::int(1)) * &(&y - &Poly2::frac(1, 3));
        let q = &p * &p;
        let (lv, yv) = (cx::<f64>(0.7, -0.2), cx::<f64>(1.3, 0.4));
        let pv = p.eval(lv, yv);
        assert!(rel_diff(q.eval(lv, yv), pv * pv) < 1e-14);
        assert!((&q - &q).is_zero());
        assert_eq!(q.ratio_to(&q.scale(Rat::new(-2, 7))), Some(Rat::new(-7, 2)));
    }

    #[test]
    fn exact_y_division() {
        let y = Poly2::y();
        let p = &(&y * &y) * &Poly2::lambda();
        assert_eq!(p.div_y_pow(1), Some(&y * &Poly2::lambda()));
        assert_eq!((&p + &Poly2::int(1)).div_y_pow(1), None);
    }
}
