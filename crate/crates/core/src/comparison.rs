//! The Σ-period matrix Q, its determinant, and the final period values.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::curve::CriticalData;
use crate::error::{Error, Result};
use crate::golden;
use crate::numeric::complex::real;
use crate::numeric::{CMat, Cplx, Cx, CxExt, Real};
use crate::product::LogValue;

/// Rows of Q are the points (x, y) of Σ; columns the monomials
/// 1, y, y², y³, x, xy, xy², xy³ (generic) or 1, y (exceptional).
#[derive(Debug, Clone)]
pub struct SigmaMatrix<R: Real> {
    pub q: CMat<R>,
    /// Diagonal of L.
    pub l: Vec<Cx<R>>,
    /// M₁, M₂ (generic only).
    pub blocks: Vec<CMat<R>>,
    /// x₁, x₂, x₃, x₄ (generic only).
    pub multipliers: Vec<Cx<R>>,
    pub points: Vec<(Cx<R>, Cx<R>)>,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct SigmaSummary {
    pub size: usize,
    pub det: Cplx,
    pub det_l: Cplx,
    pub det_block: Cplx,
    pub det_stated: Option<Cplx>,
}

fn m_block<R: Real>(s: Cx<R>) -> CMat<R> {
    let c = s * s;
    CMat::from_rows(vec![vec![Cx::one(), s, c, c * s], vec![Cx::one(), -s, c, -(c * s)]])
}

/// L as stated: exp(c₁), exp(−c₁), exp(c₂), exp(−c₂), repeated.
fn l_pattern<R: Real>(cd: &CriticalData<R>, size: usize) -> Vec<Cx<R>> {
    let e = [cd.c1.cexp(), (-cd.c1).cexp(), cd.c2.cexp(), (-cd.c2).cexp()];
    (0..size).map(|i| e[i % 4]).collect()
}

pub fn sigma_matrix<R: Real>(cd: &CriticalData<R>) -> Result<SigmaMatrix<R>> {
    cd.require_generic()?;
    let blocks = vec![m_block(cd.s1), m_block(cd.s2)];
    let multipliers = vec![cd.x1, cd.x2, cd.x3, cd.x4];
    let l = l_pattern(cd, 8);
    let mut q = CMat::zeros(8, 8);
    let mut points = Vec::with_capacity(8);
    for (k, &x) in multipliers.iter().enumerate() {
        let m = &blocks[k % 2];
        let s = if k % 2 == 0 { cd.s1 } else { cd.s2 };
        for a in 0..2 {
            let row = 2 * k + a;
            points.push((x, if a == 0 { s } else { -s }));
            for j in 0..4 {
                q[(row, j)] = l[row] * m[(a, j)];
                q[(row, j + 4)] = l[row] * x * m[(a, j)];
            }
        }
    }
    Ok(SigmaMatrix { q, l, blocks, multipliers, points })
}

/// det(1, −s₁; 1, s₁) with L = diag(exp(−c₁), exp(c₁)).
pub fn sigma_matrix_exceptional<R: Real>(cd: &CriticalData<R>) -> Result<SigmaMatrix<R>> {
    if cd.is_generic() {
        return Err(Error::WrongCase { expected: "exceptional", actual: "generic" });
    }
    let l = vec![(-cd.c1).cexp(), cd.c1.cexp()];
    let q = CMat::from_rows(vec![vec![l[0], -(l[0] * cd.s1)], vec![l[1], l[1] * cd.s1]]);
    Ok(SigmaMatrix { q, l, blocks: Vec::new(), multipliers: Vec::new(), points: vec![(cd.x1, -cd.s1), (cd.x1, cd.s1)] })
}

/// Vandermonde ∏_{i<j}(y_j − y_i) of (s₁, −s₁, s₂, −s₂).
pub fn delta_sigma<R: Real>(cd: &CriticalData<R>) -> Cx<R> {
    let y = [cd.s1, -cd.s1, cd.s2, -cd.s2];
    let mut d = Cx::one();
    for i in 0..4 {
        for j in i + 1..4 {
            d = d * (y[j] - y[i]);
        }
    }
    d
}

/// 16(λ²−λ+1)²c₁c₂(c₂−c₁)⁴: (x₃−x₁)² = (3x₁−λ−1)² and the product over
/// both critical points is (λ²−λ+1)².
pub fn corrected_det_q<R: Real>(cd: &CriticalData<R>) -> Cx<R> {
    golden::stated_det_q(cd) * real(R::from_f64(16.0))
}

impl<R: Real> SigmaMatrix<R> {
    /// det L · det(L⁻¹Q); the rows of Q carry exp(±cᵢ), which ruins pivoting
    /// once |cᵢ| is large.
    pub fn det(&self) -> Cx<R> {
        let mut unscaled = self.q.clone();
        for (i, &li) in self.l.iter().enumerate() {
            let inv: Cx<R> = Cx::<R>::one() / li;
            for j in 0..unscaled.cols() {
                unscaled[(i, j)] = unscaled[(i, j)] * inv;
            }
        }
        self.det_l() * unscaled.det()
    }

    pub fn det_l(&self) -> Cx<R> {
        self.l.iter().fold(Cx::one(), |a, &b| a * b)
    }

    /// (x₃−x₁)²(x₄−x₂)²Δ_Σ² by block elimination (generic), or the 2×2
    /// determinant 2s₁.
    pub fn det_block(&self, cd: &CriticalData<R>) -> Cx<R> {
        if self.blocks.is_empty() {
            return cd.s1 + cd.s1;
        }
        let a = cd.x3 - cd.x1;
        let b = cd.x4 - cd.x2;
        let ds = delta_sigma(cd);
        a * a * b * b * ds * ds
    }

    pub fn summary(&self, cd: &CriticalData<R>) -> SigmaSummary {
        SigmaSummary {
            size: self.q.rows(),
            det: self.det().into(),
            det_l: self.det_l().into(),
            det_block: self.det_block(cd).into(),
            det_stated: cd.is_generic().then(|| golden::stated_det_q(cd).into()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FinalPeriod<R: Real> {
    pub pushforward: LogValue<R>,
    pub sigma_det: Cx<R>,
    /// per(U,∇) = pushforward / det Q.
    pub value: LogValue<R>,
    /// 4π²c₁c₂/((λ²−λ+1)²(c₁−c₂)²).
    pub stated_f: Cx<R>,
    /// The λ-only closed form.
    pub stated_lambda: Cx<R>,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct FinalSummary {
    pub pushforward: Cplx,
    pub sigma_det: Cplx,
    pub value: Cplx,
    pub stated_f: Cplx,
    pub stated_lambda: Cplx,
    pub ratio_to_stated_f: Cplx,
    pub ratio_to_stated_lambda: Cplx,
}

impl<R: Real> FinalPeriod<R> {
    pub fn ratio_to_stated_f(&self) -> Cx<R> {
        self.value.div(LogValue::from_value(self.stated_f)).value()
    }

    pub fn ratio_to_stated_lambda(&self) -> Cx<R> {
        self.value.div(LogValue::from_value(self.stated_lambda)).value()
    }

    pub fn summary(&self) -> FinalSummary {
        FinalSummary {
            pushforward: self.pushforward.value().into(),
            sigma_det: self.sigma_det.into(),
            value: self.value.value().into(),
            stated_f: self.stated_f.into(),
            stated_lambda: self.stated_lambda.into(),
            ratio_to_stated_f: self.ratio_to_stated_f().into(),
            ratio_to_stated_lambda: self.ratio_to_stated_lambda().into(),
        }
    }
}

pub fn final_period<R: Real>(cd: &CriticalData<R>, pushforward: LogValue<R>) -> Result<FinalPeriod<R>> {
    let sigma = sigma_matrix(cd)?;
    let det = sigma.det();
    if det == Cx::zero() || !det.is_finite_c() {
        return Err(Error::InvalidParameter("Σ-period determinant vanishes".into()));
    }
    Ok(FinalPeriod {
        pushforward,
        sigma_det: det,
        value: pushforward.div(LogValue::from_value(det)),
        stated_f: golden::stated_per_f(cd),
        stated_lambda: golden::stated_per_lambda(cd.lambda),
    })
}

#[derive(Debug, Clone)]
pub struct ExceptionalFinal<R: Real> {
    pub limit: LogValue<R>,
    pub sigma_det: Cx<R>,
    pub value: LogValue<R>,
    /// 2π²/(−3)^{1/4}.
    pub stated: LogValue<R>,
}

impl<R: Real> ExceptionalFinal<R> {
    /// Relative distance to the stated value over the four branches of
    /// (−3)^{1/4}, and the branch k: value ≈ stated·i^{−k}.
    pub fn distance_over_branches(&self) -> (f64, u32) {
        (0..4u32)
            .map(|k| {
                let turn = Cx::new(R::zero(), -R::pi() * R::half() * R::from_i64(i64::from(k)));
                (self.value.rel_diff(LogValue::new(self.stated.log + turn)), k)
            })
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    }
}

pub fn final_period_exceptional<R: Real>(cd: &CriticalData<R>, limit: LogValue<R>) -> Result<ExceptionalFinal<R>> {
    let sigma = sigma_matrix_exceptional(cd)?;
    let det = sigma.det();
    Ok(ExceptionalFinal { limit, sigma_det: det, value: limit.div(LogValue::from_value(det)), stated: golden::exceptional_final() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::cx;

    #[test]
    fn block_elimination_matches_direct_determinant() {
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
        let s = sigma_matrix(&cd).unwrap();
        assert!((s.det_l() - cx(1.0, 0.0)).norm() < 1e-12);
        let direct = s.det();
        assert!((direct - s.det_block(&cd)).norm() < 1e-10 * direct.norm());
        assert!((direct - corrected_det_q(&cd)).norm() < 1e-10 * direct.norm());
        let ds = delta_sigma(&cd);
        let want = cd.s1 * cd.s2 * (cd.c2 - cd.c1).powi(2) * 4.0;
        assert!((ds - want).norm() < 1e-12 * ds.norm());
    }

    #[test]
    fn exceptional_sigma() {
        let cd = CriticalData::<f64>::from_lambda(cx(0.5, 0.75f64.sqrt())).unwrap();
        let s = sigma_matrix_exceptional(&cd).unwrap();
        assert!((s.det() - cd.s1 * 2.0).norm() < 1e-12);
        assert!(((s.det() * s.det()) - cd.c1 * 4.0).norm() < 1e-12);
        assert!(sigma_matrix(&cd).is_err());
    }
}
