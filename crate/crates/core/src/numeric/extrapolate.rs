//! Polynomial (Richardson) extrapolation to h → 0 by Neville's scheme.

use serde::Serialize;

use super::complex::{real, Cx, CxExt};
use super::real::Real;

#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation<R: Real> {
    #[serde(skip)]
    pub value: Cx<R>,
    /// |T_k − T_{k−1}| at the selected order.
    pub error: f64,
    /// Polynomial degree in h of the selected model.
    pub order: usize,
    /// Error estimate for every order tried, index = order.
    pub residuals: Vec<f64>,
}

/// Value at h = 0 of the degree-(points−1) interpolant through (h_i, v_i).
pub fn neville<R: Real>(h: &[R], v: &[Cx<R>]) -> Cx<R> {
    assert_eq!(h.len(), v.len());
    assert!(!h.is_empty());
    let mut p: Vec<Cx<R>> = v.to_vec();
    let n = h.len();
    for k in 1..n {
        for i in 0..n - k {
            let (hi, hk) = (h[i], h[i + k]);
            // P_{i..i+k}(0) = (h_i P_{i+1..} − h_{i+k} P_{i..}) / (h_i − h_{i+k})
            p[i] = (p[i + 1] * real(hi) - p[i] * real(hk)) / real(hi - hk);
        }
    }
    p[0]
}

/// Extrapolate to h = 0 using the points with the smallest h. Order k uses
/// the k+1 last samples; the order with the smallest successive difference
/// wins, capped at `max_order`.
pub fn richardson<R: Real>(h: &[R], v: &[Cx<R>], max_order: usize) -> Extrapolation<R> {
    assert_eq!(h.len(), v.len());
    let n = h.len();
    assert!(n >= 2, "need at least two samples");
    let top = max_order.min(n - 1);
    let estimates: Vec<Cx<R>> = (0..=top).map(|k| neville(&h[n - 1 - k..], &v[n - 1 - k..])).collect();
    let mut residuals = vec![f64::INFINITY];
    for k in 1..=top {
        residuals.push((estimates[k] - estimates[k - 1]).cabs().to_f64());
    }
    let order = (1..=top)
        .min_by(|&a, &b| residuals[a].partial_cmp(&residuals[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    Extrapolation { value: estimates[order], error: residuals[order], order, residuals }
}

/// Smallest index i0 such that `dist[i0..]` is non-increasing.
pub fn monotone_from(dist: &[f64]) -> Option<usize> {
    if dist.is_empty() {
        return None;
    }
    let mut i0 = dist.len() - 1;
    while i0 > 0 && dist[i0 - 1] >= dist[i0] {
        i0 -= 1;
    }
    Some(i0)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::complex::cx;

    #[test]
    fn exact_for_polynomials() {
        let h: Vec<f64> = [1.0, 0.5, 0.25, 0.125].to_vec();
        let v: Vec<Cx<f64>> = h.iter().map(|&t| cx(2.0 + 3.0 * t - t * t, 1.0 - t)).collect();
        let e = richardson(&h, &v, 3);
        assert!((e.value - cx(2.0, 1.0)).cabs() < 1e-13);
    }

    #[test]
    fn accelerates_exponential_tail() {
        let ms: Vec<f64> = (2..=16).map(|k| 5.0 * k as f64).collect();
        let h: Vec<f64> = ms.iter().map(|m| 1.0 / m).collect();
        let v: Vec<Cx<f64>> = ms.iter().map(|m| cx((-3.0 / m).exp(), 0.0)).collect();
        let e = richardson(&h, &v, 8);
        assert!((e.value - cx(1.0, 0.0)).cabs() < 1e-6, "{:?}", e.value);
    }

    #[test]
    fn monotone_tail_index() {
        assert_eq!(monotone_from(&[1.0, 3.0, 2.0, 1.0, 0.5]), Some(1));
        assert_eq!(monotone_from(&[3.0, 2.0]), Some(0));
    }
}
