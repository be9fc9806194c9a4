//! Tanh-sinh quadrature along piecewise paths.
//!
//! Every finite segment is mapped to t ∈ [0, 1] and integrated with the
//! double-exponential rule t = 1/(1 + e^{−2q}), q = (π/2)·sinh u, which
//! absorbs endpoint singularities of the form (t − t₀)^{s−1}, Re s > 0. A
//! final decay ray is truncated at a length chosen from an envelope bound on
//! the integrand and the bound on the discarded tail is added to the error.
//!
//! Integrands see the nodes of each pass in path order, so stateful
//! evaluators (flat-section transport, root tracking) can follow along.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::complex::real;
use crate::numeric::{Cx, CxExt, Precision, Real};
use crate::path::{PathSpec, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Relative tolerance, in (0, 1e-4].
    pub tol: f64,
    /// Finest level; level L uses step 2^{−L} in u.
    pub max_level: u32,
    /// Polynomial growth degree k of the non-exponential part of the
    /// integrand along a decay ray.
    pub tail_degree: f64,
    pub precision: Precision,
}

impl QuadratureSettings {
    pub fn new(tol: f64, precision: Precision) -> Result<Self> {
        if !(tol > 0.0 && tol <= 1e-4) {
            return Err(Error::InvalidParameter(format!("quadrature tolerance {tol:e} outside (0, 1e-4]")));
        }
        let max_level = match precision {
            Precision::Double => 9,
            Precision::Extended => 11,
        };
        Ok(Self { tol, max_level, tail_degree: 4.0, precision })
    }

    pub fn for_precision(precision: Precision) -> Self {
        Self::new(precision.default_tolerance(), precision).expect("default tolerance is valid")
    }

    pub fn with_tail_degree(mut self, k: f64) -> Self {
        self.tail_degree = k;
        self
    }
}

/// A quadrature node as seen by the integrand.
#[derive(Debug, Clone, Copy)]
pub struct NodePoint<R: Real> {
    pub segment: usize,
    pub t: R,
    pub z: Cx<R>,
    /// dz/dt.
    pub dz: Cx<R>,
    /// z − (segment start), accurate near the start.
    pub from_start: Cx<R>,
    /// z − (segment end), accurate near the end; `None` on rays.
    pub to_end: Option<Cx<R>>,
}

impl<R: Real> NodePoint<R> {
    /// z − q, using the accurate offsets when q is a segment endpoint.
    pub fn offset(&self, q: Cx<R>, seg: &Segment<R>) -> Cx<R> {
        if let (Some(e), Some(d)) = (seg.end(), self.to_end) {
            if e == q {
                return d;
            }
        }
        if seg.start() == q {
            return self.from_start;
        }
        self.z - q
    }
}

/// Vector-valued integrand evaluated along a path.
pub trait PathIntegrand<R: Real> {
    fn dim(&self) -> usize;
    /// Reset any transported state to the path start; called before every
    /// pass over the nodes.
    fn begin_pass(&mut self, path: &PathSpec<R>) -> Result<()>;
    /// Nodes arrive in increasing path order within a pass.
    fn eval(&mut self, node: &NodePoint<R>, seg: &Segment<R>, out: &mut [Cx<R>]) -> Result<()>;
}

/// Adapter for stateless closures of one complex point.
pub struct FnIntegrand<F>(pub F);

impl<R: Real, F: FnMut(&NodePoint<R>) -> Cx<R>> PathIntegrand<R> for FnIntegrand<F> {
    fn dim(&self) -> usize {
        1
    }
    fn begin_pass(&mut self, _: &PathSpec<R>) -> Result<()> {
        Ok(())
    }
    fn eval(&mut self, node: &NodePoint<R>, _: &Segment<R>, out: &mut [Cx<R>]) -> Result<()> {
        out[0] = (self.0)(node);
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadResult<R: Real> {
    #[serde(skip)]
    pub values: Vec<Cx<R>>,
    pub errors: Vec<f64>,
    pub level: u32,
    pub evaluations: usize,
    pub ray_length: Option<f64>,
    pub tail_bound: f64,
}

impl<R: Real> QuadResult<R> {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Nodes and weights on [0, 1] for step h: (t, 1 − t, weight, parity of k).
fn nodes<R: Real>(level: u32) -> Vec<(R, R, R, bool)> {
    let h = R::from_f64(0.5f64.powi(level as i32));
    let half_pi = R::pi() * R::half();
    // beyond this |u| the offset 1 − t underflows binary64 range
    let u_max = 6.1;
    let n = (u_max * f64::from(1u32 << level)).ceil() as i64;
    let mut out = Vec::with_capacity((2 * n + 1) as usize);
    for k in -n..=n {
        let u = h * R::from_i64(k);
        let eu = u.exp();
        let inv = R::one() / eu;
        let sinh = (eu - inv) * R::half();
        let cosh = (eu + inv) * R::half();
        let q = half_pi * sinh;
        let e = (-(q + q).abs()).exp();
        // for q ≥ 0: 1 − t = e/(1 + e), t = 1/(1 + e); mirrored for q < 0
        let small = e / (R::one() + e);
        let big = R::one() / (R::one() + e);
        let (t, omt) = if q >= R::zero() { (big, small) } else { (small, big) };
        if small.to_f64() < 1e-300 {
            continue;
        }
        let w = h * R::pi() * t * omt * cosh;
        out.push((t, omt, w, k % 2 == 0));
    }
    out
}

/// Point, derivative and endpoint offsets on a finite segment.
fn segment_node<R: Real>(seg: &Segment<R>, t: R, omt: R, ray_len: R) -> (Cx<R>, Cx<R>, Cx<R>, Option<Cx<R>>) {
    match *seg {
        Segment::Line { a, b } => {
            let d = b - a;
            let fs = d * real(t);
            let te = -d * real(omt);
            let z = if t <= R::half() { a + fs } else { b + te };
            (z, d, fs, Some(te))
        }
        Segment::Arc { center, radius, theta0, sweep } => {
            let e0 = Complex::new(theta0.cos(), theta0.sin()) * real(radius);
            let th1 = theta0 + sweep;
            let e1 = Complex::new(th1.cos(), th1.sin()) * real(radius);
            // e^{iφ} − 1 = 2i·sin(φ/2)·e^{iφ/2}
            let chord = |phi: R| {
                let hp = phi * R::half();
                let (s, c) = hp.sin_cos();
                Complex::new(R::zero(), s + s) * Complex::new(c, s)
            };
            let fs = e0 * chord(sweep * t);
            let te = e1 * chord(-(sweep * omt));
            let z = if t <= R::half() { center + e0 + fs } else { center + e1 + te };
            let (s, c) = (theta0 + sweep * t).sin_cos();
            let dz = Complex::new(c, s) * Complex::new(R::zero(), sweep * radius);
            (z, dz, fs, Some(te))
        }
        Segment::Ray { start, direction } => {
            let d = direction * real(ray_len);
            let fs = d * real(t);
            (start + fs, d, fs, None)
        }
    }
}

/// Bound on ∫_L^∞ C(1 + r0 + u)^k e^{x0 − βu} du for β > k/(1 + r0 + L).
fn tail_bound(c: f64, k: f64, r0: f64, x0: f64, beta: f64, l: f64) -> f64 {
    let s = 1.0 + r0 + l;
    let denom = beta - k / s;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    c * s.powf(k) * (x0 - beta * l).exp() / denom
}

/// Smallest L (found by doubling then bisection) with bound ≤ target.
fn tail_length(c: f64, k: f64, r0: f64, x0: f64, beta: f64, target: f64) -> Option<f64> {
    let mut hi = 1.0;
    while tail_bound(c, k, r0, x0, beta, hi) > target {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail_bound(c, k, r0, x0, beta, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

struct Pass<R: Real> {
    fine: Vec<Cx<R>>,
    coarse: Vec<Cx<R>>,
    l1: Vec<f64>,
    evaluations: usize,
    /// max over far-half ray nodes of |f| / ((1 + r0 + u)^k e^{x0 − βu})
    envelope: f64,
}

fn run_pass<R: Real, I: PathIntegrand<R> + ?Sized>(
    integrand: &mut I,
    path: &PathSpec<R>,
    level: u32,
    ray_len: R,
    k: f64,
) -> Result<Pass<R>> {
    let dim = integrand.dim();
    let table = nodes::<R>(level);
    let mut fine = vec![Cx::<R>::zero(); dim];
    let mut coarse = vec![Cx::<R>::zero(); dim];
    let mut l1 = vec![0.0; dim];
    let mut buf = vec![Cx::<R>::zero(); dim];
    let mut evaluations = 0;
    let mut envelope = 0.0f64;
    let two = R::from_f64(2.0);
    integrand.begin_pass(path)?;
    for (si, seg) in path.segments().iter().enumerate() {
        for &(t, omt, w, even) in &table {
            let (z, dz, from_start, to_end) = segment_node(seg, t, omt, ray_len);
            let node = NodePoint { segment: si, t, z, dz, from_start, to_end };
            integrand.eval(&node, seg, &mut buf)?;
            evaluations += 1;
            let wdz = dz * real(w);
            for c in 0..dim {
                let v = buf[c] * wdz;
                if !v.is_finite_c() {
                    return Err(Error::NonConvergence {
                        label: format!("non-finite integrand on segment {si} at t = {}", t.to_f64()),
                        error: f64::INFINITY,
                        target: 0.0,
                    });
                }
                fine[c] = fine[c] + v;
                l1[c] += v.cabs().to_f64();
                if even {
                    coarse[c] = coarse[c] + v * real(two);
                }
            }
            if let Segment::Ray { start, direction } = *seg {
                if t > R::half() {
                    let u = (ray_len * t).to_f64();
                    let r0 = start.cabs().to_f64();
                    let x0 = start.re.to_f64();
                    let beta = -direction.re.to_f64();
                    let scale = (1.0 + r0 + u).powf(k) * (x0 - beta * u).exp();
                    let mag = buf.iter().map(|v| v.cabs().to_f64()).fold(0.0, f64::max);
                    if scale > 0.0 {
                        envelope = envelope.max(mag / scale);
                    }
                }
            }
        }
    }
    Ok(Pass { fine, coarse, l1, evaluations, envelope })
}

/// Integrate a vector-valued integrand along `path`.
pub fn integrate_vec<R: Real, I: PathIntegrand<R> + ?Sized>(
    integrand: &mut I,
    path: &PathSpec<R>,
    settings: &QuadratureSettings,
) -> Result<QuadResult<R>> {
    let ray = path.segments().last().and_then(|s| match *s {
        Segment::Ray { start, direction } => Some((start, direction)),
        _ => None,
    });
    let k = settings.tail_degree;
    let (r0, x0, beta) = match ray {
        Some((s, d)) => (s.cabs().to_f64(), s.re.to_f64(), -d.re.to_f64()),
        None => (0.0, 0.0, 1.0),
    };
    if ray.is_some() && beta <= 0.0 {
        return Err(Error::TailBound("ray direction does not decay".into()));
    }
    // initial guess from a unit envelope; revised from the sampled one
    let mut ray_len = match ray {
        Some(_) => tail_length(1.0, k, r0, x0, beta, settings.tol * 1e-2).ok_or_else(|| Error::TailBound("no admissible truncation".into()))?,
        None => 1.0,
    };
    let eps = R::EPS;
    let mut total_evals = 0;
    let mut last_err = f64::INFINITY;
    for _attempt in 0..4 {
        let mut level = 3;
        loop {
            let pass = run_pass(integrand, path, level, R::from_f64(ray_len), k)?;
            total_evals += pass.evaluations;
            let norm = pass.fine.iter().map(|v| v.cabs().to_f64()).fold(0.0, f64::max);
            let l1 = pass.l1.iter().copied().fold(0.0, f64::max);
            let errs: Vec<f64> = pass
                .fine
                .iter()
                .zip(&pass.coarse)
                .zip(&pass.l1)
                .map(|((f, c), l)| (*f - *c).cabs().to_f64() + 10.0 * eps * l)
                .collect();
            let err = errs.iter().copied().fold(0.0, f64::max);
            last_err = err;
            let floor = 100.0 * eps * l1;
            let converged = err <= settings.tol * norm || err <= floor;
            if converged || level >= settings.max_level {
                if !converged {
                    return Err(Error::NonConvergence {
                        label: format!("tanh-sinh at level {level}"),
                        error: err,
                        target: settings.tol * norm,
                    });
                }
                let mut tail = 0.0;
                if ray.is_some() {
                    let c = 2.0 * pass.envelope.max(f64::MIN_POSITIVE);
                    tail = tail_bound(c, k, r0, x0, beta, ray_len);
                    let target = 1e-2 * settings.tol * norm.max(floor);
                    if tail > target {
                        let new_len = tail_length(c, k, r0, x0, beta, target)
                            .ok_or_else(|| Error::TailBound(format!("envelope {c:e} admits no truncation")))?;
                        if new_len > ray_len {
                            ray_len = new_len;
                            break;
                        }
                    }
                }
                let errors = errs.iter().map(|e| e + tail).collect();
                return Ok(QuadResult {
                    values: pass.fine,
                    errors,
                    level,
                    evaluations: total_evals,
                    ray_length: ray.map(|_| ray_len),
                    tail_bound: tail,
                });
            }
            level += 1;
        }
    }
    Err(Error::TailBound(format!("ray truncation did not settle (last error {last_err:e})")))
}

/// Scalar convenience wrapper: returns (value, error estimate).
pub fn integrate<R: Real>(
    f: impl FnMut(&NodePoint<R>) -> Cx<R>,
    path: &PathSpec<R>,
    settings: &QuadratureSettings,
) -> Result<(Cx<R>, f64)> {
    let mut integrand = FnIntegrand(f);
    let r = integrate_vec(&mut integrand, path, settings)?;
    Ok((r.values[0], r.errors[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::complex::{cx, rel_diff};
    use crate::numeric::Dd;
    use crate::path::EndClass;

    fn settings() -> QuadratureSettings {
        QuadratureSettings::for_precision(Precision::Double)
    }

    #[test]
    fn inverse_sqrt_endpoint() {
        let a = cx(0.0, 0.0);
        let path = PathSpec::line(a, cx(1.0, 0.0))
            .with_classes(EndClass::SingularPoint { location: a, exponent: cx(0.5, 0.0) }, EndClass::RegularPoint)
            .unwrap();
        let (v, e) = integrate(|n: &NodePoint<f64>| n.from_start.cpow(cx(-0.5, 0.0)), &path, &settings()).unwrap();
        assert!(rel_diff(v, cx(2.0, 0.0)) < 1e-12, "{v}");
        assert!(e < 1e-10);
    }

    #[test]
    fn beta_half_half() {
        let path = PathSpec::line(cx(0.0, 0.0), cx(1.0, 0.0));
        let f = |n: &NodePoint<f64>| (n.from_start * (-n.to_end.unwrap())).cpow(cx(-0.5, 0.0));
        let (v, _) = integrate(f, &path, &settings()).unwrap();
        assert!(rel_diff(v, cx(std::f64::consts::PI, 0.0)) < 1e-12, "{v}");
    }

    #[test]
    fn exponential_ray() {
        let path = PathSpec::ray(cx(0.0, 0.0), cx(-1.0, 0.0)).unwrap();
        let r = integrate_vec(&mut FnIntegrand(|n: &NodePoint<f64>| n.z.cexp()), &path, &settings().with_tail_degree(0.0)).unwrap();
        assert!(rel_diff(r.values[0], cx(-1.0, 0.0)) < 1e-12, "{:?}", r.values);
        assert!(r.tail_bound <= 1e-12);
        // oblique ray with polynomial growth: ∫ z² e^z = −2 from 0 to −∞·e^{iθ}
        let path = PathSpec::ray(cx(0.0, 0.0), cx(-1.0, 0.7)).unwrap();
        let r = integrate_vec(&mut FnIntegrand(|n: &NodePoint<f64>| n.z * n.z * n.z.cexp()), &path, &settings().with_tail_degree(2.0)).unwrap();
        assert!(rel_diff(r.values[0], cx(-2.0, 0.0)) < 1e-11, "{:?}", r.values);
    }

    #[test]
    fn arcs_and_offsets() {
        // ∮ dz/z = 2πi over a unit circle
        let path = PathSpec::circle(cx(0.0, 0.0), 1.0, 0.3, 1);
        let (v, _) = integrate(|n: &NodePoint<f64>| n.z.cinv(), &path, &settings()).unwrap();
        assert!(rel_diff(v, cx(0.0, 2.0 * std::f64::consts::PI)) < 1e-13);
        let seg = path.segments()[0];
        let (z, _, fs, te) = segment_node(&seg, 1e-3, 1.0 - 1e-3, 1.0);
        assert!((z - seg.start() - fs).cabs() < 1e-15);
        assert!((z - seg.end().unwrap() - te.unwrap()).cabs() < 1e-15);
    }

    #[test]
    fn extended_precision() {
        let s = QuadratureSettings::for_precision(Precision::Extended);
        let path = PathSpec::<Dd>::line(cx(0.0, 0.0), cx(1.0, 0.0));
        let f = |n: &NodePoint<Dd>| (n.from_start * (-n.to_end.unwrap())).cpow(cx(-0.5, 0.0));
        let (v, e) = integrate(f, &path, &s).unwrap();
        assert!(rel_diff(v, real(Dd::pi())) < 1e-27, "{v:?} {e:e}");
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(QuadratureSettings::new(1e-3, Precision::Double).is_err());
        assert!(QuadratureSettings::new(0.0, Precision::Double).is_err());
    }
}
