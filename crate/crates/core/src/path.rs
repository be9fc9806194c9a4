//! Piecewise paths in the complex plane: straight segments, circular arcs
//! and decay rays, with endpoint classes and continued logarithms.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::complex::{convert, real, to_c64};
use crate::numeric::{Cx, CxExt, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment<R: Real> {
    Line { a: Cx<R>, b: Cx<R> },
    /// z(t) = center + radius·e^{i(theta0 + t·sweep)}.
    Arc { center: Cx<R>, radius: R, theta0: R, sweep: R },
    /// z(u) = start + u·direction for u ≥ 0; `direction` has modulus one.
    Ray { start: Cx<R>, direction: Cx<R> },
}

impl<R: Real> Segment<R> {
    pub fn start(&self) -> Cx<R> {
        match *self {
            Segment::Line { a, .. } => a,
            Segment::Arc { center, radius, theta0, .. } => center + polar(radius, theta0),
            Segment::Ray { start, .. } => start,
        }
    }

    /// `None` for rays.
    pub fn end(&self) -> Option<Cx<R>> {
        match *self {
            Segment::Line { b, .. } => Some(b),
            Segment::Arc { center, radius, theta0, sweep } => Some(center + polar(radius, theta0 + sweep)),
            Segment::Ray { .. } => None,
        }
    }

    /// Point and derivative at parameter t ∈ [0, 1] (finite segments) or
    /// u ≥ 0 (rays).
    pub fn eval(&self, t: R) -> (Cx<R>, Cx<R>) {
        match *self {
            Segment::Line { a, b } => (a + (b - a) * real(t), b - a),
            Segment::Arc { center, radius, theta0, sweep } => {
                let e = polar(radius, theta0 + sweep * t);
                (center + e, e * Complex::new(R::zero(), sweep))
            }
            Segment::Ray { start, direction } => (start + direction * real(t), direction),
        }
    }

    pub fn is_ray(&self) -> bool {
        matches!(self, Segment::Ray { .. })
    }

    /// Arc length (infinite for rays).
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { a, b } => (b - a).cabs().to_f64(),
            Segment::Arc { radius, sweep, .. } => (radius * sweep).abs().to_f64(),
            Segment::Ray { .. } => f64::INFINITY,
        }
    }

    /// Distance from q to the segment (sampled for arcs).
    pub fn distance_to(&self, q: Cx<R>) -> f64 {
        let q = to_c64(q);
        match *self {
            Segment::Line { a, b } => point_segment_distance(q, to_c64(a), to_c64(b)),
            Segment::Arc { .. } => (0..=64)
                .map(|k| (to_c64(self.eval(R::from_f64(f64::from(k) / 64.0)).0) - q).norm())
                .fold(f64::INFINITY, f64::min),
            Segment::Ray { start, direction } => {
                let (s, d) = (to_c64(start), to_c64(direction));
                let u = ((q - s) * d.conj()).re.max(0.0);
                (s + d * u - q).norm()
            }
        }
    }

    pub fn convert<S: Real>(&self) -> Segment<S> {
        let c = |r: R| S::from_dd(r.to_dd());
        match *self {
            Segment::Line { a, b } => Segment::Line { a: convert(a), b: convert(b) },
            Segment::Arc { center, radius, theta0, sweep } => {
                Segment::Arc { center: convert(center), radius: c(radius), theta0: c(theta0), sweep: c(sweep) }
            }
            Segment::Ray { start, direction } => Segment::Ray { start: convert(start), direction: convert(direction) },
        }
    }
}

fn polar<R: Real>(r: R, theta: R) -> Cx<R> {
    let (s, c) = theta.sin_cos();
    Complex::new(r * c, r * s)
}

fn point_segment_distance(q: Complex<f64>, a: Complex<f64>, b: Complex<f64>) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (q - a).norm();
    }
    let t = ((q - a) * d.conj()).re / len2;
    (a + d * t.clamp(0.0, 1.0) - q).norm()
}

/// Behaviour of the integrand at a path endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndClass<R: Real> {
    RegularPoint,
    /// Integrand ~ (z − location)^{exponent − 1}.
    SingularPoint { location: Cx<R>, exponent: Cx<R> },
    /// Integrand decays like e^{z} along `direction`.
    DecayRay { direction: Cx<R> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec<R: Real> {
    segments: Vec<Segment<R>>,
    start: EndClass<R>,
    end: EndClass<R>,
}

const JOIN_TOL: f64 = 1e-12;

impl<R: Real> PathSpec<R> {
    pub fn new(segments: Vec<Segment<R>>, start: EndClass<R>, end: EndClass<R>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Path("empty path".into()));
        }
        for w in segments.windows(2) {
            let Some(e) = w[0].end() else {
                return Err(Error::Path("a ray must be the last segment".into()));
            };
            let s = w[1].start();
            if (e - s).cabs().to_f64() > JOIN_TOL * (1.0 + e.cabs().to_f64()) {
                return Err(Error::Path(format!("segments do not join: {} vs {}", to_c64(e), to_c64(s))));
            }
        }
        for class in [&start, &end] {
            match class {
                EndClass::SingularPoint { exponent, .. } if exponent.re <= R::zero() => {
                    return Err(Error::Path(format!("singular endpoint exponent {} must have Re > 0", to_c64(*exponent))));
                }
                EndClass::DecayRay { .. } if class == &start => {
                    return Err(Error::Path("paths may only end on a decay ray".into()));
                }
                _ => {}
            }
        }
        let last_is_ray = segments.last().is_some_and(Segment::is_ray);
        match end {
            EndClass::DecayRay { direction } => {
                if !last_is_ray {
                    return Err(Error::Path("decay end class requires a final ray".into()));
                }
                if direction.re >= R::zero() {
                    return Err(Error::Path("decay direction must have negative real part".into()));
                }
            }
            _ if last_is_ray => return Err(Error::Path("a final ray needs a decay end class".into())),
            _ => {}
        }
        Ok(Self { segments, start, end })
    }

    pub fn segments(&self) -> &[Segment<R>] {
        &self.segments
    }

    pub fn start_class(&self) -> &EndClass<R> {
        &self.start
    }

    pub fn end_class(&self) -> &EndClass<R> {
        &self.end
    }

    pub fn start(&self) -> Cx<R> {
        self.segments[0].start()
    }

    pub fn end(&self) -> Option<Cx<R>> {
        self.segments.last().and_then(Segment::end)
    }

    pub fn is_closed(&self) -> bool {
        self.end().is_some_and(|e| (e - self.start()).cabs().to_f64() <= JOIN_TOL * (1.0 + e.cabs().to_f64()))
    }

    pub fn with_classes(mut self, start: EndClass<R>, end: EndClass<R>) -> Result<Self> {
        self.start = start;
        self.end = end;
        Self::new(self.segments, self.start, self.end)
    }

    /// Straight segment.
    pub fn line(a: Cx<R>, b: Cx<R>) -> Self {
        Self { segments: vec![Segment::Line { a, b }], start: EndClass::RegularPoint, end: EndClass::RegularPoint }
    }

    /// Ray from `start` in `direction` (normalized here), decaying for e^z.
    pub fn ray(start: Cx<R>, direction: Cx<R>) -> Result<Self> {
        let d = direction * real(direction.cabs()).cinv();
        Self::new(vec![Segment::Ray { start, direction: d }], EndClass::RegularPoint, EndClass::DecayRay { direction: d })
    }

    /// Full circle around `center` starting at angle `theta0`; positive
    /// `turns` run counterclockwise.
    pub fn circle(center: Cx<R>, radius: R, theta0: R, turns: i32) -> Self {
        let sweep = R::two_pi() * R::from_i64(i64::from(turns));
        Self {
            segments: vec![Segment::Arc { center, radius, theta0, sweep }],
            start: EndClass::RegularPoint,
            end: EndClass::RegularPoint,
        }
    }

    /// Straight path from a to b with circular detours of radius `radius`
    /// around every point of `avoid` closer than `radius` to the segment
    /// (endpoints excepted). The minor arc is taken, so the detoured path is
    /// homotopic to the straight one in the complement of the avoided
    /// points; a point hit exactly is passed counterclockwise.
    pub fn detoured(a: Cx<R>, b: Cx<R>, avoid: &[Cx<R>], radius: R) -> Result<Self> {
        let (a64, b64) = (to_c64(a), to_c64(b));
        let d64 = b64 - a64;
        let len = d64.norm();
        if len == 0.0 {
            return Err(Error::Path("degenerate segment".into()));
        }
        let r64 = radius.to_f64();
        let near = |p: Cx<R>| (to_c64(p) - a64).norm() <= JOIN_TOL * (1.0 + len) || (to_c64(p) - b64).norm() <= JOIN_TOL * (1.0 + len);
        let mut hits: Vec<(f64, Cx<R>)> = avoid
            .iter()
            .filter(|&&p| !near(p))
            .filter(|&&p| point_segment_distance(to_c64(p), a64, b64) < r64)
            .map(|&p| (((to_c64(p) - a64) * d64.conj()).re / (len * len), p))
            .collect();
        hits.sort_by(|x, y| x.0.total_cmp(&y.0));

        let dir = (b - a) * real(R::from_f64(len)).cinv();
        let mut segments = Vec::new();
        let mut cur = a;
        for (_, p) in hits {
            // chord through the disk |z − p| < r along the line
            let rel = p - a;
            let along = (rel * dir.conj()).re;
            let perp = (rel * dir.conj()).im;
            let half = (radius * radius - perp * perp).sqrt();
            let entry = a + dir * real(along - half);
            let exit = a + dir * real(along + half);
            if ((entry - a) * dir.conj()).re <= R::zero() || ((b - exit) * dir.conj()).re <= R::zero() {
                return Err(Error::Path(format!("detour disk around {} contains an endpoint", to_c64(p))));
            }
            segments.push(Segment::Line { a: cur, b: entry });
            let theta0 = (entry - p).carg();
            let theta1 = (exit - p).carg();
            let mut sweep = theta1 - theta0;
            let pi = R::pi();
            while sweep > pi {
                sweep -= R::two_pi();
            }
            while sweep <= -pi {
                sweep += R::two_pi();
            }
            if perp == R::zero() {
                sweep = pi;
            }
            segments.push(Segment::Arc { center: p, radius, theta0, sweep });
            cur = p + polar(radius, theta0 + sweep);
        }
        segments.push(Segment::Line { a: cur, b });
        Self::new(segments, EndClass::RegularPoint, EndClass::RegularPoint)
    }

    /// Concatenation; the end of `self` must be the start of `other`.
    pub fn then(&self, other: &PathSpec<R>) -> Result<Self> {
        let mut segs = self.segments.clone();
        segs.extend_from_slice(&other.segments);
        Self::new(segs, self.start, other.end)
    }

    /// The same path traversed backwards (not for rays).
    pub fn reversed(&self) -> Result<Self> {
        let mut segs = Vec::with_capacity(self.segments.len());
        for s in self.segments.iter().rev() {
            segs.push(match *s {
                Segment::Line { a, b } => Segment::Line { a: b, b: a },
                Segment::Arc { center, radius, theta0, sweep } => Segment::Arc { center, radius, theta0: theta0 + sweep, sweep: -sweep },
                Segment::Ray { .. } => return Err(Error::Path("cannot reverse a ray".into())),
            });
        }
        Self::new(segs, self.end, self.start)
    }

    /// Minimum distance from q to the path.
    pub fn distance_to(&self, q: Cx<R>) -> f64 {
        self.segments.iter().map(|s| s.distance_to(q)).fold(f64::INFINITY, f64::min)
    }

    pub fn convert<S: Real>(&self) -> PathSpec<S> {
        let cls = |c: &EndClass<R>| match *c {
            EndClass::RegularPoint => EndClass::RegularPoint,
            EndClass::SingularPoint { location, exponent } => {
                EndClass::SingularPoint { location: convert(location), exponent: convert(exponent) }
            }
            EndClass::DecayRay { direction } => EndClass::DecayRay { direction: convert(direction) },
        };
        PathSpec { segments: self.segments.iter().map(Segment::convert).collect(), start: cls(&self.start), end: cls(&self.end) }
    }

    pub fn dump(&self) -> PathDump {
        let cls = |c: &EndClass<R>| match *c {
            EndClass::RegularPoint => EndDump::RegularPoint,
            EndClass::SingularPoint { location, exponent } => {
                EndDump::SingularPoint { location: to_c64(location), exponent: to_c64(exponent) }
            }
            EndClass::DecayRay { direction } => EndDump::DecayRay { direction: to_c64(direction) },
        };
        PathDump {
            segments: self
                .segments
                .iter()
                .map(|s| match *s {
                    Segment::Line { a, b } => SegmentDump::Line { a: to_c64(a), b: to_c64(b) },
                    Segment::Arc { center, radius, theta0, sweep } => SegmentDump::Arc {
                        center: to_c64(center),
                        radius: radius.to_f64(),
                        theta0: theta0.to_f64(),
                        sweep: sweep.to_f64(),
                    },
                    Segment::Ray { start, direction } => SegmentDump::Ray { start: to_c64(start), direction: to_c64(direction) },
                })
                .collect(),
            start: cls(&self.start),
            end: cls(&self.end),
        }
    }
}

/// Serializable path description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathDump {
    pub segments: Vec<SegmentDump>,
    pub start: EndDump,
    pub end: EndDump,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentDump {
    Line { a: Complex<f64>, b: Complex<f64> },
    Arc { center: Complex<f64>, radius: f64, theta0: f64, sweep: f64 },
    Ray { start: Complex<f64>, direction: Complex<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndDump {
    RegularPoint,
    SingularPoint { location: Complex<f64>, exponent: Complex<f64> },
    DecayRay { direction: Complex<f64> },
}

/// log(z − q) continued along one segment from parameter 0 to `t_end`,
/// given its value `start_log` at the segment start. Steps are bisected
/// until each chord is short against the distance to q, so every step is
/// a principal logarithm of a ratio close to 1.
pub fn continue_log_segment<R: Real>(seg: &Segment<R>, q: Cx<R>, start_log: Cx<R>, t_end: R) -> Cx<R> {
    let z0 = seg.eval(R::zero()).0;
    let z1 = seg.eval(t_end).0;
    if let Segment::Line { .. } | Segment::Ray { .. } = seg {
        // a straight piece not through q turns by less than π
        return start_log + ((z1 - q) * (z0 - q).cinv()).cln();
    }
    let mut acc = start_log;
    let mut stack = vec![(R::zero(), t_end)];
    // process left to right
    while let Some((a, b)) = stack.pop() {
        let za = seg.eval(a).0 - q;
        let zb = seg.eval(b).0 - q;
        let short = (zb - za).cabs() < R::half() * za.cabs().min(zb.cabs());
        let span_ok = (b - a).abs().to_f64() <= 0.125;
        if short && span_ok {
            acc = acc + (zb * za.cinv()).cln();
        } else {
            let mid = (a + b) * R::half();
            stack.push((mid, b));
            stack.push((a, mid));
        }
    }
    acc
}

/// Continued log(z − q) at the end of every segment, starting from the
/// principal value at the path start. The last entry is the far point of a
/// final ray at distance `ray_length`.
pub fn continued_logs<R: Real>(path: &PathSpec<R>, q: Cx<R>, ray_length: R) -> Vec<Cx<R>> {
    let mut l = (path.start() - q).cln();
    let mut out = Vec::with_capacity(path.segments().len());
    for seg in path.segments() {
        let t_end = if seg.is_ray() { ray_length } else { R::one() };
        l = continue_log_segment(seg, q, l, t_end);
        out.push(l);
    }
    out
}

/// Winding of a closed path around q.
pub fn winding_number<R: Real>(path: &PathSpec<R>, q: Cx<R>) -> i64 {
    let logs = continued_logs(path, q, R::one());
    let last = logs.last().copied().unwrap_or_else(Cx::zero);
    let first = (path.start() - q).cln();
    ((last - first).im / R::two_pi()).round().to_f64() as i64
}

/// ¼ of the minimum pairwise distance, the standard detour radius.
pub fn detour_radius<R: Real>(points: &[Cx<R>]) -> R {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min((points[i] - points[j]).cabs().to_f64());
        }
    }
    R::from_f64(if best.is_finite() { best / 4.0 } else { 1.0 })
}

/// Positively oriented unit multiple of `z`.
pub fn unit<R: Real>(z: Cx<R>) -> Cx<R> {
    let n = z.cabs();
    if n == R::zero() {
        Cx::one()
    } else {
        z * real(R::one() / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::complex::cx;
    use std::f64::consts::PI;

    fn c(a: f64, b: f64) -> Cx<f64> {
        cx(a, b)
    }

    #[test]
    fn detour_keeps_homotopy_class() {
        // passing just above 1: the detour must also pass above
        let p = PathSpec::detoured(c(0.0, 0.01), c(2.0, 0.01), &[c(1.0, 0.0)], 0.25).unwrap();
        assert_eq!(p.segments().len(), 3);
        let mid = p.segments()[1].eval(0.5).0;
        assert!(mid.im > 0.2, "{mid}");
        assert!(p.distance_to(c(1.0, 0.0)) >= 0.25 - 1e-12);
        // exact hit goes counterclockwise, i.e. below for a left-to-right path
        let p = PathSpec::detoured(c(0.0, 0.0), c(2.0, 0.0), &[c(1.0, 0.0)], 0.25).unwrap();
        let mid = p.segments()[1].eval(0.5).0;
        assert!(mid.im < -0.2, "{mid}");
        assert!(matches!(p.segments()[1], Segment::Arc { sweep, .. } if (sweep - PI).abs() < 1e-15));
    }

    #[test]
    fn detour_log_continuation_matches_straight() {
        let q = c(1.0, -0.1);
        let straight = PathSpec::line(c(0.0, 0.0), c(2.0, 0.0));
        let bent = PathSpec::detoured(c(0.0, 0.0), c(2.0, 0.0), &[q], 0.25).unwrap();
        let a = *continued_logs(&straight, q, 1.0).last().unwrap();
        let b = *continued_logs(&bent, q, 1.0).last().unwrap();
        assert!((a - b).cabs() < 1e-14);
    }

    #[test]
    fn circle_winding() {
        let p = PathSpec::circle(c(0.5, 0.5), 0.3, 0.0, 1);
        assert!(p.is_closed());
        assert_eq!(winding_number(&p, c(0.5, 0.6)), 1);
        assert_eq!(winding_number(&p, c(2.0, 0.0)), 0);
        let p = PathSpec::circle(c(0.0, 0.0), 1.0, 0.3, -2);
        assert_eq!(winding_number(&p, c(0.0, 0.0)), -2);
    }

    #[test]
    fn class_validation() {
        let seg = vec![Segment::Line { a: c(0.0, 0.0), b: c(1.0, 0.0) }];
        let bad = EndClass::SingularPoint { location: c(1.0, 0.0), exponent: c(-0.5, 0.0) };
        assert!(PathSpec::new(seg.clone(), EndClass::RegularPoint, bad).is_err());
        let ray = PathSpec::ray(c(0.0, 0.0), c(1.0, 0.0));
        assert!(ray.is_err());
        let ray = PathSpec::ray(c(0.0, 0.0), c(-2.0, 0.0)).unwrap();
        assert_eq!(ray.end(), None);
        assert!(ray.reversed().is_err());
        let gap = vec![Segment::Line { a: c(0.0, 0.0), b: c(1.0, 0.0) }, Segment::Line { a: c(1.1, 0.0), b: c(2.0, 0.0) }];
        assert!(PathSpec::new(gap, EndClass::RegularPoint, EndClass::RegularPoint).is_err());
    }

    #[test]
    fn reverse_and_concat() {
        let a = PathSpec::line(c(0.0, 0.0), c(1.0, 1.0));
        let b = PathSpec::circle(c(1.0, 0.0), 1.0, PI / 2.0, 1);
        let ab = a.then(&b).unwrap();
        let back = ab.reversed().unwrap();
        assert!((back.start() - c(1.0, 1.0)).cabs() < 1e-15);
        assert!((back.end().unwrap() - c(0.0, 0.0)).cabs() < 1e-15);
        let json = serde_json::to_string(&ab.dump()).unwrap();
        assert!(json.contains("\"kind\":\"arc\""));
    }
}
