//! Periods of e^y·ω on the affine Legendre curve itself, for the forms
//! dx/y, x dx/y, dx, x dx.
//!
//! Two closed loops lift stadiums around the branch-point pairs (0, 1) and
//! (1, λ) of the x-line. The three decay chains run from a base point p
//! over y_b to y → −∞ on each of the three x-sheets; a chain reaches its
//! sheet through loops around points of D first. Along loops x is the
//! coordinate and y = √f(x) is continued; along chains y is the coordinate
//! and x(y) is root-tracked.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::curve::{cubic_roots, CriticalData};
use crate::engine::PeriodMatrix;
use crate::error::{Error, Result};
use crate::golden;
use crate::numeric::complex::real;
use crate::numeric::{Cx, CxExt, Execution, Real};
use crate::path::{detour_radius, unit, EndClass, PathSpec, Segment};
use crate::product::LogValue;
use crate::quadrature::{integrate_vec, NodePoint, PathIntegrand, QuadResult, QuadratureSettings};
use crate::transport::FiberTracker;

pub const CURVE_FORMS: [&str; 4] = ["dx/y", "x dx/y", "dx", "x dx"];

/// Exponents (k, l) of the functions g = x^k y^l whose ∇g = d(g e^y)e^{−y}
/// are paired with every cycle.
pub const EXACT_LIFTS: [(u32, u32); 8] = [(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (2, 1), (3, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    X,
    Y,
}

#[derive(Debug, Clone)]
pub struct CurveChain<R: Real> {
    pub label: String,
    pub path: PathSpec<R>,
    pub chart: Chart,
    /// Curve point at the path start: (x, y).
    pub start: (Cx<R>, Cx<R>),
    /// Y chart: the three fiber roots at the start, the chain's sheet first.
    pub fiber: [Cx<R>; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectOptions {
    /// Multiplies the loop radii around points of D and branch points.
    pub detour_scale: f64,
    /// Rotation of the decay rays away from the negative real y-axis.
    pub ray_angle: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self { detour_scale: 1.0, ray_angle: 0.0 }
    }
}

fn f_at<R: Real>(lambda: Cx<R>, x: Cx<R>) -> Cx<R> {
    x * (x - Cx::one()) * (x - lambda)
}

fn df_at<R: Real>(lambda: Cx<R>, x: Cx<R>) -> Cx<R> {
    let three = real(R::from_f64(3.0));
    let two = real(R::from_f64(2.0));
    three * x * x - two * (lambda + Cx::one()) * x + lambda
}

/// Closed stadium around the segment [a, b] at distance `rho`, clockwise.
fn stadium<R: Real>(a: Cx<R>, b: Cx<R>, rho: R) -> Result<PathSpec<R>> {
    let u = unit(b - a);
    let n = u * Cx::new(R::zero(), R::one());
    let r = real(rho);
    let arg_n = n.carg();
    let segments = vec![
        Segment::Line { a: a + n * r, b: b + n * r },
        Segment::Arc { center: b, radius: rho, theta0: arg_n, sweep: -R::pi() },
        Segment::Line { a: b - n * r, b: a - n * r },
        Segment::Arc { center: a, radius: rho, theta0: arg_n - R::pi(), sweep: -R::pi() },
    ];
    PathSpec::new(segments, EndClass::RegularPoint, EndClass::RegularPoint)
}

fn segment_distance<R: Real>(p: Cx<R>, a: Cx<R>, b: Cx<R>) -> R {
    let d = b - a;
    let t = ((p - a) * d.conj()).re / (d.re * d.re + d.im * d.im);
    let t = t.max(R::zero()).min(R::one());
    (p - (a + d * real(t))).cabs()
}

fn stadium_around<R: Real>(a: Cx<R>, b: Cx<R>, other: Cx<R>, scale: f64) -> Result<PathSpec<R>> {
    let rho = (R::ratio(1, 4) * (b - a).cabs()).min(R::half() * segment_distance(other, a, b)) * R::from_f64(scale);
    if rho <= R::zero() {
        return Err(Error::Path("branch points too close for a stadium".into()));
    }
    stadium(a, b, rho)
}

/// Roots at y sorted by (re, im), so the base sheet is reproducible.
fn sorted_fiber<R: Real>(lambda: Cx<R>, y: Cx<R>) -> [Cx<R>; 3] {
    let mut r = cubic_roots(lambda, y * y);
    r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal).then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal)));
    r
}

/// The cycle data of the direct computation.
#[derive(Debug, Clone)]
pub struct CurveCycles<R: Real> {
    /// Base value y_b of the decay chains.
    pub base: Cx<R>,
    /// Fiber over y_b; the base point p is (fiber[0], y_b).
    pub fiber: [Cx<R>; 3],
    /// Loops γ₁, γ₂ and the chains η₁, η₂, η₃.
    pub chains: Vec<CurveChain<R>>,
    /// Sheet permutation of the loop around each point of D.
    pub permutations: Vec<[usize; 3]>,
}

/// y_b = (1 + 2·max|s_i|)·e^{iπ/4}: above every point of D, so the leftward
/// rays from it avoid D.
pub fn default_base<R: Real>(cd: &CriticalData<R>) -> Cx<R> {
    let m = cd.divisor().iter().map(|q| q.cabs()).fold(R::zero(), R::max);
    let h = R::half() * R::from_f64(2.0).sqrt();
    Cx::new(h, h) * real(R::one() + m + m)
}

fn loop_around<R: Real>(base: Cx<R>, q: Cx<R>, others: &[Cx<R>], rho: R) -> Result<PathSpec<R>> {
    let theta = (base - q).carg();
    let near = q + unit(base - q) * real(rho);
    let there = PathSpec::detoured(base, near, others, rho)?;
    let around = PathSpec::circle(q, rho, theta, 1);
    there.then(&around)?.then(&there.reversed()?)
}

pub fn curve_cycles<R: Real>(cd: &CriticalData<R>, opts: &DirectOptions) -> Result<CurveCycles<R>> {
    cd.require_generic()?;
    let lambda = cd.lambda;
    let zero = Cx::<R>::zero();
    let one = Cx::<R>::one();
    let mut chains = Vec::with_capacity(5);
    for (label, a, b, other) in [("gamma_1", zero, one, lambda), ("gamma_2", one, lambda, zero)] {
        let path = stadium_around(a, b, other, opts.detour_scale)?;
        let x0 = path.start();
        let y0 = f_at(lambda, x0).csqrt();
        chains.push(CurveChain { label: label.into(), path, chart: Chart::X, start: (x0, y0), fiber: [x0; 3] });
    }

    let base = default_base(cd);
    let fiber = sorted_fiber(lambda, base);
    let d = cd.divisor();
    let rho = detour_radius(&d) * R::from_f64(opts.detour_scale);
    let mut loops = Vec::with_capacity(d.len());
    let mut permutations = Vec::with_capacity(d.len());
    let mut tracker = FiberTracker::new(cd);
    for (k, &q) in d.iter().enumerate() {
        let others: Vec<Cx<R>> = d.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &p)| p).collect();
        let path = loop_around(base, q, &others, rho)?;
        tracker.begin(&path, fiber);
        let end = tracker.at_end(&path)?;
        let mut perm = [0usize; 3];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = (0..3)
                .min_by(|&a, &b| (end[i] - fiber[a]).cabs().partial_cmp(&(end[i] - fiber[b]).cabs()).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(i);
        }
        loops.push(path);
        permutations.push(perm);
    }
    // the sheet index 0 reaches `target` after the word of loops
    let word_to = |target: usize| -> Option<Vec<usize>> {
        if target == 0 {
            return Some(Vec::new());
        }
        for (a, pa) in permutations.iter().enumerate() {
            if pa[0] == target {
                return Some(vec![a]);
            }
        }
        for (a, pa) in permutations.iter().enumerate() {
            for (b, pb) in permutations.iter().enumerate() {
                if pb[pa[0]] == target {
                    return Some(vec![a, b]);
                }
            }
        }
        None
    };
    let (s, c) = R::from_f64(opts.ray_angle).sin_cos();
    let direction = -Cx::new(c, s);
    let ray = PathSpec::ray(base, direction)?;
    for sheet in 0..3 {
        let word = word_to(sheet).ok_or_else(|| Error::BranchCollision(format!("no loop word reaches sheet {sheet}")))?;
        let mut path: Option<PathSpec<R>> = None;
        for &w in &word {
            path = Some(match path {
                None => loops[w].clone(),
                Some(p) => p.then(&loops[w])?,
            });
        }
        let path = match path {
            None => ray.clone(),
            Some(p) => p.then(&ray)?,
        };
        chains.push(CurveChain { label: format!("eta_{}", sheet + 1), path, chart: Chart::Y, start: (fiber[0], base), fiber });
    }
    Ok(CurveCycles { base, fiber, chains, permutations })
}

/// e^y times the four forms and the eight exact forms, in the chain's
/// coordinate.
struct CurveIntegrand<R: Real> {
    lambda: Cx<R>,
    chain: CurveChain<R>,
    fiber: FiberTracker<R>,
    x: Cx<R>,
    y: Cx<R>,
    segment: usize,
    t: R,
}

const DIM: usize = 4 + EXACT_LIFTS.len();

impl<R: Real> CurveIntegrand<R> {
    fn new(cd: &CriticalData<R>, chain: &CurveChain<R>) -> Self {
        Self {
            lambda: cd.lambda,
            chain: chain.clone(),
            fiber: FiberTracker::new(cd),
            x: chain.start.0,
            y: chain.start.1,
            segment: 0,
            t: R::zero(),
        }
    }

    fn branch_distance(&self, x: Cx<R>) -> R {
        [Cx::zero(), Cx::one(), self.lambda].iter().map(|&b| (x - b).cabs()).fold(R::from_f64(f64::MAX), R::min)
    }

    /// Continue y = √f along the x-path to (segment, t), in steps that move
    /// x by at most a fifth of its distance to the branch points.
    fn advance_sqrt(&mut self, segment: usize, t: R) -> Result<()> {
        let segs = self.chain.path.segments().to_vec();
        while self.segment < segment || (self.segment == segment && self.t < t) {
            let goal = if self.segment < segment { R::one() } else { t };
            let seg = segs[self.segment];
            let mut step = goal - self.t;
            let mut depth = 0;
            loop {
                let (xn, _) = seg.eval(self.t + step);
                if (xn - self.x).cabs() <= R::from_f64(0.2) * self.branch_distance(self.x) {
                    let ratio = f_at(self.lambda, xn) * f_at(self.lambda, self.x).cinv();
                    self.y = self.y * ratio.csqrt();
                    self.x = xn;
                    self.t += step;
                    break;
                }
                step *= R::half();
                depth += 1;
                if depth > 80 {
                    return Err(Error::BranchCollision(format!("√f near x = {}", crate::numeric::complex::to_c64(xn))));
                }
            }
            if self.t >= goal && self.segment < segment {
                self.segment += 1;
                self.t = R::zero();
            }
        }
        Ok(())
    }
}

impl<R: Real> PathIntegrand<R> for CurveIntegrand<R> {
    fn dim(&self) -> usize {
        DIM
    }

    fn begin_pass(&mut self, path: &PathSpec<R>) -> Result<()> {
        self.x = self.chain.start.0;
        self.y = self.chain.start.1;
        self.segment = 0;
        self.t = R::zero();
        if self.chain.chart == Chart::Y {
            self.fiber.begin(path, self.chain.fiber);
        }
        Ok(())
    }

    fn eval(&mut self, node: &NodePoint<R>, _seg: &Segment<R>, out: &mut [Cx<R>]) -> Result<()> {
        let (x, y, dx, dy) = match self.chain.chart {
            Chart::X => {
                self.advance_sqrt(node.segment, node.t)?;
                // the tracked point and the node agree up to rounding
                let y = self.y;
                (node.z, y, Cx::one(), df_at(self.lambda, node.z) * (y + y).cinv())
            }
            Chart::Y => {
                let x = self.fiber.at(node)?[0];
                let y = node.z;
                ((x), y, (y + y) * df_at(self.lambda, x).cinv(), Cx::one())
            }
        };
        let e = y.cexp();
        let inv_y = y.cinv();
        out[0] = e * inv_y * dx;
        out[1] = e * x * inv_y * dx;
        out[2] = e * dx;
        out[3] = e * x * dx;
        for (slot, &(k, l)) in out[4..].iter_mut().zip(EXACT_LIFTS.iter()) {
            // d(x^k y^l e^y) = e^y(k x^{k−1} y^l dx + (l y^{l−1} + y^l) x^k dy)
            let xk = x.cpowi(k as i64);
            let yl = y.cpowi(l as i64);
            let gx = if k == 0 { Cx::zero() } else { real(R::from_i64(i64::from(k))) * x.cpowi(k as i64 - 1) * yl };
            let gy = if l == 0 { Cx::zero() } else { real(R::from_i64(i64::from(l))) * y.cpowi(l as i64 - 1) * xk };
            *slot = e * (gx * dx + (gy + xk * yl) * dy);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DirectCurvePeriod<R: Real> {
    pub cycles: CurveCycles<R>,
    /// Rows γ₁, γ₂, η₂−η₁, η₃−η₂; columns as in [`CURVE_FORMS`].
    pub matrix: PeriodMatrix<R>,
    /// Pairings of the rows with the exact forms of [`EXACT_LIFTS`].
    pub stokes: Vec<Vec<Cx<R>>>,
    /// max over rows of max |exact pairing| / max(1, max |row entry|).
    pub stokes_max: f64,
    pub stated_lambda: Cx<R>,
    /// det / stated_lambda.
    pub ratio: LogValue<R>,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct DirectSummary {
    pub base: crate::numeric::Cplx,
    pub matrix: crate::engine::PeriodMatrixSummary,
    pub stokes_max: f64,
    pub stated_lambda: crate::numeric::Cplx,
    pub ratio: crate::numeric::Cplx,
}

impl<R: Real> DirectCurvePeriod<R> {
    pub fn summary(&self) -> DirectSummary {
        DirectSummary {
            base: self.cycles.base.into(),
            matrix: self.matrix.summary(),
            stokes_max: self.stokes_max,
            stated_lambda: self.stated_lambda.into(),
            ratio: self.ratio.value().into(),
        }
    }
}

pub fn direct_curve_period<R: Real>(
    cd: &CriticalData<R>,
    settings: &QuadratureSettings,
    opts: &DirectOptions,
    exec: Execution,
) -> Result<DirectCurvePeriod<R>> {
    let cycles = curve_cycles(cd, opts)?;
    let results: Vec<QuadResult<R>> = exec
        .map(&cycles.chains, |chain| {
            let mut integrand = CurveIntegrand::new(cd, chain);
            integrate_vec(&mut integrand, &chain.path, settings).map_err(|e| match e {
                Error::NonConvergence { label, error, target } => {
                    Error::NonConvergence { label: format!("{}: {label}", chain.label), error, target }
                }
                other => other,
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;
    // rows: γ₁, γ₂, η₂ − η₁, η₃ − η₂
    let rows: [(usize, Option<usize>, &str); 4] =
        [(0, None, "gamma_1"), (1, None, "gamma_2"), (3, Some(2), "eta_2-eta_1"), (4, Some(3), "eta_3-eta_2")];
    let value = |(p, m): (usize, Option<usize>), k: usize| -> (Cx<R>, f64) {
        match m {
            None => (results[p].values[k], results[p].errors[k]),
            Some(m) => (results[p].values[k] - results[m].values[k], results[p].errors[k] + results[m].errors[k]),
        }
    };
    let mut entries = crate::numeric::CMat::zeros(4, 4);
    let mut errors = vec![0.0; 16];
    let mut stokes = Vec::with_capacity(4);
    let mut stokes_max = 0.0f64;
    for (i, &(p, m, _)) in rows.iter().enumerate() {
        let mut row_max = 1.0f64;
        for j in 0..4 {
            let (v, e) = value((p, m), j);
            entries[(i, j)] = v;
            errors[i * 4 + j] = e;
            row_max = row_max.max(v.cabs().to_f64());
        }
        let ex: Vec<Cx<R>> = (4..DIM).map(|k| value((p, m), k).0).collect();
        for v in &ex {
            stokes_max = stokes_max.max(v.cabs().to_f64() / row_max);
        }
        stokes.push(ex);
    }
    let evaluations = results.iter().map(|r| r.evaluations).sum();
    let matrix = PeriodMatrix::new(
        entries,
        errors,
        rows.iter().map(|r| r.2.to_string()).collect(),
        CURVE_FORMS.iter().map(|s| s.to_string()).collect(),
        evaluations,
    )?;
    let stated_lambda = golden::stated_per_lambda(cd.lambda);
    let ratio = matrix.det.div(LogValue::from_value(stated_lambda));
    Ok(DirectCurvePeriod { cycles, matrix, stokes, stokes_max, stated_lambda, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{cx, Precision};

    #[test]
    fn loops_permute_two_sheets() {
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
        let cyc = curve_cycles(&cd, &DirectOptions::default()).unwrap();
        for p in &cyc.permutations {
            let fixed = (0..3).filter(|&i| p[i] == i).count();
            assert_eq!(fixed, 1, "{p:?}");
        }
        assert_eq!(cyc.chains.len(), 5);
    }

    #[test]
    fn elliptic_loop_period() {
        // ∫ dx/y over γ₁ without the exponential would be 2·K-type; here
        // only check the exact forms vanish and the determinant is nonzero
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
        let s = QuadratureSettings::new(1e-10, Precision::Double).unwrap();
        let d = direct_curve_period(&cd, &s, &DirectOptions::default(), Execution::Sequential).unwrap();
        assert!(d.stokes_max < 1e-8, "{}", d.stokes_max);
        assert!(d.matrix.is_perfect(1e3));
    }
}
