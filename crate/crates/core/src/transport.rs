//! Continuation of dual flat sections Φ′ = AᵀΦ along paths.
//!
//! Three routes produce the same frame Φ, normalized by Φ(base) = κ·I:
//! a closed form for rank one, the fiber oracle Ψ(y)·C·h(y) for
//! connections written in the Legendre fiber frame, and a Dormand–Prince
//! integrator for paths with regular endpoints.

use num_traits::{One, Zero};

use crate::connection::{Frame, LogConnection};
use crate::curve::{cubic_roots, CriticalData};
use crate::error::{Error, Result};
use crate::numeric::complex::real;
use crate::numeric::{CMat, Cx, CxExt, Real};
use crate::path::{continue_log_segment, EndClass, PathSpec, Segment};
use crate::quadrature::{NodePoint, PathIntegrand};

/// Which construction evaluates Φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ClosedForm,
    FiberOracle,
    Ode,
}

/// Φ at the nodes of a pass, in increasing path order.
pub trait DualFrame<R: Real>: Send {
    fn rank(&self) -> usize;
    fn begin(&mut self, path: &PathSpec<R>) -> Result<()>;
    fn at(&mut self, node: &NodePoint<R>, seg: &Segment<R>) -> Result<CMat<R>>;
}

/// κ = exp(F(base) + Σ tr(B_q)·Log(base − q)/r).
pub fn normalization<R: Real>(conn: &LogConnection<R>, base: Cx<R>) -> Cx<R> {
    let r = real(R::from_i64(conn.rank() as i64));
    let mut e = conn.irregular_value(base);
    for p in conn.points() {
        e = e + p.residue.trace() / r * (base - p.point).cln();
    }
    e.cexp()
}

/// Pick the best route the connection supports.
pub fn default_route<R: Real>(conn: &LogConnection<R>) -> Route {
    if conn.rank() == 1 {
        Route::ClosedForm
    } else if conn.fiber_frame().is_some() {
        Route::FiberOracle
    } else {
        Route::Ode
    }
}

pub fn dual_frame<R: Real>(conn: &LogConnection<R>, route: Route, tol: f64) -> Result<Box<dyn DualFrame<R>>> {
    Ok(match route {
        Route::ClosedForm => Box::new(Rank1Frame::new(conn)?),
        Route::FiberOracle => Box::new(FiberOracle::new(conn)?),
        Route::Ode => Box::new(OdeFrame::new(conn, tol)),
    })
}

/// Continued logs of z − q for a fixed list of points.
#[derive(Debug, Clone)]
struct LogTracker<R: Real> {
    points: Vec<Cx<R>>,
    segments: Vec<Segment<R>>,
    start_logs: Vec<Cx<R>>,
    current: usize,
}

impl<R: Real> LogTracker<R> {
    fn new(points: Vec<Cx<R>>) -> Self {
        Self { points, segments: Vec::new(), start_logs: Vec::new(), current: 0 }
    }

    fn begin(&mut self, path: &PathSpec<R>) -> Result<()> {
        let base = path.start();
        if let EndClass::SingularPoint { .. } = path.start_class() {
            return Err(Error::Path("dual frames start at a regular base point".into()));
        }
        self.segments = path.segments().to_vec();
        self.start_logs = self.points.iter().map(|&q| (base - q).cln()).collect();
        self.current = 0;
        Ok(())
    }

    fn logs(&mut self, node: &NodePoint<R>, seg: &Segment<R>) -> Vec<Cx<R>> {
        while self.current < node.segment {
            let s = self.segments[self.current];
            for (l, &q) in self.start_logs.iter_mut().zip(&self.points) {
                *l = continue_log_segment(&s, q, *l, R::one());
            }
            self.current += 1;
        }
        let z0 = seg.start();
        self.points
            .iter()
            .zip(&self.start_logs)
            .map(|(&q, &l0)| match seg {
                Segment::Arc { .. } => continue_log_segment(seg, q, l0, node.t),
                _ => l0 + (node.offset(q, seg) * (z0 - q).cinv()).cln(),
            })
            .collect()
    }
}

/// φ = exp(F + Σ b_q L_q) for rank one.
pub struct Rank1Frame<R: Real> {
    conn: LogConnection<R>,
    coeffs: Vec<Cx<R>>,
    logs: LogTracker<R>,
}

impl<R: Real> Rank1Frame<R> {
    pub fn new(conn: &LogConnection<R>) -> Result<Self> {
        if conn.rank() != 1 {
            return Err(Error::Unsupported(format!("closed-form frame needs rank one, got {}", conn.rank())));
        }
        Ok(Self {
            conn: conn.clone(),
            coeffs: conn.points().iter().map(|p| p.residue[(0, 0)]).collect(),
            logs: LogTracker::new(conn.locations()),
        })
    }
}

impl<R: Real> DualFrame<R> for Rank1Frame<R> {
    fn rank(&self) -> usize {
        1
    }
    fn begin(&mut self, path: &PathSpec<R>) -> Result<()> {
        self.logs.begin(path)
    }
    fn at(&mut self, node: &NodePoint<R>, seg: &Segment<R>) -> Result<CMat<R>> {
        let logs = self.logs.logs(node, seg);
        let mut e = self.conn.irregular_value(node.z);
        for (b, l) in self.coeffs.iter().zip(&logs) {
            e = e + *b * *l;
        }
        Ok(CMat::scalar(1, e.cexp()))
    }
}

/// Point on a path where the fiber roots are known.
#[derive(Debug, Clone, Copy)]
struct TrackPos<R: Real> {
    segment: usize,
    t: R,
    z: Cx<R>,
    from_start: Cx<R>,
    to_end: Option<Cx<R>>,
}

impl<R: Real> TrackPos<R> {
    fn of(node: &NodePoint<R>) -> Self {
        Self { segment: node.segment, t: node.t, z: node.z, from_start: node.from_start, to_end: node.to_end }
    }

    fn segment_end(seg: &Segment<R>, segment: usize) -> Self {
        let e = seg.end().unwrap_or_else(|| seg.start());
        Self { segment, t: R::one(), z: e, from_start: e - seg.start(), to_end: Some(Cx::zero()) }
    }

    fn segment_start(seg: &Segment<R>, segment: usize) -> Self {
        let s = seg.start();
        Self { segment, t: R::zero(), z: s, from_start: Cx::zero(), to_end: seg.end().map(|e| s - e) }
    }

    /// Whether the distance to the common endpoint shrinks by more than 4
    /// from `far` to `near`.
    fn geometric(far: Option<Cx<R>>, near: Option<Cx<R>>) -> bool {
        match (far, near) {
            (Some(x), Some(y)) => y != Cx::zero() && x.cabs() > R::from_f64(4.0) * y.cabs(),
            _ => false,
        }
    }

    /// Point between two positions on the same segment.
    fn between(a: &Self, b: &Self, seg: &Segment<R>, frac: R) -> Self {
        let lerp = |x: Cx<R>, y: Cx<R>| x + (y - x) * real(frac);
        let t = a.t + (b.t - a.t) * frac;
        match seg {
            Segment::Arc { .. } => {
                let z = seg.eval(t).0;
                Self { segment: a.segment, t, z, from_start: z - seg.start(), to_end: seg.end().map(|e| z - e) }
            }
            Segment::Line { .. } if Self::geometric(a.to_end, b.to_end) => {
                // approaching the end: halve log-distances so roots near a
                // multiple point shrink by a bounded factor per step
                let (x, y) = (a.to_end.unwrap_or_default(), b.to_end.unwrap_or_default());
                let d = x * real(((y.cabs() / x.cabs()).ln() * frac).exp());
                let from_start = a.from_start + (d - x);
                let len = (seg.end().unwrap_or_default() - seg.start()).cabs();
                Self { segment: a.segment, t: R::one() - d.cabs() / len, z: seg.end().unwrap_or_default() + d, from_start, to_end: Some(d) }
            }
            Segment::Line { .. } if Self::geometric(Some(b.from_start), Some(a.from_start)) => {
                let (x, y) = (a.from_start, b.from_start);
                let d = y * real(((x.cabs() / y.cabs()).ln() * (R::one() - frac)).exp());
                let len = (seg.end().unwrap_or_default() - seg.start()).cabs();
                let to_end = a.to_end.map(|e| e + (d - x));
                Self { segment: a.segment, t: d.cabs() / len, z: seg.start() + d, from_start: d, to_end }
            }
            _ => {
                let from_start = lerp(a.from_start, b.from_start);
                let to_end = match (a.to_end, b.to_end) {
                    (Some(x), Some(y)) => Some(lerp(x, y)),
                    _ => None,
                };
                let z = match (seg.end(), to_end) {
                    (Some(e), Some(d)) if d.cabs() < from_start.cabs() => e + d,
                    _ => seg.start() + from_start,
                };
                Self { segment: a.segment, t, z, from_start, to_end }
            }
        }
    }
}

/// Fiber roots of y, computed from the local form u²(u + x_c − x_o) = δw
/// when y is close to a point of D given as a segment endpoint.
fn roots_at<R: Real>(cd: &CriticalData<R>, pos: &TrackPos<R>, seg: &Segment<R>) -> [Cx<R>; 3] {
    let local = |q: Cx<R>, off: Cx<R>| -> Option<[Cx<R>; 3]> {
        let (xc, xo) = if q == cd.s1 || q == -cd.s1 {
            (cd.x1, cd.x3)
        } else if q == cd.s2 || q == -cd.s2 {
            (cd.x2, cd.x4)
        } else {
            return None;
        };
        let scale = R::one() + q.cabs();
        if off.cabs() > R::from_f64(1e-3) * scale {
            return None;
        }
        // y² − q² = (y − q)(y + q)
        let dw = off * (off + q + q);
        let mut a = xc - xo;
        if a.cabs() <= R::from_f64(1e-8) * scale {
            // triple point: x_o = x_c up to rounding
            a = Cx::zero();
        }
        let g = |u: Cx<R>| u * u * (u + a) - dw;
        let dg = |u: Cx<R>| u * (real(R::from_f64(3.0)) * u + a + a);
        let mut seeds = if a != Cx::zero() {
            let s = (dw / a).csqrt();
            [s, -s, -a]
        } else {
            let c = dw.cpow(real(R::ratio(1, 3)));
            let (sn, cs) = (R::two_pi() / R::from_f64(3.0)).sin_cos();
            let w = Cx::new(cs, sn);
            [c, c * w, c * w * w]
        };
        for u in seeds.iter_mut() {
            for _ in 0..60 {
                let d = dg(*u);
                if d == Cx::zero() {
                    break;
                }
                let step = g(*u) / d;
                if !step.is_finite_c() {
                    break;
                }
                *u = *u - step;
                if step.cabs() <= R::from_f64(R::EPS) * u.cabs() {
                    break;
                }
            }
        }
        Some(seeds.map(|u| xc + u))
    };
    if let (Some(e), Some(d)) = (seg.end(), pos.to_end) {
        if let Some(r) = local(e, d) {
            return r;
        }
    }
    cubic_roots(cd.lambda, pos.z * pos.z)
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Match `new` to `old`; `None` when the assignment is ambiguous.
fn match_roots<R: Real>(old: &[Cx<R>; 3], new: &[Cx<R>; 3]) -> Option<[Cx<R>; 3]> {
    let mut costs: Vec<(f64, usize)> = PERMS
        .iter()
        .enumerate()
        .map(|(i, p)| ((0..3).map(|k| (new[p[k]] - old[k]).cabs().to_f64()).sum::<f64>(), i))
        .collect();
    costs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (best, second) = (costs[0].0, costs[1].0);
    let scale = 1.0 + old.iter().map(|x| x.cabs().to_f64()).fold(0.0, f64::max);
    let floor = 1e3 * R::EPS * scale;
    if best <= 0.5 * second || second <= floor {
        let p = PERMS[costs[0].1];
        Some([new[p[0]], new[p[1]], new[p[2]]])
    } else {
        None
    }
}

const MAX_TRACK_DEPTH: u32 = 60;

/// Continue the ordered fiber roots along a path.
#[derive(Debug, Clone)]
struct RootTracker<R: Real> {
    cd: CriticalData<R>,
    segments: Vec<Segment<R>>,
    pos: Option<TrackPos<R>>,
    roots: [Cx<R>; 3],
}

impl<R: Real> RootTracker<R> {
    fn begin(&mut self, path: &PathSpec<R>, roots: [Cx<R>; 3]) {
        self.segments = path.segments().to_vec();
        self.pos = Some(TrackPos::segment_start(&self.segments[0], 0));
        self.roots = roots;
    }

    fn advance_within(&mut self, target: TrackPos<R>) -> Result<()> {
        let seg = self.segments[target.segment];
        let mut stack = vec![(target, 0u32)];
        while let Some((goal, depth)) = stack.pop() {
            let here = self.pos.expect("tracker started");
            let matched = if self.turns_little(&here, &goal, &seg) {
                match_roots(&self.roots, &roots_at(&self.cd, &goal, &seg))
            } else {
                None
            };
            match matched {
                Some(m) => {
                    self.roots = m;
                    self.pos = Some(goal);
                }
                None => {
                    if depth >= MAX_TRACK_DEPTH {
                        return Err(Error::BranchCollision(format!(
                            "segment {} near y = {:.6e}{:+.6e}i",
                            goal.segment,
                            goal.z.re.to_f64(),
                            goal.z.im.to_f64()
                        )));
                    }
                    let mid = TrackPos::between(&here, &goal, &seg, R::half());
                    stack.push((goal, depth + 1));
                    stack.push((mid, depth + 1));
                }
            }
        }
        Ok(())
    }

    /// The step turns by at most π/4 around every branch point.
    fn turns_little(&self, a: &TrackPos<R>, b: &TrackPos<R>, seg: &Segment<R>) -> bool {
        let off = |p: &TrackPos<R>, q: Cx<R>| match (seg.end(), p.to_end) {
            (Some(e), Some(d)) if e == q => d,
            _ => p.z - q,
        };
        if let Segment::Arc { sweep, .. } = *seg {
            if ((b.t - a.t) * sweep).abs().to_f64() > std::f64::consts::FRAC_PI_4 {
                return false;
            }
        }
        self.cd.divisor().into_iter().all(|q| {
            let (da, db) = (off(a, q), off(b, q));
            da == Cx::zero() || db == Cx::zero() || (db * da.cinv()).carg().abs().to_f64() <= std::f64::consts::FRAC_PI_4
        })
    }

    fn advance(&mut self, target: TrackPos<R>) -> Result<()> {
        loop {
            let cur = self.pos.expect("tracker started");
            if cur.segment == target.segment {
                return self.advance_within(target);
            }
            let seg = self.segments[cur.segment];
            self.advance_within(TrackPos::segment_end(&seg, cur.segment))?;
            let next = cur.segment + 1;
            self.pos = Some(TrackPos::segment_start(&self.segments[next], next));
        }
    }
}

/// The fiber roots x_k(y) of f(x) = y², continued along a path in the
/// y-plane in the order given at its start.
pub struct FiberTracker<R: Real> {
    inner: RootTracker<R>,
}

impl<R: Real> FiberTracker<R> {
    pub fn new(cd: &CriticalData<R>) -> Self {
        Self { inner: RootTracker { cd: cd.clone(), segments: Vec::new(), pos: None, roots: [Cx::zero(); 3] } }
    }

    pub fn begin(&mut self, path: &PathSpec<R>, roots: [Cx<R>; 3]) {
        self.inner.begin(path, roots);
    }

    pub fn at(&mut self, node: &NodePoint<R>) -> Result<[Cx<R>; 3]> {
        self.inner.advance(TrackPos::of(node))?;
        Ok(self.inner.roots)
    }

    /// Roots at the end of a finite path.
    pub fn at_end(&mut self, path: &PathSpec<R>) -> Result<[Cx<R>; 3]> {
        let last = path.segments().len() - 1;
        self.inner.advance(TrackPos::segment_end(&path.segments()[last], last))?;
        Ok(self.inner.roots)
    }
}

/// Φ = Ψ(y)·C·h(y) with Ψ_{a,k} = v_a(x_k(y)) over two tracked roots.
pub struct FiberOracle<R: Real> {
    cd: CriticalData<R>,
    irregular: LogConnection<R>,
    scalar: Vec<Cx<R>>,
    logs: LogTracker<R>,
    tracker: RootTracker<R>,
    columns: [usize; 2],
    c: CMat<R>,
    kappa_conn: LogConnection<R>,
}

fn fiber_vector<R: Real>(lambda: Cx<R>, x: Cx<R>) -> [Cx<R>; 2] {
    let three = real(R::from_f64(3.0));
    [x - (lambda + Cx::one()) / three, x * x - (lambda * lambda + Cx::one()) / three]
}

impl<R: Real> FiberOracle<R> {
    pub fn new(conn: &LogConnection<R>) -> Result<Self> {
        let Frame::LegendreFiber(ff) = conn.frame() else {
            return Err(Error::Unsupported("fiber oracle needs a connection in the fiber frame".into()));
        };
        let cd = ff.cd.clone();
        Ok(Self {
            irregular: LogConnection::trivial(1).with_irregular(conn.irregular().to_vec()),
            scalar: ff.scalar.iter().map(|&(_, c)| c).collect(),
            logs: LogTracker::new(ff.scalar.iter().map(|&(p, _)| p).collect()),
            tracker: RootTracker { cd: cd.clone(), segments: Vec::new(), pos: None, roots: [Cx::zero(); 3] },
            cd,
            columns: [0, 1],
            c: CMat::identity(2),
            kappa_conn: conn.clone(),
        })
    }

    fn psi(&self, roots: &[Cx<R>; 3]) -> CMat<R> {
        let a = fiber_vector(self.cd.lambda, roots[self.columns[0]]);
        let b = fiber_vector(self.cd.lambda, roots[self.columns[1]]);
        CMat::from_rows(vec![vec![a[0], b[0]], vec![a[1], b[1]]])
    }

    fn h(&self, z: Cx<R>, logs: &[Cx<R>]) -> Cx<R> {
        let mut e = self.irregular.irregular_value(z);
        for (c, l) in self.scalar.iter().zip(logs) {
            e = e + *c * *l;
        }
        e.cexp()
    }
}

impl<R: Real> DualFrame<R> for FiberOracle<R> {
    fn rank(&self) -> usize {
        2
    }

    fn begin(&mut self, path: &PathSpec<R>) -> Result<()> {
        self.logs.begin(path)?;
        let base = path.start();
        let roots = cubic_roots(self.cd.lambda, base * base);
        // best-conditioned pair of roots
        let mut best = (f64::NEG_INFINITY, [0, 1]);
        for cols in [[0, 1], [0, 2], [1, 2]] {
            self.columns = cols;
            let p = self.psi(&roots);
            let q = p.det().cabs().to_f64() / (p.max_abs() * p.max_abs()).max(f64::MIN_POSITIVE);
            if q > best.0 {
                best = (q, cols);
            }
        }
        self.columns = best.1;
        let p0 = self.psi(&roots);
        let inv = p0.inverse().ok_or_else(|| Error::BranchCollision("fiber frame singular at the base".into()))?;
        let base_logs: Vec<Cx<R>> = self.logs.points.iter().map(|&q| (base - q).cln()).collect();
        let kappa = normalization(&self.kappa_conn, base);
        self.c = inv.scale(kappa / self.h(base, &base_logs));
        self.tracker.begin(path, roots);
        Ok(())
    }

    fn at(&mut self, node: &NodePoint<R>, seg: &Segment<R>) -> Result<CMat<R>> {
        self.tracker.advance(TrackPos::of(node))?;
        let logs = self.logs.logs(node, seg);
        let psi = self.psi(&self.tracker.roots);
        Ok((&psi * &self.c).scale(self.h(node.z, &logs)))
    }
}

/// Dormand–Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[(i64, i64); 6]; 7] = [
    [(0, 1); 6],
    [(1, 5), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1)],
    [(3, 40), (9, 40), (0, 1), (0, 1), (0, 1), (0, 1)],
    [(44, 45), (-56, 15), (32, 9), (0, 1), (0, 1), (0, 1)],
    [(19372, 6561), (-25360, 2187), (64448, 6561), (-212, 729), (0, 1), (0, 1)],
    [(9017, 3168), (-355, 33), (46732, 5247), (49, 176), (-5103, 18656), (0, 1)],
    [(35, 384), (0, 1), (500, 1113), (125, 192), (-2187, 6784), (11, 84)],
];
/// b − b* for the embedded error estimate.
const DP_E: [(i64, i64); 7] =
    [(71, 57600), (0, 1), (-71, 16695), (71, 1920), (-17253, 339200), (22, 525), (-1, 40)];

/// Adaptive integration of Φ′ = AᵀΦ·z′ along segments.
pub struct OdeFrame<R: Real> {
    conn: LogConnection<R>,
    tol: f64,
    segments: Vec<Segment<R>>,
    segment: usize,
    param: R,
    phi: CMat<R>,
    step: f64,
    error: f64,
    steps: usize,
    /// Singular point ending the last segment, a line. That segment is
    /// integrated in u = −ln(1 − t) so the solution can follow its
    /// algebraic decay all the way to the point.
    log_end: Option<Cx<R>>,
}

const MAX_STEPS: usize = 2_000_000;

impl<R: Real> OdeFrame<R> {
    pub fn new(conn: &LogConnection<R>, tol: f64) -> Self {
        let r = conn.rank();
        Self {
            conn: conn.clone(),
            tol,
            segments: Vec::new(),
            segment: 0,
            param: R::zero(),
            phi: CMat::identity(r),
            step: 0.1,
            error: 0.0,
            steps: 0,
            log_end: None,
        }
    }

    fn in_log_segment(&self) -> bool {
        self.log_end.is_some() && self.segment + 1 == self.segments.len()
    }

    /// Segment parameter of a node: t on finite segments, arc length on
    /// rays, u on the logarithmic segment.
    fn node_param(&self, node: &NodePoint<R>, seg: &Segment<R>) -> R {
        match *seg {
            Segment::Ray { direction, .. } => (node.from_start * direction.conj()).re,
            Segment::Line { a, b } if self.log_end.is_some() && node.segment + 1 == self.segments.len() => {
                match node.to_end {
                    Some(e) if e != Cx::zero() => ((b - a).cabs() / e.cabs()).ln(),
                    _ => -(R::one() - node.t).ln(),
                }
            }
            _ => node.t,
        }
    }

    /// Accumulated local error estimate since `begin`.
    pub fn error(&self) -> f64 {
        self.error
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn current(&self) -> &CMat<R> {
        &self.phi
    }

    /// Start from an explicit value of Φ at the path start.
    pub fn begin_with(&mut self, path: &PathSpec<R>, initial: CMat<R>) -> Result<()> {
        if !matches!(path.start_class(), EndClass::RegularPoint) {
            return Err(Error::Path("ODE continuation starts at a regular point".into()));
        }
        self.segments = path.segments().to_vec();
        self.log_end = match (path.end_class(), self.segments.last()) {
            (EndClass::SingularPoint { location, .. }, Some(Segment::Line { .. })) => Some(*location),
            _ => None,
        };
        self.segment = 0;
        self.param = R::zero();
        self.phi = initial;
        self.step = 0.1;
        self.error = 0.0;
        self.steps = 0;
        Ok(())
    }

    fn rhs(&self, seg: &Segment<R>, s: R, phi: &CMat<R>) -> CMat<R> {
        if let (true, Segment::Line { a, b }) = (self.in_log_segment(), seg) {
            // y = b + w with w = (a − b)e^{−u}, dy/du = −w
            let w = (*a - *b) * real((-s).exp());
            let y = *b + w;
            let end = self.log_end.unwrap_or(*b);
            let mut m = CMat::scalar(self.conn.rank(), -(w * self.conn.irregular_derivative(y)));
            for p in self.conn.points() {
                let f = if p.point == end { -Cx::<R>::one() } else { -(w * (y - p.point).cinv()) };
                m = m.add(&p.residue.scale(f));
            }
            return &m.transpose() * phi;
        }
        let (z, dz) = seg.eval(s);
        (&self.conn.matrix_at(z).transpose() * phi).scale(dz)
    }

    fn integrate_to(&mut self, target: R) -> Result<()> {
        let seg = self.segments[self.segment];
        let span = (target - self.param).to_f64();
        if span <= 0.0 {
            return Ok(());
        }
        let mut h = self.step;
        let coef = |p: (i64, i64)| real::<R>(R::ratio(p.0, p.1));
        let mut k: Vec<CMat<R>> = Vec::with_capacity(7);
        loop {
            let left = (target - self.param).to_f64();
            if left <= 0.0 {
                break;
            }
            let last = h >= left;
            let hh = if last { left } else { h };
            let hr = R::from_f64(hh);
            k.clear();
            for i in 0..7 {
                let mut y = self.phi.clone();
                for (j, kj) in k.iter().enumerate() {
                    let a = DP_A[i][j];
                    if a.0 != 0 {
                        y = y.add(&kj.scale(coef(a) * real(hr)));
                    }
                }
                let s = if i == 0 { self.param } else { self.param + hr * R::from_f64(DP_C[i]) };
                k.push(self.rhs(&seg, s, &y));
            }
            let mut err = CMat::zeros(self.phi.rows(), self.phi.cols());
            for (j, kj) in k.iter().enumerate() {
                if DP_E[j].0 != 0 {
                    err = err.add(&kj.scale(coef(DP_E[j]) * real(hr)));
                }
            }
            // columns are independent solutions; each gets its own scale
            let e = (0..self.phi.cols())
                .map(|c| {
                    let col = |m: &CMat<R>| (0..m.rows()).map(|r| m[(r, c)].cabs().to_f64()).fold(0.0, f64::max);
                    col(&err) / col(&self.phi).max(1e-300)
                })
                .fold(0.0, f64::max);
            let scale = self.tol;
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::StepUnderflow(format!("step budget exhausted on segment {}", self.segment)));
            }
            if e <= scale {
                let mut y = self.phi.clone();
                for (j, kj) in k.iter().enumerate().take(6) {
                    let a = DP_A[6][j];
                    if a.0 != 0 {
                        y = y.add(&kj.scale(coef(a) * real(hr)));
                    }
                }
                self.phi = y;
                self.error += e * self.phi.max_abs();
                self.param = if last { target } else { self.param + hr };
                if !self.phi.entries().iter().all(|z| z.is_finite_c()) {
                    return Err(Error::StepUnderflow("non-finite solution".into()));
                }
            }
            if last && e <= scale {
                break;
            }
            let fac = if e == 0.0 { 5.0 } else { (0.9 * (scale / e).powf(0.2)).clamp(0.2, 5.0) };
            let next = hh * fac;
            if !last && next < 1e-14 * (1.0 + self.param.to_f64().abs()) {
                return Err(Error::StepUnderflow(format!("segment {} at parameter {:.6e}", self.segment, self.param.to_f64())));
            }
            h = next;
        }
        self.step = h;
        Ok(())
    }

    fn advance(&mut self, segment: usize, param: R) -> Result<()> {
        while self.segment < segment {
            self.integrate_to(R::one())?;
            self.segment += 1;
            self.param = R::zero();
        }
        self.integrate_to(param)
    }
}

impl<R: Real> DualFrame<R> for OdeFrame<R> {
    fn rank(&self) -> usize {
        self.conn.rank()
    }

    fn begin(&mut self, path: &PathSpec<R>) -> Result<()> {
        let kappa = normalization(&self.conn, path.start());
        self.begin_with(path, CMat::scalar(self.conn.rank(), kappa))
    }

    fn at(&mut self, node: &NodePoint<R>, seg: &Segment<R>) -> Result<CMat<R>> {
        let param = self.node_param(node, seg);
        self.advance(node.segment, param)?;
        Ok(self.phi.clone())
    }
}

/// Solve Φ′ = AᵀΦ along a finite path with regular endpoints, from
/// `initial` at the start; returns Φ at the end and the accumulated local
/// error estimate.
pub fn continue_solution<R: Real>(
    conn: &LogConnection<R>,
    path: &PathSpec<R>,
    initial: CMat<R>,
    tol: f64,
) -> Result<(CMat<R>, f64)> {
    if path.segments().iter().any(|s| s.is_ray()) || !matches!(path.end_class(), EndClass::RegularPoint) {
        return Err(Error::Path("ODE continuation needs a finite path with regular ends".into()));
    }
    let mut ode = OdeFrame::new(conn, tol);
    ode.begin_with(path, initial)?;
    ode.advance(path.segments().len() - 1, R::one())?;
    Ok((ode.phi.clone(), ode.error))
}

/// Value of a frame at the end of a finite path with a regular end.
pub fn frame_at_end<R: Real>(frame: &mut dyn DualFrame<R>, path: &PathSpec<R>) -> Result<CMat<R>> {
    let last = path.segments().len() - 1;
    let seg = path.segments()[last];
    let end = seg.end().ok_or_else(|| Error::Path("path ends on a ray".into()))?;
    frame.begin(path)?;
    let node = NodePoint { segment: last, t: R::one(), z: end, dz: Cx::zero(), from_start: end - seg.start(), to_end: Some(Cx::zero()) };
    frame.at(&node, &seg)
}

/// Monodromy of the dual solutions around the circle |y − center| = radius,
/// started at center + radius: M = Φ(start)⁻¹Φ(end).
pub fn loop_monodromy<R: Real>(
    conn: &LogConnection<R>,
    center: Cx<R>,
    radius: R,
    route: Route,
    tol: f64,
) -> Result<CMat<R>> {
    let inside = conn.points().iter().filter(|p| (p.point - center).cabs() < radius).count();
    if inside > 1 {
        return Err(Error::MultipleSingularities(inside));
    }
    if conn.points().iter().any(|p| ((p.point - center).cabs() - radius).abs().to_f64() < 1e-12) {
        return Err(Error::Path("loop passes through a singular point".into()));
    }
    let path = PathSpec::circle(center, radius, R::zero(), 1);
    let mut frame = dual_frame(conn, route, tol)?;
    let start = {
        let seg = path.segments()[0];
        frame.begin(&path)?;
        let node = NodePoint { segment: 0, t: R::zero(), z: seg.start(), dz: Cx::zero(), from_start: Cx::zero(), to_end: seg.end().map(|e| seg.start() - e) };
        frame.at(&node, &seg)?
    };
    let end = frame_at_end(frame.as_mut(), &path)?;
    let inv = start.inverse().ok_or_else(|| Error::BranchCollision("singular frame at loop start".into()))?;
    Ok(&inv * &end)
}

/// Form coefficients g(y) at a node: one row per form, one column per
/// frame component, so that the form is g(y)·dy paired with Φ.
pub trait FormSet<R: Real>: Send + Sync {
    fn count(&self) -> usize;
    fn rank(&self) -> usize;
    fn eval(&self, node: &NodePoint<R>, seg: &Segment<R>) -> CMat<R>;
}

/// Integrand of the period pairing: entry (j, k) = Σ_a g_{j,a}·Φ_{a,k}.
pub struct PeriodIntegrand<'a, R: Real> {
    pub forms: &'a dyn FormSet<R>,
    pub frame: Box<dyn DualFrame<R> + 'a>,
}

impl<R: Real> PathIntegrand<R> for PeriodIntegrand<'_, R> {
    fn dim(&self) -> usize {
        self.forms.count() * self.frame.rank()
    }
    fn begin_pass(&mut self, path: &PathSpec<R>) -> Result<()> {
        self.frame.begin(path)
    }
    fn eval(&mut self, node: &NodePoint<R>, seg: &Segment<R>, out: &mut [Cx<R>]) -> Result<()> {
        let phi = self.frame.at(node, seg)?;
        let g = self.forms.eval(node, seg);
        let p = &g * &phi;
        out.copy_from_slice(p.entries());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{nabla_prime, pushforward_legendre, twist_by_d};
    use crate::numeric::cx;
    use crate::numeric::linalg::eig2;

    fn near(a: Cx<f64>, b: Cx<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn rank_one_loop_monodromy() {
        let s = cx::<f64>(0.3, 0.7);
        let conn = LogConnection::rank_one(&[(cx(0.0, 0.0), s)], vec![]).unwrap();
        for route in [Route::ClosedForm, Route::Ode] {
            let m = loop_monodromy(&conn, cx(0.0, 0.0), 1.0, route, 1e-12).unwrap();
            let want = (s * cx(0.0, 2.0 * std::f64::consts::PI)).exp();
            assert!(near(m[(0, 0)], want, 1e-9), "{route:?}: {}", m[(0, 0)]);
        }
    }

    #[test]
    fn exponential_along_a_line() {
        let conn = LogConnection::<f64>::trivial(1).with_irregular(vec![cx(0.0, 0.0), cx(1.0, 0.0)]);
        let y0 = cx(0.7, -1.3);
        let path = PathSpec::line(cx(0.0, 0.0), y0);
        let (phi, _) = continue_solution(&conn, &path, CMat::identity(1), 1e-12).unwrap();
        assert!(near(phi[(0, 0)], y0.exp(), 1e-10));
        let mut f = Rank1Frame::new(&conn).unwrap();
        let end = frame_at_end(&mut f, &path).unwrap();
        assert!(near(end[(0, 0)], y0.exp(), 1e-14));
    }

    #[test]
    fn nabla_prime_local_monodromy() {
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
        let conn = nabla_prime(&cd).unwrap();
        let r = (cd.s1 - cd.s2).norm().min((cd.s1 + cd.s1).norm()) / 4.0;
        for route in [Route::Ode, Route::FiberOracle] {
            let m = loop_monodromy(&conn, cd.s1, r, route, 1e-12).unwrap();
            let mut e = eig2(&m);
            e.sort_by(|a, b| a.re.total_cmp(&b.re));
            assert!(near(e[0], cx(-1.0, 0.0), 1e-8) && near(e[1], cx(1.0, 0.0), 1e-8), "{route:?}: {e:?}");
        }
        let tw = twist_by_d(&conn, &cd).unwrap();
        let m = loop_monodromy(&tw, -cd.s2, r, Route::FiberOracle, 1e-12).unwrap();
        let mut e = eig2(&m);
        e.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!(near(e[0], cx(-1.0, 0.0), 1e-8) && near(e[1], cx(1.0, 0.0), 1e-8), "{e:?}");
    }

    #[test]
    fn exceptional_monodromy_is_cube_roots() {
        let lambda = cx::<f64>(0.5, 0.75f64.sqrt());
        let cd = CriticalData::from_lambda(lambda).unwrap();
        let conn = nabla_prime(&cd).unwrap();
        let r = cd.s1.norm() / 2.0;
        let m = loop_monodromy(&conn, cd.s1, r, Route::Ode, 1e-12).unwrap();
        let e = eig2(&m);
        let w = cx::<f64>(0.0, 2.0 * std::f64::consts::PI / 3.0).exp();
        let ok = |a: Cx<f64>, b: Cx<f64>| near(a, b, 1e-8) || near(a, b.conj(), 1e-8);
        assert!(ok(e[0], w) && ok(e[1], w) && !near(e[0], e[1], 1e-3), "{e:?}");
    }

    #[test]
    fn ode_matches_fiber_oracle() {
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.5)).unwrap();
        let (_, conn) = pushforward_legendre(&cd).unwrap();
        let base = cx(0.05, 0.3);
        let d = cd.divisor();
        let target = cx(1.7, -0.9);
        let path = PathSpec::detoured(base, target, &d, crate::path::detour_radius(&d)).unwrap();
        let mut ode = OdeFrame::new(&conn, 1e-13);
        let a = frame_at_end(&mut ode, &path).unwrap();
        let mut fib = FiberOracle::new(&conn).unwrap();
        let b = frame_at_end(&mut fib, &path).unwrap();
        let diff = a.sub(&b).max_abs() / b.max_abs();
        assert!(diff < 1e-9, "{diff:e}");
    }

    #[test]
    fn composition_of_transports() {
        let cd = CriticalData::<f64>::from_lambda(cx(-1.3, 0.4)).unwrap();
        let conn = nabla_prime(&cd).unwrap();
        let (a, b, c) = (cx(0.1, 0.2), cx(1.5, 1.1), cx(-0.4, 2.0));
        let d = cd.divisor();
        let r = crate::path::detour_radius(&d);
        let p1 = PathSpec::detoured(a, b, &d, r).unwrap();
        let p2 = PathSpec::detoured(b, c, &d, r).unwrap();
        let (x, _) = continue_solution(&conn, &p1, CMat::identity(2), 1e-12).unwrap();
        let (y, _) = continue_solution(&conn, &p2, x.clone(), 1e-12).unwrap();
        let (z, _) = continue_solution(&conn, &p1.then(&p2).unwrap(), CMat::identity(2), 1e-12).unwrap();
        assert!(y.sub(&z).max_abs() < 1e-9 * z.max_abs());
    }

    #[test]
    fn local_roots_near_a_branch_point() {
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
        let off = cx(1e-200, 1e-200);
        let seg = Segment::Line { a: cx(0.0, 0.0), b: cd.s1 };
        let pos = TrackPos { segment: 0, t: 1.0, z: cd.s1 + off, from_start: cd.s1, to_end: Some(off) };
        let r = roots_at(&cd, &pos, &seg);
        // the colliding pair is symmetric about x1 to leading order
        let u0 = r[0] - cd.x1;
        let u1 = r[1] - cd.x1;
        assert!(u0.norm() > 1e-101 && near(u0, -u1, 1e-6));
    }

    #[test]
    fn multiple_points_inside_a_loop() {
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
        let conn = nabla_prime(&cd).unwrap();
        let err = loop_monodromy(&conn, cx(0.0, 0.0), 10.0, Route::Ode, 1e-10).unwrap_err();
        assert!(matches!(err, Error::MultipleSingularities(4)));
    }
}
