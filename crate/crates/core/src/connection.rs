//! Logarithmic connections on the affine line and the constructors for the
//! Legendre pushforward, its twist and its regularization.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::curve::{CriticalData, CurveCase};
use crate::error::{Error, Result};
use crate::numeric::complex::{real, to_c64};
use crate::numeric::linalg::eigenvalues;
use crate::numeric::poly::{Poly2, Rat};
use crate::numeric::{CMat, Cx, CxExt, Real};

/// A point of P¹ at which a connection may be singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PointRef {
    /// Index into [`LogConnection::points`].
    Finite(usize),
    Infinity,
}

impl fmt::Display for PointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointRef::Finite(i) => write!(f, "point #{i}"),
            PointRef::Infinity => f.write_str("infinity"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPoint<R: Real> {
    pub point: Cx<R>,
    pub residue: CMat<R>,
}

/// Scalar rank-one factor tensored onto ∇′: a residue c·I at each listed
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberFrame<R: Real> {
    pub cd: CriticalData<R>,
    pub scalar: Vec<(Cx<R>, Cx<R>)>,
}

/// Basis the residue matrices are written in.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame<R: Real> {
    Standard,
    /// (v1, v2) = (x − (λ+1)/3, x² − (λ²+1)/3) on the fibers of y, possibly
    /// tensored with a scalar twist.
    LegendreFiber(Box<FiberFrame<R>>),
}

/// ∇ = d + dF·I + Σ B_i dy/(y − p_i).
#[derive(Debug, Clone, PartialEq)]
pub struct LogConnection<R: Real> {
    rank: usize,
    points: Vec<SingularPoint<R>>,
    irregular: Vec<Cx<R>>,
    frame: Frame<R>,
}

/// Relative separation below which two singular points count as equal.
const COINCIDENCE_TOL: f64 = 1e-12;

impl<R: Real> LogConnection<R> {
    pub fn new(rank: usize, points: Vec<SingularPoint<R>>, irregular: Vec<Cx<R>>, frame: Frame<R>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidParameter("rank must be positive".into()));
        }
        for p in &points {
            if p.residue.rows() != rank || p.residue.cols() != rank {
                return Err(Error::InvalidParameter(format!(
                    "residue at {} is {}x{}, expected {rank}x{rank}",
                    to_c64(p.point),
                    p.residue.rows(),
                    p.residue.cols()
                )));
            }
        }
        check_distinct(&points.iter().map(|p| p.point).collect::<Vec<_>>())?;
        let mut irregular = irregular;
        while irregular.last().is_some_and(|c| *c == Cx::zero()) {
            irregular.pop();
        }
        Ok(Self { rank, points, irregular, frame })
    }

    /// Rank one: d + dF + Σ b_i dy/(y − p_i).
    pub fn rank_one(points: &[(Cx<R>, Cx<R>)], irregular: Vec<Cx<R>>) -> Result<Self> {
        let pts = points.iter().map(|&(p, b)| SingularPoint { point: p, residue: CMat::scalar(1, b) }).collect();
        Self::new(1, pts, irregular, Frame::Standard)
    }

    pub fn trivial(rank: usize) -> Self {
        Self { rank, points: Vec::new(), irregular: Vec::new(), frame: Frame::Standard }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn points(&self) -> &[SingularPoint<R>] {
        &self.points
    }

    pub fn locations(&self) -> Vec<Cx<R>> {
        self.points.iter().map(|p| p.point).collect()
    }

    /// Coefficients a_0..a_d of F (trailing zeros stripped).
    pub fn irregular(&self) -> &[Cx<R>] {
        &self.irregular
    }

    /// Degree of F, or 0 when F is constant (regular at infinity).
    pub fn irregular_degree(&self) -> usize {
        self.irregular.len().saturating_sub(1)
    }

    pub fn frame(&self) -> &Frame<R> {
        &self.frame
    }

    pub fn fiber_frame(&self) -> Option<&FiberFrame<R>> {
        match &self.frame {
            Frame::LegendreFiber(f) => Some(f),
            Frame::Standard => None,
        }
    }

    pub fn with_frame(mut self, frame: Frame<R>) -> Self {
        self.frame = frame;
        self
    }

    /// B⁽∞⁾ = −Σ B⁽ⁱ⁾.
    pub fn residue_at_infinity(&self) -> CMat<R> {
        self.points.iter().fold(CMat::zeros(self.rank, self.rank), |acc, p| acc.sub(&p.residue))
    }

    pub fn residue(&self, at: PointRef) -> CMat<R> {
        match at {
            PointRef::Finite(i) => self.points[i].residue.clone(),
            PointRef::Infinity => self.residue_at_infinity(),
        }
    }

    pub fn eigenvalues(&self, at: PointRef) -> Vec<Cx<R>> {
        eigenvalues(&self.residue(at))
    }

    pub fn point_index(&self, z: Cx<R>) -> Option<usize> {
        self.points.iter().position(|p| close(p.point, z))
    }

    /// F′(y).
    pub fn irregular_derivative(&self, y: Cx<R>) -> Cx<R> {
        let mut acc = Cx::<R>::zero();
        for (k, &a) in self.irregular.iter().enumerate().skip(1).rev() {
            acc = acc * y + a * real(R::from_i64(k as i64));
        }
        acc
    }

    pub fn irregular_value(&self, y: Cx<R>) -> Cx<R> {
        self.irregular.iter().rev().fold(Cx::zero(), |acc, &a| acc * y + a)
    }

    /// Connection matrix A(y) with ∇ = d + A(y) dy.
    pub fn matrix_at(&self, y: Cx<R>) -> CMat<R> {
        let mut a = CMat::scalar(self.rank, self.irregular_derivative(y));
        for p in &self.points {
            a = a.add(&p.residue.scale((y - p.point).cinv()));
        }
        a
    }

    /// The determinant connection: residues replaced by traces, F by r·F.
    pub fn determinant_connection(&self) -> LogConnection<R> {
        let r = real(R::from_i64(self.rank as i64));
        LogConnection {
            rank: 1,
            points: self
                .points
                .iter()
                .map(|p| SingularPoint { point: p.point, residue: CMat::scalar(1, p.residue.trace()) })
                .collect(),
            irregular: self.irregular.iter().map(|&a| a * r).collect(),
            frame: Frame::Standard,
        }
    }

    /// Replace F.
    pub fn with_irregular(mut self, irregular: Vec<Cx<R>>) -> Self {
        self.irregular = irregular;
        while self.irregular.last().is_some_and(|c| *c == Cx::zero()) {
            self.irregular.pop();
        }
        self
    }

    /// Add c·I to the residue at `at`, creating the point if needed.
    fn shift_residue(&mut self, at: Cx<R>, c: Cx<R>) -> Result<()> {
        match self.point_index(at) {
            Some(i) => {
                self.points[i].residue = self.points[i].residue.add(&CMat::scalar(self.rank, c));
            }
            None => {
                let mut all: Vec<Cx<R>> = self.locations();
                all.push(at);
                check_distinct(&all)?;
                self.points.push(SingularPoint { point: at, residue: CMat::scalar(self.rank, c) });
            }
        }
        if let Frame::LegendreFiber(f) = &mut self.frame {
            f.scalar.push((at, c));
        }
        Ok(())
    }

    pub fn convert<S: Real>(&self) -> LogConnection<S> {
        use crate::numeric::complex::convert;
        LogConnection {
            rank: self.rank,
            points: self.points.iter().map(|p| SingularPoint { point: convert(p.point), residue: p.residue.convert() }).collect(),
            irregular: self.irregular.iter().map(|&a| convert(a)).collect(),
            frame: match &self.frame {
                Frame::Standard => Frame::Standard,
                Frame::LegendreFiber(f) => Frame::LegendreFiber(Box::new(FiberFrame {
                    cd: f.cd.convert(),
                    scalar: f.scalar.iter().map(|&(p, c)| (convert(p), convert(c))).collect(),
                })),
            },
        }
    }
}

fn close<R: Real>(a: Cx<R>, b: Cx<R>) -> bool {
    let scale = 1.0 + a.cabs().to_f64().max(b.cabs().to_f64());
    (a - b).cabs().to_f64() <= COINCIDENCE_TOL * scale
}

pub(crate) fn check_distinct<R: Real>(pts: &[Cx<R>]) -> Result<()> {
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if close(pts[i], pts[j]) {
                return Err(Error::CoincidentPoints(format!("{} and {}", to_c64(pts[i]), to_c64(pts[j]))));
            }
        }
    }
    Ok(())
}

/// Points of the twist divisor and the form ϖ = Σ dy/(y − p).
#[derive(Debug, Clone, PartialEq)]
pub struct TwistData<R: Real> {
    pub points: Vec<Cx<R>>,
}

impl<R: Real> TwistData<R> {
    pub fn from_curve(cd: &CriticalData<R>) -> Self {
        Self { points: cd.divisor() }
    }

    /// Coefficient of dy in ϖ at y.
    pub fn varpi(&self, y: Cx<R>) -> Cx<R> {
        self.points.iter().fold(Cx::zero(), |acc, &p| acc + (y - p).cinv())
    }
}

/// Index m of the regularization (1 + y/m)^m ≈ e^y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegularizationIndex(u32);

impl RegularizationIndex {
    pub fn new<R: Real>(m: u32, cd: &CriticalData<R>) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("regularization index m = {m} must be at least 2")));
        }
        let m2 = f64::from(m) * f64::from(m);
        for c in [cd.c1, cd.c2] {
            let c = to_c64(c);
            if (Complex::new(m2, 0.0) - c).norm() <= 1e-9 * m2 {
                return Err(Error::InvalidParameter(format!("m² = {m2} hits a critical value; −m would lie on D")));
            }
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// Add the identity to the residue at every point of the twist divisor.
pub fn twist<R: Real>(conn: &LogConnection<R>, data: &TwistData<R>) -> Result<LogConnection<R>> {
    let mut out = conn.clone();
    for &p in &data.points {
        out.shift_residue(p, Cx::one())?;
    }
    Ok(out)
}

/// Twist by D = {±s1, ±s2}; generic curves only.
pub fn twist_by_d<R: Real>(conn: &LogConnection<R>, cd: &CriticalData<R>) -> Result<LogConnection<R>> {
    cd.require_generic()?;
    twist(conn, &TwistData::from_curve(cd))
}

/// Replace dy by (m+1)dy/(y+m): F = y is dropped and −m gets (m+1)·I.
pub fn regularize<R: Real>(conn: &LogConnection<R>, m: RegularizationIndex) -> Result<LogConnection<R>> {
    let f = conn.irregular();
    let is_y = f.len() == 2 && f[0] == Cx::zero() && f[1] == Cx::one();
    if !is_y {
        return Err(Error::InvalidParameter("regularize needs irregular part F = y".into()));
    }
    let mut out = conn.clone().with_irregular(Vec::new());
    let mr = R::from_i64(i64::from(m.get()));
    out.shift_residue(real(-mr), real(mr + R::one()))?;
    Ok(out)
}

/// The pushforward of (O_U, d + dy) along (x, y) ↦ y: the rank-one summand
/// d + dy and the rank-two summand (d + dy) ⊗ ∇′ in the frame (v1, v2).
pub fn pushforward_legendre<R: Real>(cd: &CriticalData<R>) -> Result<(LogConnection<R>, LogConnection<R>)> {
    let dy = vec![Cx::zero(), Cx::one()];
    let rank1 = LogConnection::new(1, Vec::new(), dy.clone(), Frame::Standard)?;
    let rank2 = nabla_prime(cd)?.with_irregular(dy);
    Ok((rank1, rank2))
}

/// ∇′ alone (no dy): the trace-free part of the pushforward of (O_U, d).
pub fn nabla_prime<R: Real>(cd: &CriticalData<R>) -> Result<LogConnection<R>> {
    let three = real(R::from_f64(3.0));
    let points: Vec<SingularPoint<R>> = match cd.case {
        CurveCase::Generic => {
            let d12 = cd.c1 - cd.c2;
            cd.divisor()
                .into_iter()
                .enumerate()
                .map(|(k, p)| {
                    // residue of M(y)·2y/(3(y²−c1)(y²−c2)) at p: M(p)/(3(c_i − c_j))
                    let denom = if k < 2 { three * d12 } else { -three * d12 };
                    SingularPoint { point: p, residue: fiber_matrix(cd.lambda, p).scale(denom.cinv()) }
                })
                .collect()
        }
        CurveCase::Exceptional => {
            let k = exceptional_matrix(cd.lambda);
            cd.divisor()
                .into_iter()
                .map(|p| SingularPoint { point: p, residue: k.scale(three.cinv()) })
                .collect()
        }
    };
    let frame = Frame::LegendreFiber(Box::new(FiberFrame { cd: cd.clone(), scalar: Vec::new() }));
    LogConnection::new(2, points, Vec::new(), frame)
}

/// [[1, −2(λ+1)/3], [0, 2]]: ∇′ = d + K·2y dy/(3(y² − c1)) when λ² − λ + 1 = 0.
pub fn exceptional_matrix<R: Real>(lambda: Cx<R>) -> CMat<R> {
    let two_thirds = real(R::ratio(2, 3));
    CMat::from_rows(vec![
        vec![Cx::one(), -two_thirds * (lambda + Cx::one())],
        vec![Cx::zero(), real(R::from_f64(2.0))],
    ])
}

/// The polynomial matrix M(λ, y) with ∇′ = d + M·2y dy/(3(y²−c1)(y²−c2)).
pub fn fiber_matrix<R: Real>(lambda: Cx<R>, y: Cx<R>) -> CMat<R> {
    let d = derivation();
    CMat::from_fn(2, 2, |i, j| d.m[i][j].eval(lambda, y))
}

/// 27(y² − c1)(y² − c2) as a polynomial in (λ, y).
pub fn critical_product() -> Poly2 {
    let l = Poly2::lambda();
    let y = Poly2::y();
    let y2 = &y * &y;
    let l2 = &l * &l;
    let l3 = &l2 * &l;
    let l4 = &l3 * &l;
    let coeff = &(&(&l3.scale(Rat::from_integer(4)) - &l2.scale(Rat::from_integer(6))) - &l.scale(Rat::from_integer(6)))
        + &Poly2::int(4);
    &(&(&(&y2 * &y2).scale(Rat::from_integer(27)) + &(&coeff * &y2)) - &l4) + &(&l3.scale(Rat::from_integer(2)) - &l2)
}

/// Outcome of the symbolic derivation of ∇′.
#[derive(Debug, Clone)]
pub struct Derivation {
    /// M with ∇′ = d + M·ω, ω = 2y dy/(3(y²−c1)(y²−c2)).
    pub m: [[Poly2; 2]; 2],
    /// The norm of f′ equals `norm_ratio` · 27(y²−c1)(y²−c2).
    pub norm_ratio: Rat,
    /// Whether d/dy preserved the trace-zero subspace exactly.
    pub trace_free: bool,
}

/// One element of k[λ,y][x]/(x³ − (λ+1)x² + λx − y²) in the basis 1, x, x².
type Elem = [Poly2; 3];

fn reduce(mut c: Vec<Poly2>) -> Elem {
    // x³ = (λ+1)x² − λx + y²
    let l = Poly2::lambda();
    let l1 = &l + &Poly2::int(1);
    let y2 = &Poly2::y() * &Poly2::y();
    while c.len() > 3 {
        let top = c.pop().expect("non-empty");
        let k = c.len() - 3;
        c[k + 2] = &c[k + 2] + &(&top * &l1);
        c[k + 1] = &c[k + 1] - &(&top * &l);
        c[k] = &c[k] + &(&top * &y2);
    }
    c.resize(3, Poly2::zero());
    [c[0].clone(), c[1].clone(), c[2].clone()]
}

fn elem_mul(a: &Elem, b: &Elem) -> Elem {
    let mut c = vec![Poly2::zero(); 5];
    for i in 0..3 {
        for j in 0..3 {
            c[i + j] = &c[i + j] + &(&a[i] * &b[j]);
        }
    }
    reduce(c)
}

fn det3(m: &[[Poly2; 3]; 3]) -> Poly2 {
    let t = |a: usize, b: usize, c: usize| &(&m[0][a] * &m[1][b]) * &m[2][c];
    let pos = &(&t(0, 1, 2) + &t(1, 2, 0)) + &t(2, 0, 1);
    let neg = &(&t(2, 1, 0) + &t(0, 2, 1)) + &t(1, 0, 2);
    &pos - &neg
}

fn adjugate3(m: &[[Poly2; 3]; 3]) -> [[Poly2; 3]; 3] {
    let minor = |r: usize, c: usize| {
        let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..3).filter(|&j| j != c).collect();
        &(&m[rows[0]][cols[0]] * &m[rows[1]][cols[1]]) - &(&m[rows[0]][cols[1]] * &m[rows[1]][cols[0]])
    };
    let mut adj: [[Poly2; 3]; 3] = Default::default();
    for i in 0..3 {
        for j in 0..3 {
            let c = minor(j, i);
            adj[i][j] = if (i + j) % 2 == 0 { c } else { -&c };
        }
    }
    adj
}

fn derive() -> Derivation {
    let l = Poly2::lambda();
    let one = Poly2::int(1);
    let l1 = &l + &one;
    // f′(x) = λ − 2(λ+1)x + 3x²
    let fp: Elem = [l.clone(), l1.scale(Rat::from_integer(-2)), Poly2::int(3)];
    let basis: [Elem; 3] = [
        [one.clone(), Poly2::zero(), Poly2::zero()],
        [Poly2::zero(), one.clone(), Poly2::zero()],
        [Poly2::zero(), Poly2::zero(), one.clone()],
    ];
    let mut mf: [[Poly2; 3]; 3] = Default::default();
    for (j, e) in basis.iter().enumerate() {
        let col = elem_mul(&fp, e);
        for i in 0..3 {
            mf[i][j] = col[i].clone();
        }
    }
    let norm = det3(&mf);
    let adj = adjugate3(&mf);
    let q = critical_product();
    let norm_ratio = norm.ratio_to(&q).expect("norm of f′ is proportional to the critical product");

    // dx/dy = 2y/f′(x) and d(x²)/dy = 4y·x/f′(x); f′⁻¹·e_k has coordinates adj[·][k]/N.
    let y = Poly2::y();
    let numer = |k: usize, factor: i128| -> Elem {
        let s = &y.scale(Rat::from_integer(factor));
        [&adj[0][k] * s, &adj[1][k] * s, &adj[2][k] * s]
    };
    let dv = [numer(0, 2), numer(1, 4)];

    let third = Rat::new(1, 3);
    let t1 = l1.scale(third);
    let t2 = (&(&l * &l) + &one).scale(third);
    let trace_free = dv.iter().all(|e| (&(&e[0] + &(&e[1] * &t1)) + &(&e[2] * &t2)).is_zero());

    // A = R/N and ω = 18y/Q with N = κQ, so M = A/ω = R/(18κy).
    let k18 = norm_ratio * Rat::from_integer(18);
    let entry = |e: &Elem, i: usize| -> Poly2 {
        e[i].div_y_pow(1).expect("numerator divisible by y").scale(Rat::from_integer(1) / k18)
    };
    let m = [[entry(&dv[0], 1), entry(&dv[1], 1)], [entry(&dv[0], 2), entry(&dv[1], 2)]];
    Derivation { m, norm_ratio, trace_free }
}

pub fn derivation() -> &'static Derivation {
    static CELL: OnceLock<Derivation> = OnceLock::new();
    CELL.get_or_init(derive)
}

/// Candidate printings of M that the derivation is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StatedVariant {
    /// (1,2) entry (2/9)λ(λ+1) − (2/3)(λ+1)y².
    EntryLambdaLambdaPlusOne,
    /// (1,2) entry (2/9)λ(λ²+1) − (2/3)(λ+1)y².
    EntryLambdaLambdaSquaredPlusOne,
}

pub fn stated_matrix(v: StatedVariant) -> [[Poly2; 2]; 2] {
    let l = Poly2::lambda();
    let y2 = &Poly2::y() * &Poly2::y();
    let one = Poly2::int(1);
    let l1 = &l + &one;
    let l2 = &l * &l;
    let m11 = &(&l1 * &(&(&l2.scale(Rat::from_integer(2)) - &l.scale(Rat::from_integer(3))) + &Poly2::int(2))).scale(Rat::new(1, 9)) + &y2;
    let a = match v {
        StatedVariant::EntryLambdaLambdaPlusOne => &l * &l1,
        StatedVariant::EntryLambdaLambdaSquaredPlusOne => &l * &(&l2 + &one),
    };
    let m12 = &a.scale(Rat::new(2, 9)) - &(&l1 * &y2).scale(Rat::new(2, 3));
    let m21 = (&(&l2 - &l) + &one).scale(Rat::new(-2, 9));
    let m22 = &(&l * &l1).scale(Rat::new(-2, 9)) + &y2.scale(Rat::from_integer(2));
    [[m11, m12], [m21, m22]]
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivationDiagnostic {
    pub variant: StatedVariant,
    /// Entrywise agreement with the derived matrix, row-major.
    pub entries_match: [bool; 4],
    pub matches: bool,
}

/// Compare each stated candidate with the derivation.
pub fn derivation_diagnostic() -> Vec<DerivationDiagnostic> {
    let d = derivation();
    [StatedVariant::EntryLambdaLambdaPlusOne, StatedVariant::EntryLambdaLambdaSquaredPlusOne]
        .into_iter()
        .map(|v| {
            let p = stated_matrix(v);
            let entries_match = [p[0][0] == d.m[0][0], p[0][1] == d.m[0][1], p[1][0] == d.m[1][0], p[1][1] == d.m[1][1]];
            DerivationDiagnostic { variant: v, entries_match, matches: entries_match.iter().all(|&b| b) }
        })
        .collect()
}

/// Per-point admissibility data.
#[derive(Debug, Clone, Serialize)]
pub struct PointAdmissibility {
    pub point: PointRef,
    pub location: Option<Complex<f64>>,
    pub eigenvalues: Vec<Complex<f64>>,
    /// All eigenvalues (of −Res at infinity) have positive real part.
    pub positive: bool,
    /// Some pair of eigenvalues differs by an integer.
    pub integer_difference: bool,
    /// No eigenvalue is a non-positive integer.
    pub small: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub points: Vec<PointAdmissibility>,
    /// Positivity and no integer differences at every finite point.
    pub passes: bool,
}

const INTEGER_TOL: f64 = 1e-9;

fn near_integer(z: Complex<f64>) -> bool {
    z.im.abs() < INTEGER_TOL && (z.re - z.re.round()).abs() < INTEGER_TOL
}

pub fn admissibility<R: Real>(conn: &LogConnection<R>) -> AdmissibilityReport {
    let mut refs: Vec<PointRef> = (0..conn.points().len()).map(PointRef::Finite).collect();
    refs.push(PointRef::Infinity);
    let points: Vec<PointAdmissibility> = refs
        .into_iter()
        .map(|at| {
            let eig: Vec<Complex<f64>> = conn.eigenvalues(at).into_iter().map(to_c64).collect();
            let signed: Vec<Complex<f64>> = match at {
                PointRef::Infinity => eig.iter().map(|z| -z).collect(),
                PointRef::Finite(_) => eig.clone(),
            };
            let positive = signed.iter().all(|z| z.re > 0.0);
            // a scalar residue is semisimple: equal eigenvalues are harmless
            let scalar = match at {
                PointRef::Finite(i) => is_scalar(&conn.points()[i].residue),
                PointRef::Infinity => false,
            };
            let mut integer_difference = false;
            for i in 0..if scalar { 0 } else { eig.len() } {
                for j in i + 1..eig.len() {
                    integer_difference |= near_integer(eig[i] - eig[j]);
                }
            }
            let small = eig.iter().all(|z| !(near_integer(*z) && z.re.round() <= 0.0));
            let location = match at {
                PointRef::Finite(i) => Some(to_c64(conn.points()[i].point)),
                PointRef::Infinity => None,
            };
            PointAdmissibility { point: at, location, eigenvalues: eig, positive, integer_difference, small }
        })
        .collect();
    let passes = points.iter().filter(|p| p.location.is_some()).all(|p| p.positive && !p.integer_difference);
    AdmissibilityReport { points, passes }
}

fn is_scalar<R: Real>(a: &CMat<R>) -> bool {
    let d = a[(0, 0)];
    (0..a.rows()).all(|i| (0..a.cols()).all(|j| a[(i, j)] == if i == j { d } else { Cx::zero() }))
}

/// |(1 + y/m)^m − e^y| and the bound |e^y|(|y|²/m)e^{|y|²/m}.
pub fn regularization_gap(y: Complex<f64>, m: u32) -> (f64, f64) {
    let mf = f64::from(m);
    let approx = ((Complex::new(1.0, 0.0) + y / mf).ln() * mf).exp();
    let gap = (approx - y.exp()).norm();
    let r2 = y.norm_sqr() / mf;
    (gap, y.exp().norm() * r2 * r2.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{critical_data, CurveParams, ExceptionalRoot};
    use crate::numeric::complex::{cx, rel_diff};

    fn cd2() -> CriticalData<f64> {
        CriticalData::from_lambda(cx(2.0, 0.0)).unwrap()
    }

    #[test]
    fn derivation_is_consistent() {
        let d = derivation();
        assert!(d.trace_free);
        let diag = derivation_diagnostic();
        assert!(!diag[0].matches);
        assert_eq!(diag[0].entries_match, [true, false, true, true]);
        assert!(diag[1].matches);
    }

    #[test]
    fn residues_generic() {
        let cd = cd2();
        let n = nabla_prime(&cd).unwrap();
        for i in 0..4 {
            let e = n.eigenvalues(PointRef::Finite(i));
            assert!((e[0] - cx(0.0, 0.0)).cabs() < 1e-12, "{e:?}");
            assert!((e[1] - cx(0.5, 0.0)).cabs() < 1e-12, "{e:?}");
        }
        let total = n.points().iter().fold(CMat::zeros(2, 2), |a, p| a.add(&p.residue)).add(&n.residue_at_infinity());
        assert!(total.max_abs() < 1e-15);
        let inf = n.eigenvalues(PointRef::Infinity);
        assert!((inf[0] - cx(-4.0 / 3.0, 0.0)).cabs() < 1e-12 && (inf[1] - cx(-2.0 / 3.0, 0.0)).cabs() < 1e-12);
    }

    #[test]
    fn partial_fractions_match_fiber_matrix() {
        let cd = CriticalData::<f64>::from_lambda(cx(0.3, 1.7)).unwrap();
        let n = nabla_prime(&cd).unwrap();
        let y = cx(0.41, -0.77);
        let omega = y * cx(2.0, 0.0) / ((y * y - cd.c1) * (y * y - cd.c2) * cx(3.0, 0.0));
        let direct = fiber_matrix(cd.lambda, y).scale(omega);
        assert!(direct.sub(&n.matrix_at(y)).max_abs() < 1e-12);
    }

    #[test]
    fn trace_is_half_dlog_of_critical_product() {
        let cd = cd2();
        let n = nabla_prime(&cd).unwrap();
        let y = cx(0.3, 0.2);
        let q = (y * y - cd.c1) * (y * y - cd.c2);
        let dq = y * cx(2.0, 0.0) * ((y * y - cd.c1) + (y * y - cd.c2));
        assert!(rel_diff(n.matrix_at(y).trace(), dq / q * cx(0.5, 0.0)) < 1e-13);
    }

    #[test]
    fn exceptional_form() {
        let p = CurveParams::<f64>::exceptional(ExceptionalRoot::Plus);
        let cd = critical_data(&p);
        let n = nabla_prime(&cd).unwrap();
        let e = n.eigenvalues(PointRef::Finite(0));
        assert!((e[0] - cx(1.0 / 3.0, 0.0)).cabs() < 1e-14);
        assert!((e[1] - cx(2.0 / 3.0, 0.0)).cabs() < 1e-14);
        // the generic M degenerates to (y² − c1)·K
        let y = cx(0.7, 0.1);
        let m = fiber_matrix(cd.lambda, y).scale((y * y - cd.c1).cinv());
        assert!(m.sub(&exceptional_matrix(cd.lambda)).max_abs() < 1e-12);
        assert!(admissibility(&n).passes);
        assert!(twist_by_d(&n, &cd).is_err());
    }

    #[test]
    fn twist_and_regularize() {
        let cd = cd2();
        let (_, rank2) = pushforward_legendre(&cd).unwrap();
        assert!(!admissibility(&nabla_prime(&cd).unwrap()).passes);
        let t = twist_by_d(&rank2, &cd).unwrap();
        assert!(admissibility(&t).passes);
        let e = t.eigenvalues(PointRef::Finite(1));
        assert!((e[0] - cx(1.0, 0.0)).cabs() < 1e-12 && (e[1] - cx(1.5, 0.0)).cabs() < 1e-12);
        let tt = twist_by_d(&t, &cd).unwrap();
        let e = tt.eigenvalues(PointRef::Finite(1));
        assert!((e[0] - cx(2.0, 0.0)).cabs() < 1e-12 && (e[1] - cx(2.5, 0.0)).cabs() < 1e-12);

        let m = RegularizationIndex::new(10, &cd).unwrap();
        let r = regularize(&t, m).unwrap();
        assert_eq!(r.points().len(), 5);
        assert!(r.irregular().is_empty());
        let i = r.point_index(cx(-10.0, 0.0)).unwrap();
        assert!(r.residue(PointRef::Finite(i)).sub(&CMat::scalar(2, cx(11.0, 0.0))).max_abs() == 0.0);
        let inf = r.eigenvalues(PointRef::Infinity);
        assert!((inf[0] + cx(11.0 + 16.0 / 3.0, 0.0)).cabs() < 1e-12);
        assert!((inf[1] + cx(11.0 + 14.0 / 3.0, 0.0)).cabs() < 1e-12);
        assert!(regularize(&r, m).is_err());
        assert!(RegularizationIndex::new(1, &cd).is_err());
    }

    #[test]
    fn twisting_zero_connection() {
        let cd = cd2();
        let z = LogConnection::<f64>::trivial(1);
        let t = twist(&z, &TwistData::from_curve(&cd)).unwrap();
        assert_eq!(t.points().len(), 4);
        for p in t.points() {
            assert_eq!(p.residue[(0, 0)], cx(1.0, 0.0));
        }
    }

    #[test]
    fn regularization_limit() {
        let m = 10_000;
        for k in 0..16 {
            let y = Complex::from_polar(5.0, f64::from(k) * 0.39);
            let (gap, bound) = regularization_gap(y, m);
            assert!(gap <= bound);
            assert!(gap < 1e-2 * y.exp().norm().max(1.0));
        }
    }

    #[test]
    fn coincident_points_rejected() {
        let p: [(Cx<f64>, Cx<f64>); 2] = [(cx(1.0, 0.0), cx(0.5, 0.0)), (cx(1.0, 0.0), cx(0.2, 0.0))];
        assert!(matches!(LogConnection::rank_one(&p, vec![]), Err(Error::CoincidentPoints(_))));
    }

    #[test]
    fn extended_residues() {
        let cd = CriticalData::<crate::numeric::Dd>::from_lambda(cx(2.0, 0.0)).unwrap();
        let n = nabla_prime(&cd).unwrap();
        let e = n.eigenvalues(PointRef::Finite(0));
        assert!(e[0].cabs().to_f64() < 1e-28);
        assert!((e[1] - cx(0.5, 0.0)).cabs().to_f64() < 1e-28);
    }
}
