//! Closed-form algebra of the Legendre curve y² = x(x−1)(x−λ).

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::complex::{convert, real, rel_diff, to_c64};
use crate::numeric::{Cx, CxExt, Dd, Real};

/// |λ² − λ + 1| below this classifies the curve as exceptional.
pub const EXCEPTIONAL_TOL: f64 = 1e-9;
/// |λ² − λ + 1| below this (but not exceptional) is ill-conditioned.
pub const CONDITIONING_TOL: f64 = 1e-3;
/// |λ| or |λ − 1| below this is rejected as singular.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// |λ| or |λ − 1| below this draws a warning.
pub const NEAR_DEGENERATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveCase {
    Generic,
    Exceptional,
}

impl CurveCase {
    pub fn name(self) -> &'static str {
        match self {
            CurveCase::Generic => "generic",
            CurveCase::Exceptional => "exceptional",
        }
    }
}

impl fmt::Display for CurveCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which root of λ² − λ + 1 = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExceptionalRoot {
    /// (1 + √−3)/2
    Plus,
    /// (1 − √−3)/2
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveParams<R: Real> {
    pub lambda: Cx<R>,
    pub case: CurveCase,
    pub warnings: Vec<String>,
}

/// λ² − λ + 1.
pub fn disc<R: Real>(lambda: Cx<R>) -> Cx<R> {
    lambda * lambda - lambda + Cx::one()
}

impl<R: Real> CurveParams<R> {
    pub fn new(lambda: Cx<R>) -> Result<Self> {
        let l = to_c64(lambda);
        let d0 = l.norm();
        let d1 = (l - Complex::new(1.0, 0.0)).norm();
        if !l.re.is_finite() || !l.im.is_finite() {
            return Err(Error::InvalidParameter(format!("λ = {l} is not finite")));
        }
        if d0.min(d1) < DEGENERATE_TOL {
            return Err(Error::DegenerateCurve(format!("λ = {l} makes the curve singular (λ ∈ {{0, 1}})")));
        }
        let mut warnings = Vec::new();
        if d0.min(d1) < NEAR_DEGENERATE_TOL {
            warnings.push(format!("λ = {l} is within {NEAR_DEGENERATE_TOL:e} of a singular fiber"));
        }
        let q = to_c64(disc(convert::<R, Dd>(lambda))).norm();
        let case = if q < EXCEPTIONAL_TOL {
            CurveCase::Exceptional
        } else {
            if q < CONDITIONING_TOL {
                warnings.push(format!("|λ² − λ + 1| = {q:.3e} is small; generic formulas divide by its square"));
            }
            CurveCase::Generic
        };
        Ok(Self { lambda, case, warnings })
    }

    /// The exceptional parameter computed at full working precision.
    pub fn exceptional(root: ExceptionalRoot) -> Self {
        let h = R::half();
        let s3 = R::from_f64(3.0).sqrt() * h;
        let im = match root {
            ExceptionalRoot::Plus => s3,
            ExceptionalRoot::Minus => -s3,
        };
        Self { lambda: Complex::new(h, im), case: CurveCase::Exceptional, warnings: Vec::new() }
    }
}

/// f(x) = x³ − (λ+1)x² + λx.
pub fn f<R: Real>(lambda: Cx<R>, x: Cx<R>) -> Cx<R> {
    ((x - lambda - Cx::one()) * x + lambda) * x
}

/// f′(x) = 3x² − 2(λ+1)x + λ.
pub fn f_prime<R: Real>(lambda: Cx<R>, x: Cx<R>) -> Cx<R> {
    let three = real(R::from_f64(3.0));
    let two = real(R::from_f64(2.0));
    (three * x - two * (lambda + Cx::one())) * x + lambda
}

/// Record of every sign and ordering choice baked into a [`CriticalData`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchRecord {
    /// +1 when s1 is the principal root of c1, −1 when flipped.
    pub s1_sign: i8,
    pub s2_sign: i8,
    /// True when x1, x2 were exchanged relative to lexicographic order.
    pub swapped: bool,
}

impl Default for BranchRecord {
    fn default() -> Self {
        Self { s1_sign: 1, s2_sign: 1, swapped: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalData<R: Real> {
    pub lambda: Cx<R>,
    pub case: CurveCase,
    pub x1: Cx<R>,
    pub x2: Cx<R>,
    pub c1: Cx<R>,
    pub c2: Cx<R>,
    pub s1: Cx<R>,
    pub s2: Cx<R>,
    pub x3: Cx<R>,
    pub x4: Cx<R>,
    pub branch: BranchRecord,
}

fn lex_less<R: Real>(a: Cx<R>, b: Cx<R>) -> bool {
    (a.re.to_f64(), a.im.to_f64()) < (b.re.to_f64(), b.im.to_f64())
}

/// Critical points, values, principal square roots and companion roots.
pub fn critical_data<R: Real>(params: &CurveParams<R>) -> CriticalData<R> {
    let lambda = params.lambda;
    let three = real(R::from_f64(3.0));
    let l1 = lambda + Cx::one();
    let (x1, x2) = match params.case {
        CurveCase::Exceptional => (l1 / three, l1 / three),
        CurveCase::Generic => {
            let r = disc(lambda).csqrt();
            let (a, b) = ((l1 + r) / three, (l1 - r) / three);
            if lex_less(b, a) {
                (b, a)
            } else {
                (a, b)
            }
        }
    };
    let c1 = f(lambda, x1);
    let c2 = match params.case {
        CurveCase::Exceptional => c1,
        CurveCase::Generic => f(lambda, x2),
    };
    let two = real(R::from_f64(2.0));
    CriticalData {
        lambda,
        case: params.case,
        x1,
        x2,
        c1,
        c2,
        s1: c1.csqrt(),
        s2: c2.csqrt(),
        x3: l1 - two * x1,
        x4: l1 - two * x2,
        branch: BranchRecord::default(),
    }
}

impl<R: Real> CriticalData<R> {
    pub fn from_lambda(lambda: Cx<R>) -> Result<Self> {
        Ok(critical_data(&CurveParams::new(lambda)?))
    }

    pub fn is_generic(&self) -> bool {
        self.case == CurveCase::Generic
    }

    pub fn require_generic(&self) -> Result<()> {
        match self.case {
            CurveCase::Generic => Ok(()),
            CurveCase::Exceptional => Err(Error::WrongCase { expected: "generic", actual: "exceptional" }),
        }
    }

    pub fn require_exceptional(&self) -> Result<()> {
        match self.case {
            CurveCase::Exceptional => Ok(()),
            CurveCase::Generic => Err(Error::WrongCase { expected: "exceptional", actual: "generic" }),
        }
    }

    /// The divisor D in the order (−s1, s1, −s2, s2), or (−s1, s1) when
    /// exceptional.
    pub fn divisor(&self) -> Vec<Cx<R>> {
        match self.case {
            CurveCase::Generic => vec![-self.s1, self.s1, -self.s2, self.s2],
            CurveCase::Exceptional => vec![-self.s1, self.s1],
        }
    }

    /// Exchange the roles of x1 and x2.
    pub fn swapped(&self) -> Self {
        let mut out = self.clone();
        std::mem::swap(&mut out.x1, &mut out.x2);
        std::mem::swap(&mut out.c1, &mut out.c2);
        std::mem::swap(&mut out.s1, &mut out.s2);
        std::mem::swap(&mut out.x3, &mut out.x4);
        std::mem::swap(&mut out.branch.s1_sign, &mut out.branch.s2_sign);
        out.branch.swapped = !out.branch.swapped;
        out
    }

    /// Replace s1 by −s1 (and s2 by −s2 when `both`).
    pub fn with_s_signs(&self, flip_s1: bool, flip_s2: bool) -> Self {
        let mut out = self.clone();
        if flip_s1 {
            out.s1 = -out.s1;
            out.branch.s1_sign = -out.branch.s1_sign;
        }
        if flip_s2 {
            out.s2 = -out.s2;
            out.branch.s2_sign = -out.branch.s2_sign;
        }
        if self.case == CurveCase::Exceptional {
            out.s2 = out.s1;
            out.branch.s2_sign = out.branch.s1_sign;
        }
        out
    }

    pub fn convert<S: Real>(&self) -> CriticalData<S> {
        CriticalData {
            lambda: convert(self.lambda),
            case: self.case,
            x1: convert(self.x1),
            x2: convert(self.x2),
            c1: convert(self.c1),
            c2: convert(self.c2),
            s1: convert(self.s1),
            s2: convert(self.s2),
            x3: convert(self.x3),
            x4: convert(self.x4),
            branch: self.branch.clone(),
        }
    }

    /// Roots of f(x) = y², unordered.
    pub fn fiber_roots(&self, y: Cx<R>) -> [Cx<R>; 3] {
        cubic_roots(self.lambda, y * y)
    }
}

/// Roots of x³ − (λ+1)x² + λx − w: Cardano seeds refined by Durand–Kerner
/// and Newton polishing.
pub fn cubic_roots<R: Real>(lambda: Cx<R>, w: Cx<R>) -> [Cx<R>; 3] {
    let p = |x: Cx<R>| f(lambda, x) - w;
    let mut z = cardano(lambda, w);
    let tol = R::from_f64(R::EPS * 8.0);
    for _ in 0..100 {
        let mut delta = R::zero();
        for i in 0..3 {
            let mut den = Cx::<R>::one();
            for j in 0..3 {
                if i != j {
                    den = den * (z[i] - z[j]);
                }
            }
            if den == Cx::zero() {
                // exact double root: separate the seeds slightly
                z[i] = z[i] + real(R::from_f64(R::EPS.sqrt()) * (R::one() + z[i].cabs()));
                delta = R::one();
                continue;
            }
            let step = p(z[i]) / den;
            z[i] = z[i] - step;
            delta = delta.max(step.cabs() / (R::one() + z[i].cabs()));
        }
        if delta < tol {
            break;
        }
    }
    for zi in z.iter_mut() {
        polish(lambda, w, zi);
    }
    z
}

fn cardano<R: Real>(lambda: Cx<R>, w: Cx<R>) -> [Cx<R>; 3] {
    let three = real(R::from_f64(3.0));
    let a = -(lambda + Cx::one());
    let (b, c) = (lambda, -w);
    let p = b - a * a / three;
    let q = a * a * a * real(R::ratio(2, 27)) - a * b / three + c;
    let half_q = q * real(R::half());
    let disc = (half_q * half_q + p * p * p * real(R::ratio(1, 27))).csqrt();
    // larger-modulus choice keeps u away from zero
    let u3 = if (-half_q + disc).cabs() >= (-half_q - disc).cabs() { -half_q + disc } else { -half_q - disc };
    let shift = -a / three;
    if u3 == Cx::zero() {
        return [shift; 3];
    }
    let u = u3.cpow(real(R::ratio(1, 3)));
    let (s, co) = (R::two_pi() / R::from_f64(3.0)).sin_cos();
    let rot = Cx::new(co, s);
    let mut out = [Cx::zero(); 3];
    let mut uk = u;
    for o in out.iter_mut() {
        *o = uk - p / (three * uk) + shift;
        uk = uk * rot;
    }
    out
}

/// Newton steps on f(x) − w from `x`; leaves `x` unchanged at a critical
/// point.
pub fn polish<R: Real>(lambda: Cx<R>, w: Cx<R>, x: &mut Cx<R>) {
    for _ in 0..3 {
        let d = f_prime(lambda, *x);
        if d == Cx::zero() {
            return;
        }
        let step = (f(lambda, *x) - w) / d;
        if !step.is_finite_c() {
            return;
        }
        *x = *x - step;
    }
}

/// One rapid-decay sector at infinity in the local parameter t = −x/y,
/// equivalently t = −(1/y)^{1/3} on the appropriate sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorDescriptor {
    pub index: u8,
    pub arg_lo: f64,
    pub arg_hi: f64,
}

impl SectorDescriptor {
    pub fn center(&self) -> f64 {
        0.5 * (self.arg_lo + self.arg_hi)
    }

    /// y = −t⁻³ at |y| = `radius`, arg t = `frac`-way across the sector.
    pub fn sample_y(&self, radius: f64, frac: f64) -> Complex<f64> {
        let theta = self.arg_lo + frac * (self.arg_hi - self.arg_lo);
        let t = Complex::from_polar(radius.powf(-1.0 / 3.0), theta);
        -(t * t * t).inv()
    }

    /// Asymptotic direction of x = t⁻² as y → −∞ inside the sector.
    pub fn x_direction(&self) -> Complex<f64> {
        Complex::from_polar(1.0, -2.0 * self.center())
    }
}

pub fn rapid_decay_sectors() -> [SectorDescriptor; 3] {
    let third = std::f64::consts::PI / 3.0;
    let mk = |i: u8| {
        let c = 2.0 * third * f64::from(i - 1);
        SectorDescriptor { index: i, arg_lo: c - third / 2.0, arg_hi: c + third / 2.0 }
    };
    [mk(1), mk(2), mk(3)]
}

/// Residual of one curve identity.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: Complex<f64>,
    pub rhs: Complex<f64>,
    pub rel_error: f64,
}

impl IdentityCheck {
    fn new(name: &'static str, lhs: Cx<Dd>, rhs: Cx<Dd>) -> Self {
        Self { name, lhs: to_c64(lhs), rhs: to_c64(rhs), rel_error: rel_diff(lhs, rhs) }
    }

    fn residual(name: &'static str, value: Cx<Dd>, scale: Dd) -> Self {
        let rel = (value.cabs() / scale).to_f64();
        Self { name, lhs: to_c64(value), rhs: Complex::new(0.0, 0.0), rel_error: rel }
    }
}

pub const ID_CRITICAL_POINTS: &str = "f'(x1) = f'(x2) = 0";
pub const ID_SQUARE_ROOTS: &str = "s1^2 = c1, s2^2 = c2";
pub const ID_PRODUCT: &str = "c1*c2 = -lambda^2 (lambda-1)^2 / 27";
pub const ID_DIFFERENCE: &str = "(c1-c2)^2 = 2^4/3^6 (lambda^2-lambda+1)^3";
pub const ID_COMPANION_STATED: &str = "(x1-x3)^2 (x2-x4)^2 = 2^-4 (lambda^2-lambda+1)^2";
pub const ID_COMPANION: &str = "(x1-x3)^2 (x2-x4)^2 = (lambda^2-lambda+1)^2";
pub const ID_EXCEPTIONAL: &str = "x1 = (lambda+1)/3, c1 = (2 lambda - 1)/9";

/// Evaluate the curve identities with double-double compensation: the data
/// are recomputed at extended precision from λ so that the check measures
/// the identities, not binary64 cancellation in c1 − c2.
pub fn identity_checks<R: Real>(params: &CurveParams<R>) -> Vec<IdentityCheck> {
    let p = CurveParams::<Dd> { lambda: convert(params.lambda), case: params.case, warnings: Vec::new() };
    let cd = critical_data(&p);
    let l = cd.lambda;
    let one = Cx::<Dd>::one();
    let q = disc(l);
    let r = |a: i64, b: i64| real::<Dd>(Dd::ratio(a, b));
    let scale = Dd::one() + l.cabs();
    let mut out = vec![
        IdentityCheck::residual(
            ID_CRITICAL_POINTS,
            Complex::new(f_prime(l, cd.x1).cabs() + f_prime(l, cd.x2).cabs(), Dd::zero()),
            scale * scale,
        ),
        IdentityCheck::residual(
            ID_SQUARE_ROOTS,
            Complex::new((cd.s1 * cd.s1 - cd.c1).cabs() + (cd.s2 * cd.s2 - cd.c2).cabs(), Dd::zero()),
            (cd.c1.cabs() + cd.c2.cabs()).max(Dd::from_f64(1e-300)),
        ),
        IdentityCheck::new(ID_PRODUCT, cd.c1 * cd.c2, -(l * l * (l - one) * (l - one)) * r(1, 27)),
    ];
    match cd.case {
        CurveCase::Generic => {
            let d = cd.c1 - cd.c2;
            out.push(IdentityCheck::new(ID_DIFFERENCE, d * d, r(16, 729) * q * q * q));
            let lhs = (cd.x1 - cd.x3) * (cd.x1 - cd.x3) * (cd.x2 - cd.x4) * (cd.x2 - cd.x4);
            out.push(IdentityCheck::new(ID_COMPANION_STATED, lhs, r(1, 16) * q * q));
            out.push(IdentityCheck::new(ID_COMPANION, lhs, q * q));
        }
        CurveCase::Exceptional => {
            let e1 = rel_diff(cd.x1, (l + one) * r(1, 3));
            let e2 = rel_diff(cd.c1, (real::<Dd>(Dd::from_f64(2.0)) * l - one) * r(1, 9));
            out.push(IdentityCheck {
                name: ID_EXCEPTIONAL,
                lhs: to_c64(cd.c1),
                rhs: to_c64((real::<Dd>(Dd::from_f64(2.0)) * l - one) * r(1, 9)),
                rel_error: e1.max(e2),
            });
        }
    }
    out
}
