//! The acceptance suite: ten criteria at pinned tolerances and budgets.
//!
//! Criteria that compare against a stated closed form are evaluated as
//! stated; where the closed form is wrong the criterion fails and the
//! corrected agreement is printed as an info line next to it.

use std::time::Instant;

use irrper_core::comparison::{final_period_exceptional, sigma_matrix};
use irrper_core::connection::{nabla_prime, twist_by_d, LogConnection, PointRef};
use irrper_core::curve::{
    critical_data, disc, identity_checks, CriticalData, CurveParams, ExceptionalRoot, ID_COMPANION, ID_COMPANION_STATED,
    ID_DIFFERENCE, ID_PRODUCT,
};
use irrper_core::direct::{direct_curve_period, DirectOptions};
use irrper_core::engine::{
    approx_record, approx_sequence, default_m_list, exceptional_pipeline, nabla_one, period_matrix, product_det,
    regularized_connection, EngineOptions, LineBasis, LineForms,
};
use irrper_core::golden;
use irrper_core::numeric::complex::{convert, real, rel_diff, to_c64};
use irrper_core::numeric::gamma::gamma;
use irrper_core::numeric::{cx, CMat, CxExt, Dd, Execution, Precision, Real};
use irrper_core::path::{detour_radius, PathSpec};
use irrper_core::product::{selberg_rank1_det, vandermonde, BranchData, IrregularRank1Spec, LogValue, StarPaths};
use irrper_core::quadrature::{integrate_vec, NodePoint, QuadratureSettings};
use irrper_core::transport::{continue_solution, dual_frame, frame_at_end, loop_monodromy, PeriodIntegrand, Route};
use irrper_core::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::report::Check;

pub const TOL_IDENTITY: f64 = 1e-12;
pub const TOL_GAMMA: f64 = 1e-12;
pub const TOL_ORACLE: f64 = 1e-8;
pub const TOL_VANDERMONDE: f64 = 1e-6;
pub const TOL_GOLDEN: f64 = 1e-10;
pub const TOL_LIMIT: f64 = 1e-4;
pub const TOL_FACTOR: f64 = 1e-2;
pub const TOL_DET_Q: f64 = 1e-10;
pub const TOL_PER_FORMS: f64 = 1e-10;
pub const TOL_STOKES: f64 = 1e-8;
pub const TOL_HOMOTOPY: f64 = 1e-6;
/// Perfectness: |det| at least 10³ times its error budget.
pub const PERFECT_MARGIN: f64 = 1e3;
pub const TOL_RATIO_STABILITY: f64 = 1e-6;
pub const TOL_MONODROMY: f64 = 1e-8;
pub const TOL_TRANSPORT: f64 = 1e-8;

/// Wall-clock budgets in seconds, criteria 1 to 10.
pub const BUDGETS: [f64; 10] = [1.0, 1.0, 30.0, 120.0, 61.0, 600.0, 300.0, 5.0, 900.0, 120.0];

const SEED_IDENTITIES: u64 = 0x1d_0001;
const SEED_RANK_ONE: u64 = 0x1d_0003;
const SEED_DET_Q: u64 = 0x1d_0008;
const SEED_PATHS: u64 = 0x1d_000a;

pub const TITLES: [&str; 10] = [
    "curve identities",
    "Gamma identities",
    "product formula vs quadrature (rank one)",
    "Vandermonde law",
    "golden D_(m) and Delta_(m)",
    "generic convergence",
    "exceptional convergence",
    "comparison algebra",
    "direct curve properties",
    "transport validation",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub parts: Vec<Check>,
    pub info: Vec<String>,
    pub budget_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

impl CriterionReport {
    pub fn within_budget(&self) -> bool {
        self.seconds.is_none_or(|s| s <= self.budget_seconds)
    }

    /// One PASS/FAIL line followed by indented part and info lines.
    pub fn render(&self) -> String {
        let mut s = format!(
            "criterion {:>2} {}  {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title
        );
        if let Some(t) = self.seconds {
            s += &format!("  ({t:.2} s of {} s)", self.budget_seconds);
        }
        for p in &self.parts {
            let m = p.measured.map_or("n/a".to_string(), |x| format!("{x:.3e}"));
            s += &format!(
                "\n    [{}] {}: {} (tol {:.0e}){}",
                if p.passed { "ok" } else { "x " },
                p.name,
                m,
                p.tolerance,
                if p.note.is_empty() { String::new() } else { format!("  {}", p.note) }
            );
        }
        for i in &self.info {
            s += &format!("\n    info: {i}");
        }
        s
    }
}

type Outcome = Result<(Vec<Check>, Vec<String>), Error>;

/// Run one criterion (1-based); `timed` records wall-clock seconds.
pub fn run_criterion(id: u8, exec: Execution, timed: bool) -> CriterionReport {
    assert!((1..=10).contains(&id), "criteria are numbered 1 to 10");
    let start = Instant::now();
    let out = match id {
        1 => curve_identities(),
        2 => gamma_identities(),
        3 => product_vs_quadrature(exec),
        4 => vandermonde_law(exec),
        5 => golden_formulas(exec),
        6 => generic_convergence(exec),
        7 => exceptional_convergence(exec),
        8 => comparison_algebra(),
        9 => direct_properties(exec),
        _ => transport_validation(),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let (parts, info) = out.unwrap_or_else(|e| {
        (vec![Check { name: "evaluation".into(), passed: false, measured: None, tolerance: 0.0, note: e.to_string() }], Vec::new())
    });
    let budget = BUDGETS[usize::from(id) - 1];
    let mut rep = CriterionReport {
        id,
        title: TITLES[usize::from(id) - 1].into(),
        passed: false,
        parts,
        info,
        budget_seconds: budget,
        seconds: Some(elapsed),
    };
    rep.passed = rep.parts.iter().all(|p| p.passed) && rep.within_budget();
    if !timed {
        rep.seconds = None;
    }
    rep
}

/// All criteria in order; `each` sees every report as soon as it is done.
pub fn run_all(exec: Execution, timed: bool, mut each: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    (1..=10)
        .map(|id| {
            let r = run_criterion(id, exec, timed);
            each(&r);
            r
        })
        .collect()
}

fn settings(tol: f64, p: Precision) -> QuadratureSettings {
    QuadratureSettings::new(tol, p).expect("pinned tolerance is valid")
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// 1 ---------------------------------------------------------------------

fn curve_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_IDENTITIES);
    let names = [ID_PRODUCT, ID_DIFFERENCE, ID_COMPANION_STATED, ID_COMPANION];
    let mut worst = [0.0f64; 4];
    let mut ratio = c64(0.0, 0.0);
    let mut count = 0;
    while count < 100 {
        let l = c64(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        if l.norm() > 10.0 || disc(l).norm() <= 1e-3 || l.norm() < 1e-3 || (l - 1.0).norm() < 1e-3 {
            continue;
        }
        let params = CurveParams::new(l)?;
        for chk in identity_checks(&params) {
            if let Some(k) = names.iter().position(|n| *n == chk.name) {
                worst[k] = worst[k].max(chk.rel_error);
                if k == 2 {
                    ratio = chk.lhs / chk.rhs;
                }
            }
        }
        count += 1;
    }
    let parts = names[..3].iter().zip(&worst).map(|(n, &w)| Check::at_most(n, w, TOL_IDENTITY, "")).collect();
    let info = vec![
        format!("{}: max rel error {:.1e}", ID_COMPANION, worst[3]),
        format!("lhs/rhs of the 2^-4 form on the last sample: {:.12}", ratio),
    ];
    Ok((parts, info))
}

// 2 ---------------------------------------------------------------------

fn gamma_pair<R: Real>() -> [f64; 2] {
    let g = |p: i64, q: i64| gamma(real::<R>(R::ratio(p, q)));
    let pi = R::pi();
    let half = real::<R>(pi.sqrt() * R::half());
    let first = rel_diff(g(1, 1) * g(3, 2), half);
    let t = g(1, 3) * g(2, 3);
    let want = real::<R>(R::from_f64(4.0) * pi * pi / R::from_f64(3.0));
    [first, rel_diff(t * t, want)]
}

fn gamma_identities() -> Outcome {
    let d = gamma_pair::<f64>();
    let e = gamma_pair::<Dd>();
    let parts = vec![
        Check::at_most("Gamma(1)Gamma(3/2) = sqrt(pi)/2", d[0].max(e[0]), TOL_GAMMA, ""),
        Check::at_most("Gamma(1/3)^2 Gamma(2/3)^2 = 4 pi^2/3", d[1].max(e[1]), TOL_GAMMA, ""),
    ];
    let info = vec![format!("extended precision residuals {:.1e}, {:.1e}", e[0], e[1])];
    Ok((parts, info))
}

// 3, 4 ------------------------------------------------------------------

pub struct RankOneInstance {
    pub conn: LogConnection<f64>,
    pub s: Vec<Complex64>,
    pub points: Vec<Complex64>,
    pub base: Complex64,
}

/// 20 regular rank-one connections: n = 2 for the first ten, 3 after.
pub fn rank_one_instances() -> Result<Vec<RankOneInstance>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_RANK_ONE);
    let mut out = Vec::with_capacity(20);
    for k in 0..20 {
        let n = if k < 10 { 2 } else { 3 };
        let points = loop {
            let p: Vec<Complex64> = (0..n).map(|_| c64(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
            let sep = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| (p[i] - p[j]).norm());
            if sep.fold(f64::INFINITY, f64::min) >= 0.5 {
                break p;
            }
        };
        let s: Vec<Complex64> = (0..n).map(|_| c64(rng.random_range(0.1..1.9), rng.random_range(-0.5..0.5))).collect();
        let base = loop {
            let b = c64(rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
            if points.iter().all(|p| (p - b).norm() >= 0.3) {
                break b;
            }
        };
        let pairs: Vec<(Complex64, Complex64)> = points.iter().copied().zip(s.iter().copied()).collect();
        let conn = LogConnection::rank_one(&pairs, vec![])?;
        out.push(RankOneInstance { conn, s, points, base });
    }
    Ok(out)
}

struct RankOneDets {
    omega: LogValue<f64>,
    eta: LogValue<f64>,
    product: LogValue<f64>,
    selberg: LogValue<f64>,
    delta: LogValue<f64>,
}

fn rank_one_dets(inst: &RankOneInstance, exec: Execution) -> Result<RankOneDets, Error> {
    let star = StarPaths::new(&inst.conn, inst.base)?;
    let st = settings(1e-12, Precision::Double);
    let opts = EngineOptions { route: None, execution: exec };
    let omega = period_matrix(&inst.conn, LineBasis::Omega, &star, &st, &opts)?.det;
    let eta = period_matrix(&inst.conn, LineBasis::Eta, &star, &st, &opts)?.det;
    let product = product_det(&inst.conn, &star)?.total;
    let selberg = selberg_rank1_det(&inst.s, &inst.points, &BranchData::from_star(&star)?)?;
    let delta = vandermonde(&inst.conn.locations(), 1)?;
    Ok(RankOneDets { omega, eta, product, selberg, delta })
}

fn product_vs_quadrature(exec: Execution) -> Outcome {
    let mut worst = [0.0f64; 2];
    for inst in rank_one_instances()? {
        let d = rank_one_dets(&inst, exec)?;
        worst[0] = worst[0].max(d.product.rel_diff(d.omega));
        worst[1] = worst[1].max(d.selberg.rel_diff(d.eta));
    }
    let parts = vec![
        Check::at_most("regular-period-det vs omega-basis quadrature (20 instances)", worst[0], TOL_ORACLE, ""),
        Check::at_most("selberg-rank1-det vs eta-basis quadrature (20 instances)", worst[1], TOL_ORACLE, ""),
    ];
    Ok((parts, Vec::new()))
}

fn vandermonde_law(exec: Execution) -> Outcome {
    let mut worst = 0.0f64;
    for inst in rank_one_instances()? {
        let d = rank_one_dets(&inst, exec)?;
        worst = worst.max(d.eta.mul(d.delta).rel_diff(d.omega));
    }
    let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0))?;
    let conn = regularized_connection(&cd, 10)?;
    let star = StarPaths::new(&conn, cx(0.0, 0.0))?;
    let st = settings(1e-11, Precision::Double);
    let opts = EngineOptions { route: None, execution: exec };
    let omega = period_matrix(&conn, LineBasis::Omega, &star, &st, &opts)?;
    let eta = period_matrix(&conn, LineBasis::Eta, &star, &st, &opts)?;
    let delta = vandermonde(&conn.locations(), 2)?;
    let rank_two = eta.det.mul(delta).rel_diff(omega.det);
    let product = product_det(&conn, &star)?.total;
    let parts = vec![
        Check::at_most("det(eta) * Delta = det(omega), 20 rank-one instances", worst, TOL_VANDERMONDE, ""),
        Check::at_most("det(eta) * Delta^2 = det(omega), lambda = 2, m = 10", rank_two, TOL_VANDERMONDE, ""),
    ];
    let info = vec![format!(
        "lambda = 2, m = 10: det(omega) = {:.10e}, product formula agrees to {:.1e}",
        omega.det.value(),
        omega.det.rel_diff(product)
    )];
    Ok((parts, info))
}

// 5 ---------------------------------------------------------------------

/// Entry (eta_1 ⊗ e_1, I_1 ⊗ e*_1) of the eta-basis matrix along one route.
fn first_entry(conn: &LogConnection<f64>, star: &StarPaths<f64>, route: Route, st: &QuadratureSettings) -> Result<Complex64, Error> {
    let forms = LineForms::for_connection(LineBasis::Eta, conn)?;
    let mut vals = [c64(0.0, 0.0); 2];
    for (k, v) in vals.iter_mut().enumerate() {
        let mut integrand = PeriodIntegrand { forms: &forms, frame: dual_frame(conn, route, st.tol * 1e-2)? };
        *v = integrate_vec(&mut integrand, star.to_point(k), st)?.values[0];
    }
    Ok(vals[1] - vals[0])
}

fn golden_formulas(exec: Execution) -> Outcome {
    let _ = exec;
    let cd = CriticalData::<Dd>::from_lambda(cx(2.0, 0.0))?;
    let zero = cx::<Dd>(0.0, 0.0);
    let mut parts = Vec::new();
    let mut info = Vec::new();
    for m in [10u32, 20] {
        let rec = approx_record(&cd, m, zero)?;
        let stated_d = golden::stated_d_m(&cd, m);
        parts.push(Check::at_most(&format!("D_({m}) vs stated closed form"), rec.d_m.rel_diff(stated_d), TOL_GOLDEN, ""));
        let stated_delta = golden::stated_delta_m(&cd, m);
        parts.push(Check::at_most(
            &format!("Delta_({m}) vs stated closed form"),
            rel_diff(rec.delta_m.value(), stated_delta),
            TOL_GOLDEN,
            "",
        ));
        info.push(format!(
            "m = {m}: D_(m) vs corrected form (exponent 10 on c1 - c2): {:.1e}; stated/engine D = {:.6}",
            rec.d_m.rel_diff(golden::corrected_d_m(&cd, m)),
            stated_d.div(rec.d_m).value()
        ));
        info.push(format!(
            "m = {m}: Delta_(m) = {:.10e}, stated/engine = {:.3}",
            to_c64(rec.delta_m.value()),
            stated_delta / rec.delta_m.value()
        ));
    }
    let cdf = CriticalData::<f64>::from_lambda(cx(2.0, 0.0))?;
    let conn = regularized_connection(&cdf, 10)?;
    let star = StarPaths::new(&conn, cx(0.0, 0.0))?;
    let st = settings(1e-11, Precision::Double);
    let by_fiber = first_entry(&conn, &star, Route::FiberOracle, &st)?;
    let by_ode = first_entry(&conn, &star, Route::Ode, &st)?;
    parts.push(Check::at_most(
        "one matrix entry (m = 10): fiber oracle vs ODE transport",
        rel_diff(by_fiber, by_ode),
        TOL_ORACLE,
        "",
    ));
    Ok((parts, info))
}

// 6 ---------------------------------------------------------------------

fn generic_convergence(exec: Execution) -> Outcome {
    let cd = CriticalData::<Dd>::from_lambda(cx(2.0, 0.0))?;
    let ms = default_m_list();
    let seq = approx_sequence(&cd, &ms, cx(0.0, 0.0), exec)?;
    let stated = golden::stated_p(&cd);
    let mut parts = vec![Check::at_most("limit vs stated P", seq.limit.rel_diff(stated), TOL_LIMIT, "")];
    let last = seq.records.last().expect("nonempty m-list");
    let dist = |r: &irrper_core::engine::ApproxRecord<Dd>, k: usize| (r.factors[k].cexp() - cx::<Dd>(1.0, 0.0)).cabs().to_f64();
    for k in 0..3 {
        parts.push(Check::at_most(&format!("factor {} at m = {}", k + 1, last.m), dist(last, k), TOL_FACTOR, ""));
    }
    let violations = seq.monotone_from.map(|m0| {
        let tail: Vec<_> = seq.records.iter().filter(|r| r.m >= m0).collect();
        (0..3)
            .map(|k| tail.windows(2).filter(|w| dist(w[1], k) > dist(w[0], k)).count())
            .sum::<usize>() as f64
    });
    parts.push(Check {
        name: "factors monotone beyond m0".into(),
        passed: violations == Some(0.0),
        measured: violations,
        tolerance: 0.0,
        note: seq.monotone_from.map_or("no m0".into(), |m| format!("m0 = {m}")),
    });
    let info = vec![
        format!("limit = {:.14e} (Richardson error {:.1e})", to_c64(seq.limit.value()), seq.limit_error),
        format!("limit vs corrected P = 4 pi^2 (c1 c2)^(3/2) (c1 - c2)^6: {:.1e}", seq.limit.rel_diff(golden::corrected_p(&cd))),
        format!("stated P = {:.10e}", to_c64(stated.value())),
    ];
    Ok((parts, info))
}

// 7 ---------------------------------------------------------------------

fn exceptional_convergence(exec: Execution) -> Outcome {
    let mut parts = Vec::new();
    let mut info = Vec::new();
    for (root, tag) in [(ExceptionalRoot::Plus, "+"), (ExceptionalRoot::Minus, "-")] {
        let cd = critical_data(&CurveParams::<Dd>::exceptional(root));
        let pipe = exceptional_pipeline(&cd, &default_m_list(), cx(0.0, 0.0), exec)?;
        let fin = final_period_exceptional(&cd, pipe.sequence.limit)?;
        let (dist, k) = fin.distance_over_branches();
        parts.push(Check::at_most(&format!("limit vs 4 pi^2/3 (root {tag})"), pipe.limit_distance, TOL_LIMIT, ""));
        parts.push(Check::at_most(
            &format!("final value vs 2 pi^2/(-3)^(1/4) up to branch (root {tag})"),
            dist,
            TOL_LIMIT,
            &format!("branch k = {k}"),
        ));
        let negated = LogValue::from_value(-pipe.stated_limit.value());
        info.push(format!(
            "root {tag}: limit = {:.12e}, vs -4 pi^2/3: {:.1e}",
            to_c64(pipe.sequence.limit.value()),
            pipe.sequence.limit.rel_diff(negated)
        ));
        let cdf: CriticalData<f64> = cd.convert();
        let conn = nabla_prime(&cdf)?.with_irregular(vec![cx(0.0, 0.0), cx(1.0, 0.0)]);
        let star = StarPaths::new(&conn, cx(0.0, 0.0))?;
        let quad = period_matrix(&conn, LineBasis::Eta, &star, &settings(1e-11, Precision::Double), &EngineOptions { route: None, execution: exec })?;
        info.push(format!(
            "root {tag}: quadrature det of the irregular connection = {:.10e}, vs limit {:.1e}",
            quad.det.value(),
            quad.det.rel_diff(LogValue::new(convert(pipe.sequence.limit.log)))
        ));
    }
    Ok((parts, info))
}

// 8 ---------------------------------------------------------------------

fn comparison_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_DET_Q);
    let mut worst = [0.0f64; 3];
    let mut count = 0;
    while count < 50 {
        let l = c64(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        if l.norm() > 10.0 || disc(l).norm() <= 1e-3 || l.norm() < 1e-3 || (l - 1.0).norm() < 1e-3 {
            continue;
        }
        let cd = CriticalData::<Dd>::from_lambda(convert(l))?;
        let det = sigma_matrix(&cd)?.det();
        worst[0] = worst[0].max(rel_diff(det, golden::stated_det_q(&cd)));
        worst[1] = worst[1].max(rel_diff(det, irrper_core::comparison::corrected_det_q(&cd)));
        worst[2] = worst[2].max(rel_diff(golden::stated_per_f(&cd), golden::stated_per_lambda(cd.lambda)));
        count += 1;
    }
    let parts = vec![
        Check::at_most("det Q vs closed form (50 instances)", worst[0], TOL_DET_Q, ""),
        Check::at_most("per(U) f-form vs lambda-only form (50 instances)", worst[2], TOL_PER_FORMS, ""),
    ];
    let cd = CriticalData::<Dd>::from_lambda(cx(2.0, 0.0))?;
    let info = vec![
        format!("det Q vs 16 x closed form: {:.1e}", worst[1]),
        format!(
            "lambda = 2: f-form / lambda-only form = {:.12}",
            golden::stated_per_f(&cd) / golden::stated_per_lambda(cd.lambda)
        ),
    ];
    Ok((parts, info))
}

// 9 ---------------------------------------------------------------------

fn direct_properties(exec: Execution) -> Outcome {
    let cd = CriticalData::<Dd>::from_lambda(cx(2.0, 0.0))?;
    let fine = settings(1e-10, Precision::Extended);
    let coarse = settings(1e-8, Precision::Extended);
    let moved = DirectOptions { detour_scale: 0.6, ray_angle: -0.3 };
    let a = direct_curve_period(&cd, &fine, &DirectOptions::default(), exec)?;
    let b = direct_curve_period(&cd, &coarse, &DirectOptions::default(), exec)?;
    let c = direct_curve_period(&cd, &fine, &moved, exec)?;
    let stokes = a.stokes_max.max(b.stokes_max).max(c.stokes_max);
    let parts = vec![
        Check::at_most("Stokes vanishing, 8 exact forms x 4 cycles", stokes, TOL_STOKES, ""),
        Check::at_most("homotopy invariance of the 4x4 determinant", a.matrix.det.rel_diff(c.matrix.det), TOL_HOMOTOPY, ""),
        Check::at_most(
            "determinant error budget (relative)",
            a.matrix.det_error.max(c.matrix.det_error),
            1.0 / PERFECT_MARGIN,
            "",
        ),
        Check::at_most("ratio to closed form, tol 1e-8 vs 1e-10", a.ratio.rel_diff(b.ratio), TOL_RATIO_STABILITY, ""),
    ];
    let stated_f = golden::stated_per_f(&cd);
    let info = vec![
        format!("det = {:.14e}", to_c64(a.matrix.det.value())),
        format!("det / lambda-only form = {:.13}", a.ratio.value()),
        format!("det / f-form = {:.13}", a.matrix.det.value() / stated_f),
    ];
    Ok((parts, info))
}

// 10 --------------------------------------------------------------------

/// Distance between the characteristic polynomials of M and of the
/// diagonal matrix `want`. Resonant exponents make M a Jordan block, whose
/// computed eigenvalues are only good to √ε; trace and determinant stay
/// well conditioned.
fn charpoly_error(m: &CMat<f64>, want: &[Complex64]) -> f64 {
    let err = |a: Complex64, b: Complex64| (a - b).norm() / b.norm().max(1.0);
    match (m.rows(), want) {
        (1, [w]) => err(m[(0, 0)], *w),
        (2, [w0, w1]) => err(m[(0, 0)] + m[(1, 1)], w0 + w1).max(err(m.det(), w0 * w1)),
        _ => f64::INFINITY,
    }
}

fn routes(conn: &LogConnection<f64>) -> Vec<Route> {
    if conn.rank() == 1 {
        vec![Route::ClosedForm, Route::Ode]
    } else if conn.fiber_frame().is_some() {
        vec![Route::FiberOracle, Route::Ode]
    } else {
        vec![Route::Ode]
    }
}

fn frame_at_start(conn: &LogConnection<f64>, route: Route, path: &PathSpec<f64>) -> Result<CMat<f64>, Error> {
    let mut frame = dual_frame(conn, route, 1e-12)?;
    frame.begin(path)?;
    let seg = path.segments()[0];
    let node = NodePoint {
        segment: 0,
        t: 0.0,
        z: seg.start(),
        dz: cx(0.0, 0.0),
        from_start: cx(0.0, 0.0),
        to_end: seg.end().map(|e| seg.start() - e),
    };
    frame.at(&node, &seg)
}

fn transport_validation() -> Outcome {
    let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0))?;
    let ce = critical_data(&CurveParams::<f64>::exceptional(ExceptionalRoot::Plus));
    let prime = nabla_prime(&cd)?;
    let mut conns: Vec<(String, LogConnection<f64>)> = vec![
        ("nabla'".into(), prime.clone()),
        ("nabla' twisted by D".into(), twist_by_d(&prime, &cd)?),
        ("nabla_(10)".into(), regularized_connection(&cd, 10)?),
        ("nabla_1".into(), nabla_one(&cd)?),
        ("d + dy twisted by D".into(), IrregularRank1Spec::new(vec![cx(0.0, 0.0), cx(1.0, 0.0)], vec![cx(1.0, 0.0); 4], cd.divisor())?.connection()?),
        ("nabla' (exceptional)".into(), nabla_prime(&ce)?),
        ("nabla_(10) (exceptional)".into(), regularized_connection(&ce, 10)?),
    ];
    for (k, inst) in rank_one_instances()?.into_iter().enumerate() {
        conns.push((format!("rank-one instance {}", k + 1), inst.conn));
    }
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut loops = 0;
    for (name, conn) in &conns {
        let pts = conn.locations();
        for (i, &p) in pts.iter().enumerate() {
            let gap = pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, q)| (q - p).norm()).fold(f64::INFINITY, f64::min);
            let radius = if gap.is_finite() { 0.4 * gap } else { 1.0 };
            let want: Vec<Complex64> = conn
                .eigenvalues(PointRef::Finite(i))
                .into_iter()
                .map(|e| (e * Complex64::new(0.0, std::f64::consts::TAU)).exp())
                .collect();
            for route in routes(conn) {
                let m = loop_monodromy(conn, p, radius, route, 1e-12)?;
                let e = charpoly_error(&m, &want);
                loops += 1;
                if e > worst || !e.is_finite() {
                    worst = if e.is_finite() { e } else { f64::INFINITY };
                    worst_at = format!("{name}, point {}, {route:?}", i + 1);
                }
            }
        }
    }

    let points = cd.divisor();
    let radius = detour_radius(&points);
    let clearance = 1.5 * radius;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_PATHS);
    let mut transport = 0.0f64;
    let mut done = 0;
    while done < 10 {
        let a = c64(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
        let b = c64(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
        if (a - b).norm() < 0.3 || points.iter().any(|p| (p - a).norm() < clearance || (p - b).norm() < clearance) {
            continue;
        }
        let path = PathSpec::detoured(a, b, &points, radius)?;
        let start = frame_at_start(&prime, Route::FiberOracle, &path)?;
        let mut fiber = dual_frame(&prime, Route::FiberOracle, 1e-12)?;
        let end = frame_at_end(fiber.as_mut(), &path)?;
        let (ode, _) = continue_solution(&prime, &path, start, 1e-12)?;
        transport = transport.max(ode.sub(&end).max_abs() / end.max_abs());
        done += 1;
    }

    let parts = vec![
        Check::at_most(&format!("loop monodromy charpoly vs exp(2 pi i residue), {loops} loops"), worst, TOL_MONODROMY, ""),
        Check::at_most("ODE transport vs fiber oracle for nabla', 10 paths", transport, TOL_TRANSPORT, ""),
    ];
    let info = vec![format!("{} connections; largest monodromy error at {worst_at}", conns.len())];
    Ok((parts, info))
}
