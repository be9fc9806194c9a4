//! Mode runners: build the report for one configuration.

use std::time::Instant;

use irrper_core::comparison::{final_period, final_period_exceptional, sigma_matrix};
use irrper_core::connection::nabla_prime;
use irrper_core::curve::{critical_data, CriticalData, CurveParams};
use irrper_core::direct::{direct_curve_period, DirectOptions};
use irrper_core::engine::{
    approx_sequence, exceptional_pipeline, nabla_one, nabla_one_period, period_matrix, pushforward_period, EngineOptions,
    LineBasis,
};
use irrper_core::golden;
use irrper_core::numeric::complex::{from_c64, rel_diff};
use irrper_core::numeric::{cx, Cplx, Cx, CxExt, Dd, Precision, Real};
use irrper_core::product::{LogValue, StarPaths};
use irrper_core::quadrature::QuadratureSettings;
use irrper_core::Error;

use crate::acceptance;
use crate::config::{Mode, RunConfig};
use crate::report::{
    BranchEcho, Check, ConnectionRecord, Details, Entry, PushforwardRecord, Report, Timing, PLUMBING, SCHEMA_VERSION,
    TOOL_VERSION,
};

const DERIVED_PRODUCT: &str = "derived: product formula";
const DERIVED_QUADRATURE: &str = "derived: quadrature";
const DERIVED_LIMIT: &str = "derived: Richardson limit of the product-formula sequence";
const STATED: &str = "stated closed form";
const CORRECTED: &str = "corrected closed form";

/// Agreement required between the extrapolated limit and an independent
/// quadrature of the same determinant.
pub const TOL_LIMIT_VS_QUADRATURE: f64 = 1e-6;
pub const TOL_EXTRAPOLATION: f64 = 1e-4;
pub const TOL_ALGEBRA: f64 = 1e-10;

struct Stages {
    list: Vec<Timing>,
    last: Instant,
}

impl Stages {
    fn new() -> Self {
        Self { list: Vec::new(), last: Instant::now() }
    }

    fn mark(&mut self, stage: &str) {
        let now = Instant::now();
        self.list.push(Timing { stage: stage.into(), seconds: (now - self.last).as_secs_f64() });
        self.last = now;
    }
}

struct Body {
    branch: Option<BranchEcho>,
    connection: Option<ConnectionRecord>,
    results: Vec<Entry>,
    checks: Vec<Check>,
    details: Details,
    notes: Vec<String>,
}

/// Run the configured mode. Core errors are passed through for the exit
/// code mapping; acceptance failures are ordinary failed checks.
pub fn run(cfg: &RunConfig, progress: &mut dyn FnMut(&str)) -> Result<Report, Error> {
    let mut stages = Stages::new();
    let body = match cfg.precision {
        Precision::Double => dispatch::<f64>(cfg, &mut stages, progress)?,
        Precision::Extended => dispatch::<Dd>(cfg, &mut stages, progress)?,
    };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        config: cfg.echo(),
        branch: body.branch,
        connection: body.connection,
        results: body.results,
        checks: body.checks,
        details: body.details,
        notes: body.notes,
        timings: cfg.timings.then_some(stages.list),
    })
}

fn dispatch<R: Real>(cfg: &RunConfig, stages: &mut Stages, progress: &mut dyn FnMut(&str)) -> Result<Body, Error> {
    if cfg.mode == Mode::Verify {
        return Ok(verify(cfg, stages, progress));
    }
    let params = match cfg.exceptional_root {
        Some(root) => CurveParams::<R>::exceptional(root),
        None => CurveParams::<R>::new(from_c64(cfg.lambda))?,
    };
    let cd = critical_data(&params);
    let mut body = match cfg.mode {
        Mode::Period => period(cfg, &cd, stages)?,
        Mode::Approx => approx(cfg, &cd, stages)?,
        Mode::Direct => direct(cfg, &cd, stages)?,
        Mode::Exceptional => exceptional(cfg, &cd, stages)?,
        Mode::Verify => unreachable!("handled above"),
    };
    body.notes.insert(0, "regularization: (m+1) dy/(y+m) in both the generic and the exceptional case".into());
    body.notes.extend(params.warnings);
    Ok(body)
}

fn settings(cfg: &RunConfig) -> Result<QuadratureSettings, Error> {
    QuadratureSettings::new(cfg.tol, cfg.precision)
}

fn closed_form_error<R: Real>(v: LogValue<R>) -> f64 {
    let eps = match R::PRECISION {
        Precision::Double => 1e-15,
        Precision::Extended => 1e-30,
    };
    eps * v.log.cabs().to_f64().max(1.0) * v.value().cabs().to_f64()
}

fn log_entry<R: Real>(name: &str, reference: &str, v: LogValue<R>, rel_error: f64) -> Entry {
    let err = if rel_error > 0.0 { rel_error * v.value().cabs().to_f64() } else { closed_form_error(v) };
    Entry::new(name, reference, v.value(), err)
}

fn exact<R: Real>(name: &str, reference: &str, v: Cx<R>) -> Entry {
    log_entry(name, reference, LogValue::from_value(v), 0.0)
}

fn origin<R: Real>() -> Cx<R> {
    cx(0.0, 0.0)
}

fn period<R: Real>(cfg: &RunConfig, cd: &CriticalData<R>, stages: &mut Stages) -> Result<Body, Error> {
    let base = origin::<R>();
    let seq = approx_sequence(cd, &cfg.m_list, base, cfg.execution)?;
    stages.mark("approx_sequence");
    let opts = EngineOptions { route: None, execution: cfg.execution };
    let quad = nabla_one_period(cd, base, &settings(cfg)?, &opts)?;
    stages.mark("nabla_one_quadrature");
    let push = pushforward_period(cd, seq.limit)?;
    let fin = final_period(cd, push.value)?;
    let sigma = sigma_matrix(cd)?;
    stages.mark("assembly");

    let sigma_det = sigma.det();
    let results = vec![
        log_entry("P (limit)", DERIVED_LIMIT, seq.limit, seq.limit_error),
        log_entry("P (nabla_1 quadrature)", DERIVED_QUADRATURE, quad.det, quad.det_error),
        log_entry("P", CORRECTED, golden::corrected_p(cd), 0.0),
        log_entry("P", STATED, golden::stated_p(cd), 0.0),
        log_entry("rank-one determinant", "derived: irregular rank-one formula", push.rank_one, 0.0),
        exact("rank-one determinant", STATED, golden::stated_rank_one(cd)),
        log_entry("pushforward period", DERIVED_LIMIT, push.value, seq.limit_error),
        log_entry("pushforward period", STATED, golden::stated_pushforward(cd), 0.0),
        exact("det Q", "derived: Sigma-period matrix", sigma_det),
        exact("det Q", STATED, golden::stated_det_q(cd)),
        exact("det Q", CORRECTED, irrper_core::comparison::corrected_det_q(cd)),
        log_entry("per(U)", DERIVED_LIMIT, fin.value, seq.limit_error),
        exact("per(U) f-form", STATED, fin.stated_f),
        exact("per(U) lambda-only form", STATED, fin.stated_lambda),
        exact("per(U) / f-form", PLUMBING, fin.ratio_to_stated_f()),
        exact("per(U) / lambda-only form", PLUMBING, fin.ratio_to_stated_lambda()),
    ];
    let checks = vec![
        Check::at_most(
            "nabla_1 quadrature vs limit",
            quad.det.rel_diff(seq.limit),
            TOL_LIMIT_VS_QUADRATURE,
            "independent routes to the same determinant",
        ),
        Check::at_most("nabla_1 period matrix perfect", quad.det_error, 1.0 / acceptance::PERFECT_MARGIN, "relative error budget of det"),
        Check::at_most(
            "rank-one determinant vs closed form",
            push.rank_one.rel_diff(LogValue::from_value(golden::stated_rank_one(cd))),
            TOL_ALGEBRA,
            "",
        ),
        Check::at_most("det Q by block elimination", rel_diff(sigma_det, sigma.det_block(cd)), TOL_ALGEBRA, ""),
        Check::at_most("extrapolation error", seq.limit_error, TOL_EXTRAPOLATION, ""),
    ];
    let conn = nabla_one(cd)?;
    Ok(Body {
        branch: Some(BranchEcho::new(cd, None, base)),
        connection: Some(ConnectionRecord::new("nabla_1", &conn)),
        results,
        checks,
        details: Details::Period {
            sequence: seq.summary(),
            nabla_one: quad.summary(),
            pushforward: PushforwardRecord {
                rank_one: push.rank_one.value().into(),
                rank_two: push.rank_two.value().into(),
                value: push.value.value().into(),
            },
            sigma: sigma.summary(cd),
            final_: fin.summary(),
        },
        notes: vec!["P is the regularized limit; the pushforward and per(U) use it".into()],
    })
}

fn approx<R: Real>(cfg: &RunConfig, cd: &CriticalData<R>, stages: &mut Stages) -> Result<Body, Error> {
    let base = origin::<R>();
    let seq = approx_sequence(cd, &cfg.m_list, base, cfg.execution)?;
    stages.mark("approx_sequence");
    let mut results: Vec<Entry> =
        seq.records.iter().map(|r| log_entry(&format!("P_({})", r.m), DERIVED_PRODUCT, r.p_m, 0.0)).collect();
    results.push(log_entry("P (limit)", DERIVED_LIMIT, seq.limit, seq.limit_error));
    if cd.is_generic() {
        results.push(log_entry("P", CORRECTED, golden::corrected_p(cd), 0.0));
        results.push(log_entry("P", STATED, golden::stated_p(cd), 0.0));
    } else {
        results.push(log_entry("P", STATED, golden::exceptional_limit::<R>(), 0.0));
    }
    let checks = vec![Check::at_most("extrapolation error", seq.limit_error, TOL_EXTRAPOLATION, "")];
    let conn = irrper_core::engine::regularized_connection(cd, cfg.m_list[0])?;
    Ok(Body {
        branch: Some(BranchEcho::new(cd, cfg.exceptional_root, base)),
        connection: Some(ConnectionRecord::new(&format!("nabla_({})", cfg.m_list[0]), &conn)),
        results,
        checks,
        details: Details::Approx { sequence: seq.summary() },
        notes: Vec::new(),
    })
}

fn direct<R: Real>(cfg: &RunConfig, cd: &CriticalData<R>, stages: &mut Stages) -> Result<Body, Error> {
    let d = direct_curve_period(cd, &settings(cfg)?, &DirectOptions::default(), cfg.execution)?;
    stages.mark("direct_curve");
    let det = d.matrix.det;
    let stated_f = golden::stated_per_f(cd);
    let ratio_f = det.div(LogValue::from_value(stated_f));
    let results = vec![
        log_entry("det (4x4 curve periods)", DERIVED_QUADRATURE, det, d.matrix.det_error),
        exact("per(U) lambda-only form", STATED, d.stated_lambda),
        exact("per(U) f-form", STATED, stated_f),
        log_entry("det / lambda-only form", PLUMBING, d.ratio, d.matrix.det_error),
        log_entry("det / f-form", PLUMBING, ratio_f, d.matrix.det_error),
    ];
    let checks = vec![
        Check::at_most("Stokes vanishing", d.stokes_max, acceptance::TOL_STOKES, "8 exact forms x 4 cycles"),
        Check::at_most("determinant perfect", d.matrix.det_error, 1.0 / acceptance::PERFECT_MARGIN, "relative error budget of det"),
    ];
    Ok(Body {
        branch: Some(BranchEcho::new(cd, None, d.cycles.base)),
        connection: None,
        results,
        checks,
        details: Details::Direct {
            direct: d.summary(),
            permutations: d.cycles.permutations.clone(),
            ratio_to_stated_f: ratio_f.value().into(),
        },
        notes: vec!["the determinant is defined up to a nonzero rational factor; compare ratios, not values".into()],
    })
}

fn exceptional<R: Real>(cfg: &RunConfig, cd: &CriticalData<R>, stages: &mut Stages) -> Result<Body, Error> {
    let base = origin::<R>();
    let pipe = exceptional_pipeline(cd, &cfg.m_list, base, cfg.execution)?;
    stages.mark("approx_sequence");
    let conn = nabla_prime(cd)?.with_irregular(vec![cx(0.0, 0.0), cx(1.0, 0.0)]);
    let star = StarPaths::new(&conn, base)?;
    let opts = EngineOptions { route: None, execution: cfg.execution };
    let quad = period_matrix(&conn, LineBasis::Eta, &star, &settings(cfg)?, &opts)?;
    stages.mark("quadrature");
    let fin = final_period_exceptional(cd, pipe.sequence.limit)?;
    let (branch_distance, k) = fin.distance_over_branches();
    let seq = &pipe.sequence;
    let results = vec![
        log_entry("limit", DERIVED_LIMIT, seq.limit, seq.limit_error),
        log_entry("limit (quadrature)", DERIVED_QUADRATURE, quad.det, quad.det_error),
        log_entry("limit", STATED, pipe.stated_limit, 0.0),
        log_entry("tame symbol at -m", DERIVED_PRODUCT, pipe.tame_minus_m.0, 0.0),
        exact("tame symbol at -m (m^2 - c1)", STATED, pipe.tame_minus_m.1),
        exact("det Q", "derived: Sigma-period matrix", fin.sigma_det),
        log_entry("final value", DERIVED_LIMIT, fin.value, seq.limit_error),
        log_entry("final value", STATED, fin.stated, 0.0),
    ];
    let checks = vec![
        Check::at_most(
            "quadrature vs limit",
            quad.det.rel_diff(seq.limit),
            TOL_LIMIT_VS_QUADRATURE,
            "independent routes to the same determinant",
        ),
        Check::at_most("extrapolation error", seq.limit_error, TOL_EXTRAPOLATION, ""),
    ];
    Ok(Body {
        branch: Some(BranchEcho::new(cd, cfg.exceptional_root, base)),
        connection: Some(ConnectionRecord::new("nabla'", &conn)),
        results,
        checks,
        details: Details::Exceptional {
            pipeline: pipe.summary(),
            quadrature: quad.summary(),
            sigma_det: fin.sigma_det.into(),
            final_value: fin.value.value().into(),
            stated_final: Cplx::from(fin.stated.value()),
            branch_k: k,
            branch_distance,
        },
        notes: vec![format!("final value = stated value times i^(-{k})")],
    })
}

fn verify(cfg: &RunConfig, stages: &mut Stages, progress: &mut dyn FnMut(&str)) -> Body {
    let criteria = acceptance::run_all(cfg.execution, cfg.timings, |c| progress(&c.render()));
    stages.mark("acceptance");
    let checks = criteria
        .iter()
        .map(|c| Check {
            name: format!("criterion {}: {}", c.id, c.title),
            passed: c.passed,
            measured: None,
            tolerance: 0.0,
            note: c.parts.iter().filter(|p| !p.passed).map(|p| p.name.clone()).collect::<Vec<_>>().join("; "),
        })
        .collect();
    Body {
        branch: None,
        connection: None,
        results: Vec::new(),
        checks,
        details: Details::Verify { criteria },
        notes: vec!["criteria run at pinned precisions and tolerances; --precision and --tol do not apply".into()],
    }
}
