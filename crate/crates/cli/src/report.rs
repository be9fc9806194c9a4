//! Machine-readable report: JSON (schema-versioned) or CSV.

use std::io::Write;

use irrper_core::comparison::{FinalSummary, SigmaSummary};
use irrper_core::connection::{LogConnection, PointRef};
use irrper_core::curve::{BranchRecord, CriticalData, CurveCase, ExceptionalRoot};
use irrper_core::direct::DirectSummary;
use irrper_core::engine::{ApproxSequenceSummary, ExceptionalSummary, PeriodMatrixSummary};
use irrper_core::numeric::{Cplx, Cx, Real};
use serde::{Deserialize, Serialize};

use crate::acceptance::CriterionReport;
use crate::config::ConfigEcho;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Reference tag for values that are bookkeeping rather than mathematics.
pub const PLUMBING: &str = "plumbing";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ConfigEcho,
    pub branch: Option<BranchEcho>,
    pub connection: Option<ConnectionRecord>,
    pub results: Vec<Entry>,
    pub checks: Vec<Check>,
    pub details: Details,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Approx reports become one row per m plus the limit; everything else
    /// one row per result entry.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        match &self.details {
            Details::Approx { sequence, .. } => write_sequence_csv(&mut out, sequence)?,
            _ => {
                out.write_record(["name", "reference", "re", "im", "error"])?;
                for e in &self.results {
                    out.write_record([
                        e.name.clone(),
                        e.reference.clone(),
                        fmt(e.value.re),
                        fmt(e.value.im),
                        fmt(e.error),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn write_sequence_csv<W: Write>(out: &mut csv::Writer<W>, seq: &ApproxSequenceSummary) -> csv::Result<()> {
    out.write_record([
        "m",
        "p_re",
        "p_im",
        "log_d_re",
        "log_d_im",
        "delta_re",
        "delta_im",
        "factor1_re",
        "factor1_im",
        "factor2_re",
        "factor2_im",
        "factor3_re",
        "factor3_im",
        "remainder_re",
        "remainder_im",
        "distance_to_limit",
    ])?;
    for (r, d) in seq.records.iter().zip(&seq.distances) {
        let mut row = vec![
            r.m.to_string(),
            fmt(r.p_m.re),
            fmt(r.p_m.im),
            fmt(r.log_d_m.re),
            fmt(r.log_d_m.im),
            fmt(r.delta_m.re),
            fmt(r.delta_m.im),
        ];
        for f in &r.factors {
            row.push(fmt(f.re));
            row.push(fmt(f.im));
        }
        row.extend([fmt(r.remainder.re), fmt(r.remainder.im), fmt(*d)]);
        out.write_record(&row)?;
    }
    let mut last = vec!["limit".to_string(), fmt(seq.limit.re), fmt(seq.limit.im)];
    last.resize(15, String::new());
    last.push(fmt(seq.limit_rel_error));
    out.write_record(&last)
}

/// Every sign and branch choice behind the numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchEcho {
    pub case: CurveCase,
    pub record: BranchRecord,
    pub exceptional_root: Option<ExceptionalRoot>,
    pub x1: Cplx,
    pub x2: Cplx,
    pub x3: Cplx,
    pub x4: Cplx,
    pub c1: Cplx,
    pub c2: Cplx,
    pub s1: Cplx,
    pub s2: Cplx,
    /// Common start of the star paths.
    pub base_point: Cplx,
    pub logarithms: String,
}

impl BranchEcho {
    pub fn new<R: Real>(cd: &CriticalData<R>, root: Option<ExceptionalRoot>, base: Cx<R>) -> Self {
        Self {
            case: cd.case,
            record: cd.branch.clone(),
            exceptional_root: root,
            x1: cd.x1.into(),
            x2: cd.x2.into(),
            x3: cd.x3.into(),
            x4: cd.x4.into(),
            c1: cd.c1.into(),
            c2: cd.c2.into(),
            s1: cd.s1.into(),
            s2: cd.s2.into(),
            base_point: base.into(),
            logarithms: "principal at the base point, continued along each star path".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub location: Cplx,
    pub residue: Vec<Vec<Cplx>>,
    pub eigenvalues: Vec<Cplx>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionRecord {
    pub name: String,
    pub rank: usize,
    pub points: Vec<PointRecord>,
    /// Coefficients of the irregular part F, constant term first.
    pub irregular: Vec<Cplx>,
    pub residue_at_infinity: Vec<Vec<Cplx>>,
}

impl ConnectionRecord {
    pub fn new<R: Real>(name: &str, conn: &LogConnection<R>) -> Self {
        let rows = |m: &irrper_core::numeric::CMat<R>| -> Vec<Vec<Cplx>> {
            (0..m.rows()).map(|i| m.row(i).iter().map(|&z| z.into()).collect()).collect()
        };
        let points = conn
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| PointRecord {
                location: p.point.into(),
                residue: rows(&p.residue),
                eigenvalues: conn.eigenvalues(PointRef::Finite(i)).into_iter().map(Cplx::from).collect(),
            })
            .collect();
        Self {
            name: name.into(),
            rank: conn.rank(),
            points,
            irregular: conn.irregular().iter().map(|&z| z.into()).collect(),
            residue_at_infinity: rows(&conn.residue_at_infinity()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    /// What the number is: derived by the engine, a stated or corrected
    /// closed form, or plumbing.
    pub reference: String,
    pub value: Cplx,
    /// Absolute error estimate (0 for exact closed forms at working precision).
    pub error: f64,
}

impl Entry {
    pub fn new<R: Real>(name: &str, reference: &str, value: Cx<R>, error: f64) -> Self {
        let v: Cplx = value.into();
        let clean = |x: f64| if x.is_finite() { x } else { f64::MAX };
        Self {
            name: name.into(),
            reference: reference.into(),
            value: Cplx { re: clean(v.re), im: clean(v.im) },
            error: clean(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Absent when the quantity could not be computed.
    pub measured: Option<f64>,
    pub tolerance: f64,
    pub note: String,
}

impl Check {
    /// Passes when `measured ≤ tolerance`.
    pub fn at_most(name: &str, measured: f64, tolerance: f64, note: &str) -> Self {
        let m = measured.is_finite().then_some(measured);
        Self { name: name.into(), passed: m.is_some_and(|x| x <= tolerance), measured: m, tolerance, note: note.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushforwardRecord {
    pub rank_one: Cplx,
    pub rank_two: Cplx,
    pub value: Cplx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Details {
    Verify {
        criteria: Vec<CriterionReport>,
    },
    Period {
        sequence: ApproxSequenceSummary,
        nabla_one: PeriodMatrixSummary,
        pushforward: PushforwardRecord,
        sigma: SigmaSummary,
        #[serde(rename = "final")]
        final_: FinalSummary,
    },
    Approx {
        sequence: ApproxSequenceSummary,
    },
    Direct {
        direct: DirectSummary,
        /// Sheet permutation of each loop around D.
        permutations: Vec<[usize; 3]>,
        ratio_to_stated_f: Cplx,
    },
    Exceptional {
        pipeline: ExceptionalSummary,
        quadrature: PeriodMatrixSummary,
        sigma_det: Cplx,
        final_value: Cplx,
        stated_final: Cplx,
        /// value ≈ stated · i^(−k).
        branch_k: u32,
        branch_distance: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}
