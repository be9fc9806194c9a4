//! Period matrices by quadrature, the regularized approximation sequence
//! and its extrapolation in 1/m.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::connection::{nabla_prime, pushforward_legendre, regularize, twist_by_d, LogConnection, RegularizationIndex};
use crate::curve::CriticalData;
use crate::error::{Error, Result};
use crate::golden;
use crate::numeric::complex::real;
use crate::numeric::extrapolate::{monotone_from, richardson};
use crate::numeric::{CMat, Cplx, Cx, CxExt, Execution, Real};
use crate::path::Segment;
use crate::product::{
    irregular_rank1_det, regular_period_det, vandermonde, BranchData, IrregularRank1Spec, LogValue, ProductDet,
    StarPaths,
};
use crate::quadrature::{integrate_vec, NodePoint, QuadResult, QuadratureSettings};
use crate::transport::{default_route, dual_frame, FormSet, PeriodIntegrand, Route};

/// Forms on the line with poles at the singular points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LineBasis {
    /// (1/(y − λ_i) − 1/(y − λ_{i+1})) dy, i = 1..n−1.
    Omega,
    /// y^{i−1} dy / ∏(y − λ_k), i = 1..n−1+d.
    Eta,
}

/// A line basis tensored with the frame vectors e_1..e_r.
#[derive(Debug, Clone)]
pub struct LineForms<R: Real> {
    basis: LineBasis,
    points: Vec<Cx<R>>,
    rank: usize,
    per_component: usize,
}

impl<R: Real> LineForms<R> {
    pub fn new(basis: LineBasis, points: Vec<Cx<R>>, rank: usize, irregular_degree: usize) -> Result<Self> {
        let n = points.len();
        if n == 0 && irregular_degree == 0 {
            return Err(Error::InvalidParameter("no forms without singular points".into()));
        }
        if basis == LineBasis::Omega && irregular_degree > 0 {
            return Err(Error::Unsupported("the ω-basis is for regular connections".into()));
        }
        let per_component = (n + irregular_degree).saturating_sub(1);
        Ok(Self { basis, points, rank, per_component })
    }

    pub fn for_connection(basis: LineBasis, conn: &LogConnection<R>) -> Result<Self> {
        Self::new(basis, conn.locations(), conn.rank(), conn.irregular_degree())
    }

    pub fn labels(&self) -> Vec<String> {
        let name = match self.basis {
            LineBasis::Omega => "omega",
            LineBasis::Eta => "eta",
        };
        let mut out = Vec::new();
        for i in 0..self.per_component {
            for a in 0..self.rank {
                out.push(format!("{name}_{}(e_{})", i + 1, a + 1));
            }
        }
        out
    }

    /// Scalar coefficient of the i-th form at a node.
    fn scalar(&self, node: &NodePoint<R>, seg: &Segment<R>) -> Vec<Cx<R>> {
        let inv: Vec<Cx<R>> = self.points.iter().map(|&p| node.offset(p, seg).cinv()).collect();
        match self.basis {
            LineBasis::Omega => (0..self.per_component).map(|i| inv[i] - inv[i + 1]).collect(),
            LineBasis::Eta => {
                let prod = inv.iter().fold(Cx::<R>::one(), |a, &b| a * b);
                let mut out = Vec::with_capacity(self.per_component);
                let mut pow = prod;
                for _ in 0..self.per_component {
                    out.push(pow);
                    pow = pow * node.z;
                }
                out
            }
        }
    }
}

impl<R: Real> FormSet<R> for LineForms<R> {
    fn count(&self) -> usize {
        self.per_component * self.rank
    }
    fn rank(&self) -> usize {
        self.rank
    }
    fn eval(&self, node: &NodePoint<R>, seg: &Segment<R>) -> CMat<R> {
        let w = self.scalar(node, seg);
        let r = self.rank;
        let mut g = CMat::zeros(self.count(), r);
        for (i, &wi) in w.iter().enumerate() {
            for a in 0..r {
                g[(i * r + a, a)] = wi;
            }
        }
        g
    }
}

/// log det with columns scaled to unit max norm, and the relative error
/// bound propagated from entrywise absolute errors.
pub fn scaled_log_det<R: Real>(m: &CMat<R>, errors: &[f64]) -> (LogValue<R>, f64) {
    let (rows, cols) = (m.rows(), m.cols());
    let mut scales = vec![R::one(); cols];
    for (j, s) in scales.iter_mut().enumerate() {
        let mx = (0..rows).map(|i| m[(i, j)].cabs()).fold(R::zero(), R::max);
        if mx > R::zero() {
            *s = mx;
        }
    }
    let scaled = CMat::from_fn(rows, cols, |i, j| m[(i, j)] * real(R::one() / scales[j]));
    let errs: Vec<f64> = (0..rows * cols).map(|k| errors[k] / scales[k % cols].to_f64()).collect();
    let det = scaled.det();
    let log_scale = scales.iter().fold(R::zero(), |a, &s| a + s.ln());
    let rel = if det == Cx::zero() { f64::INFINITY } else { scaled.det_error_bound(&errs) / det.cabs().to_f64() };
    (LogValue::new(det.cln() + real(log_scale)), rel)
}

#[derive(Debug, Clone)]
pub struct PeriodMatrix<R: Real> {
    pub entries: CMat<R>,
    /// Absolute error estimate per entry, row-major.
    pub errors: Vec<f64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub det: LogValue<R>,
    /// Relative error bound of `det`.
    pub det_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct PeriodMatrixSummary {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub entries: Vec<Vec<Cplx>>,
    pub errors: Vec<Vec<f64>>,
    pub det: Cplx,
    pub log_det: Cplx,
    pub det_rel_error: f64,
}

impl<R: Real> PeriodMatrix<R> {
    pub fn new(entries: CMat<R>, errors: Vec<f64>, row_labels: Vec<String>, col_labels: Vec<String>, evaluations: usize) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidParameter(format!("period matrix is {}×{}", entries.rows(), entries.cols())));
        }
        let (det, det_error) = scaled_log_det(&entries, &errors);
        Ok(Self { entries, errors, row_labels, col_labels, det, det_error, evaluations })
    }

    /// Perfectness: |det| exceeds `margin` times its error budget.
    pub fn is_perfect(&self, margin: f64) -> bool {
        self.det.log.re.to_f64().is_finite() && self.det_error * margin < 1.0
    }

    pub fn swap_columns(&self, a: usize, b: usize) -> Result<Self> {
        let n = self.entries.cols();
        let perm = |j: usize| if j == a { b } else if j == b { a } else { j };
        let entries = CMat::from_fn(n, n, |i, j| self.entries[(i, perm(j))]);
        let errors = (0..n * n).map(|k| self.errors[(k / n) * n + perm(k % n)]).collect();
        let mut cols = self.col_labels.clone();
        cols.swap(a, b);
        Self::new(entries, errors, self.row_labels.clone(), cols, self.evaluations)
    }

    pub fn summary(&self) -> PeriodMatrixSummary {
        let n = self.entries.cols();
        PeriodMatrixSummary {
            rows: self.row_labels.clone(),
            cols: self.col_labels.clone(),
            entries: (0..self.entries.rows()).map(|i| (0..n).map(|j| self.entries[(i, j)].into()).collect()).collect(),
            errors: (0..self.entries.rows()).map(|i| self.errors[i * n..(i + 1) * n].to_vec()).collect(),
            det: self.det.value().into(),
            log_det: self.det.log.into(),
            det_rel_error: self.det_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EngineOptions {
    pub route: Option<Route>,
    pub execution: Execution,
}

/// Per-path integrals ∫_γ g·Φ for every star path (γ_∞ last when the
/// connection is irregular).
pub fn path_integrals<R: Real>(
    conn: &LogConnection<R>,
    forms: &LineForms<R>,
    star: &StarPaths<R>,
    settings: &QuadratureSettings,
    opts: &EngineOptions,
) -> Result<Vec<QuadResult<R>>> {
    let n = star.points().len();
    let d = conn.irregular_degree();
    if d > 1 {
        return Err(Error::Unsupported("quadrature cycles for deg F > 1".into()));
    }
    let route = opts.route.unwrap_or_else(|| default_route(conn));
    let count = n + d;
    let results = opts.execution.map_range(count, |k| -> Result<QuadResult<R>> {
        let path = if k < n { star.to_point(k) } else { star.to_infinity() };
        let frame = dual_frame(conn, route, settings.tol * 1e-2)?;
        let mut integrand = PeriodIntegrand { forms, frame };
        integrate_vec(&mut integrand, path, settings).map_err(|e| match e {
            Error::NonConvergence { label, error, target } => {
                Error::NonConvergence { label: format!("path {}: {label}", path_label(k, n)), error, target }
            }
            other => other,
        })
    });
    results.into_iter().collect()
}

fn path_label(k: usize, n: usize) -> String {
    if k < n {
        format!("gamma_{}", k + 1)
    } else {
        "gamma_inf".into()
    }
}

/// Cycles I_j = γ_{j+1} − γ_j (and J = γ_∞ − γ_n when irregular), as
/// (plus, minus) indices into the star paths.
pub fn cycles(n: usize, irregular_degree: usize) -> Vec<(usize, usize, String)> {
    let mut out: Vec<(usize, usize, String)> = (0..n.saturating_sub(1)).map(|j| (j + 1, j, format!("I_{}", j + 1))).collect();
    if irregular_degree == 1 {
        out.push((n, n - 1, "J".into()));
    }
    out
}

/// The period matrix entry (form i⊗e_a, cycle j⊗e*_b).
pub fn period_matrix<R: Real>(
    conn: &LogConnection<R>,
    basis: LineBasis,
    star: &StarPaths<R>,
    settings: &QuadratureSettings,
    opts: &EngineOptions,
) -> Result<PeriodMatrix<R>> {
    let forms = LineForms::for_connection(basis, conn)?;
    let g = path_integrals(conn, &forms, star, settings, opts)?;
    assemble(conn, &forms, star, &g)
}

/// Period matrix from precomputed path integrals.
pub fn assemble<R: Real>(conn: &LogConnection<R>, forms: &LineForms<R>, star: &StarPaths<R>, g: &[QuadResult<R>]) -> Result<PeriodMatrix<R>> {
    let r = conn.rank();
    let rows = forms.count();
    let cyc = cycles(star.points().len(), conn.irregular_degree());
    let cols = cyc.len() * r;
    let mut entries = CMat::zeros(rows, cols);
    let mut errors = vec![0.0; rows * cols];
    let mut col_labels = Vec::with_capacity(cols);
    for (j, (plus, minus, label)) in cyc.iter().enumerate() {
        for b in 0..r {
            col_labels.push(format!("{label}(e*_{})", b + 1));
            for i in 0..rows {
                let k = i * r + b;
                entries[(i, j * r + b)] = g[*plus].values[k] - g[*minus].values[k];
                errors[i * cols + j * r + b] = g[*plus].errors[k] + g[*minus].errors[k];
            }
        }
    }
    let evaluations = g.iter().map(|q| q.evaluations).sum();
    PeriodMatrix::new(entries, errors, forms.labels(), col_labels, evaluations)
}

/// The closed-form determinant for the same star paths.
pub fn product_det<R: Real>(conn: &LogConnection<R>, star: &StarPaths<R>) -> Result<ProductDet<R>> {
    regular_period_det(conn, &BranchData::from_star(star)?)
}

/// ∇₍ₘ₎: the rank-two part with dy replaced by (m+1)dy/(y+m), twisted by
/// D in the generic case.
pub fn regularized_connection<R: Real>(cd: &CriticalData<R>, m: u32) -> Result<LogConnection<R>> {
    let idx = RegularizationIndex::new(m, cd)?;
    let dy = vec![Cx::zero(), Cx::one()];
    let base = nabla_prime(cd)?.with_irregular(dy);
    let conn = if cd.is_generic() { twist_by_d(&base, cd)? } else { base };
    regularize(&conn, idx)
}

/// ∇₁: the twisted rank-two part of the pushforward, irregular at ∞.
pub fn nabla_one<R: Real>(cd: &CriticalData<R>) -> Result<LogConnection<R>> {
    cd.require_generic()?;
    let (_, rank2) = pushforward_legendre(cd)?;
    twist_by_d(&rank2, cd)
}

#[derive(Debug, Clone)]
pub struct ApproxRecord<R: Real> {
    pub m: u32,
    pub d_m: LogValue<R>,
    pub delta_m: LogValue<R>,
    pub p_m: LogValue<R>,
    /// Logarithms of the convergence factors.
    pub factors: Vec<Cx<R>>,
    /// P₍ₘ₎ divided by the product of the factors.
    pub remainder: LogValue<R>,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct ApproxRecordSummary {
    pub m: u32,
    /// Absent when D₍ₘ₎ overflows binary64; `log_d_m` is always present.
    pub d_m: Option<Cplx>,
    pub log_d_m: Cplx,
    pub delta_m: Cplx,
    pub p_m: Cplx,
    pub factors: Vec<Cplx>,
    pub remainder: Cplx,
}

impl<R: Real> ApproxRecord<R> {
    pub fn summary(&self) -> ApproxRecordSummary {
        ApproxRecordSummary {
            m: self.m,
            d_m: Cplx::finite(self.d_m.value()),
            log_d_m: self.d_m.log.into(),
            delta_m: self.delta_m.value().into(),
            p_m: self.p_m.value().into(),
            factors: self.factors.iter().map(|f| f.cexp().into()).collect(),
            remainder: self.remainder.value().into(),
        }
    }
}

/// One term of the approximation sequence by the product formula.
pub fn approx_record<R: Real>(cd: &CriticalData<R>, m: u32, base: Cx<R>) -> Result<ApproxRecord<R>> {
    let conn = regularized_connection(cd, m)?;
    let star = StarPaths::new(&conn, base)?;
    let d_m = product_det(&conn, &star)?.total;
    let delta_m = vandermonde(&conn.locations(), 1)?;
    let mr = R::from_i64(i64::from(m));
    let power = if cd.is_generic() { 8 } else { 4 };
    let p_m = LogValue::new(d_m.log - delta_m.log - delta_m.log - real(R::from_i64(power) * mr * mr.ln()));
    let factors: Vec<Cx<R>> = if cd.is_generic() {
        golden::convergence_factors(cd, m).to_vec()
    } else {
        golden::exceptional_factors(cd, m).to_vec()
    };
    let fsum = factors.iter().fold(Cx::zero(), |a, &f| a + f);
    Ok(ApproxRecord { m, d_m, delta_m, p_m, factors, remainder: LogValue::new(p_m.log - fsum) })
}

#[derive(Debug, Clone)]
pub struct ApproxSequence<R: Real> {
    pub records: Vec<ApproxRecord<R>>,
    pub limit: LogValue<R>,
    /// Estimated relative error of the limit.
    pub limit_error: f64,
    pub order: usize,
    /// Relative distance of each P₍ₘ₎ to the limit.
    pub distances: Vec<f64>,
    /// First m from which the distances decrease monotonically.
    pub monotone_from: Option<u32>,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct ApproxSequenceSummary {
    pub records: Vec<ApproxRecordSummary>,
    pub limit: Cplx,
    pub limit_rel_error: f64,
    pub order: usize,
    pub distances: Vec<f64>,
    pub monotone_from: Option<u32>,
}

impl<R: Real> ApproxSequence<R> {
    pub fn summary(&self) -> ApproxSequenceSummary {
        ApproxSequenceSummary {
            records: self.records.iter().map(ApproxRecord::summary).collect(),
            limit: self.limit.value().into(),
            limit_rel_error: self.limit_error,
            order: self.order,
            distances: self.distances.clone(),
            monotone_from: self.monotone_from,
        }
    }
}

/// m = 10, 15, …, 80.
pub fn default_m_list() -> Vec<u32> {
    (2..=16).map(|k| 5 * k).collect()
}

/// Richardson extrapolation of log P₍ₘ₎ in h = 1/m.
pub fn approx_sequence<R: Real>(cd: &CriticalData<R>, ms: &[u32], base: Cx<R>, exec: Execution) -> Result<ApproxSequence<R>> {
    if ms.len() < 2 || ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("m-list must be increasing with at least two entries".into()));
    }
    let records: Vec<ApproxRecord<R>> = exec.map(ms, |&m| approx_record(cd, m, base)).into_iter().collect::<Result<_>>()?;
    let h: Vec<R> = ms.iter().map(|&m| R::one() / R::from_i64(i64::from(m))).collect();
    // keep the branch of log P continuous in m
    let mut logs: Vec<Cx<R>> = Vec::with_capacity(records.len());
    for rec in &records {
        let mut l = rec.p_m.log;
        if let Some(prev) = logs.last() {
            let k = ((l.im - prev.im) / R::two_pi()).round();
            l = l - Cx::new(R::zero(), k * R::two_pi());
        }
        logs.push(l);
    }
    let max_order = match R::PRECISION {
        crate::numeric::Precision::Double => 6,
        crate::numeric::Precision::Extended => 12,
    };
    let ex = richardson(&h, &logs, max_order);
    let limit = LogValue::new(ex.value);
    let distances: Vec<f64> = records.iter().map(|r| r.p_m.rel_diff(limit)).collect();
    let m0 = monotone_from(&distances).map(|i| ms[i]);
    if !ex.error.is_finite() {
        return Err(Error::Extrapolation("non-finite Richardson estimate".into()));
    }
    Ok(ApproxSequence { records, limit, limit_error: ex.error, order: ex.order, distances, monotone_from: m0 })
}

#[derive(Debug, Clone)]
pub struct PushforwardPeriod<R: Real> {
    /// Determinant of d + dy twisted by D.
    pub rank_one: LogValue<R>,
    pub rank_two: LogValue<R>,
    pub value: LogValue<R>,
}

/// Product of the rank-one determinant and a rank-two period `p`.
pub fn pushforward_period<R: Real>(cd: &CriticalData<R>, p: LogValue<R>) -> Result<PushforwardPeriod<R>> {
    cd.require_generic()?;
    let spec = IrregularRank1Spec::new(vec![Cx::zero(), Cx::one()], vec![Cx::one(); 4], cd.divisor())?;
    let rank_one = irregular_rank1_det(&spec)?;
    Ok(PushforwardPeriod { rank_one, rank_two: p, value: rank_one.mul(p) })
}

/// The 8×8 period matrix of ∇₁ by quadrature (η-basis over D, cycles
/// I_1..I_3 and the decay cycle J).
pub fn nabla_one_period<R: Real>(
    cd: &CriticalData<R>,
    base: Cx<R>,
    settings: &QuadratureSettings,
    opts: &EngineOptions,
) -> Result<PeriodMatrix<R>> {
    let conn = nabla_one(cd)?;
    let star = StarPaths::new(&conn, base)?;
    period_matrix(&conn, LineBasis::Eta, &star, settings, opts)
}

#[derive(Debug, Clone)]
pub struct ExceptionalPipeline<R: Real> {
    pub sequence: ApproxSequence<R>,
    /// Γ(1/3)²Γ(2/3)².
    pub stated_limit: LogValue<R>,
    pub limit_distance: f64,
    /// Tame symbol at −m for the first m of the list, and m² − c₁.
    pub tame_minus_m: (LogValue<R>, Cx<R>),
    /// Distance to 1 of the three m-dependent factors at the last m.
    pub factor_distances: [f64; 3],
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct ExceptionalSummary {
    pub sequence: ApproxSequenceSummary,
    pub stated_limit: Cplx,
    pub limit_rel_distance: f64,
    pub tame_minus_m: Cplx,
    pub tame_minus_m_stated: Cplx,
    pub factor_distances: [f64; 3],
}

impl<R: Real> ExceptionalPipeline<R> {
    pub fn summary(&self) -> ExceptionalSummary {
        ExceptionalSummary {
            sequence: self.sequence.summary(),
            stated_limit: self.stated_limit.value().into(),
            limit_rel_distance: self.limit_distance,
            tame_minus_m: self.tame_minus_m.0.value().into(),
            tame_minus_m_stated: self.tame_minus_m.1.into(),
            factor_distances: self.factor_distances,
        }
    }
}

/// The rank-two sequence for λ² − λ + 1 = 0, with ∇′ untwisted.
pub fn exceptional_pipeline<R: Real>(cd: &CriticalData<R>, ms: &[u32], base: Cx<R>, exec: Execution) -> Result<ExceptionalPipeline<R>> {
    if cd.is_generic() {
        return Err(Error::WrongCase { expected: "exceptional", actual: "generic" });
    }
    let sequence = approx_sequence(cd, ms, base, exec)?;
    let stated_limit = golden::exceptional_limit();
    let limit_distance = sequence.limit.rel_diff(stated_limit);
    let m = ms[0];
    let conn = regularized_connection(cd, m)?;
    let star = StarPaths::new(&conn, base)?;
    let branches = BranchData::from_star(&star)?;
    let idx = conn.locations().len() - 1;
    let tame = crate::product::tame_symbol(&conn, crate::connection::PointRef::Finite(idx), &branches)?.value;
    let mr = real(R::from_i64(i64::from(m)));
    let last = sequence.records.last().map(|r| r.factors.clone()).unwrap_or_default();
    let mut factor_distances = [0.0; 3];
    for (d, f) in factor_distances.iter_mut().zip(&last) {
        *d = (f.cexp() - Cx::one()).cabs().to_f64();
    }
    Ok(ExceptionalPipeline { sequence, stated_limit, limit_distance, tame_minus_m: (tame, mr * mr - cd.c1), factor_distances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::cx;
    use crate::numeric::Precision;

    fn settings(tol: f64) -> QuadratureSettings {
        QuadratureSettings::new(tol, Precision::Double).unwrap()
    }

    #[test]
    fn beta_period_has_modulus_pi() {
        let conn = LogConnection::<f64>::rank_one(&[(cx(0.0, 0.0), cx(0.5, 0.0)), (cx(1.0, 0.0), cx(0.5, 0.0))], vec![]).unwrap();
        let star = StarPaths::new(&conn, cx(0.5, 0.5)).unwrap();
        let pm = period_matrix(&conn, LineBasis::Omega, &star, &settings(1e-12), &EngineOptions::default()).unwrap();
        assert!((pm.entries[(0, 0)].norm() - std::f64::consts::PI).abs() < 1e-10, "{}", pm.entries[(0, 0)]);
        let pf = product_det(&conn, &star).unwrap().total;
        assert!(pm.det.rel_diff(pf) < 1e-10);
    }

    #[test]
    fn rank_one_three_points_matches_product_formula() {
        let pts = [(cx::<f64>(0.0, 0.0), cx(0.5, 0.0)), (cx(1.0, 0.0), cx(1.0 / 3.0, 0.1)), (cx(2.0, 0.5), cx(0.25, 0.0))];
        let conn = LogConnection::rank_one(&pts, vec![]).unwrap();
        let star = StarPaths::new(&conn, cx(0.7, -0.9)).unwrap();
        let opts = EngineOptions::default();
        let om = period_matrix(&conn, LineBasis::Omega, &star, &settings(1e-12), &opts).unwrap();
        let eta = period_matrix(&conn, LineBasis::Eta, &star, &settings(1e-12), &opts).unwrap();
        let pf = product_det(&conn, &star).unwrap().total;
        assert!(om.det.rel_diff(pf) < 1e-9, "{}", om.det.rel_diff(pf));
        let delta = vandermonde(&conn.locations(), 1).unwrap();
        assert!(eta.det.mul(delta).rel_diff(om.det) < 1e-9);
        let swapped = om.swap_columns(0, 1).unwrap();
        assert!(swapped.det.rel_diff(LogValue::new(om.det.log + Cx::new(0.0, std::f64::consts::PI))) < 1e-12);
    }

    #[test]
    fn irregular_single_point() {
        let s = cx::<f64>(0.6, 0.3);
        let conn = LogConnection::rank_one(&[(cx(0.0, 0.0), s)], vec![cx(0.0, 0.0), cx(1.0, 0.0)]).unwrap();
        // base on the negative axis: every logarithm along the cycle is principal
        let star = StarPaths::new(&conn, cx(-1.0, 0.0)).unwrap();
        let pm = period_matrix(&conn, LineBasis::Eta, &star, &settings(1e-11), &EngineOptions::default()).unwrap();
        let spec = IrregularRank1Spec::new(vec![cx(0.0, 0.0), cx(1.0, 0.0)], vec![s], vec![cx(0.0, 0.0)]).unwrap();
        let want = irregular_rank1_det(&spec).unwrap();
        assert!(pm.det.rel_diff(want) < 1e-9, "{:?} vs {:?}", pm.det.value(), want.value());
    }

    #[test]
    fn approx_records_are_consistent() {
        let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
        let rec = approx_record(&cd, 10, cx(0.0, 0.0)).unwrap();
        let again = rec.remainder.log + rec.factors.iter().fold(Cx::zero(), |a, &f| a + f);
        assert!(LogValue::new(again).rel_diff(rec.p_m) < 1e-12);
        let rec20 = approx_record(&cd, 20, cx(0.0, 0.0)).unwrap();
        // the remainder is exactly m-independent
        assert!(rec.remainder.rel_diff(rec20.remainder) < 1e-10);
    }
}
