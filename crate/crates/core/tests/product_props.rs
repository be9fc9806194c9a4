use irrper_core::connection::{LogConnection, PointRef};
use irrper_core::engine::{period_matrix, product_det, EngineOptions, LineBasis};
use irrper_core::numeric::{Execution, Precision};
use irrper_core::path::{continued_logs, PathSpec};
use irrper_core::product::{
    gamma_factor, regular_period_det, selberg_rank1_det, tame_symbol, vandermonde, BranchData, LogValue, StarPaths,
};
use irrper_core::quadrature::QuadratureSettings;
use num_complex::Complex64;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Instance {
    points: Vec<Complex64>,
    s: Vec<Complex64>,
    base: Complex64,
}

impl Instance {
    fn conn(&self) -> LogConnection<f64> {
        let pairs: Vec<_> = self.points.iter().copied().zip(self.s.iter().copied()).collect();
        LogConnection::rank_one(&pairs, vec![]).unwrap()
    }
}

fn separated(p: &[Complex64], gap: f64) -> bool {
    (0..p.len()).all(|i| (i + 1..p.len()).all(|j| (p[i] - p[j]).norm() >= gap))
}

fn instance(max_n: usize) -> impl Strategy<Value = Instance> {
    let pt = (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b));
    let ex = (0.1..1.9f64, -0.5..0.5f64).prop_map(|(a, b)| Complex64::new(a, b));
    (2..=max_n)
        .prop_flat_map(move |n| (prop::collection::vec(pt.clone(), n), prop::collection::vec(ex.clone(), n), pt.clone()))
        .prop_map(|(points, s, base)| Instance { points, s, base: base * 1.25 })
        .prop_filter("separated points, base off the points", |i| {
            separated(&i.points, 0.5) && i.points.iter().all(|p| (p - i.base).norm() >= 0.3)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selberg_times_vandermonde_is_product(inst in instance(4)) {
        let conn = inst.conn();
        let star = StarPaths::new(&conn, inst.base).unwrap();
        let br = BranchData::from_star(&star).unwrap();
        let product = regular_period_det(&conn, &br).unwrap().total;
        let selberg = selberg_rank1_det(&inst.s, &inst.points, &br).unwrap();
        let delta = vandermonde(&inst.points, 1).unwrap();
        prop_assert!(selberg.mul(delta).rel_diff(product) < 1e-12);
    }

    #[test]
    fn symbols_and_gamma_factors_never_vanish(inst in instance(4)) {
        let conn = inst.conn();
        let br = BranchData::from_star(&StarPaths::new(&conn, inst.base).unwrap()).unwrap();
        for i in 0..inst.points.len() {
            let t = tame_symbol(&conn, PointRef::Finite(i), &br).unwrap().value;
            prop_assert!(t.log.re.is_finite() && t.log.im.is_finite());
            let g = gamma_factor(&conn, PointRef::Finite(i)).unwrap();
            prop_assert!(g.log.re.is_finite());
        }
        let total = regular_period_det(&conn, &br).unwrap().total;
        prop_assert!(total.value().norm() > 0.0);
    }

    /// A detour once around λ_k changes log(λ_i − λ_k) by 2πi, so the tame
    /// symbol at λ_i picks up exp(2πi b_k).
    #[test]
    fn tame_symbol_branch_coherence(inst in instance(3), turn in prop::bool::ANY) {
        let conn = inst.conn();
        let star = StarPaths::new(&conn, inst.base).unwrap();
        let br = BranchData::from_star(&star).unwrap();
        let (i, k) = (0, 1);
        let (pi, pk) = (inst.points[i], inst.points[k]);
        let r = 0.2;
        let start = pk + Complex64::new(r, 0.0);
        let circle = PathSpec::circle(pk, r, 0.0, if turn { 1 } else { -1 });
        let plain = PathSpec::line(start, pi);
        let looped = circle.then(&plain).unwrap();
        let l0 = *continued_logs(&plain, pk, 1.0).last().unwrap();
        let l1 = *continued_logs(&looped, pk, 1.0).last().unwrap();
        let sign = if turn { 1.0 } else { -1.0 };
        prop_assert!((l1 - l0 - Complex64::new(0.0, sign * std::f64::consts::TAU)).norm() < 1e-12);

        let mut moved = br.clone();
        moved.logs[i][k] += l1 - l0;
        let a = tame_symbol(&conn, PointRef::Finite(i), &br).unwrap().value;
        let b = tame_symbol(&conn, PointRef::Finite(i), &moved).unwrap().value;
        let want = LogValue::new(Complex64::new(0.0, sign * std::f64::consts::TAU) * inst.s[k]);
        prop_assert!(b.div(a).rel_diff(want) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Closed form against quadrature, and the basis-change law ω/η = Δ.
    #[test]
    fn product_formula_matches_quadrature(inst in instance(3)) {
        let conn = inst.conn();
        let star = StarPaths::new(&conn, inst.base).unwrap();
        let st = QuadratureSettings::new(1e-12, Precision::Double).unwrap();
        let opts = EngineOptions { route: None, execution: Execution::Sequential };
        let omega = period_matrix(&conn, LineBasis::Omega, &star, &st, &opts).unwrap();
        let eta = period_matrix(&conn, LineBasis::Eta, &star, &st, &opts).unwrap();
        let product = product_det(&conn, &star).unwrap().total;
        prop_assert!(product.rel_diff(omega.det) < 1e-8, "{:e}", product.rel_diff(omega.det));
        let delta = vandermonde(&inst.points, 1).unwrap();
        prop_assert!(omega.det.div(eta.det).rel_diff(delta) < 1e-6);
        prop_assert!(omega.is_perfect(1e3));
    }
}
