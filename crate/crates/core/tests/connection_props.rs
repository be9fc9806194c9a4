use irrper_core::connection::{
    nabla_prime, regularization_gap, regularize, twist_by_d, LogConnection, PointRef, RegularizationIndex,
};
use irrper_core::curve::{critical_data, CriticalData, CurveParams, ExceptionalRoot};
use irrper_core::engine::{nabla_one, regularized_connection};
use irrper_core::numeric::{CMat, Cx};
use num_complex::Complex64;
use proptest::prelude::*;

fn generic_lambda() -> impl Strategy<Value = Complex64> {
    (-4.0..4.0f64, -4.0..4.0f64)
        .prop_map(|(re, im)| Complex64::new(re, im))
        .prop_filter("generic", |l| l.norm() > 0.05 && (l - 1.0).norm() > 0.05 && (l * l - l + 1.0).norm() > 0.05)
}

fn residue_sum(conn: &LogConnection<f64>) -> f64 {
    let mut total = conn.residue_at_infinity();
    let mut scale = 1.0f64;
    for p in conn.points() {
        total = total.add(&p.residue);
        scale = scale.max(p.residue.max_abs());
    }
    total.max_abs() / scale
}

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residues_sum_to_zero(lambda in generic_lambda(), m in 2u32..60) {
        let cd = CriticalData::<f64>::from_lambda(lambda).unwrap();
        let prime = nabla_prime(&cd).unwrap();
        let mut conns = vec![prime.clone(), twist_by_d(&prime, &cd).unwrap(), nabla_one(&cd).unwrap()];
        if let Ok(conn) = regularized_connection(&cd, m) {
            conns.push(conn);
        }
        for conn in &conns {
            prop_assert!(residue_sum(conn) < 1e-13);
        }
    }

    #[test]
    fn twist_shifts_eigenvalues_by_one(lambda in generic_lambda()) {
        let cd = CriticalData::<f64>::from_lambda(lambda).unwrap();
        let prime = nabla_prime(&cd).unwrap();
        let twisted = twist_by_d(&prime, &cd).unwrap();
        for p in cd.divisor() {
            let i = prime.point_index(p).unwrap();
            let j = twisted.point_index(p).unwrap();
            let before = sorted(prime.eigenvalues(PointRef::Finite(i)));
            let after = sorted(twisted.eigenvalues(PointRef::Finite(j)));
            for (b, a) in before.iter().zip(&after) {
                prop_assert!((a - b - 1.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn regularization_adds_scalar_residue(lambda in generic_lambda(), m in 2u32..200) {
        let cd = CriticalData::<f64>::from_lambda(lambda).unwrap();
        let base = twist_by_d(&nabla_prime(&cd).unwrap().with_irregular(vec![Cx::new(0.0, 0.0), Cx::new(1.0, 0.0)]), &cd).unwrap();
        let Ok(idx) = RegularizationIndex::new(m, &cd) else { return Ok(()) };
        let reg = regularize(&base, idx).unwrap();
        prop_assert_eq!(reg.irregular_degree(), 0);
        let at = reg.point_index(Complex64::new(-f64::from(m), 0.0)).unwrap();
        let res = reg.residue(PointRef::Finite(at));
        prop_assert!(res.sub(&CMat::identity(2).scale(Complex64::new(f64::from(m) + 1.0, 0.0))).max_abs() < 1e-12);
    }

    #[test]
    fn regularization_gap_within_bound(re in -2.0..2.0f64, im in -2.0..2.0f64, m in 2u32..400) {
        let (gap, bound) = regularization_gap(Complex64::new(re, im), m);
        prop_assert!(gap <= bound * (1.0 + 1e-12) + 1e-15);
    }
}

#[test]
fn regularization_index_rejects_small_and_colliding_m() {
    let cd = CriticalData::<f64>::from_lambda(Complex64::new(2.0, 0.0)).unwrap();
    assert!(RegularizationIndex::new(1, &cd).is_err());
    assert!(RegularizationIndex::new(2, &cd).is_ok());
}

#[test]
fn exceptional_residues_sum_to_zero() {
    for root in [ExceptionalRoot::Plus, ExceptionalRoot::Minus] {
        let cd = critical_data(&CurveParams::<f64>::exceptional(root));
        let prime = nabla_prime(&cd).unwrap();
        assert!(residue_sum(&prime) < 1e-13);
        assert!(residue_sum(&regularized_connection(&cd, 12).unwrap()) < 1e-13);
    }
}
