use irrper_core::curve::{
    critical_data, f, f_prime, identity_checks, rapid_decay_sectors, CriticalData, CurveCase, CurveParams, ExceptionalRoot,
    ID_COMPANION_STATED,
};
use irrper_core::numeric::cx;
use num_complex::Complex64;
use proptest::prelude::*;

fn generic_lambda() -> impl Strategy<Value = Complex64> {
    (-10.0..10.0f64, -10.0..10.0f64)
        .prop_map(|(re, im)| Complex64::new(re, im))
        .prop_filter("smooth, away from the exceptional locus", |l| {
            l.norm() <= 10.0 && l.norm() > 1e-3 && (l - 1.0).norm() > 1e-3 && (l * l - l + 1.0).norm() > 1e-3
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn identities_hold(lambda in generic_lambda()) {
        let params = CurveParams::new(lambda).unwrap();
        for check in identity_checks(&params) {
            if check.name == ID_COMPANION_STATED {
                // off by exactly 16
                prop_assert!((check.lhs / check.rhs - 16.0).norm() < 1e-9, "{}: {}", check.name, check.lhs / check.rhs);
            } else {
                prop_assert!(check.rel_error < 1e-12, "{}: {:e}", check.name, check.rel_error);
            }
        }
    }

    #[test]
    fn critical_points_and_roots(lambda in generic_lambda()) {
        let cd = CriticalData::<f64>::from_lambda(lambda).unwrap();
        let scale = 1.0 + lambda.norm_sqr();
        prop_assert!(f_prime(lambda, cd.x1).norm() < 1e-12 * scale);
        prop_assert!(f_prime(lambda, cd.x2).norm() < 1e-12 * scale);
        prop_assert!((cd.s1 * cd.s1 - cd.c1).norm() <= 1e-13 * cd.c1.norm().max(1e-300));
        prop_assert!((cd.s2 * cd.s2 - cd.c2).norm() <= 1e-13 * cd.c2.norm().max(1e-300));
        // companion roots share the critical value
        prop_assert!((f(lambda, cd.x3) - cd.c1).norm() < 1e-10 * scale.powf(1.5));
        prop_assert!((f(lambda, cd.x4) - cd.c2).norm() < 1e-10 * scale.powf(1.5));
        // deterministic ordering
        prop_assert!((cd.x1.re, cd.x1.im) < (cd.x2.re, cd.x2.im));
        prop_assert!(cd.s1.re >= 0.0 && cd.s2.re >= 0.0);
    }

    #[test]
    fn continuous_in_lambda(lambda in generic_lambda(), dir in 0.0..std::f64::consts::TAU) {
        let eps = 1e-9;
        let a = CriticalData::<f64>::from_lambda(lambda).unwrap();
        let b = CriticalData::<f64>::from_lambda(lambda + Complex64::from_polar(eps, dir)).unwrap();
        let cond = 1.0 / (lambda * lambda - lambda + 1.0).norm().sqrt();
        for (p, q) in [(a.x1, b.x1), (a.x2, b.x2), (a.c1, b.c1), (a.c2, b.c2)] {
            prop_assert!((p - q).norm() < 1e3 * eps * cond * (1.0 + lambda.norm_sqr()));
        }
    }
}

#[test]
fn classification() {
    for root in [ExceptionalRoot::Plus, ExceptionalRoot::Minus] {
        let p = CurveParams::<f64>::exceptional(root);
        assert_eq!(p.case, CurveCase::Exceptional);
        let cd = critical_data(&p);
        assert!((cd.x1 - (p.lambda + 1.0) / 3.0).norm() < 1e-14);
        assert!((cd.c1 - (p.lambda * 2.0 - 1.0) / 9.0).norm() < 1e-14);
    }
    let half_sqrt3 = 0.75f64.sqrt();
    assert_eq!(CurveParams::new(cx::<f64>(0.5, half_sqrt3)).unwrap().case, CurveCase::Exceptional);
    assert_eq!(CurveParams::new(cx::<f64>(0.5, -half_sqrt3)).unwrap().case, CurveCase::Exceptional);
    for l in [cx::<f64>(2.0, 0.0), cx(3.0, 0.0), cx(0.0, 1.0)] {
        assert_eq!(CurveParams::new(l).unwrap().case, CurveCase::Generic);
    }
    assert!(CurveParams::new(cx::<f64>(0.0, 0.0)).is_err());
    assert!(CurveParams::new(cx::<f64>(1.0, 0.0)).is_err());
}

#[test]
fn sectors_are_rotates() {
    let s = rapid_decay_sectors();
    for k in 0..3 {
        let next = &s[(k + 1) % 3];
        let turn = (next.center() - s[k].center()).rem_euclid(std::f64::consts::TAU);
        assert!((turn - std::f64::consts::TAU / 3.0).abs() < 1e-12);
        assert!((s[k].arg_hi - s[k].arg_lo - std::f64::consts::PI / 3.0).abs() < 1e-12);
    }
}
