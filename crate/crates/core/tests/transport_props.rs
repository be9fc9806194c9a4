use irrper_core::connection::{nabla_prime, LogConnection};
use irrper_core::curve::CriticalData;
use irrper_core::engine::{LineBasis, LineForms};
use irrper_core::numeric::{CMat, Precision};
use irrper_core::path::PathSpec;
use irrper_core::quadrature::{integrate_vec, QuadratureSettings};
use irrper_core::transport::{continue_solution, dual_frame, loop_monodromy, PeriodIntegrand, Route};
use num_complex::Complex64;
use proptest::prelude::*;

fn pt(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let t = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

/// Two realizations of the same homotopy class: the segment a→b, and a→m→b
/// with m pushed off the midpoint, when the triangle between them is clear.
fn bent(a: Complex64, b: Complex64, push: f64) -> (PathSpec<f64>, PathSpec<f64>, Complex64) {
    let m = (a + b) * 0.5 + (b - a) * Complex64::new(0.0, push);
    (PathSpec::line(a, b), PathSpec::line(a, m).then(&PathSpec::line(m, b)).unwrap(), m)
}

fn clear(points: &[Complex64], a: Complex64, m: Complex64, b: Complex64, gap: f64) -> bool {
    let inside = |p: Complex64| {
        let s = |u: Complex64, v: Complex64| ((v - u).conj() * (p - u)).im;
        let (x, y, z) = (s(a, m), s(m, b), s(b, a));
        (x >= 0.0 && y >= 0.0 && z >= 0.0) || (x <= 0.0 && y <= 0.0 && z <= 0.0)
    };
    points.iter().all(|&p| {
        !inside(p) && segment_distance(p, a, b) > gap && segment_distance(p, a, m) > gap && segment_distance(p, m, b) > gap
    })
}

fn lambda2() -> (CriticalData<f64>, LogConnection<f64>) {
    let cd = CriticalData::<f64>::from_lambda(Complex64::new(2.0, 0.0)).unwrap();
    let conn = nabla_prime(&cd).unwrap();
    (cd, conn)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transport_composes(a in pt(1.5), b in pt(1.5), c in pt(1.5)) {
        let (_, conn) = lambda2();
        let pts = conn.locations();
        prop_assume!((a - b).norm() > 0.2 && (b - c).norm() > 0.2);
        prop_assume!(pts.iter().all(|&p| segment_distance(p, a, b) > 0.1 && segment_distance(p, b, c) > 0.1));
        let (ab, bc) = (PathSpec::line(a, b), PathSpec::line(b, c));
        let id = CMat::identity(2);
        let (first, _) = continue_solution(&conn, &ab, id.clone(), 1e-13).unwrap();
        let (two_steps, _) = continue_solution(&conn, &bc, first, 1e-13).unwrap();
        let (direct, _) = continue_solution(&conn, &ab.then(&bc).unwrap(), id, 1e-13).unwrap();
        prop_assert!(two_steps.sub(&direct).max_abs() <= 1e-10 * direct.max_abs());
    }

    #[test]
    fn transport_is_homotopy_invariant(a in pt(1.5), b in pt(1.5), push in -0.3..0.3f64) {
        let (_, conn) = lambda2();
        prop_assume!((a - b).norm() > 0.3);
        let (straight, bent_path, m) = bent(a, b, push);
        prop_assume!(clear(&conn.locations(), a, m, b, 0.1));
        let id = CMat::identity(2);
        let (x, _) = continue_solution(&conn, &straight, id.clone(), 1e-12).unwrap();
        let (y, _) = continue_solution(&conn, &bent_path, id, 1e-12).unwrap();
        prop_assert!(x.sub(&y).max_abs() <= 1e-8 * x.max_abs());
    }

    /// Integrals of the flat pairing along two homotopic realizations, with
    /// the fiber oracle supplying the frame.
    #[test]
    fn pairing_integrals_are_homotopy_invariant(a in pt(1.5), b in pt(1.5), push in -0.3..0.3f64) {
        let (_, conn) = lambda2();
        prop_assume!((a - b).norm() > 0.3);
        let (straight, bent_path, m) = bent(a, b, push);
        prop_assume!(clear(&conn.locations(), a, m, b, 0.1));
        let forms = LineForms::for_connection(LineBasis::Eta, &conn).unwrap();
        let st = QuadratureSettings::new(1e-12, Precision::Double).unwrap();
        let run = |path: &PathSpec<f64>| {
            let frame = dual_frame(&conn, Route::FiberOracle, 1e-14).unwrap();
            integrate_vec(&mut PeriodIntegrand { forms: &forms, frame }, path, &st).unwrap()
        };
        let (x, y) = (run(&straight), run(&bent_path));
        let scale = x.values.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        for (u, v) in x.values.iter().zip(&y.values) {
            prop_assert!((u - v).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn rank_one_monodromy(p in pt(2.0), s in pt(2.0), r in 0.1..1.0f64, route in prop::sample::select(vec![Route::ClosedForm, Route::Ode])) {
        let q = p + Complex64::new(3.0, 0.5);
        let conn = LogConnection::rank_one(&[(p, s), (q, -s)], vec![]).unwrap();
        let m = loop_monodromy(&conn, p, r, route, 1e-12).unwrap();
        let want = (s * Complex64::new(0.0, std::f64::consts::TAU)).exp();
        prop_assert!((m[(0, 0)] - want).norm() <= 1e-8 * want.norm().max(1.0));
    }
}
