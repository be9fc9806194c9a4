use irrper_core::comparison::{corrected_det_q, final_period, sigma_matrix, sigma_matrix_exceptional};
use irrper_core::curve::{critical_data, CriticalData, CurveParams, ExceptionalRoot};
use irrper_core::engine::{approx_record, approx_sequence, default_m_list, pushforward_period, regularized_connection};
use irrper_core::golden;
use irrper_core::numeric::complex::{convert, rel_diff};
use irrper_core::numeric::{cx, Dd, Execution, Real};
use irrper_core::product::LogValue;
use num_complex::Complex64;
use proptest::prelude::*;

fn generic_lambda(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r)
        .prop_map(|(re, im)| Complex64::new(re, im))
        .prop_filter("generic", |l| l.norm() > 0.1 && (l - 1.0).norm() > 0.1 && (l * l - l + 1.0).norm() > 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn direct_det_q_matches_corrected_closed_form(lambda in generic_lambda(10.0)) {
        let cd = CriticalData::<Dd>::from_lambda(convert(lambda)).unwrap();
        let s = sigma_matrix(&cd).unwrap();
        prop_assert!(rel_diff(s.det(), corrected_det_q(&cd)) < 1e-20);
        prop_assert!(rel_diff(s.det(), s.det_block(&cd)) < 1e-20);
        // the stated closed form is 16 times too small
        prop_assert!(rel_diff(s.det(), golden::stated_det_q(&cd) * Dd::from_f64(16.0)) < 1e-20);
    }

    #[test]
    fn final_period_is_multiplicative(lambda in generic_lambda(4.0), log_re in -5.0..5.0f64, log_im in -3.0..3.0f64) {
        let cd = CriticalData::<f64>::from_lambda(lambda).unwrap();
        let push = LogValue::new(Complex64::new(log_re, log_im));
        let fp = final_period(&cd, push).unwrap();
        prop_assert!(fp.value.mul(LogValue::from_value(fp.sigma_det)).rel_diff(push) < 1e-10);
    }

    /// s1 → −s1 swaps the two rows of each x1- and x3-block: det Q is even
    /// in s1. The exceptional 2×2 determinant 2s1 is odd.
    #[test]
    fn sign_flips_in_sigma(lambda in generic_lambda(4.0), f1 in prop::bool::ANY, f2 in prop::bool::ANY) {
        let cd = CriticalData::<f64>::from_lambda(lambda).unwrap();
        let flipped = cd.with_s_signs(f1, f2);
        let (a, b) = (sigma_matrix(&cd).unwrap().det(), sigma_matrix(&flipped).unwrap().det());
        prop_assert!((a - b).norm() <= 1e-9 * a.norm());
    }

    #[test]
    fn p_m_is_d_over_delta_squared(lambda in generic_lambda(3.0), m in 10u32..60) {
        let cd = CriticalData::<f64>::from_lambda(lambda).unwrap();
        prop_assume!(regularized_connection(&cd, m).is_ok());
        let Ok(rec) = approx_record(&cd, m, cx(0.0, 0.0)) else { return Ok(()) };
        let mf = f64::from(m);
        let scale = LogValue::new(Complex64::new(-8.0 * mf * mf.ln(), 0.0));
        let want = scale.mul(rec.d_m).div(rec.delta_m.mul(rec.delta_m));
        prop_assert!(rec.p_m.rel_diff(want) < 1e-10);
    }
}

#[test]
fn exceptional_sigma_is_odd_in_s1() {
    for root in [ExceptionalRoot::Plus, ExceptionalRoot::Minus] {
        let cd = critical_data(&CurveParams::<f64>::exceptional(root));
        let a = sigma_matrix_exceptional(&cd).unwrap().det();
        let b = sigma_matrix_exceptional(&cd.with_s_signs(true, false)).unwrap().det();
        assert!((a + b).norm() < 1e-14 * a.norm());
    }
}

#[test]
fn extrapolated_limit_feeds_final_period() {
    let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
    let seq = approx_sequence(&cd, &default_m_list(), cx(0.0, 0.0), Execution::Parallel).unwrap();
    let push = pushforward_period(&cd, seq.limit).unwrap();
    let fp = final_period(&cd, push.value).unwrap();
    assert!(fp.value.mul(LogValue::from_value(fp.sigma_det)).rel_diff(push.value) < 1e-10);
    // limit against the independent closed form
    assert!(seq.limit.rel_diff(golden::corrected_p(&cd)) < 1e-4);
}

#[test]
fn sequential_and_parallel_sequences_agree() {
    let cd = CriticalData::<f64>::from_lambda(cx(-1.5, 0.7)).unwrap();
    let ms = [10, 20, 30, 40];
    let a = approx_sequence(&cd, &ms, cx(0.0, 0.0), Execution::Parallel).unwrap();
    let b = approx_sequence(&cd, &ms, cx(0.0, 0.0), Execution::Sequential).unwrap();
    assert_eq!(a.summary(), b.summary());
}
