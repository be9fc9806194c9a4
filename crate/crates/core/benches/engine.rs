use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use irrper_core::curve::CriticalData;
use irrper_core::engine::{approx_sequence, default_m_list, period_matrix, regularized_connection, EngineOptions, LineBasis};
use irrper_core::numeric::{cx, Dd, Execution, Precision};
use irrper_core::product::StarPaths;
use irrper_core::quadrature::QuadratureSettings;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn period_matrix_bench(c: &mut Criterion) {
    let cd = CriticalData::<f64>::from_lambda(cx(2.0, 0.0)).unwrap();
    let conn = regularized_connection(&cd, 10).unwrap();
    let star = StarPaths::new(&conn, cx(0.0, 0.0)).unwrap();
    let st = QuadratureSettings::new(1e-10, Precision::Double).unwrap();
    let mut g = c.benchmark_group("period_matrix_m10");
    g.sample_size(10);
    for (name, execution) in MODES {
        let opts = EngineOptions { route: None, execution };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| period_matrix(&conn, LineBasis::Eta, &star, &st, &opts).unwrap())
        });
    }
    g.finish();
}

fn approx_sequence_bench(c: &mut Criterion) {
    let cd = CriticalData::<Dd>::from_lambda(cx(2.0, 0.0)).unwrap();
    let ms = default_m_list();
    let mut g = c.benchmark_group("approx_sequence_dd");
    for (name, execution) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| approx_sequence(&cd, &ms, cx(0.0, 0.0), execution).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, period_matrix_bench, approx_sequence_bench);
criterion_main!(benches);
