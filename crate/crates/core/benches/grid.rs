use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use moneymult::calibration::model_moments;
use moneymult::series::{sweep_policy, ScenarioRow};
use moneymult::{Exec, Model};

fn lin(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn policy_grid(c: &mut Criterion) {
    let m = Model::calibrated();
    let is = lin(0.0, 0.16, 100);
    let irs = lin(0.0, 0.08, 25);
    let mut g = c.benchmark_group("sweep_100x25x2");
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| sweep_policy(&m, 0.1, &is, &irs, &[0.0, 0.2], exec).unwrap())
        });
    }
    g.finish();
}

fn scenario_moments(c: &mut Criterion) {
    let m = Model::calibrated();
    let rows: Vec<ScenarioRow> = (0..40)
        .map(|k| ScenarioRow {
            period: format!("{}", 1968 + k),
            i: 0.02 + 0.002 * k as f64,
            i_r: 0.0,
            chi: 0.1,
            uc_over_y_obs: 0.002 + 0.0015 * k as f64,
        })
        .collect();
    let mut g = c.benchmark_group("moments_40_rows");
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| model_moments(&m, &rows, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, policy_grid, scenario_moments);
criterion_main!(benches);
