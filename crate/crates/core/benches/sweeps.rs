use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dirac_ssm::edge::{sweep_edge_rates, SweepOptions};
use dirac_ssm::integrators::{gn_run, run_batch, GridSpec};
use dirac_ssm::models::Model;
use dirac_ssm::monodromy::{length_range, sweep_floor_rates};
use dirac_ssm::par::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn floor(c: &mut Criterion) {
    let lengths = length_range(40.0 * PI, 40.0 * PI + 2.0 * PI, 0.125).unwrap();
    let mut g = c.benchmark_group("floor_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, lengths.len()), |b| {
            b.iter(|| sweep_floor_rates(Model::Gn, 0.5, &lengths, None, exec).unwrap())
        });
    }
    g.finish();
}

fn edge(c: &mut Criterion) {
    let lengths = length_range(40.0 * PI, 41.0 * PI, 0.4).unwrap();
    let opts = SweepOptions { points: Some(1024), harmonics: Some(64), ..SweepOptions::default() };
    let mut g = c.benchmark_group("edge_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, lengths.len()), |b| {
            b.iter(|| sweep_edge_rates(Model::Gn, 0.35, &lengths, &opts, exec).unwrap())
        });
    }
    g.finish();
}

fn batch(c: &mut Criterion) {
    let configs: Vec<_> = [0.3, 0.4, 0.5, 0.6].iter().map(|&w| gn_run(w, GridSpec::pi(20.0, 1024), 0.01, 5.0)).collect();
    let mut g = c.benchmark_group("simulation_batch");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, configs.len()), |b| b.iter(|| run_batch(&configs, exec)));
    }
    g.finish();
}

criterion_group!(benches, floor, edge, batch);
criterion_main!(benches);
