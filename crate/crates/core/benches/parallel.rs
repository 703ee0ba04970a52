use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use open_boson::analytic::half_factor_locus_with;
use open_boson::fock::{DensityMatrix, FockSpace};
use open_boson::lindblad::{evolve_many, p_sampling_mean_with, EvolveJob, Generator};
use open_boson::{Execution, SystemParams};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sampling(c: &mut Criterion) {
    let p = SystemParams::default();
    let mut group = c.benchmark_group("p_sampling_mean_200k");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| p_sampling_mean_with(exec, black_box(&p), 200_000, 7).unwrap())
        });
    }
    group.finish();
}

fn trajectories(c: &mut Criterion) {
    let jobs: Vec<EvolveJob> = (0..8)
        .map(|k| {
            let params = SystemParams {
                temp_e: 2.0 + 0.25 * k as f64,
                ..Default::default()
            };
            let dim = 40;
            let dt = Generator::new(&params, dim).unwrap().default_dt();
            let rho0 = DensityMatrix::vacuum(FockSpace::new(dim).unwrap());
            EvolveJob {
                params,
                rho0,
                t_end: 0.5,
                dt,
                sample_every: 50,
            }
        })
        .collect();
    let mut group = c.benchmark_group("evolve_many_8x40");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evolve_many(exec, black_box(&jobs)))
        });
    }
    group.finish();
}

fn locus(c: &mut Criterion) {
    let grid: Vec<f64> = (1..=200).map(|k| 0.05 * k as f64).collect();
    let p = SystemParams::default();
    let mut group = c.benchmark_group("half_factor_locus_200");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| half_factor_locus_with(exec, black_box(&p), &grid, 0.5).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sampling, trajectories, locus);
criterion_main!(benches);
