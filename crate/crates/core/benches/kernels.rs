//! Sequential versus data-parallel timings of the hot kernels.
//!
//! `cargo bench` compares a one-worker pool with the default pool;
//! `cargo bench --no-default-features` times the sequential build.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use radgas::diagnostics;
use radgas::elliptic::{EllipticBC, HalfStripSolver};
use radgas::par::{self, Workers};
use radgas::stepper::{extract_perturbation, Perturbation, SimConfig, Simulation};

fn config() -> SimConfig {
    SimConfig {
        nx: 512,
        ny: 64,
        lx: 128.0,
        ly: 32.0,
        perturbation: Perturbation::Gaussian {
            amp: 0.005,
            x0: 8.0,
            y0: 16.0,
            sx: 2.0,
            sy: 2.0,
        },
        ..SimConfig::default()
    }
}

fn pools() -> Vec<(String, Workers)> {
    if !par::is_parallel() {
        return vec![("sequential".into(), Workers::new(1))];
    }
    let mut out = vec![("1-worker".into(), Workers::new(1))];
    let all = Workers::new(0);
    if all.count() > 1 {
        out.push((format!("{}-workers", all.count()), all));
    }
    out
}

fn kernels(c: &mut Criterion) {
    let sim = Simulation::new(&config()).unwrap();
    let g = *sim.stepper.grid();
    let solver = HalfStripSolver::new(g).unwrap();
    let bc = EllipticBC::compatibility(-1.0);
    let dt = sim.cfl_dt();

    let mut group = c.benchmark_group("kernels_512x64");
    group.sample_size(20);
    for (label, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("elliptic_solve", &label), &pool, |b, pool| {
            b.iter(|| pool.run(|| solver.solve_divq(black_box(&sim.state.u), &bc, 0.0).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("rk2_step", &label), &pool, |b, pool| {
            b.iter(|| pool.run(|| sim.stepper.step(black_box(&sim.state), dt).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("energy_norms", &label), &pool, |b, pool| {
            b.iter(|| {
                pool.run(|| {
                    let (v, _, _) = extract_perturbation(&sim.state, &sim.reference).unwrap();
                    diagnostics::energy_ED(black_box(&v), 1.0)
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("record", &label), &pool, |b, pool| {
            b.iter(|| pool.run(|| sim.record().unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
