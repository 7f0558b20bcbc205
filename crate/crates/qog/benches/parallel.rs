//! Parallel-vs-sequential comparison for the data-parallel hot paths, plus
//! the two history evaluation strategies of the Volterra solver.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use qog::sensitivity::{local_minima_envelope, markovian_series};
use qog::spectral::{Frequency, SpectralDensity};
use qog::volterra::{self, HistoryEval, ProbeConfig, TimeGrid};
use qog::{par, Result};

fn freq(v: f64) -> Frequency {
    Frequency::new(v).unwrap()
}

/// One Born-Markovian envelope minimum; the sweep workload unit.
fn envelope_min(n_photon: f64) -> f64 {
    let times: Vec<f64> = (1..=25_000).map(|i| 0.002 * i as f64).collect();
    let series = markovian_series(n_photon, 0.2, freq(1.0), &times).unwrap();
    let env = local_minima_envelope(&series).unwrap();
    env.points.iter().map(|p| p.delta_omega).fold(f64::INFINITY, f64::min)
}

fn bench_sweep(c: &mut Criterion) {
    let photon_numbers: Vec<f64> = vec![25.0, 50.0, 100.0, 200.0, 400.0, 800.0];
    let mut group = c.benchmark_group("markovian_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| par::map(black_box(&photon_numbers), |&n| envelope_min(n)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| par::map_seq(black_box(&photon_numbers), |&n| envelope_min(n)))
    });
    group.finish();
}

fn bench_exact_batch(c: &mut Criterion) {
    let j = SpectralDensity::new(0.05, 2.0, 1.0).unwrap();
    let grid = TimeGrid::new(40.0, 0.01).unwrap();
    let omegas: Vec<f64> = vec![0.0098, 0.0099, 0.01, 0.0101, 0.0102];
    let solve_one = |om: &f64| -> Result<f64> {
        let cfg = ProbeConfig::with_photon_number(freq(1.0), freq(*om), 100.0)?;
        let traj = volterra::solve(&j, &cfg, &grid)?;
        Ok(traj.u1.last().unwrap().norm())
    };
    let mut group = c.benchmark_group("volterra_batch");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| par::map(black_box(&omegas), solve_one))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| par::map_seq(black_box(&omegas), solve_one))
    });
    group.finish();
}

fn bench_history_paths(c: &mut Criterion) {
    let j = SpectralDensity::new(0.05, 10.0, 1.0).unwrap();
    let cfg = ProbeConfig::with_photon_number(freq(1.0), freq(0.01), 100.0).unwrap();
    let grid = TimeGrid::new(60.0, 0.002).unwrap();
    let mut group = c.benchmark_group("history_eval");
    group.sample_size(10);
    for (label, eval) in [("direct", HistoryEval::Direct), ("fft", HistoryEval::Fft)] {
        group.bench_function(label, |b| {
            b.iter_batched(
                || (),
                |_| volterra::solve_with(&j, &cfg, &grid, eval).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_exact_batch, bench_history_paths);
criterion_main!(benches);
