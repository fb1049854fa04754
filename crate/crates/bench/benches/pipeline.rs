use std::hint::black_box;

use comet_bench::{noisy_engine, rank_two_correlations, spread_words};
use comet_core::calibration::initial_lut;
use comet_core::comet::{solve_phasors, AxisMode, SolverOptions};
use comet_core::{select_ocp_set, SweepOptions};
use criterion::{criterion_group, criterion_main, Criterion};

fn codes(c: &mut Criterion) {
    c.bench_function("select_ocp_set 256x16", |b| b.iter(|| select_ocp_set(black_box(256), 16).unwrap()));
}

fn solver(c: &mut Criterion) {
    let opts = SolverOptions::default();
    for k in [8, 16] {
        let chi = rank_two_correlations(k);
        c.bench_function(&format!("solve_phasors {k} channels"), |b| b.iter(|| solve_phasors(black_box(&chi), &opts).unwrap()));
    }
}

fn frame(c: &mut Criterion) {
    let words = spread_words();
    let mut engine = noisy_engine(3);
    c.bench_function("normal frame, 8 elements", |b| b.iter(|| engine.measure(black_box(&words), AxisMode::Normal, None).unwrap()));
}

fn sweep(c: &mut Criterion) {
    let lut = initial_lut(8, 1.0, 128).unwrap();
    let all: Vec<usize> = (0..128).collect();
    let opts = SweepOptions::new(128);
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("7-bit extraction sweep", |b| {
        b.iter(|| noisy_engine(5).extract_sweep(black_box(&lut.entries), &all, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, codes, solver, frame, sweep);
criterion_main!(benches);
