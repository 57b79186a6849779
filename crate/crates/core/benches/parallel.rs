use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ultranarrow::cli::Preset;
use ultranarrow::dissipation::{build_liouvillian, effective_drive};
use ultranarrow::model::{diagonalize, ladder_sweep};
use ultranarrow::spectrum::{default_grid, emission_spectrum, steady_state, EmissionOperators};
use ultranarrow::ExecMode;

fn spectrum(c: &mut Criterion) {
    let p = Preset::Fig4b.params();
    let model = effective_drive(&diagonalize(&p).unwrap(), &p, 3).unwrap();
    let l = build_liouvillian(&model).unwrap();
    let ss = steady_state(&l).unwrap();
    let ops = EmissionOperators::four_level(&model.table).unwrap();
    let grid = default_grid(model.omega, 5e-5);
    let mut group = c.benchmark_group("spectrum");
    for mode in [ExecMode::Serial, ExecMode::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| emission_spectrum(&l, &ss, &ops, black_box(&grid), mode).unwrap())
        });
    }
    group.finish();
}

fn ladder(c: &mut Criterion) {
    let p = Preset::Fig4b.params();
    let grid: Vec<f64> = (0..41).map(|i| 0.02 * i as f64).collect();
    let mut group = c.benchmark_group("ladder");
    group.sample_size(10);
    for mode in [ExecMode::Serial, ExecMode::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| ladder_sweep(&p, black_box(&grid), 6, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spectrum, ladder);
criterion_main!(benches);
