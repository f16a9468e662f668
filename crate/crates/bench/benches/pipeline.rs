use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eprlab_core::criteria::{best_report, Occupations, THETA_P, THETA_X};
use eprlab_core::homodyne::pdf::{quad_pdf, Grid};
use eprlab_core::homodyne::sample_quadratures;
use eprlab_core::metrics::{fidelity_mixed, log_negativity, qfi_fixed_n};
use eprlab_core::pipelines::phase_grid;
use eprlab_core::states::{phase_noisy_state, tmsv};
use eprlab_core::tomography::{bin_samples, ml_reconstruct, TomographyConfig};
use eprlab_core::{FockSpace, NoiseModel};

fn homodyne(c: &mut Criterion) {
    let rho = tmsv(0.63, FockSpace::new(12)).unwrap().value.projector();
    let grid = Grid::for_state(&rho);
    c.bench_function("quad_pdf n_cut 12", |b| b.iter(|| quad_pdf(black_box(&rho), 0.7, &grid).unwrap()));
    let noisy = phase_noisy_state(0.63, 0.36, FockSpace::new(12)).unwrap().value;
    let mut g = c.benchmark_group("sample_quadratures");
    for p in [100, 10_000] {
        g.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, &p| {
            b.iter(|| sample_quadratures(&noisy, &[THETA_X, THETA_P], p, &NoiseModel::tomography(), 1).unwrap())
        });
    }
    g.finish();
}

fn criteria(c: &mut Criterion) {
    let rho = tmsv(0.63, FockSpace::new(12)).unwrap().value.projector();
    let s = sample_quadratures(&rho, &[THETA_X, THETA_P], 20_000, &NoiseModel::NONE, 2).unwrap();
    c.bench_function("best_report 40k samples", |b| {
        b.iter(|| best_report(black_box(&s), Occupations::continuous_variable()).unwrap())
    });
}

fn tomography(c: &mut Criterion) {
    let rho = tmsv(0.8, FockSpace::new(14)).unwrap().value.projector();
    let s = sample_quadratures(&rho, &phase_grid(29), 100, &NoiseModel::NONE, 3).unwrap();
    let hists = bin_samples(&s, 0.25).unwrap();
    let mut g = c.benchmark_group("ml_reconstruct");
    g.sample_size(10);
    for n_cut in [4, 8] {
        let cfg = TomographyConfig { n_cut, max_iter: 20, tol: 1e-300, ..TomographyConfig::default() };
        g.bench_with_input(BenchmarkId::new("20 iterations", n_cut), &cfg, |b, cfg| {
            b.iter(|| ml_reconstruct(&hists, cfg).unwrap())
        });
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let s = FockSpace::new(8);
    let a = phase_noisy_state(0.63, 0.36, s).unwrap().value;
    let b = tmsv(0.63, s).unwrap().value.projector();
    c.bench_function("log_negativity n_cut 8", |bch| bch.iter(|| log_negativity(black_box(&a))));
    c.bench_function("qfi_fixed_n n_cut 8", |bch| bch.iter(|| qfi_fixed_n(black_box(&a))));
    c.bench_function("fidelity_mixed n_cut 8", |bch| bch.iter(|| fidelity_mixed(black_box(&a), &b).unwrap()));
}

criterion_group!(benches, homodyne, criteria, tomography, metrics);
criterion_main!(benches);
