use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ehm_core::operator::{rotation_at, CocycleSampler, Coupling, Variant};
use ehm_core::reducibility::{homological_solve, sigma_min, Branch, FourierSeries, SectionOptions};
use ehm_core::spectrum::{pk_growth_rate, tridiag_eigs, truncation, Flavor};
use num_complex::Complex64;

const GOLD: f64 = 0.6180339887498949;

fn model() -> Coupling {
    Coupling::new(0.2, 3.0, 0.3).unwrap()
}

fn spectrum(c: &mut Criterion) {
    let t = truncation(&model(), GOLD, 0.0, (0, 499), Flavor::Direct).unwrap();
    c.bench_function("tridiag_eigs/500", |b| b.iter(|| tridiag_eigs(black_box(&t), 1e-13).unwrap()));
    let d = model().dual();
    c.bench_function("pk_growth_rate/2000x4", |b| b.iter(|| pk_growth_rate(&d, GOLD, black_box(0.1), 2000, 4)));
}

fn cocycles(c: &mut Criterion) {
    let s = CocycleSampler::new(model(), GOLD, 1.3, Variant::ABar);
    c.bench_function("rotation_at/20000x4", |b| b.iter(|| rotation_at(black_box(&s), 20_000, 4).unwrap()));
}

fn reducibility(c: &mut Criterion) {
    let nu = FourierSeries::from_fn(|x| Complex64::new((2.0 * PI * x).cos().exp(), 0.0), 1, 64, 1024);
    c.bench_function("homological_solve/64", |b| b.iter(|| homological_solve(black_box(&nu), GOLD, 64, 1e-10).unwrap()));
    let branch = Branch { n_tilde: 1, sign: 1 };
    for k in [16, 32] {
        let so = SectionOptions::default().with_k(k);
        c.bench_function(&format!("sigma_min/K{k}"), |b| {
            b.iter(|| sigma_min(&model(), GOLD, black_box(-0.738), branch, &so).unwrap())
        });
    }
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = spectrum, cocycles, reducibility
}
criterion_main!(kernels);
