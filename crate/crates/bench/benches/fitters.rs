use std::hint::black_box;

use acme_eqtl::model::{fit_acme, fit_acme_generic, fit_log_linear, FitOptions, GenePair};
use acme_eqtl::simulation::{simulate_acme_pair, stream_rng, GenotypeSource, SimConfig};
use criterion::{criterion_group, criterion_main, Criterion};

/// Pairs at the default simulation size, effect sizes cycling through the grid.
fn pairs(count: u64) -> Vec<GenePair> {
    let cfg = SimConfig::default();
    (0..count)
        .map(|k| {
            let eta = cfg.eta_grid[k as usize % cfg.eta_grid.len()];
            simulate_acme_pair(&cfg, eta, &GenotypeSource::Hwe(cfg.maf), None, &mut stream_rng(cfg.seed, k))
                .expect("simulated pair")
                .pair
        })
        .collect()
}

fn fitters(c: &mut Criterion) {
    let data = pairs(64);
    let opts = FitOptions::default();
    let mut group = c.benchmark_group("fit_64_pairs");
    group.bench_function("log_linear_ols", |b| {
        b.iter(|| {
            for pair in &data {
                black_box(fit_log_linear(pair).ok());
            }
        })
    });
    group.bench_function("acme_profiled", |b| {
        b.iter(|| {
            for pair in &data {
                black_box(fit_acme(pair, &opts).ok());
            }
        })
    });
    group.sample_size(10);
    group.bench_function("acme_generic_bfgs", |b| {
        b.iter(|| {
            for pair in &data {
                black_box(fit_acme_generic(pair).ok());
            }
        })
    });
    group.finish();
}

criterion_group!(benches, fitters);
criterion_main!(benches);
