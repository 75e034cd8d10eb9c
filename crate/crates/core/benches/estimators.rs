//! Monte Carlo estimators on a single-thread pool against the default pool.
//!
//! `cargo bench --no-default-features` measures the sequential fallback.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hgroup::algebra::catalog;
use hgroup::manifold::ParamMap;
use hgroup::measure::{federer_density, intrinsic_measure, section_area, FedererOptions, Quadrature};
use hgroup::metrics::{DistanceKind, HomogeneousDistance};
use hgroup::{Policy, Subspace};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("1-thread", single), ("default", default)]
}

fn estimators(c: &mut Criterion) {
    let g = Arc::new(catalog::heisenberg(1).unwrap());
    let d = HomogeneousDistance::new(g.clone(), DistanceKind::Box { eps: vec![1.0, 1.0] }).unwrap();
    let s = Subspace::coordinate(&g, &[0, 2]).unwrap();
    let helix = ParamMap::parse(g.clone(), "cos(y1); sin(y1); y1", 1, &[[-1.0, 1.0]]).unwrap();
    let paraboloid = ParamMap::parse(g, "y1; y2; y1^2 + y2^2", 2, &[[-1.0, 1.0]; 2]).unwrap();
    let policy = Policy::default();
    let federer = FedererOptions {
        radii: vec![0.1, 0.01],
        samples: 50_000,
        ..FedererOptions::default()
    };

    let mut group = c.benchmark_group("estimators");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("section_area", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| section_area(&d, &s, &[0.0; 3], 200_000, 1).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("intrinsic_mc", name), &pool, |b, pool| {
            let quad = Quadrature::MonteCarlo { samples: 200_000, seed: 1 };
            b.iter(|| pool.install(|| intrinsic_measure(&paraboloid, &[[-1.0, 1.0]; 2], quad, Some(3), None, &policy).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("federer_density", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| federer_density(&helix, &d, &[0.0], &federer, &policy).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, estimators);
criterion_main!(benches);
