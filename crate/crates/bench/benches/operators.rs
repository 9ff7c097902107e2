use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use weyl_bench::fixture;
use weyl_core::extremal::{estimate_a, Ensemble, SearchConfig};
use weyl_core::operators::{
    chain_maximal, coefficients, dyadic_maximal, haar_square, hl_maximal_in, phi_partial,
};
use weyl_core::systems::build_franklin;
use weyl_core::{DyadicGrid, IndexChain, MaximalMode};

fn systems(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_franklin");
    g.sample_size(10);
    for n in [64usize, 256] {
        let grid = DyadicGrid::new(12).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| build_franklin(n, grid).unwrap())
        });
    }
}

fn projections(c: &mut Criterion) {
    let fx = fixture(true, 256, 12).unwrap();
    c.bench_function("coefficients/franklin256", |b| {
        b.iter(|| coefficients(&fx.f, &fx.system).unwrap())
    });
    c.bench_function("phi_partial/franklin256", |b| {
        b.iter(|| phi_partial(&fx.a, &fx.system, 8).unwrap())
    });
    let order: Vec<usize> = (2..=256).rev().collect();
    let chain = IndexChain::from_order(&order).unwrap();
    c.bench_function("chain_maximal/franklin256", |b| {
        b.iter(|| chain_maximal(&fx.a, &fx.system, &chain).unwrap())
    });
}

fn maximal(c: &mut Criterion) {
    let fx = fixture(false, 1024, 12).unwrap();
    c.bench_function("dyadic_maximal/J12", |b| b.iter(|| dyadic_maximal(&fx.f)));
    c.bench_function("haar_square/J12", |b| b.iter(|| haar_square(&fx.f)));
    let mut g = c.benchmark_group("hl_maximal/J12");
    g.sample_size(10);
    for mode in [MaximalMode::Window, MaximalMode::Exact] {
        g.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| hl_maximal_in(&fx.f, 2.0, mode).unwrap())
        });
    }
}

fn search(c: &mut Criterion) {
    let fx = fixture(false, 256, 8).unwrap();
    let mut g = c.benchmark_group("estimate_a/haar");
    g.sample_size(10);
    for n in [16usize, 64] {
        let cfg = SearchConfig {
            n,
            restarts: 4,
            ensemble: Ensemble::Blocks,
            ..Default::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| estimate_a(&fx.system, cfg).unwrap())
        });
    }
}

criterion_group!(benches, systems, projections, maximal, search);
criterion_main!(benches);
