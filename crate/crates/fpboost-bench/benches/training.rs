use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fpboost::boost::{fit, FPBoostConfig, InitStrategy};
use fpboost::trees::fit_tree;
use fpboost_bench::bench_dataset;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for &n in &[500usize, 2000] {
        let ds = bench_dataset(n);
        let config = FPBoostConfig {
            n_weibull: 2,
            n_loglogistic: 0,
            n_estimators: 20,
            max_depth: 2,
            learning_rate: 0.1,
            init: InitStrategy::Km,
            seed: 7,
            ..FPBoostConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("20_iterations", n), &ds, |b, ds| {
            b.iter(|| fit(black_box(&config), black_box(ds), None).unwrap())
        });
    }
    group.finish();
}

fn bench_tree(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 2000;
    let x = Array2::from_shape_fn((n, 10), |_| rng.random_range(-1.0..1.0));
    let targets: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    c.bench_function("fit_tree_depth3_2000x10", |b| {
        b.iter(|| fit_tree(black_box(x.view()), black_box(&targets), 3, 1).unwrap())
    });
}

criterion_group!(benches, bench_fit, bench_tree);
criterion_main!(benches);
