//! Single-thread versus thread-pool timings for the parallel hot spots.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand_distr::{Distribution, StandardNormal};

use spellforge_core::cluster::{agglomerate, Linkage};
use spellforge_core::learners::{distance_matrix, gbt_fit, GbtParams};
use spellforge_core::linalg::Matrix;
use spellforge_core::selection::bootstrap_mses;
use spellforge_core::seed;

fn data(n: usize, k: usize) -> (Matrix, Vec<f64>) {
    let mut rng = seed::rng(42, &[]);
    let v: Vec<f64> = (0..n * k).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = Matrix::from_vec(n, k, v).unwrap();
    let y = (0..n).map(|i| x.get(i, 0) * x.get(i, 1) + x.get(i, 2)).collect();
    (x, y)
}

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let all = rayon::current_num_threads();
    let mut sizes = vec![1];
    if all > 1 {
        sizes.push(all);
    }
    sizes
        .into_iter()
        .map(|t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            (format!("{t}-threads"), pool)
        })
        .collect()
}

fn bench(c: &mut Criterion) {
    let (x, y) = data(1500, 8);
    let yhat: Vec<f64> = y.iter().map(|v| v * 0.9).collect();
    let params = GbtParams {
        max_splits: 4,
        n_trees: 20,
        shrinkage: 0.3,
        bag_fraction: 0.8,
        seed: 1,
    };
    let names: Vec<String> = (0..8).map(|j| format!("x{j}")).collect();
    let mut g = c.benchmark_group("parallel");
    g.sample_size(10);
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new("kernel-distances", &label), |b| {
            b.iter(|| pool.install(|| distance_matrix(&x)))
        });
        g.bench_function(BenchmarkId::new("ward", &label), |b| {
            b.iter(|| pool.install(|| agglomerate(&x, Linkage::Ward).unwrap()))
        });
        g.bench_function(BenchmarkId::new("bootstrap", &label), |b| {
            b.iter(|| pool.install(|| bootstrap_mses(&y, &yhat, 500, 7).unwrap()))
        });
        g.bench_function(BenchmarkId::new("boosting", &label), |b| {
            b.iter(|| pool.install(|| gbt_fit(&x, &y, &params, &names).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
