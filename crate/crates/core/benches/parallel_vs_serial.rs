//! Compares the rayon-parallel code paths against single-threaded
//! execution of the same code (a one-thread pool), on the three
//! data-parallel hot spots: QMC integration, model-grid sweeps, and
//! batch factorization.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wellfactor::exponents::ExponentConfig;
use wellfactor::factorize::{factorize_well, sample_guaranteed};
use wellfactor::integrals::{integral_in, QuadratureSpec, SieveParams};
use wellfactor::model::{iterate_e, ModelGrid, Variant};
use wellfactor::parallel;

fn single_thread_pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
}

/// Parameter box with nonzero 5-dimensional support, so the QMC loop
/// does real work.
fn qmc_params() -> SieveParams {
    SieveParams {
        rho: 0.17,
        rho_prime: 0.1,
        tau1: 0.11,
        mu: 0.12,
        tau2: 0.125,
        tau3: 0.13,
        eps: 0.002,
    }
}

fn bench_qmc(c: &mut Criterion) {
    let p = qmc_params();
    let spec = QuadratureSpec {
        qmc_points: 1_000_000,
        ..QuadratureSpec::default()
    };
    let single = single_thread_pool();
    let mut group = c.benchmark_group("qmc_i20_1e6");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| integral_in(20, &p, &spec).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| single.install(|| integral_in(20, &p, &spec).unwrap()))
    });
    group.finish();
}

fn bench_model_sweeps(c: &mut Criterion) {
    let single = single_thread_pool();
    let mk = || ModelGrid::new(3.0, 6.0, 0.02, 7.0 / 32.0, Variant::Plain).unwrap();
    let mut group = c.benchmark_group("model_fixed_point_0.02");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter_batched(
            mk,
            |g| iterate_e(g, 10_000, 1e-9).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("sequential", |b| {
        b.iter_batched(
            mk,
            |g| single.install(|| iterate_e(g, 10_000, 1e-9).unwrap()),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn factorize_batch(n: usize) -> usize {
    let cfg = ExponentConfig::default();
    parallel::map_indexed(n, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let inst = sample_guaranteed(&mut rng, &cfg, 12);
        usize::from(factorize_well(&inst).is_ok())
    })
    .iter()
    .sum()
}

fn bench_factorization(c: &mut Criterion) {
    let single = single_thread_pool();
    let mut group = c.benchmark_group("factorize_10k_instances");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| factorize_batch(10_000)));
    group.bench_function("sequential", |b| {
        b.iter(|| single.install(|| factorize_batch(10_000)))
    });
    group.finish();
}

criterion_group!(benches, bench_qmc, bench_model_sweeps, bench_factorization);
criterion_main!(benches);
