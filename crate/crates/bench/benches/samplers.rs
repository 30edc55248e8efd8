use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hawkes_core::kernels::KernelSpec;
use hawkes_core::simulate::{
    replica_rng, simulate_cir, simulate_cluster, simulate_thinning, DEFAULT_EVENT_CAP,
};

fn paths(c: &mut Criterion) {
    let mut g = c.benchmark_group("paths");
    let exp = KernelSpec::exponential(0.5, 1.0).unwrap();
    let ml = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    let mut rng = replica_rng(1, 0);
    g.bench_function("cluster_exponential_T1000", |b| {
        b.iter(|| {
            simulate_cluster(&exp, 1.0, black_box(1000.0), &mut rng, DEFAULT_EVENT_CAP).unwrap()
        })
    });
    g.bench_function("thinning_exponential_T1000", |b| {
        b.iter(|| simulate_thinning(&exp, 1.0, black_box(1000.0), &mut rng).unwrap())
    });
    g.bench_function("cluster_mittag_leffler_T100", |b| {
        b.iter(|| {
            simulate_cluster(&ml, 1.0, black_box(100.0), &mut rng, DEFAULT_EVENT_CAP).unwrap()
        })
    });
    g.bench_function("cir_euler_10000_steps", |b| {
        b.iter(|| simulate_cir(1.0, black_box(1.0), 1.0, 10_000, &mut rng).unwrap())
    });
    g.finish();
}

fn delays(c: &mut Criterion) {
    let mut g = c.benchmark_group("delay_sampler");
    let mut rng = replica_rng(2, 0);
    for (name, k) in [
        ("exponential", KernelSpec::exponential(0.5, 1.0).unwrap()),
        (
            "mittag_leffler",
            KernelSpec::mittag_leffler(0.5, 1.0).unwrap(),
        ),
    ] {
        let s = k.delay_sampler().unwrap();
        g.bench_function(name, |b| b.iter(|| black_box(s.sample(&mut rng))));
    }
    g.finish();
}

criterion_group!(benches, paths, delays);
criterion_main!(benches);
