use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use heightfrag::measure::{dislocation_mc, phi_levy_integral, DislocationFunctional};
use heightfrag::partition::{enumerate_set_partitions, rho_minus};
use heightfrag::special::positive_stable_density;
use heightfrag::subordinator::{sample_jump_field, ConditionedJumpSampler, StableSampler};
use heightfrag::tree::{GwTreeSampler, RootMarkSampler, SkeletonTable};
use heightfrag::{Alpha, RngStream};

fn alpha() -> Alpha {
    Alpha::new(1.5).unwrap()
}

fn densities(c: &mut Criterion) {
    let mut g = c.benchmark_group("density");
    for u in [0.05, 1.0, 50.0] {
        g.bench_with_input(BenchmarkId::new("positive_stable", u), &u, |b, &u| {
            b.iter(|| positive_stable_density(2.0 / 3.0, 1.0, black_box(u)).unwrap())
        });
    }
    g.bench_function("phi_levy_integral", |b| b.iter(|| phi_levy_integral(black_box(2.0), alpha()).unwrap()));
    g.bench_function("rho_minus_n7", |b| {
        let parts = enumerate_set_partitions(7).unwrap();
        b.iter(|| parts.iter().filter(|p| !p.is_trivial()).map(|p| rho_minus(p, alpha()).unwrap()).sum::<f64>())
    });
    g.finish();
}

fn samplers(c: &mut Criterion) {
    let al = alpha();
    let mut g = c.benchmark_group("sampler");
    let stable = StableSampler::new(2.0 / 3.0).unwrap();
    let mut rng = RngStream::new(1, 0);
    g.bench_function("stable", |b| b.iter(|| stable.sample(&mut rng)));
    for eps in [1e-2, 1e-4, 1e-6] {
        g.bench_with_input(BenchmarkId::new("jump_field", eps), &eps, |b, &eps| {
            b.iter(|| sample_jump_field(al, 1.0, eps, &mut rng).unwrap())
        });
    }
    let conditioned = ConditionedJumpSampler::new(al).unwrap();
    g.bench_function("conditioned_k64", |b| b.iter(|| conditioned.sample(1.0, 1.0, 64, 1e-3, &mut rng).unwrap()));
    let marks = RootMarkSampler::new(al).unwrap();
    g.bench_function("root_mark", |b| b.iter(|| marks.sample(&mut rng)));
    let table = SkeletonTable::new(6, al).unwrap();
    g.bench_function("skeleton_n6", |b| b.iter(|| table.sample_index(&mut rng)));
    let gw = GwTreeSampler::new(al);
    for n in [1_000, 20_000] {
        g.bench_with_input(BenchmarkId::new("gw_tree", n), &n, |b, &n| b.iter(|| gw.sample(n, &mut rng).unwrap()));
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("dislocation_mc");
    g.sample_size(10);
    let rng = RngStream::new(1, 1);
    g.bench_function("power_sum_1000", |b| {
        b.iter(|| dislocation_mc(DislocationFunctional::PowerSum { r: 1.0 }, alpha(), 1000, 1e-6, &rng).unwrap())
    });
    g.finish();
}

criterion_group!(benches, densities, samplers, monte_carlo);
criterion_main!(benches);
