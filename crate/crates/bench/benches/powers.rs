use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pam_bench::{random_graph, relation_primes};
use pam_core::bop::{bop_nodes, fit_tfidf};
use pam_core::lossless::lossless_power;
use pam_core::pam::{build_pam, power};
use pam_core::{LosslessOptions, LosslessPam, Pam, PamMode, TfIdfParams};

fn sum_powers(c: &mut Criterion) {
    let mut group = c.benchmark_group("sum_power_k4");
    group.sample_size(10);
    for nodes in [1_000, 10_000] {
        let g = random_graph(nodes, 2 * nodes, 10, 7);
        let (dict, _) = relation_primes(&g);
        let p1: Pam = build_pam(&g, &dict.relation_primes(), PamMode::Sum).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &p1, |b, p1| b.iter(|| power(p1, 4).unwrap()));
    }
    group.finish();
}

fn lossless_powers(c: &mut Criterion) {
    let g = random_graph(500, 1_000, 4, 7);
    let (dict, stream) = relation_primes(&g);
    let l1 = LosslessPam::from_graph(&g, &dict).unwrap();
    let opts = LosslessOptions::default();
    c.bench_function("lossless_power_k3", |b| {
        b.iter(|| lossless_power(&l1, &dict, 3, &mut stream.clone(), &opts).unwrap())
    });
}

fn bags_and_tfidf(c: &mut Criterion) {
    let g = random_graph(5_000, 10_000, 10, 7);
    let (dict, _) = relation_primes(&g);
    let p1: Pam = build_pam(&g, &dict.relation_primes(), PamMode::Sum).unwrap();
    let ps = power(&p1, 3).unwrap();
    c.bench_function("bop_nodes_k3", |b| b.iter(|| bop_nodes(&ps)));
    let bags = bop_nodes(&ps);
    c.bench_function("fit_tfidf", |b| b.iter(|| fit_tfidf(&bags, TfIdfParams::default()).unwrap()));
}

criterion_group!(benches, sum_powers, lossless_powers, bags_and_tfidf);
criterion_main!(benches);
