use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fjq_core::fock::{hall_pair, hall_pair_powersum, verify_hprime_relations};
use fjq_core::fq_oracle::{count_stable_pairs, y_point_count, Budget};
use fjq_core::orbit_calculus::{enumerate_theta, semismall_report};
use fjq_core::partitions::enumerate_partitions;
use fjq_core::{FramingComposition, MultiComposition, SymFunc};

fn shape(blocks: &[&[usize]]) -> MultiComposition {
    MultiComposition::new(blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
}

fn theta(c: &mut Criterion) {
    let s = shape(&[&[2, 1], &[1, 1], &[2]]);
    c.bench_function("enumerate_theta 2,1;1,1;2", |b| b.iter(|| enumerate_theta(black_box(&s), 8).unwrap()));
    let f = FramingComposition::new(vec![1, 1, 1]).unwrap();
    c.bench_function("semismall_report 2,1;1,1;2", |b| b.iter(|| semismall_report(black_box(&s), &f, 8).unwrap()));
}

fn hall(c: &mut Criterion) {
    let basis: Vec<SymFunc> = enumerate_partitions(6).into_iter().map(SymFunc::monomial).collect();
    c.bench_function("hall_pair degree 6 by margins", |b| {
        b.iter(|| basis.iter().flat_map(|f| basis.iter().map(move |g| hall_pair(f, g))).count())
    });
    c.bench_function("hall_pair degree 6 by power sums", |b| {
        b.iter(|| basis.iter().flat_map(|f| basis.iter().map(move |g| hall_pair_powersum(f, g))).count())
    });
    c.bench_function("hprime relations to degree 3", |b| b.iter(|| verify_hprime_relations(3).unwrap()));
}

fn point_counts(c: &mut Criterion) {
    let s = shape(&[&[1, 1], &[1]]);
    let f = FramingComposition::new(vec![1, 1]).unwrap();
    let budget = Budget::default();
    c.bench_function("count_stable_pairs 1,1;1 over F_2", |b| {
        b.iter(|| count_stable_pairs(black_box(&s), &f, 2, &budget).unwrap())
    });
    c.bench_function("y_point_count 1,1;1 over F_2", |b| {
        b.iter(|| y_point_count(black_box(&s), &f, 2, &budget).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = theta, hall, point_counts
}
criterion_main!(benches);
