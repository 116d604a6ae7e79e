use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use treelab::actions::{cayley_ball, orbital_ball};
use treelab::confinement::{check_confining, named_words};
use treelab::{load_group, OracleSpec, Ray, SubgroupOracle};

fn compose(c: &mut Criterion) {
    let g = load_group("grigorchuk").unwrap();
    let x = g.eval_str("abacabadabac").unwrap();
    let y = g.eval_str("dabacabadaca").unwrap();
    c.bench_function("compose/grigorchuk", |b| b.iter(|| black_box(&x).compose(black_box(&y)).unwrap()));
    let am = load_group("adding_machine").unwrap();
    let a = am.generator("a").unwrap().clone();
    let a8 = (0..8).fold(am.identity(), |acc, _| acc.compose(&a).unwrap());
    c.bench_function("compose/adding_machine", |b| b.iter(|| black_box(&a8).compose(black_box(&a8)).unwrap()));
}

fn balls(c: &mut Criterion) {
    let g = load_group("grigorchuk").unwrap();
    let mut group = c.benchmark_group("cayley_ball");
    for r in [4, 6, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, &r| b.iter(|| cayley_ball(&g, r).unwrap()));
    }
    group.finish();
    let x = Ray::constant(1);
    let mut group = c.benchmark_group("orbital_ball");
    for r in [16, 64, 256] {
        group.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, &r| b.iter(|| orbital_ball(&g, &x, r).unwrap()));
    }
    group.finish();
}

fn confining(c: &mut Criterion) {
    let g = load_group("grigorchuk").unwrap();
    let p = named_words(&g, &["b".into(), "c".into(), "d".into()]).unwrap();
    let h = [SubgroupOracle::new(&g, OracleSpec::PointStabilizer { ray: Ray::constant(1) }).unwrap()];
    let mut group = c.benchmark_group("check_confining");
    group.sample_size(10);
    group.bench_function("point_stabilizer/L=8", |b| b.iter(|| check_confining(&p, &h, &g, 8).unwrap()));
    group.finish();
}

criterion_group!(benches, compose, balls, confining);
criterion_main!(benches);
