use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use horoflow::horosum::j_sum_exact;
use horoflow::pressure::solve_pressure;
use horoflow::transfer::{build_operator, leading_triple};
use horoflow::{refs, BasicSet, BlMeasure, Density, JQuery, PressureConfig, SymbolGenerator, SymbolicState, Word};

fn pressure(c: &mut Criterion) {
    let cfg = PressureConfig::default();
    let mut group = c.benchmark_group("solve_pressure");
    for (name, m) in [("f2", refs::f2_unit()), ("golden_mean", refs::golden_mean()), ("gm_irr", refs::gm_irr())] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &m, |b, m| {
            b.iter(|| solve_pressure(m, black_box(&[0.7]), &cfg).unwrap())
        });
    }
    group.finish();
}

fn eigentriple(c: &mut Criterion) {
    let m = refs::golden_mean();
    let mut group = c.benchmark_group("leading_triple");
    for depth in [1usize, 4, 8] {
        let coded = m.higher_block(depth).unwrap();
        let op = build_operator(&coded, -0.3, &[0.5]).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(depth), &op, |b, op| {
            b.iter(|| leading_triple(black_box(op)).unwrap())
        });
    }
    group.finish();
}

fn preimage_sum(c: &mut Criterion) {
    let m = refs::gm_irr();
    let cfg = PressureConfig::default();
    let blm = BlMeasure::new(&m, &[0.0], &cfg, Density::Psi0).unwrap();
    let mut group = c.benchmark_group("j_sum_exact");
    for t_sharp in [5.0, 10.0, 20.0] {
        let q = JQuery {
            x_star: Word::from(vec![0]),
            xi0: vec![0],
            xi_star: vec![2],
            t_sharp,
            e: BasicSet::new(&m, Word::from(vec![0]), vec![0], 0.0, 0.6).unwrap(),
            n_max: horoflow::horosum::default_n_max(&m, t_sharp, 0.6).unwrap(),
        };
        group.bench_with_input(BenchmarkId::from_parameter(t_sharp), &q, |b, q| {
            b.iter(|| j_sum_exact(&m, &blm, black_box(q)).unwrap())
        });
    }
    group.finish();
}

fn flow(c: &mut Criterion) {
    let m = refs::golden_mean();
    let pp = solve_pressure(&m, &[0.5], &PressureConfig::default()).unwrap();
    c.bench_function("flow_advance_1000", |b| {
        b.iter_batched(
            || SymbolicState::new(&m, SymbolGenerator::gibbs_chain(&pp.gibbs, 9), vec![0], 0.0).unwrap(),
            |mut st| {
                st.advance(&m, black_box(1000.0)).unwrap();
                st
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, pressure, eigentriple, preimage_sum, flow);
criterion_main!(benches);
