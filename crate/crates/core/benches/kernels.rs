//! Sequential against parallel execution of the main kernels.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use divmoment::arith::sieve_divisors;
use divmoment::moments::{main_quadruple, moment_integral, Family, MomentOptions, MomentSpec, Resources};
use divmoment::quadruples::{count_inequality, scan_gap, CountOptions};
use divmoment::Exec;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn direct_moment(c: &mut Criterion) {
    let table = sieve_divisors(300_000).unwrap();
    let spec = MomentSpec::new(Family::Delta, 4, 1e5, 1e5, 177.0).unwrap();
    let mut group = c.benchmark_group("direct_moment");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = MomentOptions {
            exec,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| moment_integral(black_box(&spec), &Resources::with_table(&table), opts).unwrap())
        });
    }
    group.finish();
}

fn main_term(c: &mut Criterion) {
    let table = sieve_divisors(1000).unwrap();
    let spec = MomentSpec::new(Family::Delta, 4, 1e6, 1e6, 500.0)
        .unwrap()
        .with_y_const(50.0)
        .unwrap();
    let mut group = c.benchmark_group("main_quadruple");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| b.iter(|| main_quadruple(black_box(&spec), &table, exec).unwrap()));
    }
    group.finish();
}

fn combinatorics(c: &mut Criterion) {
    let mut group = c.benchmark_group("combinatorics");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(format!("scan_gap_60/{name}"), |b| b.iter(|| scan_gap(black_box(60), exec).unwrap()));
        let opts = CountOptions {
            exec,
            ..Default::default()
        };
        group.bench_function(format!("count_64/{name}"), |b| {
            b.iter(|| count_inequality(black_box(64), 0.01, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, direct_moment, main_term, combinatorics);
criterion_main!(benches);
