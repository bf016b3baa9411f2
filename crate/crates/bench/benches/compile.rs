use std::f64::consts::PI;

use abab_bench::pair;
use abab_core::linalg::rotation_operator;
use abab_core::{compile_gate, search_nnor, AxisAngle, CompileOptions, GateKind, GateSpec, SearchConfig};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn compiler(c: &mut Criterion) {
    let p = pair();
    let opts = CompileOptions::for_pair(&p);
    let u = rotation_operator(&AxisAngle::new([0.6, 0.0, 0.8], 2.1).unwrap()) * rotation_operator(&AxisAngle::z(0.7));

    c.bench_function("compile/hadamard", |b| {
        b.iter(|| compile_gate(black_box(&GateSpec::new(GateKind::Hadamard, opts)), &p))
    });
    c.bench_function("compile/ry-pi", |b| {
        b.iter(|| compile_gate(black_box(&GateSpec::new(GateKind::RotationY(PI), opts)), &p))
    });
    c.bench_function("compile/arbitrary", |b| {
        b.iter(|| compile_gate(black_box(&GateSpec::new(GateKind::Arbitrary(u.clone()), opts)), &p))
    });
    c.bench_function("compile/arbitrary+sync", |b| {
        let synced = opts.with_frame_sync(true);
        b.iter(|| compile_gate(black_box(&GateSpec::new(GateKind::Arbitrary(u.clone()), synced)), &p))
    });
}

fn nnor(c: &mut Criterion) {
    let p = pair();
    let mut group = c.benchmark_group("nnor");
    group.sample_size(10);
    for seeds in [8usize, 64] {
        let config = SearchConfig {
            seeds,
            rng_seed: 7,
            ..SearchConfig::for_pair(&p)
        };
        group.bench_function(format!("search/{seeds}-seeds"), |b| b.iter(|| search_nnor(&p, &config)));
    }
    group.finish();
}

criterion_group!(benches, compiler, nnor);
criterion_main!(benches);
