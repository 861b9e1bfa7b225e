//! Parallel-versus-sequential throughput comparison for the sweeps that fan
//! out over rayon: identity checking, the homogeneity checker, and the
//! spined decomposition. The "sequential" rows disable the parallel paths at
//! runtime via `exec::force_sequential`, so one build measures both modes.

use std::hint::black_box;

use bandkit::construct::{build_d_covering_chain, build_direct, build_semilattice_band};
use bandkit::decomp::spined_decompose;
use bandkit::exec;
use bandkit::homog::is_homogeneous;
use bandkit::variety::{satisfies_identity, Identity};
use bandkit::FiniteBand;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, bool); 2] = [("parallel", false), ("sequential", true)];

fn two_chain() -> FiniteBand {
    build_semilattice_band(2, &[(0, 1)]).expect("two-element chain")
}

fn bench_identity_sweep(c: &mut Criterion) {
    let band = build_d_covering_chain(3, 2, 2).expect("12-element regular band");
    let regular = Identity::parse("zxzyz=zxyz").expect("regular identity");
    let mut group = c.benchmark_group("identity_sweep");
    for (mode, force) in MODES {
        group.bench_function(BenchmarkId::new("regular_on_d_chain_12", mode), |b| {
            exec::force_sequential(force);
            b.iter(|| satisfies_identity(black_box(&band), black_box(&regular)));
            exec::force_sequential(false);
        });
    }
    group.finish();
}

fn bench_homogeneity(c: &mut Criterion) {
    let band = build_direct(&two_chain(), 2, 2).expect("8-element normal band");
    let mut group = c.benchmark_group("homogeneity");
    group.sample_size(30);
    for (mode, force) in MODES {
        group.bench_function(BenchmarkId::new("direct_product_8", mode), |b| {
            exec::force_sequential(force);
            b.iter(|| is_homogeneous(black_box(&band)));
            exec::force_sequential(false);
        });
    }
    group.finish();
}

fn bench_spined_decomposition(c: &mut Criterion) {
    let band = build_d_covering_chain(3, 2, 2).expect("12-element regular band");
    let mut group = c.benchmark_group("spined_decomposition");
    for (mode, force) in MODES {
        group.bench_function(BenchmarkId::new("d_chain_12", mode), |b| {
            exec::force_sequential(force);
            b.iter(|| spined_decompose(black_box(&band)).expect("chain is regular"));
            exec::force_sequential(false);
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_identity_sweep,
    bench_homogeneity,
    bench_spined_decomposition
);
criterion_main!(benches);
