use criterion::{criterion_group, criterion_main, Criterion};
use hzfem::solver::solve_saddle;
use hzfem_bench::{disk, system};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for m in [1, 3] {
        let disc = disk(1.0 / 6.0, m);
        group.bench_function(format!("disk_h6_m{m}"), |b| b.iter(|| system(&disc)));
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for h in [6.0, 12.0] {
        let sys = system(&disk(1.0 / h, 2));
        group.bench_function(format!("disk_h{h}_m2"), |b| b.iter(|| solve_saddle(&sys, 1e-10).expect("solve")));
    }
    group.finish();
}

criterion_group!(benches, assembly, solve);
criterion_main!(benches);
