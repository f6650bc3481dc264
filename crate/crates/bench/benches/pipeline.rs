use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use kplate::estimator::compute_indicators;
use kplate::shear::recover_shear;
use kplate::solve::{solve_system, SolveOptions};
use kplate::Solution;
use kplate_bench::Fixture;

fn pipeline(c: &mut Criterion) {
    let fx = Fixture::clamped(16, 2);
    let mut group = c.benchmark_group("clamped 16x16 k=2");
    group.sample_size(20);

    group.bench_function("assemble", |b| b.iter(|| fx.system()));

    let sys = fx.system();
    let opts = SolveOptions::default();
    group.bench_function("solve", |b| {
        b.iter(|| solve_system(&sys, &opts).expect("solve"))
    });

    let (x, report) = solve_system(&sys, &opts).expect("solve");
    let sol = Solution::from_reduced(
        Arc::clone(&fx.mesh),
        Arc::new(fx.space.clone()),
        fx.case.material,
        fx.stab,
        &x,
        report,
    );
    group.bench_function("indicators", |b| {
        b.iter(|| {
            let q = recover_shear(&sol);
            compute_indicators(&sol, &q, fx.case.load.as_ref())
        })
    });
    group.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
