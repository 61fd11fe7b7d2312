use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dwlab::floquet::FloquetOptions;
use dwlab::spectral::{splitting_curve, PotentialSpec};
use dwlab::sweep::{grid, run, SweepOptions};
use std::hint::black_box;

fn floquet_sweep(c: &mut Criterion) {
    let pts = grid(&[1e-2, 3e-3, 1e-3, 3e-4], &[0.8, 0.9], &[1.2, 2.0], &[6.0]);
    let base = SweepOptions { floquet: Some(FloquetOptions { tol: 1e-12, grid: 64, bound_c: 10.0 }), ..Default::default() };
    let mut g = c.benchmark_group("floquet_sweep");
    g.sample_size(10);
    for parallel in [false, true] {
        let opts = SweepOptions { parallel, ..base };
        let name = if parallel { "parallel" } else { "sequential" };
        g.bench_with_input(BenchmarkId::new(name, pts.len()), &opts, |b, o| b.iter(|| run(black_box(&pts), o)));
    }
    g.finish();
}

fn splitting(c: &mut Criterion) {
    let spec = PotentialSpec::poschl_teller(6.0);
    let ells = [4.0, 5.0, 6.0, 7.0, 8.0];
    let mut g = c.benchmark_group("splitting_curve");
    g.sample_size(10);
    g.bench_function(if dwlab::par::is_parallel() { "parallel" } else { "sequential" }, |b| {
        b.iter(|| splitting_curve(&spec, black_box(&ells), 22.0, 0.1).unwrap())
    });
    g.finish();
}

criterion_group!(benches, floquet_sweep, splitting);
criterion_main!(benches);
