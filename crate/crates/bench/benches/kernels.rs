use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use figeight::loop_space::{LoopPath, Series};
use figeight::solver::{seed_figure_eight, solve, SolveConfig};
use figeight::symmetry::Projector;
use figeight::{action, bracket, gradient, hessian, spectrum, Potential};

fn eight(n: usize, pot: &Potential) -> LoopPath {
    solve(&seed_figure_eight(n), pot, &SolveConfig::default().with_projector(Projector::PD6)).unwrap().path
}

fn kernels(c: &mut Criterion) {
    let pot = Potential::homogeneous(1.0).unwrap();
    for n in [16, 32, 64] {
        let q = eight(n, &pot);
        // Any field of the right shape; the bracket cost does not depend on it.
        let v = gradient(&q, &pot).unwrap().with_coords(q.coords().map(f64::sin));
        c.bench_with_input(BenchmarkId::new("action", n), &q, |b, q| b.iter(|| action(black_box(q), &pot).unwrap()));
        c.bench_with_input(BenchmarkId::new("gradient", n), &q, |b, q| b.iter(|| gradient(black_box(q), &pot).unwrap()));
        c.bench_with_input(BenchmarkId::new("hessian", n), &q, |b, q| b.iter(|| hessian(black_box(q), &pot).unwrap()));
        c.bench_with_input(BenchmarkId::new("bracket4", n), &q, |b, q| {
            b.iter(|| bracket(black_box(q), &pot, &[&v, &v, &v, &v]).unwrap())
        });
    }
    let mut slow = c.benchmark_group("spectrum");
    slow.sample_size(10);
    for n in [16, 32] {
        let q = eight(n, &pot);
        slow.bench_with_input(BenchmarkId::from_parameter(n), &q, |b, q| b.iter(|| spectrum(black_box(q), &pot).unwrap()));
    }
    slow.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
