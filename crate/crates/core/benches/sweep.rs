use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rabi_balance::sweep::{run_points, Axis, Grid, PointSettings};

fn grid(n: usize) -> Grid {
    Grid {
        omega: Axis::scalar(1.0),
        lambda: Axis::range(0.0, 1.0, n).unwrap(),
        omega0: Axis::range(0.0, 2.0, n).unwrap(),
        mass: 1.0,
    }
}

fn sweep(c: &mut Criterion) {
    let settings = PointSettings::default();
    let mut group = c.benchmark_group("sweep_4x4");
    group.sample_size(10);
    let points = grid(4).points().unwrap();
    group.bench_function(BenchmarkId::new("sequential", points.len()), |b| {
        b.iter(|| run_points(&points, &settings, Some(1)).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_function(BenchmarkId::new("parallel", points.len()), |b| {
        b.iter(|| run_points(&points, &settings, None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
