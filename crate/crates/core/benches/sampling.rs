use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use reglab::error_bounds::{estimate_error_bound_primal, InequalitySystem, Scope};
use reglab::geometry::{ConvexFn, ConvexPiece, SetExpr};
use reglab::regularity::estimate_subtransversality;
use reglab::{par, Point};
use std::hint::black_box;

fn lens_pair() -> Vec<SetExpr> {
    let quadrant = ConvexPiece::hpolyhedron(
        nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        nalgebra::DVector::zeros(2),
    )
    .unwrap();
    let diag = ConvexPiece::affine(Point::zeros(2), vec![Point::from_vec(vec![1.0, -1.0])]).unwrap();
    let balls = [(1.0, 0.0), (0.0, 1.0)].map(|(a, b)| reglab::geometry::Ball::new(Point::from_vec(vec![a, b]), 1.0).unwrap());
    vec![
        SetExpr::Union(vec![quadrant.into(), diag.into()]),
        ConvexPiece::ball_intersection(balls.to_vec()).unwrap().into(),
    ]
}

fn modes(c: &mut Criterion) {
    let sets = lens_pair();
    let sys = InequalitySystem::convex(vec![
        ConvexFn::affine(Point::from_vec(vec![1.0, -1.0]), 0.0),
        ConvexFn::affine(Point::from_vec(vec![-1.0, -2.0]), 0.0),
        ConvexFn::affine(Point::from_vec(vec![1.0, 0.0]), -1.0),
    ])
    .unwrap();
    let scope = Scope::Global { center: Point::zeros(2), radius: 2.0 };
    let mut g = c.benchmark_group("estimators");
    g.sample_size(20);
    for (label, sequential) in [("parallel", false), ("sequential", true)] {
        par::set_sequential(sequential);
        g.bench_function(BenchmarkId::new("subtransversality", label), |b| {
            b.iter(|| estimate_subtransversality(black_box(&sets), &Point::zeros(2), 0.2, 256, 0).unwrap())
        });
        g.bench_function(BenchmarkId::new("error_bound_primal", label), |b| {
            b.iter(|| estimate_error_bound_primal(black_box(&sys), &scope, 512, 0).unwrap())
        });
    }
    par::set_sequential(false);
    g.finish();
}

criterion_group!(benches, modes);
criterion_main!(benches);
