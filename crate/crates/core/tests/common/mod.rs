// Fixtures shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use reglab::error_bounds::InequalitySystem;
use reglab::geometry::{Ball, ConvexFn, ConvexPiece, SetExpr, SmoothMap};
use reglab::scenario::{preset, PresetParams};
use reglab::Point;
use std::collections::BTreeMap;

pub fn p(v: &[f64]) -> Point {
    Point::from_vec(v.to_vec())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(r: &mut ChaCha8Rng, n: usize) -> Point {
    Point::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal))
}

pub fn unit(r: &mut ChaCha8Rng, n: usize) -> Point {
    gaussian(r, n).normalize()
}

pub fn preset_sets(name: &str) -> BTreeMap<String, SetExpr> {
    preset_with(name, &PresetParams::new()).build().expect("preset builds").sets
}

pub fn preset_with(name: &str, params: &PresetParams) -> reglab::scenario::Scenario {
    preset(name, params).expect("known preset")
}

pub fn pair(name: &str) -> Vec<SetExpr> {
    let s = preset_sets(name);
    vec![s["A1"].clone(), s["A2"].clone()]
}

pub fn line2(theta_deg: f64) -> SetExpr {
    let t = theta_deg.to_radians();
    ConvexPiece::affine(Point::zeros(2), vec![p(&[t.cos(), t.sin()])]).unwrap().into()
}

pub fn halfspace(a: Point, b: f64) -> SetExpr {
    ConvexPiece::halfspace(a, b).unwrap().into()
}

pub fn ball(c: Point, r: f64) -> SetExpr {
    ConvexPiece::ball(c, r).unwrap().into()
}

/// Rotation of ℝⁿ from a QR factorization of a Gaussian matrix.
pub fn random_rotation(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..n {
        if rr[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

/// Applies `x ↦ Qx + t` to a set built from halfspaces, balls, affine sets and unions thereof.
pub fn moved(set: &SetExpr, q: &DMatrix<f64>, t: &Point) -> SetExpr {
    match set {
        SetExpr::Convex(piece) => SetExpr::Convex(match piece {
            ConvexPiece::Halfspace { a, b } => {
                let qa = q * a;
                ConvexPiece::halfspace(qa.clone(), b + qa.dot(t)).unwrap()
            }
            ConvexPiece::HPolyhedron { a, b } => {
                let qa = a * q.transpose();
                let shift = &qa * t;
                ConvexPiece::hpolyhedron(qa, b + shift).unwrap()
            }
            ConvexPiece::VCone { generators, apex } => ConvexPiece::vcone(generators.iter().map(|g| q * g).collect(), q * apex + t).unwrap(),
            ConvexPiece::Ball(bl) => ConvexPiece::ball(q * &bl.center + t, bl.radius).unwrap(),
            ConvexPiece::BallIntersection { balls } => {
                ConvexPiece::ball_intersection(balls.iter().map(|b| Ball::new(q * &b.center + t, b.radius).unwrap()).collect()).unwrap()
            }
            ConvexPiece::AffineSet { base, basis } => ConvexPiece::affine(q * base + t, basis.iter().map(|v| q * v).collect()).unwrap(),
            other => panic!("no rigid motion for {other:?}"),
        }),
        SetExpr::Union(v) => SetExpr::Union(v.iter().map(|s| moved(s, q, t)).collect()),
        other => panic!("no rigid motion for {other:?}"),
    }
}

/// A convex polyhedral set in ℝ³ containing the origin, drawn from a few families.
pub fn random_polyhedron3(r: &mut ChaCha8Rng) -> SetExpr {
    match r.random_range(0..4) {
        0 => halfspace(unit(r, 3), 0.0),
        1 => {
            let k = r.random_range(2..=3);
            let rows: Vec<Point> = (0..k).map(|_| unit(r, 3)).collect();
            // some rows pass through the origin, the others leave it interior
            let b = DVector::from_fn(k, |i, _| if i == 0 || r.random_bool(0.6) { 0.0 } else { r.random_range(0.05..0.5) });
            let a = DMatrix::from_fn(k, 3, |i, j| rows[i][j]);
            ConvexPiece::hpolyhedron(a, b).unwrap().into()
        }
        2 => {
            let k = r.random_range(1..=2);
            ConvexPiece::affine(Point::zeros(3), (0..k).map(|_| unit(r, 3)).collect()).unwrap().into()
        }
        _ => {
            let k = r.random_range(1..=3);
            ConvexPiece::vcone((0..k).map(|_| unit(r, 3)).collect(), Point::zeros(3)).unwrap().into()
        }
    }
}

pub fn random_polyhedral_pair(seed: u64) -> Vec<SetExpr> {
    let mut r = rng(0x5eed_0000 + seed);
    vec![random_polyhedron3(&mut r), random_polyhedron3(&mut r)]
}

/// Pairs of convex sets touching at the origin only tangentially.
pub fn tangential_pairs() -> Vec<(String, Vec<SetExpr>)> {
    let mut out = Vec::new();
    let mut r = rng(0x7a9);
    for (k, rad) in [(0usize, 1.0), (1, 0.5), (2, 2.0)] {
        let u = unit(&mut r, 3);
        out.push((format!("external balls {k}"), vec![ball(&u * rad, rad), ball(&u * -1.3, 1.3)]));
    }
    for (k, rad) in [(0usize, 1.0), (1, 0.3), (2, 3.0)] {
        let u = unit(&mut r, 3);
        out.push((format!("ball on plane {k}"), vec![ball(&u * rad, rad), halfspace(u.clone(), 0.0)]));
    }
    out.push(("disks in the plane".into(), vec![ball(p(&[0.0, 1.0]), 1.0), ball(p(&[0.0, -2.0]), 2.0)]));
    out.push(("disk on a line".into(), vec![ball(p(&[0.0, 1.0]), 1.0), line2(0.0)]));
    out.push(("disk on a halfplane".into(), vec![ball(p(&[1.0, 1.0]).normalize() * 0.7, 0.7), halfspace(p(&[1.0, 1.0]), 0.0)]));
    let u = unit(&mut r, 3);
    let v = {
        let w = unit(&mut r, 3);
        (&w - &u * w.dot(&u)).normalize()
    };
    let plane: SetExpr = ConvexPiece::affine(Point::zeros(3), vec![v, u.cross(&unit(&mut r, 3)).normalize()]).unwrap().into();
    // a ball resting on a plane through the origin, touching it at 0
    let plane_normal = match &plane {
        SetExpr::Convex(ConvexPiece::AffineSet { basis, .. }) => basis[0].cross(&basis[1]).normalize(),
        _ => unreachable!(),
    };
    out.push(("ball on embedded plane".into(), vec![ball(&plane_normal * 0.8, 0.8), plane]));
    out
}

pub fn coord(n: usize, i: usize, s: f64) -> ConvexFn {
    let mut a = Point::zeros(n);
    a[i] = s;
    ConvexFn::affine(a, 0.0)
}

pub fn aff(a: &[f64], b: f64) -> ConvexFn {
    ConvexFn::affine(p(a), b)
}

pub fn quad(diag: &[f64], c: &[f64], d: f64) -> ConvexFn {
    ConvexFn::quadratic(DMatrix::from_diagonal(&DVector::from_row_slice(diag)), p(c), d).unwrap()
}

pub fn map(n: usize, comps: &[&str]) -> SmoothMap {
    SmoothMap::from_strings(n, comps).unwrap()
}

pub struct CorpusEntry {
    pub name: &'static str,
    pub system: InequalitySystem,
    pub xbar: Point,
    /// Whether the system has a local error bound at `xbar`.
    pub bounded: bool,
}

fn entry(name: &'static str, system: InequalitySystem, xbar: &[f64], bounded: bool) -> CorpusEntry {
    CorpusEntry { name, system, xbar: p(xbar), bounded }
}

pub fn convex_corpus() -> Vec<CorpusEntry> {
    let cv = |g: Vec<ConvexFn>| InequalitySystem::convex(g).unwrap();
    let max3 = ConvexFn::max_affine(DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, -1.0, 1.0]), DVector::zeros(3)).unwrap();
    vec![
        entry("halfplane", cv(vec![coord(2, 0, 1.0)]), &[0.0, 0.0], true),
        entry("crossing halfplanes", cv(vec![aff(&[1.0, -1.0], 0.0), aff(&[-1.0, -2.0], 0.0)]), &[0.0, 0.0], true),
        entry("three halfplanes", cv(vec![aff(&[1.0, -1.0], 0.0), aff(&[-1.0, -2.0], 0.0), aff(&[1.0, 0.0], -1.0)]), &[0.0, 0.0], true),
        entry(
            "max of coordinates",
            cv(vec![ConvexFn::max_affine(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap()]),
            &[0.0, 0.0],
            true,
        ),
        entry("disk", cv(vec![quad(&[2.0, 2.0], &[0.0, 0.0], -1.0)]), &[1.0, 0.0], true),
        entry("disk and halfplane", cv(vec![quad(&[2.0, 2.0], &[0.0, -2.0], 0.0), aff(&[1.0, -1.0], 0.0)]), &[0.0, 0.0], true),
        entry("octant", cv(vec![coord(3, 0, 1.0), coord(3, 1, 1.0), coord(3, 2, 1.0)]), &[0.0, 0.0, 0.0], true),
        entry("plane as two inequalities", cv(vec![aff(&[1.0, -1.0, 0.0], 0.0), aff(&[-1.0, 1.0, 0.0], 0.0)]), &[0.0, 0.0, 0.0], true),
        entry("ball and halfspace", cv(vec![quad(&[2.0, 2.0, 2.0], &[0.0, 0.0, 0.0], -1.0), coord(3, 2, 1.0)]), &[1.0, 0.0, 0.0], true),
        entry("steep halfplane", cv(vec![aff(&[100.0, 0.0], 0.0)]), &[0.0, 0.0], true),
        entry("squared constraint", cv(vec![quad(&[2.0, 0.0], &[0.0, 0.0], 0.0)]), &[0.0, 0.0], false),
        entry("polyhedral max", cv(vec![max3]), &[0.0, 0.0, 0.0], true),
    ]
}

pub fn composite_corpus() -> Vec<CorpusEntry> {
    let cp = |m: SmoothMap, g: Vec<ConvexFn>| InequalitySystem::composite(m, g).unwrap();
    let parabola = || map(2, &["x1 + x2^2", "x2"]);
    vec![
        entry("bent crossing", cp(parabola(), vec![coord(2, 0, 1.0), aff(&[-1.0, 1.0], 0.0)]), &[0.0, 0.0], true),
        entry(
            "bent max",
            cp(parabola(), vec![ConvexFn::max_affine(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap()]),
            &[0.0, 0.0],
            true,
        ),
        entry("sine shear", cp(map(2, &["sin(x1) + x2", "x2"]), vec![coord(2, 0, 1.0), coord(2, 1, 1.0)]), &[0.0, 0.0], true),
        entry("exponential", cp(map(2, &["exp(x1) - 1", "x2 + x1^2"]), vec![coord(2, 0, 1.0)]), &[0.0, 0.0], true),
        entry(
            "linear pullback",
            cp(map(2, &["2*x1 + x2", "x1 - x2"]), vec![aff(&[1.0, -1.0], 0.0), aff(&[-1.0, -2.0], 0.0)]),
            &[0.0, 0.0],
            true,
        ),
        entry("squared pullback", cp(parabola(), vec![quad(&[2.0, 0.0], &[0.0, 0.0], 0.0)]), &[0.0, 0.0], false),
        entry("rank-deficient", cp(map(2, &["x1^2", "x2"]), vec![coord(2, 0, 1.0)]), &[0.0, 0.0], false),
        entry(
            "three-dimensional",
            cp(map(3, &["x1 + x2*x3", "x2", "x3 + x1^2"]), vec![coord(3, 0, 1.0), coord(3, 1, 1.0)]),
            &[0.0, 0.0, 0.0],
            true,
        ),
    ]
}

/// A smooth map of ℝⁿ and a max-affine function with `k` pieces active at `f(x)`.
pub fn random_composite(seed: u64) -> (ConvexFn, SmoothMap, Point) {
    let mut r = rng(0xc0 + seed);
    let mut c = || format!("({:.3})", r.random_range(-1.0..1.0));
    let (n, comps): (usize, Vec<String>) = match seed % 4 {
        0 => (2, vec![format!("x1 + {}*x2^2", c()), format!("x2 + {}*sin(x1)", c())]),
        1 => (2, vec![format!("exp({}*x1) + x2", c()), format!("x1*x2 + {}*x2 + x1", c())]),
        2 => (3, vec![format!("x1 + {}*x2*x3", c()), format!("cos(x2) + {}*x3", c()), format!("x3^3 + {}*x1 + x2", c())]),
        _ => (3, vec![format!("sin(x1 + x2) + {}*x3", c()), format!("x2 - {}*x1^2", c()), format!("exp(x3) + {}*x1*x2", c())]),
    };
    let f = SmoothMap::from_strings(n, &comps).unwrap();
    let x = gaussian(&mut r, n) * 0.3;
    let y = f.eval(&x);
    let pieces = r.random_range(2..=4);
    let active = r.random_range(1..=pieces.min(3));
    let rows: Vec<Point> = (0..pieces).map(|_| gaussian(&mut r, n)).collect();
    let a = DMatrix::from_fn(pieces, n, |i, j| rows[i][j]);
    let b = DVector::from_fn(pieces, |i, _| {
        let base = -rows[i].dot(&y);
        if i < active {
            base
        } else {
            base - r.random_range(0.1..1.0)
        }
    });
    (ConvexFn::max_affine(a, b).unwrap(), f, x)
}

/// One-sided directional derivative of `g∘f` at `x` along `u`, Richardson-extrapolated.
pub fn fd_directional(g: &ConvexFn, f: &SmoothMap, x: &Point, u: &Point) -> f64 {
    let phi = |t: f64| g.eval(&f.eval(&(x + u * t)));
    let h = 1e-5;
    let d = |h: f64| (phi(h) - phi(0.0)) / h;
    2.0 * d(h / 2.0) - d(h)
}
