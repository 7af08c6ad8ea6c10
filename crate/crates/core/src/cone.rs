//! Finitely generated convex cones.
//!
//! Cones are held in V-representation. Polars go through a double
//! description pass; intersections are polars of sums of polars.
//! Decomposition moduli are computed from their dual form
//!
//! ```text
//! inf { maxᵢ ‖vᵢ‖ : vᵢ ∈ Pᵢ, Σ vᵢ = v } = 1 / min { Σᵢ ‖P_{Pᵢ} y‖ : ⟨v, y⟩ = 1 }
//! inf { Σᵢ ‖vᵢ‖  : vᵢ ∈ Pᵢ, Σ vᵢ = v } = 1 / min { maxᵢ ‖P_{Pᵢ} y‖ : ⟨v, y⟩ = 1 }
//! ```
//!
//! where `‖P_P y‖ = d(y, P°)` is convex in `y`.

use crate::error::{check_dim, Error, Result};
use crate::numeric::linalg::complement_basis;
use crate::numeric::nnls;
use crate::{par, sampling, Point};
use nalgebra::DMatrix;

/// Membership slack used by containment-style checks across the crate.
pub const MEMBER_TOL: f64 = 1e-7;

/// Largest dimension accepted by the double description routine.
pub const MAX_DD_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyCone {
    dim: usize,
    generators: Vec<Point>,
    full_space: bool,
}

impl PolyCone {
    pub fn zero(dim: usize) -> Self {
        PolyCone { dim, generators: Vec::new(), full_space: false }
    }

    pub fn full(dim: usize) -> Self {
        let mut gens = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut e = Point::zeros(dim);
                e[i] = s;
                gens.push(e);
            }
        }
        PolyCone { dim, generators: gens, full_space: true }
    }

    /// Cone generated by `gens`; zero vectors are dropped and the rest normalized.
    pub fn new(dim: usize, gens: Vec<Point>) -> Result<Self> {
        let mut out: Vec<Point> = Vec::with_capacity(gens.len());
        for g in gens {
            check_dim(dim, g.len())?;
            let n = g.norm();
            if !n.is_finite() {
                return Err(Error::Invalid("non-finite generator".into()));
            }
            if n > 1e-12 {
                let u = g / n;
                if !out.iter().any(|o| (o - &u).norm() < 1e-10) {
                    out.push(u);
                }
            }
        }
        let mut c = PolyCone { dim, generators: out, full_space: false };
        if c.spans_everything() {
            c = PolyCone::full(dim);
        }
        Ok(c)
    }

    pub fn ray(v: Point) -> Self {
        let dim = v.len();
        PolyCone::new(dim, vec![v]).expect("dimension is consistent")
    }

    /// The line `ℝ v`.
    pub fn line(v: Point) -> Self {
        let dim = v.len();
        PolyCone::new(dim, vec![v.clone(), -v]).expect("dimension is consistent")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Point] {
        &self.generators
    }

    pub fn is_full(&self) -> bool {
        self.full_space
    }

    pub fn is_zero(&self) -> bool {
        self.generators.is_empty()
    }

    fn spans_everything(&self) -> bool {
        if self.generators.len() <= self.dim {
            return false;
        }
        let g = DMatrix::from_columns(&self.generators);
        (0..self.dim).all(|i| {
            [1.0, -1.0].iter().all(|&s| {
                let mut e = Point::zeros(self.dim);
                e[i] = s;
                nnls(&g, &e).residual <= 1e-9
            })
        })
    }

    /// Nearest point of the cone to `v`.
    pub fn project(&self, v: &Point) -> Point {
        if self.full_space {
            return v.clone();
        }
        if self.generators.is_empty() {
            return Point::zeros(self.dim);
        }
        let g = DMatrix::from_columns(&self.generators);
        let c = nnls(&g, v).coeffs;
        g * c
    }

    /// `min_{λ≥0} ‖Gλ − v‖`
    pub fn residual(&self, v: &Point) -> f64 {
        (self.project(v) - v).norm()
    }

    pub fn member(&self, v: &Point, tol: f64) -> bool {
        self.residual(v) <= tol
    }

    /// Every generator of `self` lies in `other` up to `tol`.
    pub fn contained_in(&self, other: &PolyCone, tol: f64) -> bool {
        if other.full_space {
            return true;
        }
        self.generators.iter().all(|g| other.member(g, tol))
    }

    /// First generator of `self` outside `other`, if any.
    pub fn first_outside(&self, other: &PolyCone, tol: f64) -> Option<Point> {
        if other.full_space {
            return None;
        }
        self.generators.iter().find(|g| !other.member(g, tol)).cloned()
    }

    /// Negative polar `{y : ⟨y, g⟩ ≤ 0 for every generator g}`.
    pub fn polar(&self) -> Result<PolyCone> {
        if self.dim > MAX_DD_DIM {
            return Err(Error::DimensionLimit { dim: self.dim, limit: MAX_DD_DIM });
        }
        if self.full_space {
            return Ok(PolyCone::zero(self.dim));
        }
        if self.generators.is_empty() {
            return Ok(PolyCone::full(self.dim));
        }
        let rays = double_description(self.dim, &self.generators);
        PolyCone::new(self.dim, rays)
    }

    pub fn sum(cones: &[PolyCone]) -> Result<PolyCone> {
        let Some(first) = cones.first() else {
            return Err(Error::Invalid("sum of no cones".into()));
        };
        let dim = first.dim;
        let mut gens = Vec::new();
        for c in cones {
            check_dim(dim, c.dim)?;
            if c.full_space {
                return Ok(PolyCone::full(dim));
            }
            gens.extend(c.generators.iter().cloned());
        }
        PolyCone::new(dim, gens)
    }

    pub fn intersect(cones: &[PolyCone]) -> Result<PolyCone> {
        let polars = cones.iter().map(|c| c.polar()).collect::<Result<Vec<_>>>()?;
        PolyCone::sum(&polars)?.polar()
    }

    /// Drops generators that are nonnegative combinations of the others.
    pub fn pruned(&self) -> PolyCone {
        if self.full_space {
            return self.clone();
        }
        PolyCone { dim: self.dim, generators: prune(self.generators.clone()), full_space: false }
    }
}

fn prune(mut gens: Vec<Point>) -> Vec<Point> {
    let mut i = 0;
    while i < gens.len() {
        let others: Vec<Point> = gens.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
        if !others.is_empty() {
            let m = DMatrix::from_columns(&others);
            if nnls(&m, &gens[i]).residual <= 1e-10 {
                gens.remove(i);
                continue;
            }
        }
        i += 1;
    }
    gens
}

// Extreme rays of {y : ⟨g, y⟩ ≤ 0 ∀ g}, starting from the signed axes.
fn double_description(dim: usize, constraints: &[Point]) -> Vec<Point> {
    let mut rays: Vec<Point> = PolyCone::full(dim).generators;
    for g in constraints {
        let vals: Vec<f64> = rays.iter().map(|r| g.dot(r)).collect();
        let tol = 1e-12;
        let mut next: Vec<Point> = Vec::new();
        for (r, &v) in rays.iter().zip(&vals) {
            if v <= tol {
                next.push(r.clone());
            }
        }
        for (p, &vp) in rays.iter().zip(&vals) {
            if vp <= tol {
                continue;
            }
            for (q, &vq) in rays.iter().zip(&vals) {
                if vq >= -tol {
                    continue;
                }
                let r = q * vp - p * vq;
                let n = r.norm();
                if n > 1e-12 {
                    let u = r / n;
                    if !next.iter().any(|o| (o - &u).norm() < 1e-10) {
                        next.push(u);
                    }
                }
            }
        }
        rays = prune(next);
    }
    rays
}

/// Finite union of polyhedral cones (the shape of a limiting normal cone).
#[derive(Debug, Clone, PartialEq)]
pub struct UnionCone {
    pub pieces: Vec<PolyCone>,
}

impl UnionCone {
    pub fn single(c: PolyCone) -> Self {
        UnionCone { pieces: vec![c] }
    }

    pub fn dim(&self) -> usize {
        self.pieces.first().map_or(0, |c| c.dim)
    }

    pub fn member(&self, v: &Point, tol: f64) -> bool {
        self.pieces.iter().any(|c| c.member(v, tol))
    }

    /// Distance from `v` to the union.
    pub fn residual(&self, v: &Point) -> f64 {
        self.pieces.iter().map(|c| c.residual(v)).fold(f64::INFINITY, f64::min)
    }

    /// Union over all choices of one piece per summand.
    pub fn sum(unions: &[UnionCone]) -> Result<UnionCone> {
        let mut acc: Vec<Vec<PolyCone>> = vec![Vec::new()];
        for u in unions {
            let mut next = Vec::new();
            for combo in &acc {
                for p in &u.pieces {
                    let mut c = combo.clone();
                    c.push(p.clone());
                    next.push(c);
                }
            }
            acc = next;
        }
        let mut pieces: Vec<PolyCone> = Vec::new();
        for combo in acc {
            let s = PolyCone::sum(&combo)?;
            if !pieces.iter().any(|p| *p == s) {
                pieces.push(s);
            }
        }
        Ok(UnionCone { pieces })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyGReport {
    /// Sampled supremum of the decomposition constant; a lower bound on the true τ.
    pub tau: f64,
    pub worst_direction: Point,
    pub samples: usize,
    /// Samples whose inner minimization did not settle.
    pub failed: usize,
}

#[derive(Clone, Copy)]
enum Aggregate {
    Sum,
    Max,
}

/// `inf { maxᵢ ‖vᵢ‖ : vᵢ ∈ Pᵢ, Σ vᵢ = v }`, infinite when `v ∉ Σ Pᵢ`.
pub fn decomposition_constant(cones: &[PolyCone], v: &Point) -> Result<f64> {
    modulus(cones, v, Aggregate::Sum)
}

/// `inf { Σᵢ ‖vᵢ‖ : vᵢ ∈ Pᵢ, Σ vᵢ = v }`, infinite when `v ∉ Σ Pᵢ`.
pub fn sum_decomposition_modulus(cones: &[PolyCone], v: &Point) -> Result<f64> {
    modulus(cones, v, Aggregate::Max)
}

fn modulus(cones: &[PolyCone], v: &Point, agg: Aggregate) -> Result<f64> {
    let total = PolyCone::sum(cones)?;
    check_dim(total.dim, v.len())?;
    let nv = v.norm();
    if nv < 1e-14 {
        return Ok(0.0);
    }
    // same slack as cone containment checks, then snap onto the sum
    if total.residual(v) > MEMBER_TOL * nv.max(1.0) {
        return Ok(f64::INFINITY);
    }
    let v = &total.project(v);
    if v.norm() < 1e-14 {
        return Ok(0.0);
    }
    let m = dual_min(cones, v, agg);
    Ok(if m <= 1e-12 { f64::INFINITY } else { 1.0 / m })
}

fn aggregate(vals: &[f64], agg: Aggregate) -> f64 {
    match agg {
        Aggregate::Sum => vals.iter().sum(),
        Aggregate::Max => vals.iter().cloned().fold(0.0, f64::max),
    }
}

// Search box for the dual variable, in units of ‖y₀‖. Far out, rounding in the
// snapped v tilts flat directions, so constants above ~1e6 are not resolved.
const SEARCH_RADIUS: f64 = 1e6;

// min over the hyperplane ⟨v,y⟩ = 1 of the aggregated projection norms
fn dual_min(cones: &[PolyCone], v: &Point, agg: Aggregate) -> f64 {
    let n = v.len();
    let y0 = v / v.norm_squared();
    let basis = complement_basis(n, std::slice::from_ref(v));
    let exact = |t: &[f64]| -> f64 {
        let mut y = y0.clone();
        for (b, ti) in basis.iter().zip(t) {
            y += b * *ti;
        }
        let vals: Vec<f64> = cones.iter().map(|c| c.project(&y).norm()).collect();
        aggregate(&vals, agg)
    };
    match basis.len() {
        0 => exact(&[]),
        1 => golden_min(|t| exact(&[t]), SEARCH_RADIUS * y0.norm()),
        _ => smoothed_bfgs(cones, &y0, &basis, agg).min(exact(&vec![0.0; basis.len()])),
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, limit: f64) -> f64 {
    let f0 = f(0.0);
    let (mut a, mut b);
    let mut best = f0;
    let dir = if f(1e-3) < f0 {
        1.0
    } else if f(-1e-3) < f0 {
        -1.0
    } else {
        0.0
    };
    if dir == 0.0 {
        a = -1e-3;
        b = 1e-3;
    } else {
        let mut prev = 0.0;
        let mut prev_val = f0;
        let mut step = 1e-3;
        loop {
            let t = prev + dir * step;
            let val = f(t);
            best = best.min(val);
            if val > prev_val || step > limit {
                a = (prev - dir * step * 0.5).min(t);
                b = (prev - dir * step * 0.5).max(t);
                if val <= prev_val {
                    return best;
                }
                break;
            }
            prev = t;
            prev_val = val;
            step *= 2.0;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    best.min(fc).min(fd)
}

fn smoothed_bfgs(cones: &[PolyCone], y0: &Point, basis: &[Point], agg: Aggregate) -> f64 {
    let k = basis.len();
    let b = DMatrix::from_columns(basis);
    let exact_at = |t: &Point| -> f64 {
        let y = y0 + &b * t;
        let vals: Vec<f64> = cones.iter().map(|c| c.project(&y).norm()).collect();
        aggregate(&vals, agg)
    };
    let smooth = |t: &Point, mu: f64| -> (f64, Point) {
        let y = y0 + &b * t;
        let projs: Vec<Point> = cones.iter().map(|c| c.project(&y)).collect();
        let s: Vec<f64> = projs.iter().map(|p| (p.norm_squared() + mu * mu).sqrt()).collect();
        let weights: Vec<f64> = match agg {
            Aggregate::Sum => vec![1.0; s.len()],
            Aggregate::Max => {
                let top = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = s.iter().map(|si| ((si - top) / mu).exp()).collect();
                let z: f64 = e.iter().sum();
                e.iter().map(|ei| ei / z).collect()
            }
        };
        let val = match agg {
            Aggregate::Sum => s.iter().sum(),
            Aggregate::Max => {
                let top = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                top + mu * s.iter().map(|si| ((si - top) / mu).exp()).sum::<f64>().ln()
            }
        };
        let mut grad_y = Point::zeros(y0.len());
        for ((p, si), w) in projs.iter().zip(&s).zip(&weights) {
            grad_y += p * (w / si);
        }
        (val, b.transpose() * grad_y)
    };

    let mut t = Point::zeros(k);
    let mut best = exact_at(&t);
    let mut mu = 1e-2;
    while mu >= 1e-10 {
        let mut h = DMatrix::<f64>::identity(k, k);
        let (mut f, mut g) = smooth(&t, mu);
        for _ in 0..200 {
            if g.norm() < 1e-13 {
                break;
            }
            let mut d = -(&h * &g);
            if d.dot(&g) >= 0.0 {
                h = DMatrix::identity(k, k);
                d = -g.clone();
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let tn = &t + &d * step;
                let (fnew, gnew) = smooth(&tn, mu);
                if fnew <= f + 1e-4 * step * d.dot(&g) {
                    accepted = Some((tn, fnew, gnew));
                    break;
                }
                step *= 0.5;
            }
            let Some((tn, fnew, gnew)) = accepted else { break };
            let s = &tn - &t;
            let yv = &gnew - &g;
            let sy = s.dot(&yv);
            if sy > 1e-18 {
                let rho = 1.0 / sy;
                let i = DMatrix::<f64>::identity(k, k);
                let left = &i - &s * yv.transpose() * rho;
                let right = &i - &yv * s.transpose() * rho;
                h = &left * &h * &right + &s * s.transpose() * rho;
            }
            let done = (f - fnew).abs() <= 1e-15 * (1.0 + f.abs());
            t = tn;
            f = fnew;
            g = gnew;
            if t.norm() > SEARCH_RADIUS * y0.norm() || done {
                break;
            }
        }
        best = best.min(exact_at(&t));
        mu *= 1e-2;
    }
    best
}

/// Sampled property (G) constant: the supremum of
/// [`decomposition_constant`] over unit vectors of `Σ Pᵢ`. Sample directions
/// are Gaussian vectors projected onto the sum cone and normalized.
pub fn property_g_constant(cones: &[PolyCone], n_samples: usize, seed: u64) -> Result<PropertyGReport> {
    let total = PolyCone::sum(cones)?;
    let dim = total.dim;
    if total.is_zero() {
        return Ok(PropertyGReport { tau: 0.0, worst_direction: Point::zeros(dim), samples: 0, failed: 0 });
    }
    let results = par::map_indexed(n_samples, |i| {
        let mut rng = par::item_rng(seed, i as u64);
        let w = sampling::unit_sphere(&mut rng, dim);
        let p = total.project(&w);
        let n = p.norm();
        if n < 1e-9 {
            return None;
        }
        let v = p / n;
        Some((decomposition_constant(cones, &v), v))
    });
    let mut tau: f64 = 0.0;
    let mut worst = Point::zeros(dim);
    let mut samples = 0;
    let mut failed = 0;
    for (val, v) in results.into_iter().flatten() {
        samples += 1;
        match val {
            Ok(t) if t > tau => {
                tau = t;
                worst = v;
            }
            Ok(_) => {}
            Err(_) => failed += 1,
        }
    }
    Ok(PropertyGReport { tau, worst_direction: worst, samples, failed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        Point::from_vec(v.to_vec())
    }

    fn e(i: usize, n: usize) -> Point {
        let mut v = Point::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn orthant_polar() {
        let c = PolyCone::new(2, vec![e(0, 2), e(1, 2)]).unwrap();
        let pc = c.polar().unwrap();
        let want = PolyCone::new(2, vec![-e(0, 2), -e(1, 2)]).unwrap();
        assert!(pc.contained_in(&want, 1e-12) && want.contained_in(&pc, 1e-12));
    }

    #[test]
    fn zero_polar_is_full() {
        assert!(PolyCone::zero(3).polar().unwrap().is_full());
        assert!(PolyCone::full(3).polar().unwrap().is_zero());
    }

    #[test]
    fn ray_polar_is_halfplane() {
        let c = PolyCone::ray(p(&[1.0, 1.0]));
        let pc = c.polar().unwrap();
        for k in 0..360 {
            let a = (k as f64).to_radians();
            let v = p(&[a.cos(), a.sin()]);
            let inside = v[0] + v[1] <= 1e-12;
            assert_eq!(pc.member(&v, 1e-9), inside, "angle {k}");
        }
    }

    #[test]
    fn sum_and_membership() {
        let s = PolyCone::sum(&[PolyCone::ray(e(0, 2)), PolyCone::ray(e(1, 2))]).unwrap();
        assert!(s.member(&p(&[1.0, 1.0]), 1e-12));
        assert!(!s.member(&p(&[-0.1, 1.0]), 1e-9));
        let h = PolyCone::sum(&[PolyCone::line(e(0, 2)), PolyCone::ray(e(1, 2))]).unwrap();
        assert!(!h.is_full());
        assert!(!h.member(&p(&[0.0, -1.0]), 1e-9));
    }

    #[test]
    fn intersection_of_halfplanes() {
        let a = PolyCone::new(2, vec![p(&[1.0, 0.0]), p(&[-1.0, 0.0]), p(&[0.0, 1.0])]).unwrap();
        let b = PolyCone::new(2, vec![p(&[0.0, 1.0]), p(&[0.0, -1.0]), p(&[1.0, 0.0])]).unwrap();
        let c = PolyCone::intersect(&[a, b]).unwrap();
        let q = PolyCone::new(2, vec![e(0, 2), e(1, 2)]).unwrap();
        assert!(c.contained_in(&q, 1e-9) && q.contained_in(&c, 1e-9));
    }

    #[test]
    fn union_cone_diagonal_member() {
        let u = UnionCone {
            pieces: vec![PolyCone::ray(e(0, 2)), PolyCone::ray(-e(1, 2)), PolyCone::line(p(&[1.0, 1.0]))],
        };
        assert!(u.member(&p(&[1.0, 1.0]), 1e-12));
        assert!(!u.member(&p(&[-1.0, 0.0]), 1e-6));
    }

    #[test]
    fn orthogonal_rays_constant_one() {
        let cones = [PolyCone::ray(e(0, 2)), PolyCone::ray(e(1, 2))];
        let r = property_g_constant(&cones, 200, 3).unwrap();
        assert!((r.tau - 1.0).abs() < 1e-6, "{}", r.tau);
        assert!((sum_decomposition_modulus(&cones, &e(0, 2)).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(sum_decomposition_modulus(&cones, &Point::zeros(2)).unwrap(), 0.0);
        assert!(sum_decomposition_modulus(&cones, &p(&[-1.0, 0.0])).unwrap().is_infinite());
    }

    #[test]
    fn single_cone_constant_one() {
        let c = PolyCone::new(3, vec![e(0, 3), p(&[1.0, 1.0, 0.0]), e(2, 3)]).unwrap();
        let r = property_g_constant(&[c], 100, 1).unwrap();
        assert!((r.tau - 1.0).abs() < 1e-6);
    }

    // brute force: v = a·g1 + b·g2 with a,b ≥ 0 on a grid, minimizing a + b
    fn grid_sum_modulus(g1: &Point, g2: &Point, v: &Point) -> f64 {
        let mut best = f64::INFINITY;
        let steps = 4000;
        for i in 0..=steps {
            let a = 3.0 * i as f64 / steps as f64;
            let r = v - g1 * a;
            // best b for this a
            let b = r.dot(g2).max(0.0);
            if (r - g2 * b).norm() < 1e-3 {
                best = best.min(a + b);
            }
        }
        best
    }

    #[test]
    fn oblique_rays_sum_modulus() {
        let a = 22.5f64.to_radians();
        let g1 = p(&[a.cos(), a.sin()]);
        let g2 = p(&[a.cos(), -a.sin()]);
        let cones = [PolyCone::ray(g1.clone()), PolyCone::ray(g2.clone())];
        let v = p(&[1.0, 0.0]);
        let got = sum_decomposition_modulus(&cones, &v).unwrap();
        let oracle = grid_sum_modulus(&g1, &g2, &v);
        assert!((got - oracle).abs() < 2e-3, "{got} vs {oracle}");
        assert!((got - 1.082392200292394).abs() < 1e-8);
    }

    #[test]
    fn ten_degree_lines_match_grid() {
        let th = 10f64.to_radians();
        let n1 = p(&[0.0, 1.0]);
        let n2 = p(&[-th.sin(), th.cos()]);
        let cones = [PolyCone::line(n1.clone()), PolyCone::line(n2.clone())];
        let m = DMatrix::from_columns(&[n1, n2]).try_inverse().unwrap();
        let mut oracle: f64 = 0.0;
        for k in 0..20_000 {
            let a = std::f64::consts::PI * k as f64 / 20_000.0;
            let c = &m * p(&[a.cos(), a.sin()]);
            oracle = oracle.max(c[0].abs().max(c[1].abs()));
        }
        let r = property_g_constant(&cones, 2000, 5).unwrap();
        assert!((r.tau / oracle - 1.0).abs() < 0.05, "{} vs {oracle}", r.tau);
    }

    #[test]
    fn three_dim_decomposition() {
        let cones = [PolyCone::ray(e(0, 3)), PolyCone::ray(e(1, 3)), PolyCone::ray(e(2, 3))];
        let v = p(&[1.0, 2.0, 2.0]);
        assert!((decomposition_constant(&cones, &v).unwrap() - 2.0).abs() < 1e-6);
        assert!((sum_decomposition_modulus(&cones, &v).unwrap() - 5.0).abs() < 1e-6);
    }

    fn cone_strategy(n: usize) -> impl Strategy<Value = PolyCone> {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), 1..4)
            .prop_map(move |gs| PolyCone::new(n, gs.into_iter().map(Point::from_vec).collect()).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn bipolar_agrees(c in cone_strategy(3)) {
            let bb = c.polar().unwrap().polar().unwrap();
            for v in crate::sampling::fibonacci_sphere(60) {
                let gap = (c.residual(&v) - bb.residual(&v)).abs();
                prop_assert!(gap < 1e-7, "gap {gap}");
            }
        }

        #[test]
        fn polar_reverses_inclusion(c in cone_strategy(3), d in cone_strategy(3)) {
            let big = PolyCone::sum(&[c.clone(), d]).unwrap();
            prop_assert!(big.polar().unwrap().contained_in(&c.polar().unwrap(), 1e-8));
        }

        #[test]
        fn moduli_are_ordered(c in cone_strategy(2), d in cone_strategy(2), ang in 0.0f64..6.3) {
            let cones = [c, d];
            let v = PolyCone::sum(&cones).unwrap().project(&Point::from_vec(vec![ang.cos(), ang.sin()]));
            prop_assume!(v.norm() > 1e-3);
            let delta = decomposition_constant(&cones, &v).unwrap();
            let eta = sum_decomposition_modulus(&cones, &v).unwrap();
            prop_assert!(eta >= v.norm() * (1.0 - 1e-6));
            prop_assert!(delta <= eta * (1.0 + 1e-6));
            prop_assert!(eta <= 2.0 * delta * (1.0 + 1e-6));
        }

        #[test]
        fn scaling_generators_keeps_tau(s in 0.1f64..10.0) {
            let a = PolyCone::new(2, vec![Point::from_vec(vec![1.0, 0.2])]).unwrap();
            let b = PolyCone::new(2, vec![Point::from_vec(vec![s * 0.3, s * 1.0])]).unwrap();
            let a2 = PolyCone::new(2, vec![Point::from_vec(vec![1.0, 0.2])]).unwrap();
            let b2 = PolyCone::new(2, vec![Point::from_vec(vec![0.3, 1.0])]).unwrap();
            let t1 = property_g_constant(&[a, b], 50, 9).unwrap().tau;
            let t2 = property_g_constant(&[a2, b2], 50, 9).unwrap().tau;
            prop_assert!((t1 - t2).abs() < 1e-9);
        }
    }
}
