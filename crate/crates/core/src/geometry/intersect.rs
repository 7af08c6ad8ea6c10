//! Intersections of halfspaces, hyperplanes, balls and convex quadratic
//! sublevel sets, plus Dykstra's algorithm for general convex intersections.

use super::functions::{project_quadratic_sublevel, ConvexFn};
use super::{Ball, ConvexPiece, SetExpr};
use crate::cone::PolyCone;
use crate::error::{Error, Result};
use crate::numeric::linalg::{complement_basis, lstsq};
use crate::numeric::project_polyhedron;
use crate::Point;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct Quad {
    pub q: DMatrix<f64>,
    pub c: Point,
    pub d: f64,
    pub level: f64,
}

/// Explicit constraint description of a convex set.
#[derive(Debug, Clone, Default)]
pub(crate) struct Constraints {
    pub dim: usize,
    /// `⟨a, y⟩ ≤ b` with unit `a`
    pub ineq: Vec<(Point, f64)>,
    /// `⟨a, y⟩ = b` with unit `a`
    pub eq: Vec<(Point, f64)>,
    pub balls: Vec<Ball>,
    pub quads: Vec<Quad>,
}

impl Constraints {
    fn new(dim: usize) -> Self {
        Constraints { dim, ..Default::default() }
    }

    fn push_ineq(&mut self, a: Point, b: f64) -> Result<()> {
        let n = a.norm();
        if n < 1e-14 {
            if b < -1e-12 {
                return Err(Error::Infeasible("constraint 0 ≤ negative".into()));
            }
            return Ok(());
        }
        self.ineq.push((a / n, b / n));
        Ok(())
    }

    fn push_eq(&mut self, a: Point, b: f64) -> Result<()> {
        let n = a.norm();
        if n < 1e-14 {
            if b.abs() > 1e-12 {
                return Err(Error::Infeasible("constraint 0 = nonzero".into()));
            }
            return Ok(());
        }
        self.eq.push((a / n, b / n));
        Ok(())
    }

    /// Describes `set`; `None` when it is not built from supported convex pieces.
    pub fn from_set(set: &SetExpr) -> Option<Result<Constraints>> {
        let mut c = Constraints::new(set.dim());
        match c.add_set(set, 0, set.dim()) {
            Ok(true) => Some(Ok(c)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        }
    }

    // Adds constraints of `set`, embedded at coordinate `offset` of an ambient space of size `total`.
    fn add_set(&mut self, set: &SetExpr, offset: usize, total: usize) -> Result<bool> {
        let lift = |v: &Point| -> Point {
            let mut out = Point::zeros(total);
            out.rows_mut(offset, v.len()).copy_from(v);
            out
        };
        match set {
            SetExpr::Convex(piece) => match piece {
                ConvexPiece::Halfspace { a, b } => self.push_ineq(lift(a), *b).map(|_| true),
                ConvexPiece::HPolyhedron { a, b } => {
                    for i in 0..a.nrows() {
                        self.push_ineq(lift(&a.row(i).transpose()), b[i])?;
                    }
                    Ok(true)
                }
                ConvexPiece::Ball(ball) => {
                    self.balls.push(Ball { center: lift(&ball.center), radius: ball.radius });
                    Ok(offset == 0 && ball.center.len() == total)
                }
                ConvexPiece::BallIntersection { balls } => {
                    for ball in balls {
                        self.balls.push(Ball { center: lift(&ball.center), radius: ball.radius });
                    }
                    Ok(offset == 0 && balls[0].center.len() == total)
                }
                ConvexPiece::AffineSet { base, basis } => {
                    for nrm in complement_basis(base.len(), basis) {
                        let b = nrm.dot(base);
                        self.push_eq(lift(&nrm), b)?;
                    }
                    Ok(true)
                }
                ConvexPiece::SublevelConvex { g, level } => match g.sublevel_rows(*level) {
                    Some((a, b)) => {
                        for i in 0..a.nrows() {
                            self.push_ineq(lift(&a.row(i).transpose()), b[i])?;
                        }
                        Ok(true)
                    }
                    None => match g {
                        ConvexFn::Quadratic { q, c, d } if offset == 0 && c.len() == total => {
                            self.quads.push(Quad { q: q.clone(), c: c.clone(), d: *d, level: *level });
                            Ok(true)
                        }
                        _ => Ok(false),
                    },
                },
                ConvexPiece::VCone { generators, apex } => {
                    // apex + K = {y : ⟨w, y − apex⟩ ≤ 0 for w generating K°}
                    let Ok(cone) = PolyCone::new(apex.len(), generators.clone()) else { return Ok(false) };
                    let Ok(polar) = cone.polar() else { return Ok(false) };
                    if polar.is_full() {
                        for i in 0..apex.len() {
                            let e = Point::from_fn(apex.len(), |r, _| f64::from(u8::from(r == i)));
                            self.push_eq(lift(&e), apex[i])?;
                        }
                    }
                    for w in polar.generators() {
                        self.push_ineq(lift(w), w.dot(apex))?;
                    }
                    Ok(true)
                }
            },
            SetExpr::Epigraph(f) => match f.sublevel_rows(0.0) {
                Some((a, b)) => {
                    let n = a.ncols();
                    let mut lifted = DMatrix::zeros(a.nrows(), n + 1);
                    lifted.view_mut((0, 0), (a.nrows(), n)).copy_from(&a);
                    lifted.column_mut(n).fill(-1.0);
                    for i in 0..lifted.nrows() {
                        self.push_ineq(lift(&lifted.row(i).transpose()), b[i])?;
                    }
                    Ok(true)
                }
                None => Ok(false),
            },
            SetExpr::Product(factors) => {
                // balls and quadratics live in the full space only
                let mut off = offset;
                for f in factors {
                    let before = (self.balls.len(), self.quads.len());
                    if !self.add_set(f, off, total)? {
                        return Ok(false);
                    }
                    if (self.balls.len(), self.quads.len()) != before && factors.len() > 1 {
                        return Ok(false);
                    }
                    off += f.dim();
                }
                Ok(true)
            }
            SetExpr::Intersection(parts) => {
                for p in parts {
                    if !self.add_set(p, offset, total)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            SetExpr::Union(pieces) if pieces.len() == 1 => self.add_set(&pieces[0], offset, total),
            _ => Ok(false),
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        self.balls.is_empty() && self.quads.is_empty()
    }

    /// Largest constraint violation at `y` (linear ones in distance units).
    pub fn violation(&self, y: &Point) -> f64 {
        let mut v: f64 = 0.0;
        for (a, b) in &self.ineq {
            v = v.max(a.dot(y) - b);
        }
        for (a, b) in &self.eq {
            v = v.max((a.dot(y) - b).abs());
        }
        for ball in &self.balls {
            v = v.max((y - &ball.center).norm() - ball.radius);
        }
        for qd in &self.quads {
            v = v.max(0.5 * y.dot(&(&qd.q * y)) + qd.c.dot(y) + qd.d - qd.level);
        }
        v
    }

    /// Values and gradients of all inequality constraints `h(y) ≤ 0` at `y`,
    /// followed by the equalities as pairs.
    pub fn linearize(&self, y: &Point) -> Vec<(f64, Point)> {
        let mut out = Vec::new();
        for (a, b) in &self.ineq {
            out.push((a.dot(y) - b, a.clone()));
        }
        for (a, b) in &self.eq {
            out.push((a.dot(y) - b, a.clone()));
            out.push((b - a.dot(y), -a.clone()));
        }
        for ball in &self.balls {
            let d = y - &ball.center;
            out.push((d.norm_squared() - ball.radius * ball.radius, d * 2.0));
        }
        for qd in &self.quads {
            let val = 0.5 * y.dot(&(&qd.q * y)) + qd.c.dot(y) + qd.d - qd.level;
            out.push((val, &qd.q * y + &qd.c));
        }
        out
    }

    /// Polyhedral rows `A y ≤ b` (equalities doubled).
    fn linear_rows(&self) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.ineq.len() + 2 * self.eq.len();
        let mut a = DMatrix::zeros(m, self.dim);
        let mut b = DVector::zeros(m);
        let mut k = 0;
        for (r, rhs) in &self.ineq {
            a.row_mut(k).copy_from(&r.transpose());
            b[k] = *rhs;
            k += 1;
        }
        for (r, rhs) in &self.eq {
            a.row_mut(k).copy_from(&r.transpose());
            b[k] = *rhs;
            a.row_mut(k + 1).copy_from(&(-r).transpose());
            b[k + 1] = -rhs;
            k += 2;
        }
        (a, b)
    }

    pub fn project(&self, x: &Point) -> Result<Point> {
        if self.is_polyhedral() {
            let (a, b) = self.linear_rows();
            return Ok(project_polyhedron(&a, &b, x)?.point);
        }
        if self.quads.is_empty() && self.ineq.len() + self.balls.len() <= 12 {
            return self.project_enumerate(x);
        }
        // Dykstra between the linear-plus-ball part and each quadratic
        let mut base = self.clone();
        base.quads.clear();
        let mut projs: Vec<Box<dyn Fn(&Point) -> Result<Point> + '_>> = Vec::new();
        let has_base = !(base.ineq.is_empty() && base.eq.is_empty() && base.balls.is_empty());
        if has_base {
            projs.push(Box::new(move |y: &Point| base.project(y)));
        }
        for qd in &self.quads {
            projs.push(Box::new(move |y: &Point| {
                project_quadratic_sublevel(&qd.q, &qd.c, qd.d, qd.level, y)
            }));
        }
        let (y, _) = dykstra_core(&projs, x, 20_000, 1e-14)?;
        let viol = self.violation(&y);
        if viol > 1e-7 * (1.0 + x.amax()) {
            return Err(Error::Infeasible(format!("intersection appears empty (violation {viol:.3e})")));
        }
        Ok(y)
    }

    /// Exact projection by enumerating candidate active sets. Every subset of
    /// inequality and ball constraints up to size `n + 1` defines a manifold
    /// (an affine set, possibly cut by one sphere); the nearest point on each
    /// manifold is a candidate and the nearest feasible candidate wins.
    fn project_enumerate(&self, x: &Point) -> Result<Point> {
        let scale = 1.0 + x.amax() + self.balls.iter().map(|b| b.radius + b.center.amax()).fold(0.0, f64::max);
        let feas_tol = 1e-10 * scale;
        if self.violation(x) <= 0.0 {
            return Ok(x.clone());
        }
        let n = self.dim;
        let ni = self.ineq.len();
        let total = ni + self.balls.len();
        let mut best: Option<(f64, Point)> = None;
        let mut consider = |cand: Point| {
            if self.violation(&cand) <= feas_tol {
                let d = (&cand - x).norm();
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, cand));
                }
            }
        };
        if let Some(c) = self.manifold_nearest(&[], x) {
            consider(c);
        }
        for k in 1..=total.min(n + 1) {
            for subset in combinations(total, k) {
                if let Some(c) = self.manifold_nearest(&subset, x) {
                    consider(c);
                }
            }
        }
        best.map(|(_, p)| p)
            .ok_or_else(|| Error::Infeasible("no feasible point found on any active manifold".into()))
    }

    fn manifold_nearest(&self, subset: &[usize], x: &Point) -> Option<Point> {
        let n = self.dim;
        let ni = self.ineq.len();
        let mut rows: Vec<Point> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for (a, b) in &self.eq {
            rows.push(a.clone());
            rhs.push(*b);
        }
        let mut sphere: Option<&Ball> = None;
        for &s in subset {
            if s < ni {
                rows.push(self.ineq[s].0.clone());
                rhs.push(self.ineq[s].1);
            } else {
                let ball = &self.balls[s - ni];
                match sphere {
                    None => sphere = Some(ball),
                    Some(b0) => {
                        // |y−cj|² − |y−c0|² = rj² − r0² is linear in y
                        let dir = &ball.center - &b0.center;
                        let val = 0.5
                            * (ball.center.norm_squared() - b0.center.norm_squared()
                                - ball.radius * ball.radius
                                + b0.radius * b0.radius);
                        rows.push(dir);
                        rhs.push(val);
                    }
                }
            }
        }
        let a = if rows.is_empty() {
            DMatrix::zeros(0, n)
        } else {
            DMatrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>())
        };
        let b = DVector::from_vec(rhs);
        let onto = |q: &Point| -> Option<Point> {
            if a.nrows() == 0 {
                return Some(q.clone());
            }
            let y = q - lstsq(&a, &(&a * q - &b));
            let res = (&a * &y - &b).amax();
            (res <= 1e-9 * (1.0 + b.amax() + q.amax())).then_some(y)
        };
        let xl = onto(x)?;
        let Some(b0) = sphere else { return Some(xl) };
        let p0 = onto(&b0.center)?;
        let rho2 = b0.radius * b0.radius - (&p0 - &b0.center).norm_squared();
        if rho2 < -1e-12 * (1.0 + b0.radius * b0.radius) {
            return None;
        }
        let rho = rho2.max(0.0).sqrt();
        let dir = &xl - &p0;
        let dn = dir.norm();
        if dn > 1e-14 {
            return Some(&p0 + dir * (rho / dn));
        }
        let null = complement_basis(n, &rows);
        Some(match null.first() {
            Some(u) => &p0 + u * rho,
            None => p0,
        })
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Dykstra's alternating projection scheme. Returns the final point and
/// the number of sweeps used.
pub fn dykstra_core<F>(projs: &[F], x0: &Point, max_sweeps: usize, tol: f64) -> Result<(Point, usize)>
where
    F: std::ops::Deref,
    F::Target: Fn(&Point) -> Result<Point>,
{
    let m = projs.len();
    if m == 0 {
        return Ok((x0.clone(), 0));
    }
    let mut y = x0.clone();
    let mut incr = vec![Point::zeros(x0.len()); m];
    for sweep in 1..=max_sweeps {
        let mut change: f64 = 0.0;
        for (i, p) in projs.iter().enumerate() {
            let shifted = &y + &incr[i];
            let z = (**p)(&shifted)?;
            let new_inc = &shifted - &z;
            change += (&new_inc - &incr[i]).norm_squared() + (&z - &y).norm_squared();
            incr[i] = new_inc;
            y = z;
        }
        if change.sqrt() <= tol * (1.0 + x0.amax()) {
            return Ok((y, sweep));
        }
    }
    Ok((y, max_sweeps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::from_vec(v.to_vec())
    }

    fn lens() -> SetExpr {
        SetExpr::Convex(
            ConvexPiece::ball_intersection(vec![
                Ball::new(p(&[1.0, 0.0]), 1.0).unwrap(),
                Ball::new(p(&[0.0, 1.0]), 1.0).unwrap(),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn lens_against_dykstra() {
        let c = Constraints::from_set(&lens()).unwrap().unwrap();
        let balls = c.balls.clone();
        for x in [p(&[-1.0, -0.5]), p(&[2.0, 2.0]), p(&[0.2, -3.0]), p(&[1.5, 0.1])] {
            let exact = c.project(&x).unwrap();
            let projs: Vec<Box<dyn Fn(&Point) -> Result<Point>>> = balls
                .iter()
                .map(|b| {
                    let b = b.clone();
                    Box::new(move |y: &Point| Ok(b.project(y))) as Box<dyn Fn(&Point) -> Result<Point>>
                })
                .collect();
            let (dy, _) = dykstra_core(&projs, &x, 200_000, 1e-15).unwrap();
            assert!((exact - dy).norm() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn singleton_intersection() {
        // lens ∩ {s + t = 0} = {0}
        let line = SetExpr::Convex(ConvexPiece::affine(p(&[0.0, 0.0]), vec![p(&[1.0, -1.0])]).unwrap());
        let set = SetExpr::Intersection(vec![line, lens()]);
        let c = Constraints::from_set(&set).unwrap().unwrap();
        let y = c.project(&p(&[0.7, -0.4])).unwrap();
        assert!(y.norm() < 1e-12);
    }
}
