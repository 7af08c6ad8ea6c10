//! Convex function oracles with polytope subdifferentials.

use crate::error::{check_dim, Error, Result};
use crate::Point;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFn {
    /// `⟨a, y⟩ + b`
    Affine { a: Point, b: f64 },
    /// `maxᵢ (A y + b)ᵢ`
    MaxAffine { a: DMatrix<f64>, b: DVector<f64> },
    /// `½ yᵀQy + ⟨c, y⟩ + d` with `Q` symmetric positive semidefinite.
    Quadratic { q: DMatrix<f64>, c: Point, d: f64 },
}

impl ConvexFn {
    pub fn affine(a: Point, b: f64) -> Self {
        ConvexFn::Affine { a, b }
    }

    pub fn max_affine(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() == 0 {
            return Err(Error::Invalid("max of an empty family".into()));
        }
        check_dim(a.nrows(), b.len())?;
        Ok(ConvexFn::MaxAffine { a, b })
    }

    pub fn quadratic(q: DMatrix<f64>, c: Point, d: f64) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::Invalid("quadratic form must be square".into()));
        }
        check_dim(q.nrows(), c.len())?;
        let sym = (&q + q.transpose()) * 0.5;
        let lo = SymmetricEigen::new(sym.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if lo < -1e-10 * (1.0 + sym.amax()) {
            return Err(Error::Invalid(format!("quadratic form is not convex (eigenvalue {lo:.3e})")));
        }
        Ok(ConvexFn::Quadratic { q: sym, c, d })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFn::Affine { a, .. } => a.len(),
            ConvexFn::MaxAffine { a, .. } => a.ncols(),
            ConvexFn::Quadratic { c, .. } => c.len(),
        }
    }

    pub fn eval(&self, y: &Point) -> f64 {
        match self {
            ConvexFn::Affine { a, b } => a.dot(y) + b,
            ConvexFn::MaxAffine { a, b } => (a * y + b).max(),
            ConvexFn::Quadratic { q, c, d } => 0.5 * y.dot(&(q * y)) + c.dot(y) + d,
        }
    }

    /// Vertices of `∂g(y)`; pieces of a max within `tol` of the max count as active.
    pub fn subgradients(&self, y: &Point, tol: f64) -> Vec<Point> {
        match self {
            ConvexFn::Affine { a, .. } => vec![a.clone()],
            ConvexFn::MaxAffine { a, b } => {
                let vals = a * y + b;
                let top = vals.max();
                let mut out: Vec<Point> = Vec::new();
                for i in 0..a.nrows() {
                    if vals[i] >= top - tol {
                        let row = a.row(i).transpose();
                        if !out.iter().any(|o| (o - &row).norm() < 1e-14) {
                            out.push(row);
                        }
                    }
                }
                out
            }
            ConvexFn::Quadratic { q, c, .. } => vec![q * y + c],
        }
    }

    /// Lipschitz modulus on all of ℝⁿ, infinite for nonaffine quadratics.
    pub fn lipschitz(&self) -> f64 {
        match self {
            ConvexFn::Affine { a, .. } => a.norm(),
            ConvexFn::MaxAffine { a, .. } => {
                (0..a.nrows()).map(|i| a.row(i).norm()).fold(0.0, f64::max)
            }
            ConvexFn::Quadratic { q, c, .. } => {
                if q.amax() == 0.0 {
                    c.norm()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `c · g`
    pub fn scaled(&self, s: f64) -> ConvexFn {
        match self {
            ConvexFn::Affine { a, b } => ConvexFn::Affine { a: a * s, b: b * s },
            ConvexFn::MaxAffine { a, b } => ConvexFn::MaxAffine { a: a * s, b: b * s },
            ConvexFn::Quadratic { q, c, d } => ConvexFn::Quadratic { q: q * s, c: c * s, d: d * s },
        }
    }

    /// `y ↦ g(M y + c)`
    pub fn compose_affine(&self, m: &DMatrix<f64>, c: &Point) -> ConvexFn {
        match self {
            ConvexFn::Affine { a, b } => ConvexFn::Affine { a: m.transpose() * a, b: a.dot(c) + b },
            ConvexFn::MaxAffine { a, b } => ConvexFn::MaxAffine { a: a * m, b: a * c + b },
            ConvexFn::Quadratic { q, c: c0, d } => ConvexFn::Quadratic {
                q: m.transpose() * q * m,
                c: m.transpose() * (q * c + c0),
                d: 0.5 * c.dot(&(q * c)) + c0.dot(c) + d,
            },
        }
    }

    /// Halfspace rows `A y ≤ b` describing `{g ≤ level}` when `g` is piecewise affine.
    pub fn sublevel_rows(&self, level: f64) -> Option<(DMatrix<f64>, DVector<f64>)> {
        match self {
            ConvexFn::Affine { a, b } => Some((
                DMatrix::from_row_slice(1, a.len(), a.as_slice()),
                DVector::from_element(1, level - b),
            )),
            ConvexFn::MaxAffine { a, b } => Some((a.clone(), b.map(|bi| level - bi))),
            ConvexFn::Quadratic { .. } => None,
        }
    }
}

/// Projection onto `{½ yᵀQy + ⟨c,y⟩ + d ≤ level}` by bisection on the
/// Lagrange multiplier in the eigenbasis of `Q`.
pub fn project_quadratic_sublevel(
    q: &DMatrix<f64>,
    c: &Point,
    d: f64,
    level: f64,
    x: &Point,
) -> Result<Point> {
    let g = |y: &Point| 0.5 * y.dot(&(q * y)) + c.dot(y) + d - level;
    let scale = 1.0 + level.abs() + d.abs();
    if g(x) <= 1e-14 * scale {
        return Ok(x.clone());
    }
    let eig = SymmetricEigen::new(q.clone());
    let v = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let xt = v.transpose() * x;
    let ct = v.transpose() * c;
    let at = |mu: f64| -> Point {
        let yt = Point::from_fn(x.len(), |i, _| (xt[i] - mu * ct[i]) / (1.0 + mu * lam[i].max(0.0)));
        v * yt
    };

    let mut hi = 1.0;
    while g(&at(hi)) > 0.0 {
        hi *= 2.0;
        if hi > 1e16 {
            return project_argmin(q, c, d, level, x, &eig);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(hi))
}

// The level equals the minimum value: the sublevel set is the affine argmin set.
fn project_argmin(
    q: &DMatrix<f64>,
    c: &Point,
    d: f64,
    level: f64,
    x: &Point,
    eig: &SymmetricEigen<f64, nalgebra::Dyn>,
) -> Result<Point> {
    let v = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let xt = v.transpose() * x;
    let ct = v.transpose() * c;
    let lmax = lam.amax().max(1e-300);
    let mut yt = xt.clone();
    for i in 0..x.len() {
        if lam[i] > 1e-12 * lmax {
            yt[i] = -ct[i] / lam[i];
        } else if ct[i].abs() > 1e-12 {
            return Err(Error::NotConverged { what: "quadratic sublevel projection".into(), residual: f64::NAN });
        }
    }
    let y = v * yt;
    let val = 0.5 * y.dot(&(q * &y)) + c.dot(&y) + d - level;
    if val > 1e-9 * (1.0 + level.abs()) {
        return Err(Error::EmptySet(format!("sublevel set is empty (min exceeds level by {val:.3e})")));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::from_vec(v.to_vec())
    }

    #[test]
    fn max_affine_subgradients() {
        let g = ConvexFn::max_affine(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        assert_eq!(g.subgradients(&p(&[0.0, 0.0]), 1e-12).len(), 2);
        assert_eq!(g.subgradients(&p(&[1.0, 0.0]), 1e-12), vec![p(&[1.0, 0.0])]);
        assert_eq!(g.eval(&p(&[1.0, -3.0])), 1.0);
    }

    #[test]
    fn rejects_nonconvex_quadratic() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(ConvexFn::quadratic(q, Point::zeros(2), 0.0).is_err());
    }

    #[test]
    fn disk_projection() {
        // ‖y‖² ≤ 1
        let q = DMatrix::identity(2, 2) * 2.0;
        let y = project_quadratic_sublevel(&q, &Point::zeros(2), 0.0, 1.0, &p(&[3.0, 4.0])).unwrap();
        assert!((y - p(&[0.6, 0.8])).norm() < 1e-12);
    }

    #[test]
    fn parabola_epigraph_projection() {
        // y₁² − y₂ ≤ 0 from (0,−1): nearest point is the vertex
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let y = project_quadratic_sublevel(&q, &p(&[0.0, -1.0]), 0.0, 0.0, &p(&[0.0, -1.0])).unwrap();
        assert!(y.norm() < 1e-10);
    }

    #[test]
    fn degenerate_level_is_argmin() {
        // y₁² ≤ 0 is the line y₁ = 0
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let y = project_quadratic_sublevel(&q, &Point::zeros(2), 0.0, 0.0, &p(&[0.5, 2.0])).unwrap();
        assert!((y - p(&[0.0, 2.0])).norm() < 1e-6);
    }
}
