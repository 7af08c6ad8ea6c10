//! Projection onto `f⁻¹(C)` by sequential linearization.

use super::intersect::Constraints;
use super::{SetExpr, SmoothMap};
use crate::error::{Error, Result};
use crate::numeric::linalg::{lstsq, op_norm, sigma_min};
use crate::numeric::project_polyhedron;
use crate::Point;
use nalgebra::{DMatrix, DVector};

/// Nearest point of `f⁻¹(C)` to `x` found by SQP from several starts.
pub(crate) fn project(map: &SmoothMap, target: &SetExpr, x: &Point) -> Result<Point> {
    let cons = match Constraints::from_set(target) {
        Some(c) => c?,
        None => return Err(Error::Unsupported("preimage target must be built from halfspaces, balls, affine sets or quadratic sublevels".into())),
    };
    let fx = map.eval(x);
    if cons.violation(&fx) <= 0.0 {
        return Ok(x.clone());
    }
    let mut starts = vec![x.clone()];
    // Gauss–Newton step toward the target
    if let Ok(c) = target.project(&fx) {
        let j = map.jacobian(x);
        starts.push(x - lstsq(&j, &(&fx - c)));
    }
    let mut best: Option<(f64, Point)> = None;
    let mut last_err = None;
    // damped reruns handle curvature that makes the plain iteration overshoot
    for s in &starts {
        for (alpha, iters) in [(1.0, 200), (0.5, 400), (0.2, 1000), (0.05, 4000)] {
            match sqp(map, &cons, x, s.clone(), alpha, iters) {
                Ok(z) => {
                    let d = (&z - x).norm();
                    if best.as_ref().is_none_or(|(bd, _)| d < *bd - 1e-15) {
                        best = Some((d, z));
                    }
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    match best {
        Some((_, z)) => Ok(z),
        None => Err(last_err.unwrap_or(Error::NotConverged { what: "preimage projection".into(), residual: f64::NAN })),
    }
}

// Fixed-point iteration z ← z + α (P_lin(z)(x) − z), where P_lin(z) projects
// onto the constraints linearized at z.
fn sqp(map: &SmoothMap, cons: &Constraints, x: &Point, start: Point, alpha: f64, iters: usize) -> Result<Point> {
    let n = x.len();
    let mut z = start;
    let tol = 1e-12 * (1.0 + x.amax());
    for _ in 0..iters {
        let fz = map.eval(&z);
        let j = map.jacobian(&z);
        let lin = cons.linearize(&fz);
        let mut a = DMatrix::zeros(lin.len(), n);
        let mut b = DVector::zeros(lin.len());
        for (k, (val, grad)) in lin.iter().enumerate() {
            // val + gradᵀ J (z' − z) ≤ 0
            let row = j.transpose() * grad;
            a.row_mut(k).copy_from(&row.transpose());
            b[k] = row.dot(&z) - val;
        }
        let next = project_polyhedron(&a, &b, x)?.point;
        let step = (&next - &z).norm();
        z += (next - &z) * alpha;
        if step <= tol {
            break;
        }
    }
    let viol = cons.violation(&map.eval(&z));
    if viol > 1e-9 * (1.0 + z.amax()) {
        return Err(Error::NotConverged { what: "preimage projection".into(), residual: viol });
    }
    Ok(z)
}

/// Two-sided bracket `[d(f(x),C)/L, d(f(x),C)/ℓ]` for `d(x, f⁻¹(C))`, with
/// `ℓ` and `L` the extreme singular values of the Jacobian over `B(x, radius)`
/// sampled on a small deterministic stencil. `None` when `ℓ` vanishes.
pub fn distance_bracket(map: &SmoothMap, target: &SetExpr, x: &Point, radius: f64) -> Result<Option<(f64, f64)>> {
    let d = target.distance(&map.eval(x))?;
    let mut ell = f64::INFINITY;
    let mut big_l: f64 = 0.0;
    let n = x.len();
    let mut probes = vec![x.clone()];
    for i in 0..n {
        for s in [-1.0, 1.0] {
            let mut p = x.clone();
            p[i] += s * radius;
            probes.push(p);
        }
    }
    for p in &probes {
        let j = map.jacobian(p);
        ell = ell.min(sigma_min(&j));
        big_l = big_l.max(op_norm(&j));
    }
    if ell <= 1e-12 || big_l == 0.0 {
        return Ok(None);
    }
    Ok(Some((d / big_l, d / ell)))
}
