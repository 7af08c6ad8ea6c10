//! Euclidean projection onto `{z : A z ≤ b}`.
//!
//! Dual active-set iteration (Goldfarb–Idnani specialised to an identity
//! Hessian). Starts from the unconstrained minimizer `z = x` and adds the
//! most violated constraint at each major step, so no feasible start is
//! needed and infeasibility shows up as a dual ray.

use super::linalg::lstsq;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct PolyProjection {
    pub point: DVector<f64>,
    /// Indices of constraints in the final working set.
    pub active: Vec<usize>,
    /// Multipliers for `active` (in units of the normalized rows).
    pub multipliers: Vec<f64>,
}

pub fn project_polyhedron(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<PolyProjection> {
    let (m, n) = a.shape();
    crate::error::check_dim(n, x.len())?;
    crate::error::check_dim(m, b.len())?;

    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut index: Vec<usize> = Vec::with_capacity(m);
    for i in 0..m {
        let row = a.row(i).transpose();
        let nrm = row.norm();
        if nrm < 1e-14 {
            if b[i] < -1e-12 {
                return Err(Error::Infeasible(format!("row {i} reads 0 ≤ {}", b[i])));
            }
            continue;
        }
        rows.push(row / nrm);
        rhs.push(b[i] / nrm);
        index.push(i);
    }

    let tol = 1e-12 * (1.0 + x.amax());
    let mut z = x.clone();
    let mut work: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let max_iter = 50 * (rows.len() + n + 1);
    let mut iter = 0;

    loop {
        iter += 1;
        if iter > max_iter {
            return Err(Error::NotConverged {
                what: "polyhedral projection".into(),
                residual: violation(&rows, &rhs, &z),
            });
        }
        let mut p = usize::MAX;
        let mut worst = tol;
        for (j, row) in rows.iter().enumerate() {
            if work.contains(&j) {
                continue;
            }
            let v = row.dot(&z) - rhs[j];
            if v > worst {
                worst = v;
                p = j;
            }
        }
        if p == usize::MAX {
            break;
        }
        let mut up = 0.0;
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(Error::NotConverged {
                    what: "polyhedral projection".into(),
                    residual: violation(&rows, &rhs, &z),
                });
            }
            let ap = &rows[p];
            let (r, d) = if work.is_empty() {
                (DVector::zeros(0), ap.clone())
            } else {
                let nmat = DMatrix::from_columns(
                    &work.iter().map(|&j| rows[j].clone()).collect::<Vec<_>>(),
                );
                let r = lstsq(&nmat, ap);
                let d = ap - &nmat * &r;
                (r, d)
            };
            let dn2 = d.norm_squared();
            let t2 = if dn2 > 1e-20 {
                ((ap.dot(&z) - rhs[p]) / dn2).max(0.0)
            } else {
                f64::INFINITY
            };
            let mut t1 = f64::INFINITY;
            let mut block = usize::MAX;
            for (pos, &rj) in r.iter().enumerate() {
                if rj > 1e-14 {
                    let t = u[pos] / rj;
                    if t < t1 {
                        t1 = t;
                        block = pos;
                    }
                }
            }
            if t1.is_infinite() && t2.is_infinite() {
                return Err(Error::Infeasible("polyhedron is empty".into()));
            }
            let t = t1.min(t2);
            if t.is_finite() && dn2 > 1e-20 {
                z -= &d * t;
            }
            for (pos, rj) in r.iter().enumerate() {
                u[pos] -= t * rj;
            }
            up += t;
            if t2 <= t1 {
                work.push(p);
                u.push(up);
                break;
            }
            work.remove(block);
            u.remove(block);
        }
    }

    Ok(PolyProjection {
        point: z,
        active: work.iter().map(|&j| index[j]).collect(),
        multipliers: u,
    })
}

fn violation(rows: &[DVector<f64>], rhs: &[f64], z: &DVector<f64>) -> f64 {
    rows.iter()
        .zip(rhs)
        .map(|(r, b)| (r.dot(z) - b).max(0.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    #[test]
    fn halfplane_drop() {
        let a = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let p = project_polyhedron(&a, &v(&[0.0]), &v(&[1.0, 3.0])).unwrap();
        assert!((p.point - v(&[1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn orthant_corner() {
        let a = DMatrix::identity(2, 2);
        let p = project_polyhedron(&a, &v(&[0.0, 0.0]), &v(&[2.0, 1.0])).unwrap();
        assert!(p.point.norm() < 1e-12);
        assert_eq!(p.active.len(), 2);
    }

    #[test]
    fn detects_empty() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let r = project_polyhedron(&a, &v(&[-1.0, -1.0]), &v(&[0.0]));
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn equality_as_two_rows() {
        // x + y = 1 written as two inequalities, plus x ≥ 0
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, -1.0, -1.0, -1.0, 0.0]);
        let p = project_polyhedron(&a, &v(&[1.0, -1.0, 0.0]), &v(&[-3.0, 0.0])).unwrap();
        assert!((p.point - v(&[0.0, 1.0])).norm() < 1e-10);
    }
}
