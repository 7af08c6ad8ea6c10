//! Lawson–Hanson nonnegative least squares.

use super::linalg::lstsq;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub coeffs: DVector<f64>,
    /// `‖G λ − v‖` at the returned coefficients.
    pub residual: f64,
}

/// Minimizes `‖G λ − v‖` over `λ ≥ 0`.
pub fn nnls(g: &DMatrix<f64>, v: &DVector<f64>) -> NnlsSolution {
    let (_, k) = g.shape();
    if k == 0 {
        return NnlsSolution { coeffs: DVector::zeros(0), residual: v.norm() };
    }
    let col_scale = (0..k).map(|j| g.column(j).norm()).fold(0.0, f64::max);
    let tol = 1e-13 * (1.0 + col_scale * (1.0 + v.norm()));

    let mut x = DVector::<f64>::zeros(k);
    let mut passive = vec![false; k];
    let mut banned = vec![false; k];

    for _ in 0..(3 * k + 20) {
        let r = v - g * &x;
        let w = g.transpose() * r;
        let pick = (0..k)
            .filter(|&j| !passive[j] && !banned[j])
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let j = match pick {
            Some(j) if w[j] > tol => j,
            _ => break,
        };
        passive[j] = true;
        let x_before = x.clone();

        for _ in 0..(3 * k + 20) {
            let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
            let sub = g.select_columns(idx.iter());
            let s = lstsq(&sub, v);
            if s.iter().all(|&si| si > 1e-15) {
                x.fill(0.0);
                for (pos, &i) in idx.iter().enumerate() {
                    x[i] = s[pos];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (pos, &i) in idx.iter().enumerate() {
                if s[pos] <= 1e-15 {
                    let denom = x[i] - s[pos];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = if alpha.is_finite() { alpha.clamp(0.0, 1.0) } else { 0.0 };
            for (pos, &i) in idx.iter().enumerate() {
                x[i] += alpha * (s[pos] - x[i]);
            }
            for &i in &idx {
                if x[i] <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if idx.iter().all(|&i| !passive[i]) {
                break;
            }
        }

        if (&x - &x_before).norm() <= 1e-15 && !passive[j] {
            banned[j] = true;
        } else {
            banned.iter_mut().for_each(|b| *b = false);
        }
    }
    let residual = (g * &x - v).norm();
    NnlsSolution { coeffs: x, residual }
}
