use nalgebra::{DMatrix, DVector};

/// Least-squares solution of `a x = b` via SVD (minimum-norm when rank deficient).
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    if a.nrows() == 0 {
        return DVector::zeros(a.ncols());
    }
    let scale = a.amax().max(1.0);
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-12 * scale)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

/// Smallest singular value over `min(rows, cols)` values.
pub fn sigma_min(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Spectral norm.
pub fn op_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().cloned().fold(0.0, f64::max)
}

/// Orthonormal basis of span(vectors).
pub fn range_basis(dim: usize, vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_columns(vectors);
    let svd = m.svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 1e-10 * smax.max(1.0))
        .map(|(i, _)| u.column(i).into_owned())
        .take(dim)
        .collect()
}

/// Orthonormal basis of the orthogonal complement of span(vectors) in R^dim.
pub fn complement_basis(dim: usize, vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let range = range_basis(dim, vectors);
    let mut basis: Vec<DVector<f64>> = range.clone();
    let mut out = Vec::new();
    for i in 0..dim {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        for b in &basis {
            let c = b.dot(&e);
            e -= b * c;
        }
        let n = e.norm();
        if n > 1e-8 {
            e /= n;
            basis.push(e.clone());
            out.push(e);
        }
        if basis.len() == dim {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_of_diagonal() {
        let v = DVector::from_vec(vec![1.0, 1.0]);
        let c = complement_basis(2, &[v.clone()]);
        assert_eq!(c.len(), 1);
        assert!(c[0].dot(&v).abs() < 1e-12);
    }

    #[test]
    fn sigma_min_of_diag() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.5]);
        assert!((sigma_min(&m) - 0.5).abs() < 1e-12);
        assert!((op_norm(&m) - 3.0).abs() < 1e-12);
    }
}
