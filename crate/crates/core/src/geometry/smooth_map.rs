use super::expr::Expr;
use crate::error::{check_dim, Error, Result};
use crate::Point;
use nalgebra::DMatrix;

/// A C¹ map ℝⁿ → ℝᵐ with an exact Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    dim_in: usize,
    dim_out: usize,
    kind: MapKind,
}

#[derive(Debug, Clone, PartialEq)]
enum MapKind {
    Linear { m: DMatrix<f64>, offset: Point },
    Symbolic { sources: Vec<String>, exprs: Vec<Expr>, jac: Vec<Vec<Expr>> },
}

impl SmoothMap {
    pub fn identity(n: usize) -> Self {
        Self::linear(DMatrix::identity(n, n), Point::zeros(n))
    }

    /// `x ↦ M x + offset`
    pub fn linear(m: DMatrix<f64>, offset: Point) -> Self {
        SmoothMap { dim_in: m.ncols(), dim_out: m.nrows(), kind: MapKind::Linear { m, offset } }
    }

    /// Builds a map from one expression string per output component and
    /// checks the symbolic Jacobian against central differences.
    pub fn from_strings<S: AsRef<str>>(dim_in: usize, components: &[S]) -> Result<Self> {
        let mut exprs = Vec::with_capacity(components.len());
        for (k, s) in components.iter().enumerate() {
            let e = Expr::parse(s.as_ref())
                .map_err(|e| Error::Invalid(format!("component {}: {e}", k + 1)))?;
            if e.arity() > dim_in {
                return Err(Error::Invalid(format!(
                    "component {} uses x{} but the input dimension is {dim_in}",
                    k + 1,
                    e.arity()
                )));
            }
            exprs.push(e);
        }
        let jac = exprs.iter().map(|e| (0..dim_in).map(|j| e.diff(j)).collect()).collect();
        let map = SmoothMap {
            dim_in,
            dim_out: exprs.len(),
            kind: MapKind::Symbolic {
                sources: components.iter().map(|s| s.as_ref().to_string()).collect(),
                exprs,
                jac,
            },
        };
        let err = map.jacobian_discrepancy(&probe_points(dim_in));
        if err > 1e-5 {
            return Err(Error::Invalid(format!("Jacobian disagrees with finite differences ({err:.3e})")));
        }
        Ok(map)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// Expression sources, or `None` for linear maps.
    pub fn sources(&self) -> Option<&[String]> {
        match &self.kind {
            MapKind::Symbolic { sources, .. } => Some(sources),
            MapKind::Linear { .. } => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, MapKind::Linear { .. })
    }

    pub fn eval(&self, x: &Point) -> Point {
        match &self.kind {
            MapKind::Linear { m, offset } => m * x + offset,
            MapKind::Symbolic { exprs, .. } => {
                Point::from_iterator(self.dim_out, exprs.iter().map(|e| e.eval(x.as_slice())))
            }
        }
    }

    pub fn jacobian(&self, x: &Point) -> DMatrix<f64> {
        match &self.kind {
            MapKind::Linear { m, .. } => m.clone(),
            MapKind::Symbolic { jac, .. } => {
                DMatrix::from_fn(self.dim_out, self.dim_in, |i, j| jac[i][j].eval(x.as_slice()))
            }
        }
    }

    pub fn try_eval(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim_in, x.len())?;
        Ok(self.eval(x))
    }

    /// Max relative mismatch between the Jacobian and central differences.
    pub fn jacobian_discrepancy(&self, probes: &[Point]) -> f64 {
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for x in probes {
            let j = self.jacobian(x);
            for col in 0..self.dim_in {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[col] += h;
                xm[col] -= h;
                let fd = (self.eval(&xp) - self.eval(&xm)) / (2.0 * h);
                let diff = (fd - j.column(col)).amax();
                worst = worst.max(diff / (1.0 + j.column(col).amax()));
            }
        }
        worst
    }
}

fn probe_points(n: usize) -> Vec<Point> {
    let mut out = vec![Point::zeros(n)];
    for k in 1..=4 {
        out.push(Point::from_fn(n, |i, _| 0.37 * ((k * (i + 2)) as f64).sin()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_demo_map() {
        let f = SmoothMap::from_strings(2, &["x1 + x2^2", "x2"]).unwrap();
        let x = Point::from_vec(vec![1.0, 1.0]);
        assert_eq!(f.eval(&x), Point::from_vec(vec![2.0, 1.0]));
        let j = f.jacobian(&x);
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]));
    }

    #[test]
    fn rejects_out_of_range_variable() {
        assert!(SmoothMap::from_strings(1, &["x2"]).is_err());
    }

    #[test]
    fn linear_identity() {
        let f = SmoothMap::identity(3);
        let x = Point::from_vec(vec![1.0, -2.0, 0.5]);
        assert_eq!(f.eval(&x), x);
        assert!(f.jacobian_discrepancy(&[x]) < 1e-8);
    }
}
