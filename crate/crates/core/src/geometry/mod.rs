//! Closed sets in ℝⁿ with membership, projection and distance oracles.

pub mod expr;
pub mod functions;
pub(crate) mod intersect;
pub mod preimage;
pub mod smooth_map;

pub use functions::ConvexFn;
pub use intersect::dykstra_core;
pub use smooth_map::SmoothMap;

use crate::error::{check_dim, Error, Result};
use crate::numeric::linalg::range_basis;
use crate::numeric::{nnls, project_polyhedron};
use crate::Point;
use functions::project_quadratic_sublevel;
use intersect::Constraints;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn project(&self, x: &Point) -> Point {
        let d = x - &self.center;
        let n = d.norm();
        if n <= self.radius {
            x.clone()
        } else {
            &self.center + d * (self.radius / n)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexPiece {
    /// `{y : ⟨a, y⟩ ≤ b}`
    Halfspace { a: Point, b: f64 },
    /// `{y : A y ≤ b}`
    HPolyhedron { a: DMatrix<f64>, b: DVector<f64> },
    Ball(Ball),
    BallIntersection { balls: Vec<Ball> },
    /// `apex + cone(generators)`
    VCone { generators: Vec<Point>, apex: Point },
    /// `base + span(basis)`
    AffineSet { base: Point, basis: Vec<Point> },
    /// `{y : g(y) ≤ level}`
    SublevelConvex { g: ConvexFn, level: f64 },
}

impl ConvexPiece {
    pub fn halfspace(a: Point, b: f64) -> Result<Self> {
        if a.norm() < 1e-14 {
            return Err(Error::Invalid("halfspace normal must be nonzero".into()));
        }
        Ok(ConvexPiece::Halfspace { a, b })
    }

    pub fn hpolyhedron(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        Ok(ConvexPiece::HPolyhedron { a, b })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        Ok(ConvexPiece::Ball(Ball::new(center, radius)?))
    }

    pub fn ball_intersection(balls: Vec<Ball>) -> Result<Self> {
        let Some(first) = balls.first() else {
            return Err(Error::Invalid("ball intersection needs at least one ball".into()));
        };
        for b in &balls {
            check_dim(first.center.len(), b.center.len())?;
        }
        Ok(ConvexPiece::BallIntersection { balls })
    }

    pub fn vcone(generators: Vec<Point>, apex: Point) -> Result<Self> {
        for g in &generators {
            check_dim(apex.len(), g.len())?;
        }
        Ok(ConvexPiece::VCone { generators, apex })
    }

    pub fn affine(base: Point, basis: Vec<Point>) -> Result<Self> {
        for v in &basis {
            check_dim(base.len(), v.len())?;
        }
        Ok(ConvexPiece::AffineSet { base, basis })
    }

    pub fn sublevel(g: ConvexFn, level: f64) -> Self {
        ConvexPiece::SublevelConvex { g, level }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexPiece::Halfspace { a, .. } => a.len(),
            ConvexPiece::HPolyhedron { a, .. } => a.ncols(),
            ConvexPiece::Ball(b) => b.center.len(),
            ConvexPiece::BallIntersection { balls } => balls[0].center.len(),
            ConvexPiece::VCone { apex, .. } => apex.len(),
            ConvexPiece::AffineSet { base, .. } => base.len(),
            ConvexPiece::SublevelConvex { g, .. } => g.dim(),
        }
    }

    pub fn project(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim(), x.len())?;
        match self {
            ConvexPiece::Halfspace { a, b } => {
                let v = a.dot(x) - b;
                Ok(if v <= 0.0 { x.clone() } else { x - a * (v / a.norm_squared()) })
            }
            ConvexPiece::HPolyhedron { a, b } => Ok(project_polyhedron(a, b, x)?.point),
            ConvexPiece::Ball(ball) => Ok(ball.project(x)),
            ConvexPiece::BallIntersection { balls } if balls.len() == 1 => Ok(balls[0].project(x)),
            ConvexPiece::BallIntersection { .. } => {
                let set = SetExpr::Convex(self.clone());
                Constraints::from_set(&set).expect("balls are supported")?.project(x)
            }
            ConvexPiece::VCone { generators, apex } => {
                if generators.is_empty() {
                    return Ok(apex.clone());
                }
                let g = DMatrix::from_columns(generators);
                let s = nnls(&g, &(x - apex));
                Ok(apex + g * s.coeffs)
            }
            ConvexPiece::AffineSet { base, basis } => {
                let u = range_basis(base.len(), basis);
                let d = x - base;
                let mut p = base.clone();
                for v in &u {
                    p += v * v.dot(&d);
                }
                Ok(p)
            }
            ConvexPiece::SublevelConvex { g, level } => match g {
                ConvexFn::Quadratic { q, c, d } => project_quadratic_sublevel(q, c, *d, *level, x),
                _ => {
                    let (a, b) = g.sublevel_rows(*level).expect("piecewise affine");
                    Ok(project_polyhedron(&a, &b, x)?.point)
                }
            },
        }
    }
}

/// A closed subset of ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub enum SetExpr {
    Convex(ConvexPiece),
    /// Finite union; projections break ties by the lowest piece index.
    Union(Vec<SetExpr>),
    /// Cartesian product, coordinates stacked in order.
    Product(Vec<SetExpr>),
    /// `{(y, α) : f(y) ≤ α}` in ℝⁿ⁺¹.
    Epigraph(ConvexFn),
    /// `f⁻¹(target)` with a convex target.
    Preimage { map: SmoothMap, target: Box<SetExpr> },
    /// Intersection of convex sets.
    Intersection(Vec<SetExpr>),
}

impl From<ConvexPiece> for SetExpr {
    fn from(p: ConvexPiece) -> Self {
        SetExpr::Convex(p)
    }
}

impl SetExpr {
    pub fn dim(&self) -> usize {
        match self {
            SetExpr::Convex(p) => p.dim(),
            SetExpr::Union(v) | SetExpr::Intersection(v) => v.first().map_or(0, |s| s.dim()),
            SetExpr::Product(v) => v.iter().map(|s| s.dim()).sum(),
            SetExpr::Epigraph(f) => f.dim() + 1,
            SetExpr::Preimage { map, .. } => map.dim_in(),
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            SetExpr::Convex(_) | SetExpr::Epigraph(_) => true,
            SetExpr::Union(v) => v.len() == 1 && v[0].is_convex(),
            SetExpr::Product(v) | SetExpr::Intersection(v) => v.iter().all(|s| s.is_convex()),
            SetExpr::Preimage { map, target } => map.is_linear() && target.is_convex(),
        }
    }

    /// Structural checks: consistent dimensions, nonempty unions, convex preimage targets.
    pub fn validate(&self) -> Result<()> {
        match self {
            SetExpr::Convex(_) | SetExpr::Epigraph(_) => Ok(()),
            SetExpr::Union(v) | SetExpr::Intersection(v) => {
                let Some(first) = v.first() else {
                    return Err(Error::Invalid("union or intersection with no members".into()));
                };
                for s in v {
                    check_dim(first.dim(), s.dim())?;
                    s.validate()?;
                    if matches!(self, SetExpr::Intersection(_)) && !s.is_convex() {
                        return Err(Error::Invalid("intersection members must be convex".into()));
                    }
                }
                Ok(())
            }
            SetExpr::Product(v) => {
                if v.is_empty() {
                    return Err(Error::Invalid("product with no factors".into()));
                }
                v.iter().try_for_each(|s| s.validate())
            }
            SetExpr::Preimage { map, target } => {
                check_dim(map.dim_out(), target.dim())?;
                if !target.is_convex() {
                    return Err(Error::Invalid("preimage target must be convex".into()));
                }
                target.validate()
            }
        }
    }

    /// Top-level union members, or the set itself.
    pub fn pieces(&self) -> Vec<&SetExpr> {
        match self {
            SetExpr::Union(v) => v.iter().collect(),
            other => vec![other],
        }
    }

    pub fn project(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim(), x.len())?;
        match self {
            SetExpr::Convex(p) => p.project(x),
            SetExpr::Union(pieces) => {
                let mut best: Option<(f64, Point)> = None;
                let mut last_err = None;
                for piece in pieces {
                    match piece.project(x) {
                        Ok(p) => {
                            let d = (&p - x).norm();
                            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                                best = Some((d, p));
                            }
                        }
                        Err(Error::Infeasible(_)) | Err(Error::EmptySet(_)) => {}
                        Err(e) => last_err = Some(e),
                    }
                }
                if let Some(e) = last_err {
                    return Err(e);
                }
                best.map(|(_, p)| p).ok_or_else(|| Error::EmptySet("every union member is empty".into()))
            }
            SetExpr::Product(factors) => {
                let mut out = Point::zeros(x.len());
                let mut off = 0;
                for f in factors {
                    let k = f.dim();
                    let part = f.project(&x.rows(off, k).into_owned())?;
                    out.rows_mut(off, k).copy_from(&part);
                    off += k;
                }
                Ok(out)
            }
            SetExpr::Epigraph(f) => match f {
                ConvexFn::Quadratic { q, c, d } => {
                    let n = c.len();
                    let mut ql = DMatrix::zeros(n + 1, n + 1);
                    ql.view_mut((0, 0), (n, n)).copy_from(q);
                    let mut cl = Point::zeros(n + 1);
                    cl.rows_mut(0, n).copy_from(c);
                    cl[n] = -1.0;
                    project_quadratic_sublevel(&ql, &cl, *d, 0.0, x)
                }
                _ => Constraints::from_set(self).expect("piecewise affine epigraph")?.project(x),
            },
            SetExpr::Preimage { map, target } => preimage::project(map, target, x),
            SetExpr::Intersection(parts) => {
                if parts.len() == 1 {
                    return parts[0].project(x);
                }
                if let Some(c) = Constraints::from_set(self) {
                    return c?.project(x);
                }
                let projs: Vec<Box<dyn Fn(&Point) -> Result<Point> + '_>> = parts
                    .iter()
                    .map(|p| Box::new(move |y: &Point| p.project(y)) as Box<dyn Fn(&Point) -> Result<Point>>)
                    .collect();
                let (y, _) = dykstra_core(&projs, x, 20_000, 1e-14)?;
                let mut worst: f64 = 0.0;
                for p in parts {
                    worst = worst.max(p.distance(&y)?);
                }
                if worst > 1e-7 * (1.0 + x.amax()) {
                    return Err(Error::Infeasible(format!("intersection appears empty (gap {worst:.3e})")));
                }
                Ok(y)
            }
        }
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        match self {
            SetExpr::Convex(ConvexPiece::Halfspace { a, b }) => {
                check_dim(a.len(), x.len())?;
                Ok(((a.dot(x) - b) / a.norm()).max(0.0))
            }
            SetExpr::Convex(ConvexPiece::Ball(ball)) => {
                check_dim(ball.center.len(), x.len())?;
                Ok(((x - &ball.center).norm() - ball.radius).max(0.0))
            }
            _ => Ok((self.project(x)? - x).norm()),
        }
    }

    /// Membership up to `tol`. For preimages this tests `f(x) ∈ C` up to `tol`.
    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        match self {
            SetExpr::Preimage { map, target } => Ok(target.distance(&map.eval(x))? <= tol),
            SetExpr::Union(pieces) => {
                for p in pieces {
                    if p.contains(x, tol)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            _ => Ok(self.distance(x)? <= tol),
        }
    }
}

/// `∩ sets` as a union of convex intersections, one per choice of union
/// member from each set. Preimages under a common map are merged into the
/// preimage of the intersected targets.
pub fn intersection_of(sets: &[SetExpr]) -> Result<SetExpr> {
    let Some(first) = sets.first() else {
        return Err(Error::Invalid("empty collection".into()));
    };
    for s in sets {
        check_dim(first.dim(), s.dim())?;
    }
    if sets.len() == 1 {
        return Ok(first.clone());
    }
    if let SetExpr::Preimage { map, .. } = first {
        let same = sets.iter().all(|s| matches!(s, SetExpr::Preimage { map: m, .. } if m == map));
        if same {
            let targets = sets
                .iter()
                .map(|s| match s {
                    SetExpr::Preimage { target, .. } => (**target).clone(),
                    _ => unreachable!(),
                })
                .collect();
            return Ok(SetExpr::Preimage { map: map.clone(), target: Box::new(SetExpr::Intersection(targets)) });
        }
    }
    let choices: Vec<Vec<&SetExpr>> = sets.iter().map(|s| s.pieces()).collect();
    for c in choices.iter().flatten() {
        if !c.is_convex() {
            return Err(Error::Unsupported("intersection of nonconvex union members".into()));
        }
    }
    let mut combos: Vec<Vec<SetExpr>> = vec![Vec::new()];
    for options in &choices {
        let mut next = Vec::with_capacity(combos.len() * options.len());
        for combo in &combos {
            for o in options {
                let mut c = combo.clone();
                match o {
                    SetExpr::Intersection(inner) => c.extend(inner.iter().cloned()),
                    other => c.push((*other).clone()),
                }
                next.push(c);
            }
        }
        combos = next;
    }
    let mut members: Vec<SetExpr> = combos.into_iter().map(SetExpr::Intersection).collect();
    Ok(if members.len() == 1 { members.remove(0) } else { SetExpr::Union(members) })
}
