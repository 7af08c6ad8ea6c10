//! Exact and sampled Fréchet and limiting normal cones.

use crate::cone::{PolyCone, UnionCone};
use crate::error::{check_dim, Error, Result};
use crate::geometry::intersect::Constraints;
use crate::geometry::{Ball, ConvexFn, ConvexPiece, SetExpr, SmoothMap};
use crate::numeric::linalg::{op_norm, sigma_min};
use crate::numeric::nnls;
use crate::{par, sampling, Point};
use nalgebra::{DMatrix, DVector};

/// Sampling schedule shared by the cone estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Strictly decreasing neighbourhood radii; verdicts use the last one.
    pub radii: Vec<f64>,
    pub eps: f64,
    pub samples_per_radius: usize,
    /// Fewer feasible samples than this at the finest radius is inconclusive.
    pub min_feasible: usize,
    pub n_basepoints: usize,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            radii: vec![0.3, 0.1, 0.03, 0.01],
            eps: 0.02,
            samples_per_radius: 500,
            min_feasible: 8,
            n_basepoints: 24,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.windows(2).any(|w| w[1] >= w[0]) || self.radii.iter().any(|&r| r <= 0.0) {
            return Err(Error::Invalid("radii must be positive and strictly decreasing".into()));
        }
        Ok(())
    }

    fn finest(&self) -> f64 {
        *self.radii.last().expect("validated")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalVerdict {
    Normal,
    NotNormal,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedDirection {
    pub direction: Point,
    pub verdict: NormalVerdict,
    /// Largest `⟨u, y − x⟩ / ‖y − x‖` over the samples; `-inf` at isolated points.
    pub worst_quotient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeEstimate {
    pub classified: Vec<ClassifiedDirection>,
    pub radii: Vec<f64>,
    pub eps: f64,
}

impl ConeEstimate {
    pub fn normal_directions(&self) -> Vec<Point> {
        self.classified
            .iter()
            .filter(|c| c.verdict == NormalVerdict::Normal)
            .map(|c| c.direction.clone())
            .collect()
    }

    pub fn inconclusive(&self) -> usize {
        self.classified.iter().filter(|c| c.verdict == NormalVerdict::Inconclusive).count()
    }

    pub fn verdict_of(&self, u: &Point) -> Option<NormalVerdict> {
        self.classified.iter().find(|c| (&c.direction - u).norm() < 1e-9).map(|c| c.verdict)
    }

    /// Convex cone generated by the normal directions.
    pub fn to_cone(&self, dim: usize) -> PolyCone {
        if !self.classified.is_empty() && self.classified.iter().all(|c| c.verdict == NormalVerdict::Normal) {
            return PolyCone::full(dim);
        }
        PolyCone::new(dim, self.normal_directions()).expect("directions share the dimension").pruned()
    }
}

/// Points of `set ∩ B(x, r) ∖ {x}` obtained by projecting uniform samples of the ball.
pub fn feasible_near(set: &SetExpr, x: &Point, r: f64, count: usize, seed: u64) -> Result<Vec<Point>> {
    let pts = par::map_indexed(count, |i| {
        let mut rng = par::item_rng(seed, i as u64);
        let z = sampling::in_ball(&mut rng, x, r);
        set.project(&z)
    });
    let mut out = Vec::with_capacity(count);
    for p in pts {
        let y = p?;
        let d = (&y - x).norm();
        if d > 1e-12 * r && d <= r {
            out.push(y);
        }
    }
    Ok(out)
}

enum Quotients {
    Isolated,
    TooFew,
    Worst(Vec<f64>),
}

fn quotients(set: &SetExpr, x: &Point, dirs: &[Point], radii: &[f64], samples: usize, min_feasible: usize, seed: u64) -> Result<Quotients> {
    let mut any = false;
    let mut finest = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        let pts = feasible_near(set, x, r, samples, seed ^ ((k as u64 + 1) << 40))?;
        any |= !pts.is_empty();
        if k + 1 == radii.len() {
            finest = pts;
        }
    }
    if !any {
        return Ok(Quotients::Isolated);
    }
    if finest.len() < min_feasible {
        return Ok(Quotients::TooFew);
    }
    let units: Vec<Point> = finest.iter().map(|y| (y - x).normalize()).collect();
    Ok(Quotients::Worst(
        dirs.iter()
            .map(|u| units.iter().map(|w| u.dot(w)).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
    ))
}

/// Classifies each direction by the Fréchet quotient
/// `max ⟨u, y − x⟩ / ‖y − x‖` over feasible samples at the finest radius.
/// A point with no feasible neighbours at any radius is isolated and every
/// direction is normal there.
pub fn estimate_frechet_normal(set: &SetExpr, x: &Point, dirs: &[Point], cfg: &EstimatorConfig) -> Result<ConeEstimate> {
    cfg.validate()?;
    check_dim(set.dim(), x.len())?;
    if !set.contains(x, 1e-7)? {
        return Err(Error::NotInSet { distance: set.distance(x)? });
    }
    let q = quotients(set, x, dirs, &cfg.radii, cfg.samples_per_radius, cfg.min_feasible, cfg.seed)?;
    Ok(ConeEstimate { classified: classify(dirs, &q, cfg.eps), radii: cfg.radii.clone(), eps: cfg.eps })
}

fn classify(dirs: &[Point], q: &Quotients, eps: f64) -> Vec<ClassifiedDirection> {
    dirs.iter()
        .enumerate()
        .map(|(i, u)| {
            let (verdict, worst) = match q {
                Quotients::Isolated => (NormalVerdict::Normal, f64::NEG_INFINITY),
                Quotients::TooFew => (NormalVerdict::Inconclusive, f64::NAN),
                Quotients::Worst(w) => {
                    (if w[i] <= eps { NormalVerdict::Normal } else { NormalVerdict::NotNormal }, w[i])
                }
            };
            ClassifiedDirection { direction: u.clone(), verdict, worst_quotient: worst }
        })
        .collect()
}

/// Sequential estimate of the limiting cone. At every radius of the schedule
/// base points `y ∈ set ∩ B(x, r)` are drawn and a direction counts as hit
/// when it is an ε-normal at some base point (the base point `x` itself
/// reuses the Fréchet samples, so Fréchet normals are always limiting
/// normals). A direction is limiting-normal when it is hit at every radius.
pub fn estimate_limiting_normal(set: &SetExpr, x: &Point, dirs: &[Point], cfg: &EstimatorConfig) -> Result<ConeEstimate> {
    let frechet = estimate_frechet_normal(set, x, dirs, cfg)?;
    if frechet.inconclusive() == dirs.len() && !dirs.is_empty() {
        return Ok(frechet);
    }
    let at_x: Vec<f64> = frechet
        .classified
        .iter()
        .map(|c| if c.verdict == NormalVerdict::Normal { c.worst_quotient.min(cfg.eps) } else { c.worst_quotient })
        .collect();
    let mut worst = vec![f64::NEG_INFINITY; dirs.len()];
    let inner_samples = (cfg.samples_per_radius / 4).max(64);
    for (k, &r) in cfg.radii.iter().enumerate() {
        let seed = cfg.seed ^ 0xba5e ^ ((k as u64 + 1) << 32);
        let bases = feasible_near(set, x, r, cfg.n_basepoints, seed)?;
        let per_base: Vec<Result<Vec<f64>>> = par::map_slice(&bases, |y| {
            let s = ((y - x).norm() / (2.0 * cfg.radii[0])).min(1.0);
            let inner: Vec<f64> = cfg.radii.iter().map(|ri| ri * s).collect();
            let seed = seed ^ hash_point(y);
            Ok(match quotients(set, y, dirs, &inner, inner_samples, cfg.min_feasible, seed)? {
                Quotients::Isolated => vec![f64::NEG_INFINITY; dirs.len()],
                Quotients::TooFew => vec![f64::INFINITY; dirs.len()],
                Quotients::Worst(w) => w,
            })
        });
        let mut best: Vec<f64> = at_x.iter().map(|v| if v.is_nan() { f64::INFINITY } else { *v }).collect();
        for qs in per_base {
            for (b, q) in best.iter_mut().zip(qs?) {
                *b = b.min(q);
            }
        }
        for (w, b) in worst.iter_mut().zip(best) {
            *w = w.max(b);
        }
    }
    let classified = dirs
        .iter()
        .zip(worst)
        .map(|(u, w)| ClassifiedDirection {
            direction: u.clone(),
            verdict: if w <= cfg.eps { NormalVerdict::Normal } else { NormalVerdict::NotNormal },
            worst_quotient: w,
        })
        .collect();
    Ok(ConeEstimate { classified, radii: cfg.radii.clone(), eps: cfg.eps })
}

fn hash_point(y: &Point) -> u64 {
    y.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| (h ^ v.to_bits()).wrapping_mul(0x100_0000_01b3))
}

/// Normal cone of `{A y ≤ b}` at `x`: the cone of rows active within `act_tol`.
pub fn normal_cone_polyhedron(a: &DMatrix<f64>, b: &DVector<f64>, x: &Point, act_tol: f64) -> Result<PolyCone> {
    check_dim(a.ncols(), x.len())?;
    check_dim(a.nrows(), b.len())?;
    let vals = a * x - b;
    let mut gens = Vec::new();
    for i in 0..a.nrows() {
        let nrm = a.row(i).norm().max(1e-300);
        let v = vals[i] / nrm;
        if v > act_tol {
            return Err(Error::NotInSet { distance: v });
        }
        if v.abs() <= act_tol {
            gens.push(a.row(i).transpose());
        }
    }
    Ok(PolyCone::new(x.len(), gens)?.pruned())
}

/// Fréchet normal cone of `set` at `x` when it is available in closed form:
/// convex pieces, products, polyhedral or qualified intersections, unions
/// (intersection of the member cones at `x`), epigraphs, and preimages
/// under maps with surjective Jacobian.
pub fn exact_frechet_normal(set: &SetExpr, x: &Point, act_tol: f64) -> Result<Option<PolyCone>> {
    check_dim(set.dim(), x.len())?;
    let n = x.len();
    match set {
        SetExpr::Convex(piece) => convex_piece_normal(piece, x, act_tol),
        SetExpr::Union(pieces) => {
            let mut cones = Vec::new();
            for p in pieces {
                if p.contains(x, act_tol)? {
                    match exact_frechet_normal(p, x, act_tol)? {
                        Some(c) => cones.push(c),
                        None => return Ok(None),
                    }
                }
            }
            if cones.is_empty() {
                return Err(Error::NotInSet { distance: set.distance(x)? });
            }
            Ok(Some(PolyCone::intersect(&cones)?.pruned()))
        }
        SetExpr::Product(factors) => {
            let mut gens = Vec::new();
            let mut off = 0;
            for f in factors {
                let k = f.dim();
                let part = x.rows(off, k).into_owned();
                let Some(c) = exact_frechet_normal(f, &part, act_tol)? else { return Ok(None) };
                for g in c.generators() {
                    let mut v = Point::zeros(n);
                    v.rows_mut(off, k).copy_from(g);
                    gens.push(v);
                }
                off += k;
            }
            Ok(Some(PolyCone::new(n, gens)?))
        }
        SetExpr::Epigraph(f) => {
            let m = f.dim();
            let y = x.rows(0, m).into_owned();
            let alpha = x[m];
            let fy = f.eval(&y);
            if fy > alpha + act_tol {
                return Err(Error::NotInSet { distance: fy - alpha });
            }
            if alpha - fy > act_tol {
                return Ok(Some(PolyCone::zero(n)));
            }
            let gens = f
                .subgradients(&y, act_tol)
                .into_iter()
                .map(|g| {
                    let mut v = Point::zeros(n);
                    v.rows_mut(0, m).copy_from(&g);
                    v[m] = -1.0;
                    v
                })
                .collect();
            Ok(Some(PolyCone::new(n, gens)?))
        }
        SetExpr::Preimage { map, target } => match chain_rule_normal(map, target, x) {
            Ok(c) => Ok(Some(c)),
            Err(Error::NotSurjective { .. }) => Ok(None),
            Err(e) => Err(e),
        },
        SetExpr::Intersection(parts) => {
            if parts.len() == 1 {
                return exact_frechet_normal(&parts[0], x, act_tol);
            }
            let Some(cons) = Constraints::from_set(set) else { return Ok(None) };
            constraints_cone(&cons?, x, act_tol)
        }
    }
}

fn constraints_cone(cons: &Constraints, x: &Point, act_tol: f64) -> Result<Option<PolyCone>> {
    let n = x.len();
    if cons.violation(x) > act_tol {
        return Err(Error::NotInSet { distance: cons.violation(x) });
    }
    let mut ineq = Vec::new();
    let mut eq = Vec::new();
    for (a, b) in &cons.ineq {
        if (a.dot(x) - b).abs() <= act_tol {
            ineq.push(a.clone());
        }
    }
    for (a, _) in &cons.eq {
        eq.push(a.clone());
    }
    let mut curved = Vec::new();
    for ball in &cons.balls {
        if ((x - &ball.center).norm() - ball.radius).abs() <= act_tol {
            curved.push((x - &ball.center).normalize());
        }
    }
    let n_balls = curved.len();
    for q in &cons.quads {
        let val = 0.5 * x.dot(&(&q.q * x)) + q.c.dot(x) + q.d - q.level;
        if val.abs() <= act_tol {
            let g = &q.q * x + &q.c;
            if g.norm() < 1e-12 {
                return Ok(None);
            }
            curved.push(g);
        }
    }
    if !curved.is_empty() && !mfcq(&ineq, &eq, &curved) {
        // a dependence that puts weight on a sphere makes x a strict local
        // minimizer of a convex combination, so x is isolated in the set
        let k = ineq.len();
        if n_balls > 0 && positively_dependent(&ineq, &eq, &curved, k..k + n_balls) {
            return Ok(Some(PolyCone::full(n)));
        }
        return Ok(None);
    }
    let mut gens = ineq;
    gens.extend(curved);
    for a in eq {
        gens.push(a.clone());
        gens.push(-a);
    }
    Ok(Some(PolyCone::new(n, gens)?.pruned()))
}

// Mangasarian–Fromovitz: some direction d has ⟨a,d⟩ = 0 on equalities and
// ⟨g,d⟩ < 0 on active inequalities. Checked through its dual: no nonzero
// nonnegative combination of the inequality gradients lies in span(eq).
fn mfcq(ineq: &[Point], eq: &[Point], curved: &[Point]) -> bool {
    !positively_dependent(ineq, eq, curved, 0..ineq.len() + curved.len())
}

// Is there μ ≥ 0 on the inequality gradients, with unit total weight on the
// columns in `weighted`, whose combination lies in span(eq)?
fn positively_dependent(ineq: &[Point], eq: &[Point], curved: &[Point], weighted: std::ops::Range<usize>) -> bool {
    let n = curved.first().or(ineq.first()).map_or(0, |g| g.len());
    let mut cols: Vec<Point> = ineq.iter().chain(curved).map(|g| g.normalize()).collect();
    for a in eq {
        cols.push(a.clone());
        cols.push(-a);
    }
    // [G  ±E; w·1ᵀ 0] μ ≈ [0; w]
    let w = 10.0;
    let mut m = DMatrix::zeros(n + 1, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.view_mut((0, j), (n, 1)).copy_from(c);
        if weighted.contains(&j) {
            m[(n, j)] = w;
        }
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = w;
    nnls(&m, &rhs).residual <= 1e-7
}

fn convex_piece_normal(piece: &ConvexPiece, x: &Point, act_tol: f64) -> Result<Option<PolyCone>> {
    let n = x.len();
    match piece {
        ConvexPiece::Halfspace { a, b } => {
            let v = (a.dot(x) - b) / a.norm();
            if v > act_tol {
                return Err(Error::NotInSet { distance: v });
            }
            Ok(Some(if v.abs() <= act_tol { PolyCone::ray(a.clone()) } else { PolyCone::zero(n) }))
        }
        ConvexPiece::HPolyhedron { a, b } => Ok(Some(normal_cone_polyhedron(a, b, x, act_tol)?)),
        ConvexPiece::Ball(ball) => ball_normal(std::slice::from_ref(ball), x, act_tol),
        ConvexPiece::BallIntersection { balls } => ball_normal(balls, x, act_tol),
        ConvexPiece::AffineSet { .. } | ConvexPiece::SublevelConvex { .. } => {
            let set = SetExpr::Convex(piece.clone());
            let cons = Constraints::from_set(&set).expect("affine and sublevel pieces are supported")?;
            constraints_cone(&cons, x, act_tol)
        }
        ConvexPiece::VCone { generators, apex } => {
            // N(apex + K, x) = K° ∩ (x − apex)^⊥
            let k = PolyCone::new(n, generators.clone())?;
            let d = x - apex;
            if k.residual(&d) > act_tol {
                return Err(Error::NotInSet { distance: k.residual(&d) });
            }
            let polar = k.polar()?;
            if d.norm() <= act_tol {
                return Ok(Some(polar));
            }
            let perp = PolyCone::new(n, crate::numeric::linalg::complement_basis(n, &[d.clone()]).into_iter().flat_map(|b| [b.clone(), -b]).collect())?;
            Ok(Some(PolyCone::intersect(&[polar, perp])?.pruned()))
        }
    }
}

fn ball_normal(balls: &[Ball], x: &Point, act_tol: f64) -> Result<Option<PolyCone>> {
    let n = x.len();
    let mut active = Vec::new();
    for b in balls {
        let v = (x - &b.center).norm() - b.radius;
        if v > act_tol {
            return Err(Error::NotInSet { distance: v });
        }
        if v.abs() <= act_tol {
            active.push((x - &b.center).normalize());
        }
    }
    if active.is_empty() {
        return Ok(Some(PolyCone::zero(n)));
    }
    if !mfcq(&[], &[], &active) {
        // a ball intersection without interior is a single point
        return Ok(Some(PolyCone::full(n)));
    }
    Ok(Some(PolyCone::new(n, active)?))
}

/// Which route produced a cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSource {
    Exact,
    Estimated,
}

/// Fréchet normal cone, exact when possible and otherwise the convex hull of
/// the directions the estimator classifies as normal.
pub fn frechet_normal_cone(set: &SetExpr, x: &Point, cfg: &EstimatorConfig) -> Result<(PolyCone, ConeSource)> {
    if let Some(c) = exact_frechet_normal(set, x, 1e-9)? {
        return Ok((c, ConeSource::Exact));
    }
    if let SetExpr::Union(pieces) = set {
        // union rule with estimated members
        let mut cones = Vec::new();
        let mut source = ConeSource::Exact;
        for p in pieces {
            if p.contains(x, 1e-9)? {
                let (c, s) = frechet_normal_cone(p, x, cfg)?;
                if s == ConeSource::Estimated {
                    source = s;
                }
                cones.push(c);
            }
        }
        return Ok((PolyCone::intersect(&cones)?.pruned(), source));
    }
    let dirs = sampling::direction_grid(x.len(), 64);
    let est = estimate_frechet_normal(set, x, &dirs, cfg)?;
    Ok((est.to_cone(x.len()), ConeSource::Estimated))
}

/// `N̂(∪ pieces, x)` as the intersection of the member cones at `x`.
pub fn frechet_normal_union(pieces: &[SetExpr], x: &Point) -> Result<PolyCone> {
    let set = SetExpr::Union(pieces.to_vec());
    exact_frechet_normal(&set, x, 1e-9)?
        .ok_or_else(|| Error::Unsupported("union member without a closed-form normal cone".into()))
}

/// Limiting normal cone as a union of Fréchet cones at `x` and at base
/// points projected from a small ball around `x`. Exact for finite unions
/// of polyhedra once the radius is below the distance to faces not
/// containing `x`.
pub fn limiting_normal_cone(set: &SetExpr, x: &Point, cfg: &EstimatorConfig) -> Result<UnionCone> {
    let (at_x, _) = frechet_normal_cone(set, x, cfg)?;
    if set.is_convex() {
        return Ok(UnionCone::single(at_x));
    }
    let r = cfg.finest();
    let bases = feasible_near(set, x, r, cfg.n_basepoints.max(8) * 4, cfg.seed ^ 0x11e17)?;
    let mut pieces = vec![at_x];
    let cones = par::map_slice(&bases, |y| frechet_normal_cone(set, y, cfg).map(|(c, _)| c));
    for c in cones {
        let c = c?;
        if !pieces.iter().any(|p| cones_equal(p, &c)) {
            pieces.push(c);
        }
    }
    Ok(UnionCone { pieces })
}

fn cones_equal(a: &PolyCone, b: &PolyCone) -> bool {
    a.contained_in(b, 1e-9) && b.contained_in(a, 1e-9)
}

/// `∇f(x)ᵀ N(C, f(x))` for convex `C`, valid when `∇f(x)` is surjective.
pub fn chain_rule_normal(map: &SmoothMap, target: &SetExpr, x: &Point) -> Result<PolyCone> {
    let fx = map.try_eval(x)?;
    check_dim(target.dim(), fx.len())?;
    let j = map.jacobian(x);
    let s = sigma_min(&j);
    if map.dim_out() > map.dim_in() || s <= 1e-10 {
        return Err(Error::NotSurjective { sigma_min: if map.dim_out() > map.dim_in() { 0.0 } else { s } });
    }
    let inner = exact_frechet_normal(target, &fx, 1e-9)?
        .ok_or_else(|| Error::Unsupported("target normal cone not available in closed form".into()))?;
    if inner.is_full() && map.dim_out() == map.dim_in() {
        return Ok(PolyCone::full(x.len()));
    }
    let gens = inner.generators().iter().map(|g| j.transpose() * g).collect();
    PolyCone::new(x.len(), gens)
}

/// Jacobian bounds on a ball around `xbar`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularMapConstants {
    pub ell: f64,
    pub big_l: f64,
    pub radius: f64,
}

/// `ℓ = min σ_min(∇f)` and `L = max ‖∇f‖` over probes of `B(xbar, radius)`;
/// the radius is halved until `ℓ ≥ σ_min(∇f(xbar)) / 2`. Probes are the
/// centre plus a direction grid at five radial levels.
pub fn regular_map_constants(map: &SmoothMap, xbar: &Point, radius: f64, n_probes: usize) -> Result<RegularMapConstants> {
    check_dim(map.dim_in(), xbar.len())?;
    let s0 = sigma_min(&map.jacobian(xbar));
    if map.dim_out() > map.dim_in() || s0 <= 1e-10 {
        return Err(Error::NotSurjective { sigma_min: s0 });
    }
    let dirs = sampling::direction_grid(xbar.len(), n_probes.max(4));
    let mut r = radius;
    for _ in 0..60 {
        let mut ell = s0;
        let mut big_l = op_norm(&map.jacobian(xbar));
        for level in [0.2, 0.4, 0.6, 0.8, 1.0] {
            for u in &dirs {
                let j = map.jacobian(&(xbar + u * (r * level)));
                ell = ell.min(sigma_min(&j));
                big_l = big_l.max(op_norm(&j));
            }
        }
        if ell >= s0 / 2.0 {
            return Ok(RegularMapConstants { ell, big_l, radius: r });
        }
        r *= 0.5;
    }
    Err(Error::NotConverged { what: "radius shrinking".into(), residual: r })
}

/// Epigraph normal test: `(x*, −λ) ∈ N̂(Epi f, (x, α))` holds exactly when
/// `λ > 0`, `α = f(x)` and `x*/λ` is a subgradient at `x`. The subgradient
/// inequality is probed on a grid around `x`.
pub fn epigraph_normal_check(f: &ConvexFn, x: &Point, alpha: f64, xstar: &Point, lambda: f64, tol: f64) -> Result<bool> {
    check_dim(f.dim(), x.len())?;
    check_dim(f.dim(), xstar.len())?;
    if lambda == 0.0 {
        return Err(Error::Invalid("lambda must be nonzero".into()));
    }
    let fx = f.eval(x);
    if alpha < fx - tol {
        return Err(Error::NotInSet { distance: fx - alpha });
    }
    if lambda < 0.0 || (alpha - fx).abs() > tol {
        return Ok(false);
    }
    let g = xstar / lambda;
    let dirs = sampling::direction_grid(x.len(), 64);
    for u in &dirs {
        for t in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let y = x + u * t;
            if f.eval(&y) < fx + g.dot(&(&y - x)) - tol * t {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::circle_grid;

    fn p(v: &[f64]) -> Point {
        Point::from_vec(v.to_vec())
    }

    fn lens() -> SetExpr {
        ConvexPiece::ball_intersection(vec![
            Ball::new(p(&[1.0, 0.0]), 1.0).unwrap(),
            Ball::new(p(&[0.0, 1.0]), 1.0).unwrap(),
        ])
        .unwrap()
        .into()
    }

    fn quick() -> EstimatorConfig {
        EstimatorConfig { samples_per_radius: 200, ..Default::default() }
    }

    #[test]
    fn polyhedron_cones() {
        let a = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let b = DVector::zeros(1);
        let c = normal_cone_polyhedron(&a, &b, &p(&[1.0, 0.0]), 1e-12).unwrap();
        assert_eq!(c.generators(), &[p(&[0.0, 1.0])]);
        let c = normal_cone_polyhedron(&a, &b, &p(&[1.0, -1.0]), 1e-12).unwrap();
        assert!(c.is_zero());
        assert!(normal_cone_polyhedron(&a, &b, &p(&[1.0, 1.0]), 1e-12).is_err());
    }

    #[test]
    fn halfplane_estimate() {
        let h: SetExpr = ConvexPiece::halfspace(p(&[0.0, 1.0]), 0.0).unwrap().into();
        let est = estimate_frechet_normal(&h, &p(&[0.0, 0.0]), &[p(&[0.0, 1.0]), p(&[1.0, 0.0])], &quick()).unwrap();
        assert_eq!(est.classified[0].verdict, NormalVerdict::Normal);
        assert!(est.classified[0].worst_quotient.abs() < 1e-9);
        assert_eq!(est.classified[1].verdict, NormalVerdict::NotNormal);
    }

    #[test]
    fn lens_estimate_matches_exact() {
        let x = p(&[0.0, 0.0]);
        let exact = exact_frechet_normal(&lens(), &x, 1e-12).unwrap().unwrap();
        let dirs = circle_grid(64);
        let est = estimate_frechet_normal(&lens(), &x, &dirs, &quick()).unwrap();
        for c in &est.classified {
            let inside = exact.member(&c.direction, 1e-9);
            assert_eq!(c.verdict == NormalVerdict::Normal, inside, "{}", c.direction);
        }
    }

    #[test]
    fn tangent_balls_are_a_point() {
        let pair: SetExpr = ConvexPiece::ball_intersection(vec![
            Ball::new(p(&[-1.0, 0.0]), 1.0).unwrap(),
            Ball::new(p(&[1.0, 0.0]), 1.0).unwrap(),
        ])
        .unwrap()
        .into();
        assert!(exact_frechet_normal(&pair, &p(&[0.0, 0.0]), 1e-12).unwrap().unwrap().is_full());
    }

    #[test]
    fn epigraph_normal_examples() {
        let sq = ConvexFn::quadratic(DMatrix::identity(2, 2) * 2.0, Point::zeros(2), 0.0).unwrap();
        assert!(epigraph_normal_check(&sq, &Point::zeros(2), 0.0, &Point::zeros(2), 1.0, 1e-9).unwrap());
        let abs = ConvexFn::max_affine(DMatrix::from_row_slice(2, 1, &[1.0, -1.0]), DVector::zeros(2)).unwrap();
        assert!(epigraph_normal_check(&abs, &p(&[0.0]), 0.0, &p(&[0.5]), 1.0, 1e-9).unwrap());
        assert!(!epigraph_normal_check(&abs, &p(&[0.0]), 0.0, &p(&[1.5]), 1.0, 1e-9).unwrap());
        assert!(!epigraph_normal_check(&abs, &p(&[0.0]), 0.0, &p(&[0.5]), -1.0, 1e-9).unwrap());
        assert!(epigraph_normal_check(&abs, &p(&[0.0]), 0.0, &p(&[0.5]), 0.0, 1e-9).is_err());
    }

    #[test]
    fn chain_rule_examples() {
        let orthant: SetExpr = ConvexPiece::hpolyhedron(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap().into();
        let c = chain_rule_normal(&SmoothMap::identity(2), &orthant, &Point::zeros(2)).unwrap();
        assert_eq!(c.generators().len(), 2);
        let f = SmoothMap::from_strings(2, &["x1 + x2^2", "x2"]).unwrap();
        let half: SetExpr = ConvexPiece::halfspace(p(&[1.0, 0.0]), 0.0).unwrap().into();
        let c = chain_rule_normal(&f, &half, &Point::zeros(2)).unwrap();
        assert_eq!(c.generators(), &[p(&[1.0, 0.0])]);
        let flat = SmoothMap::linear(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), Point::zeros(2));
        assert!(matches!(chain_rule_normal(&flat, &orthant, &Point::zeros(2)), Err(Error::NotSurjective { .. })));
    }

    #[test]
    fn map_constants() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let f = SmoothMap::linear(m.clone(), Point::zeros(2));
        let k = regular_map_constants(&f, &Point::zeros(2), 0.5, 32).unwrap();
        assert!((k.ell - sigma_min(&m)).abs() < 1e-12);
        assert!((k.big_l - op_norm(&m)).abs() < 1e-12);
    }
}
