//! Primal and dual error-bound certificates for convex and convex-composite
//! inequality systems `φᵢ(x) ≤ 0`.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ConvexFn, ConvexPiece, SetExpr, SmoothMap};
use crate::normals::exact_frechet_normal;
use crate::numeric::linalg::sigma_min;
use crate::numeric::lp::{linprog, LpOutcome};
use crate::regularity::{estimate_subtransversality, SubtransversalityVerdict, GROWTH_THRESHOLD};
use crate::{par, sampling, Point};
use nalgebra::{DMatrix, DVector};

/// Tolerance for `|φᵢ(x)| ≤ tol` when reading off active constraints.
pub const ACTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum InequalitySystem {
    /// `gᵢ(x) ≤ 0`
    Convex { g: Vec<ConvexFn> },
    /// `gᵢ(f(x)) ≤ 0`
    Composite { map: SmoothMap, g: Vec<ConvexFn> },
}

impl InequalitySystem {
    pub fn convex(g: Vec<ConvexFn>) -> Result<Self> {
        let sys = InequalitySystem::Convex { g };
        sys.validate()?;
        Ok(sys)
    }

    pub fn composite(map: SmoothMap, g: Vec<ConvexFn>) -> Result<Self> {
        let sys = InequalitySystem::Composite { map, g };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        let g = self.functions();
        if g.is_empty() {
            return Err(Error::Invalid("system without constraints".into()));
        }
        let m = match self {
            InequalitySystem::Convex { g } => g[0].dim(),
            InequalitySystem::Composite { map, .. } => map.dim_out(),
        };
        for gi in g {
            check_dim(m, gi.dim())?;
        }
        Ok(())
    }

    pub fn functions(&self) -> &[ConvexFn] {
        match self {
            InequalitySystem::Convex { g } | InequalitySystem::Composite { g, .. } => g,
        }
    }

    pub fn len(&self) -> usize {
        self.functions().len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions().is_empty()
    }

    pub fn dim(&self) -> usize {
        match self {
            InequalitySystem::Convex { g } => g[0].dim(),
            InequalitySystem::Composite { map, .. } => map.dim_in(),
        }
    }

    pub fn map(&self) -> Option<&SmoothMap> {
        match self {
            InequalitySystem::Convex { .. } => None,
            InequalitySystem::Composite { map, .. } => Some(map),
        }
    }

    /// The convex system `gᵢ(y) ≤ 0` underneath a composite one.
    pub fn base(&self) -> InequalitySystem {
        InequalitySystem::Convex { g: self.functions().to_vec() }
    }

    /// Composite systems with an affine map rewritten as convex ones.
    fn flattened(&self) -> Option<Vec<ConvexFn>> {
        match self {
            InequalitySystem::Convex { g } => Some(g.clone()),
            InequalitySystem::Composite { map, g } if map.is_linear() => {
                let zero = Point::zeros(map.dim_in());
                let (m, c) = (map.jacobian(&zero), map.eval(&zero));
                Some(g.iter().map(|gi| gi.compose_affine(&m, &c)).collect())
            }
            InequalitySystem::Composite { .. } => None,
        }
    }

    pub fn phi(&self, i: usize, x: &Point) -> f64 {
        match self {
            InequalitySystem::Convex { g } => g[i].eval(x),
            InequalitySystem::Composite { map, g } => g[i].eval(&map.eval(x)),
        }
    }

    /// `Aᵢ = {φᵢ ≤ 0}`
    pub fn constraint_set(&self, i: usize) -> SetExpr {
        if let Some(flat) = self.flattened() {
            return ConvexPiece::sublevel(flat[i].clone(), 0.0).into();
        }
        let InequalitySystem::Composite { map, g } = self else { unreachable!() };
        SetExpr::Preimage { map: map.clone(), target: Box::new(ConvexPiece::sublevel(g[i].clone(), 0.0).into()) }
    }

    pub fn constraint_sets(&self) -> Vec<SetExpr> {
        (0..self.len()).map(|i| self.constraint_set(i)).collect()
    }

    /// The solution set `A = ∩ Aᵢ`; for composite systems `f⁻¹(∩ Cᵢ)`.
    pub fn solution_set(&self) -> SetExpr {
        if let Some(flat) = self.flattened() {
            let parts: Vec<SetExpr> = flat.into_iter().map(|g| ConvexPiece::sublevel(g, 0.0).into()).collect();
            return SetExpr::Intersection(parts);
        }
        let InequalitySystem::Composite { map, g } = self else { unreachable!() };
        let target = SetExpr::Intersection(g.iter().map(|gi| ConvexPiece::sublevel(gi.clone(), 0.0).into()).collect());
        SetExpr::Preimage { map: map.clone(), target: Box::new(target) }
    }

    /// Vertices of `∂φᵢ(x)`.
    pub fn subdifferential(&self, i: usize, x: &Point) -> Vec<Point> {
        match self {
            InequalitySystem::Convex { g } => g[i].subgradients(x, ACTIVE_TOL),
            InequalitySystem::Composite { map, g } => subdiff_composite(&g[i], map, x),
        }
    }
}

/// `Σ max{φᵢ(x), 0}`
pub fn residual(sys: &InequalitySystem, x: &Point) -> f64 {
    (0..sys.len()).map(|i| sys.phi(i, x).max(0.0)).sum()
}

/// `{i : |φᵢ(x)| ≤ tol}` for `x` in the solution set.
pub fn active_set(sys: &InequalitySystem, x: &Point, tol: f64) -> Result<Vec<usize>> {
    check_dim(sys.dim(), x.len())?;
    let r = residual(sys, x);
    if r > tol {
        return Err(Error::NotInSet { distance: r });
    }
    Ok((0..sys.len()).filter(|&i| sys.phi(i, x).abs() <= tol).collect())
}

/// `∇f(x)ᵀ` applied to the vertices of `∂g(f(x))`.
pub fn subdiff_composite(g: &ConvexFn, map: &SmoothMap, x: &Point) -> Vec<Point> {
    let jt = map.jacobian(x).transpose();
    g.subgradients(&map.eval(x), ACTIVE_TOL).iter().map(|v| &jt * v).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scope {
    /// `B(xbar, delta)`
    Local { xbar: Point, delta: f64 },
    /// A bounded region of validity `B(center, radius)`.
    Global { center: Point, radius: f64 },
}

impl Scope {
    pub fn center(&self) -> &Point {
        match self {
            Scope::Local { xbar, .. } => xbar,
            Scope::Global { center, .. } => center,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Scope::Local { delta, .. } => *delta,
            Scope::Global { radius, .. } => *radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVerdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalEstimate {
    pub eta_primal: f64,
    pub scale_sups: Vec<f64>,
    pub verdict: BoundVerdict,
    /// Largest ratios with the point where they occurred.
    pub worst: Vec<(Point, f64)>,
    pub skipped: usize,
}

const SCALES: usize = 4;

/// Sup of `d(x, A) / ψ(x)` over points `p + t·u` where `p` is the projection
/// of a sampled point onto `A`, `u` the unit direction back to the sample and
/// `t = radius · 2⁻ʲ / 2`. The growth test matches the one used for
/// subtransversality.
pub fn estimate_error_bound_primal(sys: &InequalitySystem, scope: &Scope, n_samples: usize, seed: u64) -> Result<PrimalEstimate> {
    check_dim(sys.dim(), scope.center().len())?;
    let a = sys.solution_set();
    let (c, r) = (scope.center(), scope.radius());
    let rays = par::map_indexed(n_samples, |i| -> Result<Option<(Point, Point)>> {
        let mut rng = par::item_rng(seed, i as u64);
        let x = sampling::in_ball(&mut rng, c, r);
        let p = a.project(&x)?;
        let d = (&x - &p).norm();
        Ok((d > 1e-12).then(|| (p.clone(), (&x - &p) / d)))
    });
    let mut skipped = 0;
    let mut base = Vec::new();
    for ray in rays {
        match ray {
            Ok(Some(pu)) => base.push(pu),
            Ok(None) => {}
            Err(_) => skipped += 1,
        }
    }
    if base.is_empty() {
        return Ok(PrimalEstimate { eta_primal: f64::NAN, scale_sups: vec![], verdict: BoundVerdict::Inconclusive, worst: vec![], skipped });
    }
    let mut scale_sups = Vec::with_capacity(SCALES);
    let mut worst: Vec<(Point, f64)> = Vec::new();
    let mut failed = 0;
    for j in 0..SCALES {
        let t = 0.5 * r / f64::from(1u32 << j);
        let ratios = par::map_slice(&base, |(p, u)| -> Result<(Point, f64)> {
            let x = p + u * t;
            let psi = residual(sys, &x);
            let d = a.distance(&x)?;
            let q = if psi > 0.0 { d / psi } else if d > 1e-9 { f64::INFINITY } else { 0.0 };
            Ok((x, q))
        });
        let mut sup: f64 = 0.0;
        for q in ratios {
            match q {
                Ok((x, q)) => {
                    sup = sup.max(q);
                    worst.push((x, q));
                }
                Err(_) => failed += 1,
            }
        }
        scale_sups.push(sup);
    }
    worst.sort_by(|a, b| b.1.total_cmp(&a.1));
    worst.truncate(5);
    let grows = scale_sups.windows(2).all(|w| w[0] > 0.0 && w[1] >= GROWTH_THRESHOLD * w[0]);
    let blown = scale_sups.iter().any(|s| s.is_infinite());
    let verdict = if failed * 4 > base.len() * SCALES {
        BoundVerdict::Inconclusive
    } else if grows || blown {
        BoundVerdict::Fails
    } else {
        BoundVerdict::Holds
    };
    let eta_primal = if verdict == BoundVerdict::Fails { f64::INFINITY } else { scale_sups.iter().cloned().fold(0.0, f64::max) };
    Ok(PrimalEstimate { eta_primal, scale_sups, verdict, worst, skipped: skipped + failed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierCertificate {
    pub point: Point,
    pub normal: Point,
    pub active: Vec<usize>,
    /// `(i, λᵢ)` for active `i`.
    pub lambdas: Vec<(usize, f64)>,
    /// `‖x* − Σ λᵢ gᵢ‖` for the recovered subgradients `gᵢ ∈ ∂φᵢ(x)`.
    pub residual: f64,
}

impl MultiplierCertificate {
    pub fn max_lambda(&self) -> f64 {
        self.lambdas.iter().map(|l| l.1).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierSearch {
    Certified(MultiplierCertificate),
    /// No admissible multipliers within the cap; `residual` is the best distance found.
    Failed { residual: f64 },
}

/// Looks for `λᵢ ∈ [0, eta_max]`, `i ∈ I(x)`, with `x* ∈ Σ λᵢ ∂φᵢ(x)` up to
/// `tol`, and among those the smallest `max λᵢ`. Both stages are linear
/// programs over the subdifferential vertex weights.
pub fn dual_multiplier_search(sys: &InequalitySystem, x: &Point, xstar: &Point, eta_max: f64, tol: f64) -> Result<MultiplierSearch> {
    check_dim(sys.dim(), xstar.len())?;
    let active = active_set(sys, x, ACTIVE_TOL.max(tol))?;
    let n = x.len();
    let mut verts: Vec<(usize, Point)> = Vec::new();
    for &i in &active {
        for v in sys.subdifferential(i, x) {
            verts.push((i, v));
        }
    }
    if verts.is_empty() {
        let r = xstar.norm();
        return Ok(if r <= tol {
            MultiplierSearch::Certified(MultiplierCertificate { point: x.clone(), normal: xstar.clone(), active, lambdas: vec![], residual: r })
        } else {
            MultiplierSearch::Failed { residual: r }
        });
    }
    let k = verts.len();
    let na = active.len();
    // columns: μ (k), e⁺ (n), e⁻ (n), t
    let cols = k + 2 * n + 1;
    let mut a_eq = DMatrix::zeros(n, cols);
    for (col, (_, v)) in verts.iter().enumerate() {
        a_eq.column_mut(col).copy_from(v);
    }
    for r in 0..n {
        a_eq[(r, k + r)] = 1.0;
        a_eq[(r, k + n + r)] = -1.0;
    }
    let b_eq = xstar.clone();
    let group_rows = |a: &mut DMatrix<f64>| {
        for (row, i) in active.iter().enumerate() {
            for (col, (j, _)) in verts.iter().enumerate() {
                if j == i {
                    a[(row, col)] = 1.0;
                }
            }
        }
    };

    let mut c1 = DVector::zeros(cols);
    c1.rows_mut(k, 2 * n).fill(1.0);
    let mut a1 = DMatrix::zeros(na, cols);
    group_rows(&mut a1);
    let b1 = DVector::from_element(na, eta_max);
    let best = match linprog(&c1, &a1, &b1, &a_eq, &b_eq) {
        LpOutcome::Optimal { value, .. } => value,
        _ => return Err(Error::NotConverged { what: "multiplier residual program".into(), residual: f64::NAN }),
    };
    // ‖r‖₂ ≥ ‖r‖₁/√n, so the second stage cannot succeed
    if best > tol * (n as f64).sqrt() {
        return Ok(MultiplierSearch::Failed { residual: best });
    }

    let mut c2 = DVector::zeros(cols);
    c2[cols - 1] = 1.0;
    let mut a2 = DMatrix::zeros(na + 1, cols);
    group_rows(&mut a2);
    for row in 0..na {
        a2[(row, cols - 1)] = -1.0;
    }
    a2.view_mut((na, k), (1, 2 * n)).fill(1.0);
    let mut b2 = DVector::zeros(na + 1);
    // tiny slack so the bound stage cannot trade residual for smaller λ
    b2[na] = best + 1e-11;
    let mu = match linprog(&c2, &a2, &b2, &a_eq, &b_eq) {
        LpOutcome::Optimal { x, .. } => x,
        _ => return Err(Error::NotConverged { what: "multiplier bound program".into(), residual: best }),
    };

    let mut combo = Point::zeros(n);
    let mut lambdas: Vec<(usize, f64)> = active.iter().map(|&i| (i, 0.0)).collect();
    for (col, (i, v)) in verts.iter().enumerate() {
        let w = mu[col].max(0.0);
        combo += v * w;
        if let Some(l) = lambdas.iter_mut().find(|l| l.0 == *i) {
            l.1 += w;
        }
    }
    let res = (xstar - combo).norm();
    if res > tol {
        return Ok(MultiplierSearch::Failed { residual: res });
    }
    Ok(MultiplierSearch::Certified(MultiplierCertificate { point: x.clone(), normal: xstar.clone(), active, lambdas, residual: res }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualEstimate {
    pub eta_dual: f64,
    pub certificates: Vec<MultiplierCertificate>,
    /// `(x, x*)` pairs without admissible multipliers.
    pub failures: Vec<(Point, Point)>,
    pub skipped: usize,
}

/// Multiplier cap used by the dual estimator.
pub const ETA_MAX: f64 = 1e6;
const DUAL_TOL: f64 = 1e-8;

/// Samples boundary points `x` (projections of ambient samples with at
/// least one active constraint) and unit normals `x* ∈ N̂(A, x)` (the
/// proximal direction plus exact cone generators when available), and
/// records the smallest admissible `max λᵢ` for each pair.
pub fn estimate_error_bound_dual(sys: &InequalitySystem, scope: &Scope, n_samples: usize, seed: u64) -> Result<DualEstimate> {
    check_dim(sys.dim(), scope.center().len())?;
    let a = sys.solution_set();
    let (c, r) = (scope.center(), scope.radius());
    let per_sample = par::map_indexed(n_samples + 1, |i| -> Result<Vec<(Point, Point)>> {
        let (x, p) = if i == 0 {
            (c.clone(), c.clone())
        } else {
            let mut rng = par::item_rng(seed ^ 0xd0a1, i as u64);
            let x = sampling::in_ball(&mut rng, c, r);
            let p = a.project(&x)?;
            (x, p)
        };
        if residual(sys, &p) > 1e-7 || active_set(sys, &p, ACTIVE_TOL)?.is_empty() {
            return Ok(vec![]);
        }
        let mut normals = Vec::new();
        let d = (&x - &p).norm();
        if d > 1e-12 {
            normals.push((&x - &p) / d);
        }
        if let Ok(Some(cone)) = exact_frechet_normal(&a, &p, ACTIVE_TOL) {
            if !cone.is_full() {
                normals.extend(cone.generators().iter().cloned());
            }
        }
        Ok(normals.into_iter().map(|u| (p.clone(), u)).collect())
    });
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for s in per_sample {
        match s {
            Ok(v) => pairs.extend(v),
            Err(_) => skipped += 1,
        }
    }
    let searches = par::map_slice(&pairs, |(p, u)| dual_multiplier_search(sys, p, u, ETA_MAX, DUAL_TOL));
    let mut eta: f64 = 0.0;
    let mut certificates = Vec::new();
    let mut failures = Vec::new();
    for ((p, u), s) in pairs.into_iter().zip(searches) {
        match s {
            Ok(MultiplierSearch::Certified(cert)) => {
                eta = eta.max(cert.max_lambda());
                certificates.push(cert);
            }
            Ok(MultiplierSearch::Failed { .. }) => failures.push((p, u)),
            Err(_) => skipped += 1,
        }
    }
    let eta_dual = if !failures.is_empty() {
        f64::INFINITY
    } else if certificates.is_empty() {
        f64::NAN
    } else {
        eta
    };
    Ok(DualEstimate { eta_dual, certificates, failures, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundReport {
    pub scope: Scope,
    pub eta_primal: f64,
    pub eta_dual: f64,
    pub primal_verdict: BoundVerdict,
    pub certificates: Vec<MultiplierCertificate>,
    pub failures: Vec<(Point, Point)>,
    pub skipped: usize,
}

impl ErrorBoundReport {
    /// Primal and dual sides agree on finiteness.
    pub fn sides_agree(&self) -> bool {
        self.eta_primal.is_finite() == self.eta_dual.is_finite()
    }
}

pub fn error_bound_report(sys: &InequalitySystem, scope: &Scope, n_samples: usize, seed: u64) -> Result<ErrorBoundReport> {
    let p = estimate_error_bound_primal(sys, scope, n_samples, seed)?;
    let d = estimate_error_bound_dual(sys, scope, n_samples, seed)?;
    Ok(ErrorBoundReport {
        scope: scope.clone(),
        eta_primal: p.eta_primal,
        eta_dual: d.eta_dual,
        primal_verdict: p.verdict,
        certificates: d.certificates,
        failures: d.failures,
        skipped: p.skipped + d.skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeBoundReport {
    pub sigma_min: f64,
    pub base_bounds: Vec<BoundVerdict>,
    pub subtransversal: SubtransversalityVerdict,
    pub conclusion: PrimalEstimate,
    /// `None` when a premise fails or is inconclusive.
    pub premises_hold: Option<bool>,
    /// Premises hold and the composite bound was verified.
    pub confirmed: Option<bool>,
}

/// Checks surjectivity of `∇f(x̄)`, a local error bound for each `gᵢ ≤ 0`
/// at `f(x̄)` and subtransversality of `{f⁻¹(Cᵢ)}` at `x̄`, then runs the
/// composite primal estimator.
pub fn composite_bound_harness(sys: &InequalitySystem, xbar: &Point, delta: f64, n_samples: usize, seed: u64) -> Result<CompositeBoundReport> {
    let InequalitySystem::Composite { map, g } = sys else {
        return Err(Error::Invalid("harness expects a composite system".into()));
    };
    let sig = sigma_min(&map.jacobian(xbar));
    let y = map.eval(xbar);
    let mut base_bounds = Vec::with_capacity(g.len());
    for gi in g {
        let single = InequalitySystem::Convex { g: vec![gi.clone()] };
        base_bounds.push(estimate_error_bound_primal(&single, &Scope::Local { xbar: y.clone(), delta }, n_samples, seed)?.verdict);
    }
    let sub = estimate_subtransversality(&sys.constraint_sets(), xbar, delta, n_samples, seed)?.verdict;
    let conclusion = estimate_error_bound_primal(sys, &Scope::Local { xbar: xbar.clone(), delta }, n_samples, seed)?;
    let inconclusive = base_bounds.contains(&BoundVerdict::Inconclusive) || sub == SubtransversalityVerdict::Inconclusive;
    let premises_hold = if sig <= 1e-6 {
        Some(false)
    } else if inconclusive {
        None
    } else {
        Some(base_bounds.iter().all(|v| *v == BoundVerdict::Holds) && sub == SubtransversalityVerdict::HoldsWithTau)
    };
    let confirmed = match premises_hold {
        Some(true) => match conclusion.verdict {
            BoundVerdict::Inconclusive => None,
            v => Some(v == BoundVerdict::Holds),
        },
        _ => None,
    };
    Ok(CompositeBoundReport { sigma_min: sig, base_bounds, subtransversal: sub, conclusion, premises_hold, confirmed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub sigma_min: f64,
    pub composite: ErrorBoundReport,
    pub base: ErrorBoundReport,
    /// Equivalence is only asserted under surjectivity.
    pub asserted: bool,
    pub agree: Option<bool>,
}

/// Local error-bound certificates for the composite system at `x̄` and for
/// the base convex system at `f(x̄)`.
pub fn bound_transfer(sys: &InequalitySystem, xbar: &Point, delta: f64, n_samples: usize, seed: u64) -> Result<TransferReport> {
    let InequalitySystem::Composite { map, .. } = sys else {
        return Err(Error::Invalid("transfer expects a composite system".into()));
    };
    let sig = sigma_min(&map.jacobian(xbar));
    let composite = error_bound_report(sys, &Scope::Local { xbar: xbar.clone(), delta }, n_samples, seed)?;
    let base = error_bound_report(&sys.base(), &Scope::Local { xbar: map.eval(xbar), delta }, n_samples, seed)?;
    let asserted = sig > 1e-6;
    let agree = if !asserted || composite.primal_verdict == BoundVerdict::Inconclusive || base.primal_verdict == BoundVerdict::Inconclusive {
        None
    } else {
        Some(composite.primal_verdict == base.primal_verdict && composite.eta_dual.is_finite() == base.eta_dual.is_finite())
    };
    Ok(TransferReport { sigma_min: sig, composite, base, asserted, agree })
}
