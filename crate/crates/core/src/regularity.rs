//! Subtransversality, strong CHIP, fuzzy and limiting intersection
//! inclusions, and the three-way equivalence harness for convex families.

use crate::cone::{decomposition_constant, property_g_constant, sum_decomposition_modulus, PolyCone, UnionCone, MEMBER_TOL};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{intersection_of, SetExpr};
use crate::normals::{feasible_near, frechet_normal_cone, limiting_normal_cone, ConeSource, EstimatorConfig};
use crate::{par, sampling, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubtransversalityVerdict {
    HoldsWithTau,
    FailsWithWitness,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubtransversalityEstimate {
    /// Largest sampled `d(x, ∩Aᵢ) / Σ d(x, Aᵢ)`; infinite after a failure verdict.
    pub tau_hat: f64,
    pub radius: f64,
    pub n_samples: usize,
    /// Sampled supremum at each radius `radius · 2⁻ʲ`.
    pub scale_sups: Vec<f64>,
    pub worst_ratio_points: Vec<(Point, f64)>,
    pub verdict: SubtransversalityVerdict,
    pub witness_sequence: Option<Vec<(Point, f64)>>,
    /// Every sampled `(point, ratio)` pair, in sample order.
    pub ratios: Vec<(Point, f64)>,
    pub failed_samples: usize,
}

/// Growth factor between consecutive scales that counts as blow-up.
pub const GROWTH_THRESHOLD: f64 = 1.5;
const SCALES: usize = 4;

/// Samples the ratio `d(x, ∩Aᵢ) / Σ d(x, Aᵢ)` on balls of radius
/// `radius · 2⁻ʲ`, `j = 0..3`. Every scale uses the same unit-ball pattern,
/// together with its projections onto each set. The verdict is failure when
/// the per-scale supremum, or the per-scale upper decile, grows by at least
/// [`GROWTH_THRESHOLD`] across all three consecutive scale pairs.
pub fn estimate_subtransversality(sets: &[SetExpr], xbar: &Point, radius: f64, n_samples: usize, seed: u64) -> Result<SubtransversalityEstimate> {
    if sets.is_empty() {
        return Err(Error::Invalid("empty collection".into()));
    }
    for s in sets {
        check_dim(s.dim(), xbar.len())?;
        if !s.contains(xbar, 1e-7)? {
            return Err(Error::NotInSet { distance: s.distance(xbar)? });
        }
    }
    let cap = intersection_of(sets)?;
    let mut scale_sups = Vec::with_capacity(SCALES);
    let mut scale_best: Vec<(Point, f64)> = Vec::with_capacity(SCALES);
    let mut scale_upper: Vec<(Point, f64)> = Vec::with_capacity(SCALES);
    let mut ratios = Vec::new();
    let mut failed = 0usize;
    let mut attempted = 0usize;
    for j in 0..SCALES {
        let r = radius / f64::from(1u32 << j);
        let per_sample = par::map_indexed(n_samples, |i| {
            let mut rng = par::item_rng(seed, i as u64);
            let z = sampling::in_ball(&mut rng, xbar, r);
            let mut cands = vec![z.clone()];
            for s in sets {
                if let Ok(p) = s.project(&z) {
                    cands.push(p);
                }
            }
            cands.into_iter().map(|x| (ratio_at(sets, &cap, &x), x)).collect::<Vec<_>>()
        });
        let mut sup: f64 = 0.0;
        let mut best = (xbar.clone(), 0.0);
        let mut here: Vec<(Point, f64)> = Vec::new();
        for group in per_sample {
            for (res, x) in group {
                attempted += 1;
                match res {
                    Ok(Some(q)) => {
                        if q > sup {
                            sup = q;
                            best = (x.clone(), q);
                        }
                        here.push((x.clone(), q));
                        ratios.push((x, q));
                    }
                    Ok(None) => {}
                    Err(_) => failed += 1,
                }
            }
        }
        scale_sups.push(sup);
        scale_best.push(best);
        here.sort_by(|a, b| a.1.total_cmp(&b.1));
        scale_upper.push(here.get(here.len() * 9 / 10).cloned().unwrap_or((xbar.clone(), 0.0)));
    }
    let mut worst = ratios.clone();
    worst.sort_by(|a, b| b.1.total_cmp(&a.1));
    worst.truncate(5);
    let grows_by = |v: &[f64]| v.windows(2).all(|w| w[0] > 0.0 && w[1] >= GROWTH_THRESHOLD * w[0]);
    let sup_grows = grows_by(&scale_sups);
    // one lucky near-tangential sample can dominate a coarse scale, so the
    // upper decile is tested as well
    let upper: Vec<f64> = scale_upper.iter().map(|u| u.1).collect();
    let grows = sup_grows || grows_by(&upper);
    let verdict = if attempted == 0 || failed * 4 > attempted {
        SubtransversalityVerdict::Inconclusive
    } else if grows {
        SubtransversalityVerdict::FailsWithWitness
    } else {
        SubtransversalityVerdict::HoldsWithTau
    };
    let tau_hat = match verdict {
        SubtransversalityVerdict::FailsWithWitness => f64::INFINITY,
        _ => scale_sups.iter().cloned().fold(0.0, f64::max),
    };
    Ok(SubtransversalityEstimate {
        tau_hat,
        radius,
        n_samples,
        scale_sups,
        worst_ratio_points: worst,
        verdict,
        witness_sequence: (verdict == SubtransversalityVerdict::FailsWithWitness).then_some(if sup_grows { scale_best } else { scale_upper }),
        ratios,
        failed_samples: failed,
    })
}

/// `d(x, ∩Aᵢ) / Σ d(x, Aᵢ)`, or `None` when the denominator is below `1e-12`.
pub fn ratio_at(sets: &[SetExpr], cap: &SetExpr, x: &Point) -> Result<Option<f64>> {
    let mut sum = 0.0;
    for s in sets {
        sum += s.distance(x)?;
    }
    if sum < 1e-12 {
        return Ok(None);
    }
    Ok(Some(cap.distance(x)? / sum))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChipReport {
    pub point: Point,
    pub left_cone: UnionCone,
    pub left_source: ConeSource,
    pub sum_cone: UnionCone,
    pub holds: bool,
    pub failing_direction: Option<Point>,
}

/// `N̂(∩Aᵢ, x) ⊆ Σ N̂(Aᵢ, x)`, checked on the generators of the left cone.
pub fn check_strong_frechet_chip(sets: &[SetExpr], x: &Point, cfg: &EstimatorConfig) -> Result<ChipReport> {
    let cap = intersection_of(sets)?;
    let (left, source) = frechet_normal_cone(&cap, x, cfg)?;
    let mut cones = Vec::with_capacity(sets.len());
    for s in sets {
        cones.push(frechet_normal_cone(s, x, cfg)?.0);
    }
    let sum = PolyCone::sum(&cones)?;
    let failing = left.first_outside(&sum, MEMBER_TOL);
    Ok(ChipReport {
        point: x.clone(),
        holds: failing.is_none(),
        failing_direction: failing,
        left_cone: UnionCone::single(left),
        left_source: source,
        sum_cone: UnionCone::single(sum),
    })
}

/// `N(∩Aᵢ, x) ⊆ Σ N(Aᵢ, x)` with limiting cones held as unions, checked on
/// the left generators and on a direction grid.
pub fn check_strong_limiting_chip(sets: &[SetExpr], x: &Point, cfg: &EstimatorConfig) -> Result<ChipReport> {
    let cap = intersection_of(sets)?;
    let left = limiting_normal_cone(&cap, x, cfg)?;
    let mut cones = Vec::with_capacity(sets.len());
    for s in sets {
        cones.push(limiting_normal_cone(s, x, cfg)?);
    }
    let sum = UnionCone::sum(&cones)?;
    let failing = test_directions(&left, 256).into_iter().find(|u| !sum.member(u, MEMBER_TOL));
    let source = if cap.is_convex() { frechet_normal_cone(&cap, x, cfg)?.1 } else { ConeSource::Estimated };
    Ok(ChipReport {
        point: x.clone(),
        holds: failing.is_none(),
        failing_direction: failing,
        left_cone: left,
        left_source: source,
        sum_cone: sum,
    })
}

// Unit directions of a union cone: normalized generators plus grid
// directions that lie in it.
fn test_directions(cone: &UnionCone, grid: usize) -> Vec<Point> {
    let dim = cone.dim();
    let mut out: Vec<Point> = Vec::new();
    for p in &cone.pieces {
        out.extend(p.generators().iter().cloned());
    }
    for u in sampling::direction_grid(dim, grid) {
        if cone.member(&u, 1e-9) {
            out.push(u);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyWitness {
    pub xstar: Point,
    pub base_points: Vec<Point>,
    /// The decomposed element `w` with `‖x* − τ w‖ ≤ eps`.
    pub combination: Point,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyReport {
    pub holds: bool,
    pub checked: usize,
    pub failing: Option<Point>,
    pub witnesses: Vec<FuzzyWitness>,
}

/// Searches, for each sampled unit `x* ∈ N̂(∩Aᵢ, x)`, base points
/// `xᵢ ∈ Aᵢ ∩ B(x, eps)` and cone elements `wᵢ ∈ N̂(Aᵢ, xᵢ)` with
/// `‖wᵢ‖ ≤ 1 + eps` and `‖x* − τ Σ wᵢ‖ ≤ eps`. A positive answer is a
/// certificate; a negative one only means the beam found nothing.
pub fn check_fuzzy_inclusion(sets: &[SetExpr], x: &Point, eps: f64, tau: f64, beam: usize, cfg: &EstimatorConfig) -> Result<FuzzyReport> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Invalid(format!("tau must be positive and finite, got {tau}")));
    }
    let cap = intersection_of(sets)?;
    let (left, _) = frechet_normal_cone(&cap, x, cfg)?;
    let xstars = test_directions(&UnionCone::single(left), 64);

    // distinct cones over each set's beam, with one base point per cone
    let mut per_set: Vec<Vec<(Point, PolyCone)>> = Vec::with_capacity(sets.len());
    for (i, s) in sets.iter().enumerate() {
        let mut bases = vec![x.clone()];
        bases.extend(feasible_near(s, x, eps, beam.saturating_sub(1), cfg.seed ^ (0xf22 + i as u64))?);
        let cones = par::map_slice(&bases, |y| frechet_normal_cone(s, y, cfg).map(|c| c.0));
        let mut distinct: Vec<(Point, PolyCone)> = Vec::new();
        for (y, c) in bases.into_iter().zip(cones) {
            let c = c?;
            if !distinct.iter().any(|(_, d)| d.contained_in(&c, 1e-9) && c.contained_in(d, 1e-9)) {
                distinct.push((y, c));
            }
        }
        per_set.push(distinct);
    }
    let combos = cartesian(&per_set.iter().map(|v| v.len()).collect::<Vec<_>>());

    let results = par::map_slice(&xstars, |xs| -> Result<Option<FuzzyWitness>> {
        for combo in &combos {
            let cones: Vec<PolyCone> = combo.iter().enumerate().map(|(i, &k)| per_set[i][k].1.clone()).collect();
            let total = PolyCone::sum(&cones)?;
            let mut w = total.project(&(xs / tau));
            let delta = decomposition_constant(&cones, &w)?;
            if delta.is_infinite() {
                continue;
            }
            if delta > 1.0 + eps {
                w *= (1.0 + eps) / delta;
            }
            let residual = (xs - &w * tau).norm();
            if residual <= eps {
                return Ok(Some(FuzzyWitness {
                    xstar: xs.clone(),
                    base_points: combo.iter().enumerate().map(|(i, &k)| per_set[i][k].0.clone()).collect(),
                    combination: w,
                    residual,
                }));
            }
        }
        Ok(None)
    });
    let mut witnesses = Vec::new();
    let mut failing = None;
    for (xs, r) in xstars.iter().zip(results) {
        match r? {
            Some(w) => witnesses.push(w),
            None => {
                if failing.is_none() {
                    failing = Some(xs.clone());
                }
            }
        }
    }
    Ok(FuzzyReport { holds: failing.is_none(), checked: xstars.len(), failing, witnesses })
}

fn cartesian(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in sizes {
        let mut next = Vec::with_capacity(out.len() * n);
        for c in &out {
            for k in 0..n {
                let mut d = c.clone();
                d.push(k);
                next.push(d);
            }
        }
        out = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitingInclusionReport {
    pub holds: bool,
    /// Largest sampled `min δ(u)` over unit `u` in the left cone, where `δ` is
    /// the decomposition constant over the best choice of union pieces.
    pub worst_delta: f64,
    pub worst_direction: Option<Point>,
    pub checked: usize,
}

/// `N(∩Aᵢ, x) ∩ B ⊆ τ Σ (N(Aᵢ, x) ∩ B)` on sampled unit directions.
pub fn check_limiting_inclusion(sets: &[SetExpr], x: &Point, tau: f64, cfg: &EstimatorConfig) -> Result<LimitingInclusionReport> {
    let cap = intersection_of(sets)?;
    let left = limiting_normal_cone(&cap, x, cfg)?;
    let mut cones = Vec::with_capacity(sets.len());
    for s in sets {
        cones.push(limiting_normal_cone(s, x, cfg)?);
    }
    let combos = cartesian(&cones.iter().map(|c| c.pieces.len()).collect::<Vec<_>>());
    let dirs = test_directions(&left, 64);
    let deltas = par::map_slice(&dirs, |u| -> Result<f64> {
        let mut best = f64::INFINITY;
        for combo in &combos {
            let pick: Vec<PolyCone> = combo.iter().enumerate().map(|(i, &k)| cones[i].pieces[k].clone()).collect();
            best = best.min(decomposition_constant(&pick, u)?);
        }
        Ok(best)
    });
    let mut worst: f64 = 0.0;
    let mut worst_dir = None;
    for (u, d) in dirs.iter().zip(deltas) {
        let d = d?;
        if d > worst || worst_dir.is_none() {
            worst = worst.max(d);
            worst_dir = Some(u.clone());
        }
    }
    Ok(LimitingInclusionReport { holds: worst <= tau * (1.0 + 1e-9), worst_delta: worst, worst_direction: worst_dir, checked: dirs.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub radius: f64,
    pub n_samples: usize,
    /// Points of the intersection (besides `xbar`) where (ii) and (iii) are checked.
    pub n_points: usize,
    pub n_normals: usize,
    pub g_samples: usize,
    pub seed: u64,
    pub estimator: EstimatorConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig { radius: 0.2, n_samples: 64, n_points: 4, n_normals: 16, g_samples: 64, seed: 0, estimator: EstimatorConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub subtransversality: SubtransversalityEstimate,
    /// (ii): strong CHIP at every checked point and a finite decomposition modulus.
    pub chip_eta_holds: bool,
    pub eta: f64,
    /// (iii): strong CHIP at every checked point and finite property (G) constants.
    pub chip_g_holds: bool,
    pub tau_g: f64,
    pub points_checked: usize,
    /// `None` when a sub-check was inconclusive.
    pub agree: Option<bool>,
}

/// Three-way comparison for closed convex sets: (i) subtransversality,
/// (ii) strong CHIP with a bounded sum-decomposition modulus, (iii) strong
/// CHIP with property (G), evaluated at `xbar` and at points of the
/// intersection near it.
pub fn equivalence_harness(sets: &[SetExpr], xbar: &Point, cfg: &HarnessConfig) -> Result<EquivalenceReport> {
    if let Some(s) = sets.iter().find(|s| !s.is_convex()) {
        return Err(Error::Invalid(format!("harness needs convex sets (dimension {} member is not)", s.dim())));
    }
    let sub = estimate_subtransversality(sets, xbar, cfg.radius, cfg.n_samples, cfg.seed)?;
    let cap = intersection_of(sets)?;
    let mut points = vec![xbar.clone()];
    points.extend(feasible_near(&cap, xbar, cfg.radius, cfg.n_points, cfg.seed ^ 0xa11)?);

    let mut chip_all = true;
    let mut eta: f64 = 0.0;
    let mut tau_g: f64 = 0.0;
    for (k, x) in points.iter().enumerate() {
        let chip = check_strong_frechet_chip(sets, x, &cfg.estimator)?;
        chip_all &= chip.holds;
        if !chip.holds {
            continue;
        }
        let mut cones = Vec::with_capacity(sets.len());
        for s in sets {
            cones.push(frechet_normal_cone(s, x, &cfg.estimator)?.0);
        }
        let left = &chip.left_cone.pieces[0];
        let total = PolyCone::sum(&cones)?;
        let dim = x.len();
        let mut normals: Vec<Point> = left.generators().to_vec();
        for i in 0..cfg.n_normals {
            let mut rng = par::item_rng(cfg.seed ^ 0xe7a ^ ((k as u64) << 20), i as u64);
            let v = left.project(&sampling::unit_sphere(&mut rng, dim));
            if v.norm() > 1e-9 {
                normals.push(v.normalize());
            }
        }
        for v in &normals {
            eta = eta.max(sum_decomposition_modulus(&cones, &total.project(v))?);
        }
        let g = property_g_constant(&cones, cfg.g_samples, cfg.seed ^ k as u64)?;
        tau_g = tau_g.max(g.tau);
    }
    let chip_eta_holds = chip_all && eta.is_finite();
    let chip_g_holds = chip_all && tau_g.is_finite();
    let agree = match sub.verdict {
        SubtransversalityVerdict::Inconclusive => None,
        v => {
            let i = v == SubtransversalityVerdict::HoldsWithTau;
            Some(i == chip_eta_holds && i == chip_g_holds)
        }
    };
    Ok(EquivalenceReport {
        subtransversality: sub,
        chip_eta_holds,
        eta: if chip_all { eta } else { f64::INFINITY },
        chip_g_holds,
        tau_g: if chip_all { tau_g } else { f64::INFINITY },
        points_checked: points.len(),
        agree,
    })
}
