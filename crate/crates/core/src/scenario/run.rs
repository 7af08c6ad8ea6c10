//! Command execution.

use super::report::{num, vecv, CommandResult, Report, Verdict};
use super::{Command, Expectation, Model, Scenario};
use crate::cone::{property_g_constant, PolyCone, UnionCone};
use crate::error::Result;
use crate::error_bounds::{bound_transfer, composite_bound_harness, error_bound_report, BoundVerdict, Scope};
use crate::normals::{frechet_normal_cone, limiting_normal_cone, regular_map_constants, ConeSource, EstimatorConfig};
use crate::regularity::{
    check_fuzzy_inclusion, check_limiting_inclusion, check_strong_frechet_chip, check_strong_limiting_chip, equivalence_harness,
    estimate_subtransversality, HarnessConfig, SubtransversalityVerdict,
};
use crate::solvers::{averaged_projections, cyclic_projections, dykstra};
use crate::Point;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Every command with a verdict must hold.
    pub assert_holds: bool,
}

/// Runs every command in order. Commands are assertive when they carry an
/// `expect` field, or when `assert_holds` is set and they produce a verdict.
pub fn run_scenario(sc: &Scenario, opts: RunOptions) -> Result<Report> {
    let model = sc.build()?;
    let seed = opts.seed.unwrap_or(sc.seed);
    let cfg = sc.tolerances.estimator(seed);
    let mut results = Vec::with_capacity(sc.commands.len());
    for (index, cmd) in sc.commands.iter().enumerate() {
        let x = cmd.point.as_ref().map_or_else(|| sc.basepoint(), |p| Point::from_vec(p.clone()));
        let ctx = Ctx { model: &model, sc, cfg: &cfg, seed, x };
        let (verdict, data, samples) = match execute(&ctx, cmd) {
            Ok(out) => out,
            Err(e) => (Verdict::Error, json!({ "error": e.to_string() }), vec![]),
        };
        let (assertive, passed) = match (opts.assert_holds, cmd.expect) {
            (true, _) if verdict != Verdict::Info => (true, verdict == Verdict::Holds),
            (_, Some(Expectation::Holds)) => (true, verdict == Verdict::Holds),
            (_, Some(Expectation::Fails)) => (true, verdict == Verdict::Fails),
            _ => (false, true),
        };
        results.push(CommandResult { index, check: cmd.check.clone(), verdict, assertive, passed, data, samples });
    }
    Ok(Report { scenario: sc.name.clone(), seed, tolerances: sc.tolerances.clone(), results })
}

struct Ctx<'a> {
    model: &'a Model,
    sc: &'a Scenario,
    cfg: &'a EstimatorConfig,
    seed: u64,
    x: Point,
}

type Outcome = (Verdict, Value, Vec<(Vec<f64>, f64)>);

fn holds(b: bool) -> Verdict {
    if b {
        Verdict::Holds
    } else {
        Verdict::Fails
    }
}

fn cone_json(c: &PolyCone) -> Value {
    json!({ "full": c.is_full(), "generators": c.generators().iter().map(vecv).collect::<Vec<_>>() })
}

fn union_json(u: &UnionCone) -> Value {
    Value::Array(u.pieces.iter().map(cone_json).collect())
}

fn opt_vec(v: &Option<Point>) -> Value {
    v.as_ref().map_or(Value::Null, vecv)
}

fn execute(ctx: &Ctx, cmd: &Command) -> Result<Outcome> {
    let sets: Vec<_> = cmd.sets.iter().map(|s| ctx.model.sets[s].clone()).collect();
    let x = &ctx.x;
    let cfg = ctx.cfg;
    let start = || Point::from_vec(cmd.start.clone().expect("validated"));
    let sweeps = cmd.get("sweeps", 200.0) as usize;
    let tol = cmd.get("tol", 1e-14);
    let delta = cmd.get("delta", ctx.sc.tolerances.feature_scale / 4.0);
    let samples = cmd.get("samples", 48.0) as usize;
    Ok(match cmd.check.as_str() {
        "frechet-normal" => {
            let (c, src) = frechet_normal_cone(&sets[0], x, cfg)?;
            let source = if src == ConeSource::Exact { "exact" } else { "estimated" };
            (Verdict::Info, json!({ "source": source, "cone": cone_json(&c) }), vec![])
        }
        "limiting-normal" => {
            let u = limiting_normal_cone(&sets[0], x, cfg)?;
            (Verdict::Info, json!({ "pieces": union_json(&u) }), vec![])
        }
        "chip-frechet" | "chip-limiting" => {
            let r = if cmd.check == "chip-frechet" { check_strong_frechet_chip(&sets, x, cfg)? } else { check_strong_limiting_chip(&sets, x, cfg)? };
            let data = json!({
                "holds": r.holds,
                "failing_direction": opt_vec(&r.failing_direction),
                "left_cone": union_json(&r.left_cone),
                "sum_cone": union_json(&r.sum_cone),
            });
            (holds(r.holds), data, vec![])
        }
        "subtransversality" => {
            let e = estimate_subtransversality(&sets, x, cmd.get("radius", 0.2), cmd.get("samples", 64.0) as usize, ctx.seed)?;
            let verdict = match e.verdict {
                SubtransversalityVerdict::HoldsWithTau => Verdict::Holds,
                SubtransversalityVerdict::FailsWithWitness => Verdict::Fails,
                SubtransversalityVerdict::Inconclusive => Verdict::Inconclusive,
            };
            let pts = |v: &[(Point, f64)]| Value::Array(v.iter().map(|(p, q)| json!({ "point": vecv(p), "ratio": num(*q) })).collect());
            let data = json!({
                "tau_hat": num(e.tau_hat),
                "radius": e.radius,
                "scale_sups": e.scale_sups.iter().map(|s| num(*s)).collect::<Vec<_>>(),
                "worst": pts(&e.worst_ratio_points),
                "witness_sequence": e.witness_sequence.as_deref().map_or(Value::Null, pts),
                "failed_samples": e.failed_samples,
            });
            let rows = e.ratios.iter().map(|(p, q)| (p.iter().copied().collect(), *q)).collect();
            (verdict, data, rows)
        }
        "fuzzy-inclusion" => {
            let r = check_fuzzy_inclusion(&sets, x, cmd.get("eps", 0.1), cmd.get("tau", 2.0), cmd.get("beam", 50.0) as usize, cfg)?;
            (holds(r.holds), json!({ "checked": r.checked, "failing": opt_vec(&r.failing) }), vec![])
        }
        "limiting-inclusion" => {
            let tau = cmd.get("tau", 2.0);
            let r = check_limiting_inclusion(&sets, x, tau, cfg)?;
            let data = json!({ "tau": tau, "worst_delta": num(r.worst_delta), "worst_direction": opt_vec(&r.worst_direction), "checked": r.checked });
            (holds(r.holds), data, vec![])
        }
        "property-g" => {
            let mut cones = Vec::with_capacity(sets.len());
            for s in &sets {
                cones.push(frechet_normal_cone(s, x, cfg)?.0);
            }
            let g = property_g_constant(&cones, cmd.get("samples", 256.0) as usize, ctx.seed)?;
            let data = json!({ "tau": num(g.tau), "worst_direction": vecv(&g.worst_direction), "samples": g.samples });
            (holds(g.tau.is_finite()), data, vec![])
        }
        "equivalence" => {
            let hc = HarnessConfig {
                radius: cmd.get("radius", 0.2),
                n_samples: cmd.get("samples", 64.0) as usize,
                n_points: cmd.get("points", 4.0) as usize,
                seed: ctx.seed,
                estimator: cfg.clone(),
                ..HarnessConfig::default()
            };
            let r = equivalence_harness(&sets, x, &hc)?;
            let verdict = match (r.agree, r.subtransversality.verdict) {
                (Some(true), SubtransversalityVerdict::HoldsWithTau) => Verdict::Holds,
                (Some(true), _) => Verdict::Fails,
                _ => Verdict::Inconclusive,
            };
            let data = json!({
                "agree": r.agree,
                "tau_hat": num(r.subtransversality.tau_hat),
                "chip_eta_holds": r.chip_eta_holds,
                "eta": num(r.eta),
                "chip_g_holds": r.chip_g_holds,
                "tau_g": num(r.tau_g),
                "points_checked": r.points_checked,
            });
            (verdict, data, vec![])
        }
        "error-bound" => {
            let sys = &ctx.model.systems[cmd.system.as_ref().expect("validated")];
            let scope = if cmd.get("global", 0.0) != 0.0 {
                Scope::Global { center: x.clone(), radius: cmd.get("radius", ctx.sc.tolerances.feature_scale) }
            } else {
                Scope::Local { xbar: x.clone(), delta }
            };
            let r = error_bound_report(sys, &scope, samples, ctx.seed)?;
            let verdict = match (r.primal_verdict, r.eta_dual.is_finite()) {
                (BoundVerdict::Holds, true) => Verdict::Holds,
                (BoundVerdict::Fails, false) => Verdict::Fails,
                _ => Verdict::Inconclusive,
            };
            let data = json!({
                "scope": if matches!(scope, Scope::Global { .. }) { "global" } else { "local" },
                "radius": scope.radius(),
                "eta_primal": num(r.eta_primal),
                "eta_dual": num(r.eta_dual),
                "certificates": r.certificates.len(),
                "failures": r.failures.len(),
                "skipped": r.skipped,
            });
            (verdict, data, vec![])
        }
        "composite-bound" => {
            let sys = &ctx.model.systems[cmd.system.as_ref().expect("validated")];
            let r = composite_bound_harness(sys, x, delta, samples, ctx.seed)?;
            let verdict = match r.confirmed {
                Some(b) => holds(b),
                None => Verdict::Inconclusive,
            };
            let data = json!({
                "sigma_min": num(r.sigma_min),
                "premises_hold": r.premises_hold,
                "subtransversal": r.subtransversal == SubtransversalityVerdict::HoldsWithTau,
                "eta_primal": num(r.conclusion.eta_primal),
            });
            (verdict, data, vec![])
        }
        "bound-transfer" => {
            let sys = &ctx.model.systems[cmd.system.as_ref().expect("validated")];
            let r = bound_transfer(sys, x, delta, samples, ctx.seed)?;
            let verdict = match r.agree {
                Some(b) => holds(b),
                None => Verdict::Inconclusive,
            };
            let data = json!({
                "sigma_min": num(r.sigma_min),
                "asserted": r.asserted,
                "composite_eta_primal": num(r.composite.eta_primal),
                "composite_eta_dual": num(r.composite.eta_dual),
                "base_eta_primal": num(r.base.eta_primal),
                "base_eta_dual": num(r.base.eta_dual),
            });
            (verdict, data, vec![])
        }
        "cyclic-projections" | "averaged-projections" => {
            let t = if cmd.check == "cyclic-projections" {
                cyclic_projections(&sets, &start(), sweeps, tol)?
            } else {
                averaged_projections(&sets, &start(), sweeps, tol)?
            };
            let data = json!({
                "sweeps": t.gaps.len() - 1,
                "final_gap": num(*t.gaps.last().expect("nonempty")),
                "fitted_rate": t.fitted_rate.map_or(Value::Null, num),
                "fit_quality": num(t.fit_quality),
                "stop_reason": format!("{:?}", t.stop_reason).to_lowercase(),
                "final_point": vecv(t.iterates.last().expect("nonempty")),
            });
            (holds(t.fitted_rate.is_some()), data, vec![])
        }
        "dykstra" => {
            let z = dykstra(&sets, &start(), sweeps.max(10_000), tol)?;
            (Verdict::Info, json!({ "point": vecv(&z), "distance": num((&z - start()).norm()) }), vec![])
        }
        "regular-map" => {
            let m = &ctx.model.maps[cmd.map.as_ref().expect("validated")];
            let c = regular_map_constants(m, x, cmd.get("radius", 0.1), cmd.get("probes", 64.0) as usize)?;
            (Verdict::Info, json!({ "ell": num(c.ell), "big_l": num(c.big_l), "radius": c.radius }), vec![])
        }
        other => unreachable!("validated check name {other}"),
    })
}
