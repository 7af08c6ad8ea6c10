mod common;

use approx::assert_relative_eq;
use common::*;
use reglab::cone::PolyCone;
use reglab::error_bounds::{residual, InequalitySystem};
use reglab::geometry::{intersection_of, ConvexPiece, SetExpr};
use reglab::normals::{
    chain_rule_normal, estimate_frechet_normal, estimate_limiting_normal, exact_frechet_normal, frechet_normal_cone,
    regular_map_constants, EstimatorConfig, NormalVerdict,
};
use reglab::regularity::{
    check_fuzzy_inclusion, check_limiting_inclusion, check_strong_frechet_chip, check_strong_limiting_chip, estimate_subtransversality,
    ratio_at, SubtransversalityVerdict,
};
use reglab::sampling::circle_grid;
use reglab::Point;

fn o() -> Point {
    Point::zeros(2)
}

fn cfg() -> EstimatorConfig {
    EstimatorConfig::default()
}

#[test]
fn orthant_pair_cones() {
    let s = pair("ex2_1a");
    let (a1, src) = frechet_normal_cone(&s[0], &o(), &cfg()).unwrap();
    assert_eq!(src, reglab::normals::ConeSource::Exact);
    let quadrant = PolyCone::new(2, vec![p(&[1.0, 0.0]), p(&[0.0, 1.0])]).unwrap();
    assert!(a1.contained_in(&quadrant, 1e-9) && quadrant.contained_in(&a1, 1e-9));
    assert!(frechet_normal_cone(&s[1], &o(), &cfg()).unwrap().0.is_zero());
    let cap = exact_frechet_normal(&intersection_of(&s).unwrap(), &o(), 1e-9).unwrap().unwrap();
    assert!(cap.contained_in(&quadrant, 1e-9) && quadrant.contained_in(&cap, 1e-9));
    assert!(check_strong_frechet_chip(&s, &o(), &cfg()).unwrap().holds);
    assert!(check_strong_limiting_chip(&s, &o(), &cfg()).unwrap().holds);
}

#[test]
fn orthant_complement_limiting_normal() {
    // boundary points (t, 0), t < 0, carry the normal (0, −1)
    let s = pair("ex2_1a");
    let down = p(&[0.0, -1.0]);
    let est = estimate_limiting_normal(&s[1], &o(), &[down.clone()], &cfg()).unwrap();
    assert_eq!(est.verdict_of(&down), Some(NormalVerdict::Normal));
    for k in 1..50 {
        let b = p(&[-(k as f64) * 1e-3, 0.0]);
        let c = exact_frechet_normal(&s[1], &b, 1e-12).unwrap().unwrap();
        assert!(c.member(&down, 1e-9));
    }
}

#[test]
fn lens_pair_cones() {
    let s = pair("ex2_1b");
    let a2 = frechet_normal_cone(&s[1], &o(), &cfg()).unwrap().0;
    let neg = PolyCone::new(2, vec![p(&[-1.0, 0.0]), p(&[0.0, -1.0])]).unwrap();
    assert!(a2.contained_in(&neg, 1e-9) && neg.contained_in(&a2, 1e-9));
    let cap = frechet_normal_cone(&intersection_of(&s).unwrap(), &o(), &cfg()).unwrap().0;
    assert!(cap.is_full());

    let e1 = p(&[1.0, 0.0]);
    let est = estimate_frechet_normal(&s[1], &o(), &[p(&[-1.0, -1.0]).normalize(), e1.clone()], &cfg()).unwrap();
    assert_eq!(est.classified[0].verdict, NormalVerdict::Normal);
    assert_eq!(est.classified[1].verdict, NormalVerdict::NotNormal);

    let chip = check_strong_frechet_chip(&s, &o(), &cfg()).unwrap();
    assert!(!chip.holds);
    let w = chip.failing_direction.unwrap();
    assert!(!chip.sum_cone.member(&w, 1e-6));
    assert!(check_strong_limiting_chip(&s, &o(), &cfg()).unwrap().holds);
}

#[test]
fn lens_pair_limiting_cone_of_union() {
    let s = pair("ex2_1b");
    let dirs = circle_grid(64);
    let lim = estimate_limiting_normal(&s[0], &o(), &dirs, &cfg()).unwrap();
    let fre = estimate_frechet_normal(&s[0], &o(), &dirs, &cfg()).unwrap();
    let diag = p(&[1.0, 1.0]).normalize();
    assert_eq!(lim.verdict_of(&diag), Some(NormalVerdict::Normal));
    assert_eq!(fre.verdict_of(&diag), Some(NormalVerdict::NotNormal));
    let antidiag = p(&[-1.0, -1.0]).normalize();
    assert_eq!(lim.verdict_of(&antidiag), Some(NormalVerdict::Normal));
    assert_eq!(lim.verdict_of(&p(&[0.0, -1.0])), Some(NormalVerdict::Normal));
    assert_eq!(lim.verdict_of(&p(&[-1.0, 0.0])), Some(NormalVerdict::NotNormal));
}

#[test]
fn lens_pair_distances() {
    let s = pair("rem3_3b");
    let cap = intersection_of(&s).unwrap();
    let x4 = p(&[0.25, 0.4375f64.sqrt()]);
    assert!(s[1].contains(&x4, 1e-12).unwrap());
    assert_relative_eq!(cap.distance(&x4).unwrap(), 0.707_106_781_186_547_5, epsilon = 1e-9);
    assert_relative_eq!(s[0].distance(&x4).unwrap(), 0.25, epsilon = 1e-12);
    assert_relative_eq!(ratio_at(&s, &cap, &x4).unwrap().unwrap(), 8f64.sqrt(), epsilon = 1e-9);
    let x16 = p(&[1.0 / 16.0, (2.0f64 / 16.0 - 1.0 / 256.0).sqrt()]);
    assert_relative_eq!(ratio_at(&s, &cap, &x16).unwrap().unwrap(), 32f64.sqrt(), epsilon = 1e-9);
}

#[test]
fn lens_pair_not_subtransversal_but_limiting_inclusion() {
    let s = pair("rem3_3b");
    let e = estimate_subtransversality(&s, &o(), 0.2, 64, 3).unwrap();
    assert_eq!(e.verdict, SubtransversalityVerdict::FailsWithWitness);
    let w = e.witness_sequence.unwrap();
    assert_eq!(w.len(), 4);
    assert!(w.windows(2).all(|p| p[1].1 > p[0].1));
    let li = check_limiting_inclusion(&s, &o(), 2.0, &cfg()).unwrap();
    assert!(li.holds);
    assert_relative_eq!(li.worst_delta, 2f64.sqrt(), epsilon = 1e-4);
}

#[test]
fn axis_diagonal_pair() {
    let s = pair("ex_rem3_1");
    assert!(frechet_normal_cone(&s[0], &o(), &cfg()).unwrap().0.is_zero());
    // N̂(A₂, 0) for A₂ = {0} × ℝ₋ is the upper closed half-plane
    let a2 = frechet_normal_cone(&s[1], &o(), &cfg()).unwrap().0;
    let upper = PolyCone::new(2, vec![p(&[1.0, 0.0]), p(&[-1.0, 0.0]), p(&[0.0, 1.0])]).unwrap();
    assert!(a2.contained_in(&upper, 1e-9) && upper.contained_in(&a2, 1e-9));

    let chip = check_strong_frechet_chip(&s, &o(), &cfg()).unwrap();
    assert!(!chip.holds);
    let e = estimate_subtransversality(&s, &o(), 0.2, 64, 0).unwrap();
    assert_eq!(e.verdict, SubtransversalityVerdict::HoldsWithTau);
    assert!(e.tau_hat.is_finite());
    let fz = check_fuzzy_inclusion(&s, &o(), 0.1, 2.0, 50, &cfg()).unwrap();
    assert!(fz.holds && fz.checked > 0);
}

#[test]
fn union_projection_brute_force() {
    let s = pair("ex2_1a");
    let both = SetExpr::Union(vec![s[0].clone(), s[1].clone()]);
    let x = p(&[-2.0, -1.0]);
    assert_eq!(both.project(&x).unwrap(), x);
    let got = s[1].project(&x).unwrap();
    // nearest point of the boundary of ℝ₋², scanned on a fine grid
    let best = (0..=40_000)
        .flat_map(|k| {
            let t = -4.0 + k as f64 * 1e-4;
            [p(&[t.min(0.0), 0.0]), p(&[0.0, t.min(0.0)])]
        })
        .min_by(|a, b| (a - &x).norm().total_cmp(&(b - &x).norm()))
        .unwrap();
    assert!((&got - &best).norm() < 1e-3);
    assert_relative_eq!(got, p(&[-2.0, 0.0]), epsilon = 1e-12);
}

#[test]
fn composite_examples() {
    let f = map(2, &["x1 + x2^2", "x2"]);
    let sys = InequalitySystem::composite(f.clone(), vec![coord(2, 0, 1.0)]).unwrap();
    assert_eq!(residual(&sys, &p(&[1.0, 1.0])), 2.0);

    let c: SetExpr = ConvexPiece::halfspace(p(&[1.0, 0.0]), 0.0).unwrap().into();
    let n = chain_rule_normal(&f, &c, &o()).unwrap();
    assert!(n.member(&p(&[1.0, 0.0]), 1e-9) && !n.member(&p(&[0.0, 1.0]), 1e-6) && !n.member(&p(&[-1.0, 0.0]), 1e-6));

    // ‖∇f‖ over |x₂| ≤ 0.1 peaks at the largest singular value of [[1, 0.2], [0, 1]]
    let k = regular_map_constants(&f, &o(), 0.1, 64).unwrap();
    let top = ((2.04 + (2.04f64 * 2.04 - 4.0).sqrt()) / 2.0).sqrt();
    assert_relative_eq!(k.big_l, top, epsilon = 1e-3);
    assert_relative_eq!(k.ell, 1.0 / top, epsilon = 1e-3);
    assert!(k.ell > 0.9 && k.ell <= 1.0);
}
