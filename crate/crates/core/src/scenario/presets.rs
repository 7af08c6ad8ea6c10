//! Built-in scenarios with their expected verdicts.

use super::{BallDesc, Command, Expectation, FnDesc, MapDesc, Scenario, SetDesc, SystemDesc, Tolerances, SCHEMA_VERSION};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

pub type PresetParams = BTreeMap<String, f64>;

/// `(name, accepted parameters, description)`
pub const PRESETS: &[(&str, &[&str], &str)] = &[
    ("ex2_1a", &[], "negative orthant against the closure of its complement"),
    ("ex2_1b", &[], "orthant-or-line union against a two-ball lens"),
    ("ex_rem3_1", &[], "axis-or-diagonal union against a closed half-axis"),
    ("rem3_3b", &[], "the lens pair sampled along its tangential direction"),
    ("two_lines", &["theta"], "two lines through the origin at angle theta (degrees, default 45)"),
    ("hoffman_demo", &[], "a linear inequality system and its constraint halfplanes"),
    ("composite_demo", &[], "linear constraints pulled back by f(x) = (x1 + x2^2, x2)"),
];

use Expectation::{Fails, Holds};

fn base(name: &str) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        dimension: 2,
        seed: 0,
        basepoint: vec![0.0, 0.0],
        tolerances: Tolerances::default(),
        maps: BTreeMap::new(),
        sets: BTreeMap::new(),
        systems: BTreeMap::new(),
        commands: vec![],
    }
}

fn half(a: [f64; 2], b: f64) -> SetDesc {
    SetDesc::Halfspace { a: a.to_vec(), b }
}

fn line(dir: [f64; 2]) -> SetDesc {
    SetDesc::Affine { base: vec![0.0, 0.0], basis: vec![dir.to_vec()] }
}

fn rows(r: &[[f64; 2]]) -> Vec<Vec<f64>> {
    r.iter().map(|x| x.to_vec()).collect()
}

fn lens_pair(sc: &mut Scenario) {
    sc.sets.insert(
        "A1".into(),
        SetDesc::Union(vec![SetDesc::Hpolyhedron { a: rows(&[[1.0, 0.0], [0.0, -1.0]]), b: vec![0.0, 0.0] }, line([1.0, -1.0])]),
    );
    sc.sets.insert(
        "A2".into(),
        SetDesc::BallIntersection(vec![
            BallDesc { center: vec![1.0, 0.0], radius: 1.0 },
            BallDesc { center: vec![0.0, 1.0], radius: 1.0 },
        ]),
    );
}

/// Builds a preset scenario. Unknown names and parameters are errors.
pub fn preset(name: &str, params: &PresetParams) -> Result<Scenario> {
    let (_, accepted, _) = PRESETS.iter().find(|p| p.0 == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
        Error::Invalid(format!("unknown preset '{name}' (available: {})", names.join(", ")))
    })?;
    if let Some(k) = params.keys().find(|k| !accepted.contains(&k.as_str())) {
        return Err(Error::Invalid(format!("preset '{name}' has no parameter '{k}'")));
    }
    let mut sc = base(name);
    match name {
        "ex2_1a" => {
            sc.sets.insert("A1".into(), SetDesc::Hpolyhedron { a: rows(&[[1.0, 0.0], [0.0, 1.0]]), b: vec![0.0, 0.0] });
            sc.sets.insert("A2".into(), SetDesc::Union(vec![half([-1.0, 0.0], 0.0), half([0.0, -1.0], 0.0)]));
            sc.commands = vec![
                Command::new("frechet-normal").sets(&["A2"]),
                Command::new("limiting-normal").sets(&["A2"]),
                Command::new("chip-frechet").sets(&["A1", "A2"]).expect(Holds),
                Command::new("chip-limiting").sets(&["A1", "A2"]).expect(Holds),
                Command::new("subtransversality").sets(&["A1", "A2"]).expect(Holds),
            ];
        }
        "ex2_1b" => {
            lens_pair(&mut sc);
            sc.commands = vec![
                Command::new("frechet-normal").sets(&["A2"]),
                Command::new("limiting-normal").sets(&["A1"]),
                Command::new("chip-frechet").sets(&["A1", "A2"]).expect(Fails),
                Command::new("chip-limiting").sets(&["A1", "A2"]).expect(Holds),
            ];
        }
        "ex_rem3_1" => {
            sc.sets.insert("A1".into(), SetDesc::Union(vec![line([1.0, 0.0]), line([1.0, 1.0])]));
            sc.sets.insert("A2".into(), SetDesc::Hpolyhedron { a: rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]), b: vec![0.0; 3] });
            sc.commands = vec![
                Command::new("frechet-normal").sets(&["A2"]),
                Command::new("chip-frechet").sets(&["A1", "A2"]).expect(Fails),
                Command::new("subtransversality").sets(&["A1", "A2"]).expect(Holds),
                Command::new("fuzzy-inclusion").sets(&["A1", "A2"]).param("eps", 0.1).param("tau", 2.0).expect(Holds),
            ];
        }
        "rem3_3b" => {
            lens_pair(&mut sc);
            sc.commands = vec![
                Command::new("subtransversality").sets(&["A1", "A2"]).expect(Fails),
                Command::new("limiting-inclusion").sets(&["A1", "A2"]).param("tau", 2.0).expect(Holds),
                Command::new("cyclic-projections").sets(&["A1", "A2"]).start(&[0.3, 0.3]).param("sweeps", 400.0).expect(Fails),
            ];
        }
        "two_lines" => {
            let theta = params.get("theta").copied().unwrap_or(45.0);
            if !(theta > 0.0 && theta <= 90.0) {
                return Err(Error::Invalid(format!("theta must lie in (0, 90], got {theta}")));
            }
            let t = theta.to_radians();
            sc.name = format!("two_lines(theta={theta})");
            sc.sets.insert("L1".into(), line([1.0, 0.0]));
            sc.sets.insert("L2".into(), line([t.cos(), t.sin()]));
            sc.commands = vec![
                Command::new("subtransversality").sets(&["L1", "L2"]).expect(Holds),
                Command::new("cyclic-projections").sets(&["L1", "L2"]).start(&[1.0, 2.0]).param("sweeps", 300.0).expect(Holds),
                Command::new("property-g").sets(&["L1", "L2"]).expect(Holds),
            ];
        }
        "hoffman_demo" => {
            let g = vec![
                FnDesc::Affine { a: vec![1.0, -1.0], b: 0.0 },
                FnDesc::Affine { a: vec![-1.0, -2.0], b: 0.0 },
                FnDesc::Affine { a: vec![1.0, 0.0], b: -1.0 },
            ];
            sc.systems.insert("S".into(), SystemDesc { map: None, g });
            sc.sets.insert("H1".into(), half([1.0, -1.0], 0.0));
            sc.sets.insert("H2".into(), half([-1.0, -2.0], 0.0));
            sc.commands = vec![
                Command::new("error-bound").system("S").expect(Holds),
                Command::new("error-bound").system("S").param("global", 1.0).param("radius", 2.0).expect(Holds),
                Command::new("equivalence").sets(&["H1", "H2"]).expect(Holds),
                Command::new("cyclic-projections").sets(&["H1", "H2"]).start(&[2.0, -1.0]).expect(Holds),
            ];
        }
        "composite_demo" => {
            sc.maps.insert("f".into(), MapDesc::Expressions(vec!["x1 + x2^2".into(), "x2".into()]));
            let g = vec![FnDesc::Affine { a: vec![1.0, 0.0], b: 0.0 }, FnDesc::Affine { a: vec![-1.0, 1.0], b: 0.0 }];
            sc.systems.insert("C".into(), SystemDesc { map: Some("f".into()), g });
            sc.commands = vec![
                Command::new("regular-map").map("f").param("radius", 0.1),
                Command::new("error-bound").system("C").expect(Holds),
                Command::new("composite-bound").system("C").expect(Holds),
                Command::new("bound-transfer").system("C").expect(Holds),
            ];
        }
        _ => unreachable!(),
    }
    sc.build()?;
    Ok(sc)
}
