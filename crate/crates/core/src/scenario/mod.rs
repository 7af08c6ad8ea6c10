//! Declarative scenarios: a JSON document naming sets, maps and inequality
//! systems, plus an ordered list of checks to run on them.

mod presets;
mod report;
mod run;

pub use presets::{preset, PresetParams, PRESETS};
pub use report::{CommandResult, Report, Verdict};
pub use run::{run_scenario, RunOptions};

use crate::error::{Error, Result};
use crate::error_bounds::InequalitySystem;
use crate::geometry::{Ball, ConvexFn, ConvexPiece, SetExpr, SmoothMap};
use crate::normals::EstimatorConfig;
use crate::Point;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub dimension: usize,
    pub seed: u64,
    pub basepoint: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub maps: BTreeMap<String, MapDesc>,
    #[serde(default)]
    pub sets: BTreeMap<String, SetDesc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub systems: BTreeMap<String, SystemDesc>,
    pub commands: Vec<Command>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub radii: Vec<f64>,
    pub eps: f64,
    pub samples_per_radius: usize,
    pub min_feasible: usize,
    pub n_basepoints: usize,
    /// Length scale of the scenario; local error-bound scopes default to a quarter of it.
    pub feature_scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let e = EstimatorConfig::default();
        Tolerances {
            radii: e.radii,
            eps: e.eps,
            samples_per_radius: e.samples_per_radius,
            min_feasible: e.min_feasible,
            n_basepoints: e.n_basepoints,
            feature_scale: 1.0,
        }
    }
}

impl Tolerances {
    pub fn estimator(&self, seed: u64) -> EstimatorConfig {
        EstimatorConfig {
            radii: self.radii.clone(),
            eps: self.eps,
            samples_per_radius: self.samples_per_radius,
            min_feasible: self.min_feasible,
            n_basepoints: self.n_basepoints,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MapDesc {
    Identity,
    /// One expression per output component over `x1 … xn`.
    Expressions(Vec<String>),
    Linear {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FnDesc {
    Affine { a: Vec<f64>, b: f64 },
    MaxAffine { a: Vec<Vec<f64>>, b: Vec<f64> },
    Quadratic { q: Vec<Vec<f64>>, c: Vec<f64>, d: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallDesc {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetDesc {
    Halfspace { a: Vec<f64>, b: f64 },
    Hpolyhedron { a: Vec<Vec<f64>>, b: Vec<f64> },
    Ball(BallDesc),
    BallIntersection(Vec<BallDesc>),
    Vcone { generators: Vec<Vec<f64>>, apex: Vec<f64> },
    Affine { base: Vec<f64>, basis: Vec<Vec<f64>> },
    Sublevel { g: FnDesc, level: f64 },
    Epigraph(FnDesc),
    Union(Vec<SetDesc>),
    Product(Vec<SetDesc>),
    Intersection(Vec<SetDesc>),
    Preimage { map: String, target: Box<SetDesc> },
    /// Another named set of the scenario.
    Ref(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDesc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    pub g: Vec<FnDesc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Holds,
    Fails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Command {
    pub check: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    /// Evaluation point; the scenario basepoint when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    /// Starting point for solvers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

impl Command {
    pub fn new(check: &str) -> Self {
        Command { check: check.into(), sets: vec![], system: None, map: None, point: None, start: None, params: BTreeMap::new(), expect: None }
    }

    pub fn sets(mut self, names: &[&str]) -> Self {
        self.sets = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn system(mut self, name: &str) -> Self {
        self.system = Some(name.into());
        self
    }

    pub fn map(mut self, name: &str) -> Self {
        self.map = Some(name.into());
        self
    }

    pub fn start(mut self, x: &[f64]) -> Self {
        self.start = Some(x.to_vec());
        self
    }

    pub fn param(mut self, k: &str, v: f64) -> Self {
        self.params.insert(k.into(), v);
        self
    }

    pub fn expect(mut self, e: Expectation) -> Self {
        self.expect = Some(e);
        self
    }

    pub(crate) fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

/// What each check needs from a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    OneSet,
    Sets,
    System,
    Map,
}

/// `(name, needs, description)` for every check.
pub const CHECKS: &[(&str, Needs, &str)] = &[
    ("frechet-normal", Needs::OneSet, "Fréchet normal cone of a set at the point (exact when available)"),
    ("limiting-normal", Needs::OneSet, "limiting normal cone as a union of convex cones"),
    ("chip-frechet", Needs::Sets, "strong Fréchet CHIP at the point"),
    ("chip-limiting", Needs::Sets, "strong limiting CHIP at the point"),
    ("subtransversality", Needs::Sets, "sampled subtransversality modulus; params radius, samples"),
    ("fuzzy-inclusion", Needs::Sets, "fuzzy normal-cone intersection inclusion; params eps, tau, beam"),
    ("limiting-inclusion", Needs::Sets, "limiting normal-cone intersection inclusion; param tau"),
    ("property-g", Needs::Sets, "property (G) constant of the sets' Fréchet normal cones; param samples"),
    ("equivalence", Needs::Sets, "three-way comparison for convex sets; params radius, samples, points"),
    ("error-bound", Needs::System, "primal and dual error-bound moduli; params delta, global, radius, samples"),
    ("composite-bound", Needs::System, "composite error bound from its premises; params delta, samples"),
    ("bound-transfer", Needs::System, "composite versus base-system local error bounds; params delta, samples"),
    ("cyclic-projections", Needs::Sets, "cyclic projections from start; params sweeps, tol"),
    ("averaged-projections", Needs::Sets, "averaged projections from start; params sweeps, tol"),
    ("dykstra", Needs::Sets, "nearest point of the intersection to start (convex sets)"),
    ("regular-map", Needs::Map, "Jacobian singular-value bounds near the point; params radius, probes"),
];

pub fn check_needs(name: &str) -> Option<Needs> {
    CHECKS.iter().find(|c| c.0 == name).map(|c| c.1)
}

/// The scenario with every descriptor turned into library objects.
#[derive(Debug, Clone)]
pub struct Model {
    pub maps: BTreeMap<String, SmoothMap>,
    pub sets: BTreeMap<String, SetExpr>,
    pub systems: BTreeMap<String, InequalitySystem>,
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Scenario> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        sc.build()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn basepoint(&self) -> Point {
        Point::from_vec(self.basepoint.clone())
    }

    pub fn build(&self) -> Result<Model> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let n = self.dimension;
        if n == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        vec_of(&self.basepoint, n, "basepoint")?;
        let mut maps = BTreeMap::new();
        for (name, m) in &self.maps {
            maps.insert(name.clone(), build_map(m, n).map_err(|e| ctx(e, &format!("map '{name}'")))?);
        }
        let mut sets = BTreeMap::new();
        for name in self.sets.keys() {
            let s = self.build_set_named(name, &maps, &mut vec![])?;
            if s.dim() != n {
                return Err(Error::Parse(format!("set '{name}' has dimension {} but the scenario has {n}", s.dim())));
            }
            sets.insert(name.clone(), s);
        }
        let mut systems = BTreeMap::new();
        for (name, sd) in &self.systems {
            let g = sd.g.iter().map(build_fn).collect::<Result<Vec<_>>>().map_err(|e| ctx(e, &format!("system '{name}'")))?;
            let sys = match &sd.map {
                None => InequalitySystem::convex(g),
                Some(m) => {
                    let map = maps.get(m).ok_or_else(|| Error::Parse(format!("system '{name}' refers to unknown map '{m}'")))?;
                    InequalitySystem::composite(map.clone(), g)
                }
            }
            .map_err(|e| ctx(e, &format!("system '{name}'")))?;
            if sys.dim() != n {
                return Err(Error::Parse(format!("system '{name}' has dimension {} but the scenario has {n}", sys.dim())));
            }
            systems.insert(name.clone(), sys);
        }
        for (i, c) in self.commands.iter().enumerate() {
            let here = |msg: String| Error::Parse(format!("command {i} ({}): {msg}", c.check));
            let needs = check_needs(&c.check).ok_or_else(|| here("unknown check; see `reglab list-checks`".into()))?;
            for s in &c.sets {
                if !sets.contains_key(s) {
                    return Err(here(format!("unknown set '{s}'")));
                }
            }
            match needs {
                Needs::OneSet if c.sets.len() != 1 => return Err(here("needs exactly one set".into())),
                Needs::Sets if c.sets.is_empty() => return Err(here("needs at least one set".into())),
                Needs::System if c.system.as_ref().is_none_or(|s| !systems.contains_key(s)) => {
                    return Err(here("needs a known system".into()))
                }
                Needs::Map if c.map.as_ref().is_none_or(|m| !maps.contains_key(m)) => return Err(here("needs a known map".into())),
                _ => {}
            }
            if let Some(p) = &c.point {
                vec_of(p, n, "point").map_err(|e| here(e.to_string()))?;
            }
            if let Some(p) = &c.start {
                vec_of(p, n, "start").map_err(|e| here(e.to_string()))?;
            }
            if matches!(c.check.as_str(), "cyclic-projections" | "averaged-projections" | "dykstra") && c.start.is_none() {
                return Err(here("needs a start point".into()));
            }
        }
        Ok(Model { maps, sets, systems })
    }

    fn build_set_named(&self, name: &str, maps: &BTreeMap<String, SmoothMap>, stack: &mut Vec<String>) -> Result<SetExpr> {
        if stack.iter().any(|s| s == name) {
            return Err(Error::Parse(format!("set '{name}' refers to itself")));
        }
        let desc = self.sets.get(name).ok_or_else(|| Error::Parse(format!("unknown set '{name}'")))?;
        stack.push(name.to_string());
        let out = self.build_set(desc, maps, stack).map_err(|e| ctx(e, &format!("set '{name}'")));
        stack.pop();
        out
    }

    fn build_set(&self, d: &SetDesc, maps: &BTreeMap<String, SmoothMap>, stack: &mut Vec<String>) -> Result<SetExpr> {
        let many = |v: &[SetDesc], stack: &mut Vec<String>| v.iter().map(|s| self.build_set(s, maps, stack)).collect::<Result<Vec<_>>>();
        let set = match d {
            SetDesc::Halfspace { a, b } => ConvexPiece::halfspace(point(a), *b)?.into(),
            SetDesc::Hpolyhedron { a, b } => ConvexPiece::hpolyhedron(matrix(a)?, DVector::from_vec(b.clone()))?.into(),
            SetDesc::Ball(b) => ConvexPiece::ball(point(&b.center), b.radius)?.into(),
            SetDesc::BallIntersection(bs) => {
                let balls = bs.iter().map(|b| Ball::new(point(&b.center), b.radius)).collect::<Result<Vec<_>>>()?;
                ConvexPiece::ball_intersection(balls)?.into()
            }
            SetDesc::Vcone { generators, apex } => ConvexPiece::vcone(generators.iter().map(|g| point(g)).collect(), point(apex))?.into(),
            SetDesc::Affine { base, basis } => ConvexPiece::affine(point(base), basis.iter().map(|g| point(g)).collect())?.into(),
            SetDesc::Sublevel { g, level } => ConvexPiece::sublevel(build_fn(g)?, *level).into(),
            SetDesc::Epigraph(f) => SetExpr::Epigraph(build_fn(f)?),
            SetDesc::Union(v) => SetExpr::Union(many(v, stack)?),
            SetDesc::Product(v) => SetExpr::Product(many(v, stack)?),
            SetDesc::Intersection(v) => SetExpr::Intersection(many(v, stack)?),
            SetDesc::Preimage { map, target } => {
                let m = maps.get(map).ok_or_else(|| Error::Parse(format!("unknown map '{map}'")))?;
                let t = self.build_set(target, maps, stack)?;
                if t.dim() != m.dim_out() {
                    return Err(Error::DimensionMismatch { expected: m.dim_out(), got: t.dim() });
                }
                SetExpr::Preimage { map: m.clone(), target: Box::new(t) }
            }
            SetDesc::Ref(name) => self.build_set_named(name, maps, stack)?,
        };
        set.validate()?;
        Ok(set)
    }
}

fn ctx(e: Error, what: &str) -> Error {
    match e {
        Error::Parse(m) if m.starts_with("set '") || m.starts_with("unknown") => Error::Parse(m),
        other => Error::Parse(format!("{what}: {other}")),
    }
}

fn vec_of(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::Parse(format!("{what} has {} coordinates, expected {n}", v.len())));
    }
    Ok(())
}

fn point(v: &[f64]) -> Point {
    Point::from_vec(v.to_vec())
}

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|x| x.len() != c) {
        return Err(Error::Parse("ragged matrix".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn build_fn(f: &FnDesc) -> Result<ConvexFn> {
    match f {
        FnDesc::Affine { a, b } => Ok(ConvexFn::affine(point(a), *b)),
        FnDesc::MaxAffine { a, b } => ConvexFn::max_affine(matrix(a)?, DVector::from_vec(b.clone())),
        FnDesc::Quadratic { q, c, d } => ConvexFn::quadratic(matrix(q)?, point(c), *d),
    }
}

fn build_map(m: &MapDesc, n: usize) -> Result<SmoothMap> {
    match m {
        MapDesc::Identity => Ok(SmoothMap::identity(n)),
        MapDesc::Expressions(e) => SmoothMap::from_strings(n, e),
        MapDesc::Linear { matrix: rows, offset } => {
            let m = matrix(rows)?;
            if m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
            }
            let off = offset.as_ref().map_or_else(|| Point::zeros(m.nrows()), |o| point(o));
            if off.len() != m.nrows() {
                return Err(Error::DimensionMismatch { expected: m.nrows(), got: off.len() });
            }
            Ok(SmoothMap::linear(m, off))
        }
    }
}
