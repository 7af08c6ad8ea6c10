//! Projection methods for the feasibility problem, with convergence telemetry.

use crate::error::{Error, Result};
use crate::geometry::{dykstra_core, SetExpr};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    /// `x_0, x_1, …` one per sweep.
    pub iterates: Vec<Point>,
    /// `Σᵢ d(x_k, Aᵢ)` per iterate.
    pub gaps: Vec<f64>,
    pub fitted_rate: Option<f64>,
    pub fit_quality: f64,
    pub stop_reason: StopReason,
}

/// Minimum `r²` for a linear rate to be reported.
pub const FIT_THRESHOLD: f64 = 0.98;

fn gap(sets: &[SetExpr], x: &Point) -> Result<f64> {
    let mut g = 0.0;
    for s in sets {
        g += s.distance(x)?;
    }
    Ok(g)
}

fn run<F>(sets: &[SetExpr], x0: &Point, max_sweeps: usize, tol: f64, mut step: F) -> Result<SolveTrace>
where
    F: FnMut(&Point) -> Result<Point>,
{
    if sets.is_empty() {
        return Err(Error::Invalid("empty collection".into()));
    }
    let mut x = x0.clone();
    let mut iterates = vec![x.clone()];
    let mut gaps = vec![gap(sets, &x)?];
    let mut stop = StopReason::Budget;
    if gaps[0] <= tol {
        stop = StopReason::Converged;
    } else {
        for _ in 0..max_sweeps {
            x = step(&x)?;
            let g = gap(sets, &x)?;
            iterates.push(x.clone());
            gaps.push(g);
            if g <= tol {
                stop = StopReason::Converged;
                break;
            }
        }
    }
    let (q, r2) = fit_linear_rate(&gaps);
    Ok(SolveTrace { iterates, gaps, fitted_rate: q, fit_quality: r2, stop_reason: stop })
}

/// `x_{k+1} = P_{A_m} ∘ ⋯ ∘ P_{A_1}(x_k)`
pub fn cyclic_projections(sets: &[SetExpr], x0: &Point, max_sweeps: usize, tol: f64) -> Result<SolveTrace> {
    run(sets, x0, max_sweeps, tol, |x| {
        let mut y = x.clone();
        for s in sets {
            y = s.project(&y)?;
        }
        Ok(y)
    })
}

/// `x_{k+1} = (1/m) Σ P_{Aᵢ}(x_k)`
pub fn averaged_projections(sets: &[SetExpr], x0: &Point, max_sweeps: usize, tol: f64) -> Result<SolveTrace> {
    let m = sets.len() as f64;
    run(sets, x0, max_sweeps, tol, |x| {
        let mut y = Point::zeros(x.len());
        for s in sets {
            y += s.project(x)?;
        }
        Ok(y / m)
    })
}

/// Metric projection of `x0` onto `∩ Aᵢ` for closed convex sets.
pub fn dykstra(sets: &[SetExpr], x0: &Point, max_sweeps: usize, tol: f64) -> Result<Point> {
    if let Some(s) = sets.iter().find(|s| !s.is_convex()) {
        return Err(Error::Invalid(format!("Dykstra needs convex sets (a {}-dimensional member is not)", s.dim())));
    }
    let projs: Vec<Box<dyn Fn(&Point) -> Result<Point> + '_>> =
        sets.iter().map(|s| Box::new(move |y: &Point| s.project(y)) as Box<dyn Fn(&Point) -> Result<Point>>).collect();
    Ok(dykstra_core(&projs, x0, max_sweeps, tol)?.0)
}

/// Least-squares slope of `log gap` over the last half of the trace, as
/// `(q, r²)` with `q = exp(slope)`. The rate is withheld when `r² < 0.98` or
/// when the halves of the window disagree on the rate by more than 25% in
/// log scale, which is how power-law decay shows up.
pub fn fit_linear_rate(gaps: &[f64]) -> (Option<f64>, f64) {
    // exact arrival within a few sweeps counts as rate zero
    // (relative to the first gap, so rounding in the set data does not hide it)
    let floor = gaps.first().map_or(0.0, |g| g * 1e-15);
    let positive = gaps.iter().take_while(|&&g| g > floor).count();
    if positive < gaps.len() && positive < 4 && positive > 0 {
        return (Some(0.0), 1.0);
    }
    let start = gaps.len() / 2;
    let window: Vec<f64> = gaps[start..].iter().map(|g| g.max(1e-300).ln()).collect();
    // a converged tail is dominated by rounding
    let window: Vec<f64> = match window.iter().position(|&l| l < -680.0) {
        Some(k) => window[..k].to_vec(),
        None => window,
    };
    if window.len() < 4 {
        return (None, 0.0);
    }
    let Some((slope, r2)) = regress(&window) else {
        return (None, 0.0);
    };
    let half = window.len() / 2;
    let steady = match (regress(&window[..half]), regress(&window[half..])) {
        (Some((a, _)), Some((b, _))) if a < 0.0 && b < 0.0 => (a / b).ln().abs() <= 1.25f64.ln(),
        _ => false,
    };
    let q = slope.exp();
    if r2 >= FIT_THRESHOLD && steady && q < 1.0 {
        (Some(q), r2)
    } else {
        (None, r2)
    }
}

fn regress(y: &[f64]) -> Option<(f64, f64)> {
    if y.len() < 2 {
        return None;
    }
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        let dy = v - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, r2))
}
