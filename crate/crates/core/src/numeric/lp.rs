//! Dense two-phase simplex for small linear programs.
//!
//! Solves `min cᵀx` subject to `A_ub x ≤ b_ub`, `A_eq x = b_eq`, `x ≥ 0`.
//! Bland's rule throughout; the programs built elsewhere in the crate have
//! at most a few dozen columns.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: DVector<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-10;

pub fn linprog(
    c: &DVector<f64>,
    a_ub: &DMatrix<f64>,
    b_ub: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
) -> LpOutcome {
    let n = c.len();
    let m_ub = a_ub.nrows();
    let m_eq = a_eq.nrows();
    let m = m_ub + m_eq;
    // columns: x (n), slacks (m_ub), artificials (m), rhs
    let n_slack = m_ub;
    let n_art = m;
    let width = n + n_slack + n_art + 1;
    let rhs = width - 1;
    let mut t = DMatrix::<f64>::zeros(m + 1, width);
    let mut basis = vec![0usize; m];

    for i in 0..m {
        let (row, b, slack) = if i < m_ub {
            (a_ub.row(i).clone_owned(), b_ub[i], Some(n + i))
        } else {
            (a_eq.row(i - m_ub).clone_owned(), b_eq[i - m_ub], None)
        };
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * row[j];
        }
        if let Some(s) = slack {
            t[(i, s)] = sign;
        }
        t[(i, n + n_slack + i)] = 1.0;
        t[(i, rhs)] = sign * b;
        basis[i] = n + n_slack + i;
    }

    // phase 1: minimize sum of artificials
    for j in 0..width {
        let s: f64 = (0..m).map(|i| t[(i, j)]).sum();
        t[(m, j)] = if (n + n_slack..n + n_slack + n_art).contains(&j) { 0.0 } else { -s };
    }
    if !run(&mut t, &mut basis, n + n_slack + n_art) {
        return LpOutcome::Unbounded;
    }
    if -t[(m, rhs)] > 1e-8 * (1.0 + b_ub.amax().max(b_eq.amax())) {
        return LpOutcome::Infeasible;
    }
    // drive artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n + n_slack {
            if let Some(j) = (0..n + n_slack).find(|&j| t[(i, j)].abs() > EPS) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    // phase 2
    for j in 0..width {
        t[(m, j)] = if j < n { c[j] } else { 0.0 };
    }
    for i in 0..m {
        let bj = basis[i];
        let cb = t[(m, bj)];
        if cb != 0.0 {
            for j in 0..width {
                t[(m, j)] -= cb * t[(i, j)];
            }
        }
    }
    // forbid artificial columns from re-entering
    if !run(&mut t, &mut basis, n + n_slack) {
        return LpOutcome::Unbounded;
    }
    let mut x = DVector::zeros(n);
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[(i, rhs)];
        }
    }
    let value = c.dot(&x);
    LpOutcome::Optimal { x, value }
}

/// Runs simplex pivots on columns `< allowed`. Returns false when unbounded.
fn run(t: &mut DMatrix<f64>, basis: &mut [usize], allowed: usize) -> bool {
    let m = basis.len();
    let rhs = t.ncols() - 1;
    for _ in 0..10_000 {
        let enter = (0..allowed).find(|&j| t[(m, j)] < -EPS);
        let Some(j) = enter else { return true };
        let mut leave = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[(i, j)] > EPS {
                let ratio = t[(i, rhs)] / t[(i, j)];
                let better = ratio < best - 1e-12
                    || (ratio <= best + 1e-12 && leave.is_some_and(|l: usize| basis[i] < basis[l]));
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(i) = leave else { return false };
        pivot(t, basis, i, j);
    }
    true
}

fn pivot(t: &mut DMatrix<f64>, basis: &mut [usize], r: usize, c: usize) {
    let p = t[(r, c)];
    let width = t.ncols();
    for j in 0..width {
        t[(r, j)] /= p;
    }
    for i in 0..t.nrows() {
        if i != r {
            let f = t[(i, c)];
            if f != 0.0 {
                for j in 0..width {
                    let v = t[(r, j)];
                    t[(i, j)] -= f * v;
                }
            }
        }
    }
    basis[r] = c;
}
