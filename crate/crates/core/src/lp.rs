//! Dense two-phase tableau simplex for small standard-form programs:
//! maximize `cᵀx` subject to `Ax = b`, `x ≥ 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 20_000;
/// Basic values below this are snapped to zero so degenerate ties stay exact.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: f64,
    pub solution: Vec<f64>,
}

impl LpResult {
    fn without_solution(status: LpStatus, n: usize) -> Self {
        let objective = match status {
            LpStatus::Unbounded => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        Self {
            status,
            objective,
            solution: vec![0.0; n],
        }
    }
}

struct Tableau {
    // rows 0..m are constraints, row m is the reduced-cost row (minimization form)
    t: DMatrix<f64>,
    basis: Vec<usize>,
    rows: usize,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.t[(r, self.cols)]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[(r, c)];
        let width = self.cols + 1;
        for j in 0..width {
            self.t[(r, j)] /= p;
        }
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.t[(i, c)];
            if f != 0.0 {
                for j in 0..width {
                    let v = self.t[(r, j)];
                    self.t[(i, j)] -= f * v;
                }
                self.t[(i, c)] = 0.0;
            }
            if i < self.rows && self.t[(i, self.cols)].abs() < ZERO_TOL {
                self.t[(i, self.cols)] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row over columns `0..active`. Returns false on unboundedness.
    fn optimize(&mut self, active: usize, pivots: &mut usize) -> Result<bool> {
        let mut bland = false;
        loop {
            let entering = if bland {
                (0..active).find(|&j| self.t[(self.rows, j)] < -PIVOT_TOL)
            } else {
                (0..active)
                    .filter(|&j| self.t[(self.rows, j)] < -PIVOT_TOL)
                    .min_by(|&a, &b| self.t[(self.rows, a)].total_cmp(&self.t[(self.rows, b)]))
            };
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.t[(r, c)];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            // switch to Bland's rule once a degenerate pivot shows up
            bland |= ratio.abs() <= 1e-12;
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::LpFailure(format!("no convergence after {MAX_PIVOTS} pivots")));
            }
        }
    }
}

/// Maximizes `cᵀx` subject to `Ax = b`, `x ≥ 0`.
pub fn maximize(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<LpResult> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: b.len(),
        });
    }
    if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
        return Err(Error::LpFailure("non-finite input".into()));
    }

    // phase 1: artificial columns n..n+m, minimize their sum
    let cols = n + m;
    let mut t = DMatrix::zeros(m + 1, cols + 1);
    for r in 0..m {
        let s = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(r, j)] = s * a[(r, j)];
        }
        t[(r, n + r)] = 1.0;
        t[(r, cols)] = s * b[r];
    }
    for j in 0..=cols {
        if j >= n && j < cols {
            continue;
        }
        let sum: f64 = (0..m).map(|r| t[(r, j)]).sum();
        t[(m, j)] = -sum;
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        rows: m,
        cols,
    };
    let mut pivots = 0;
    tab.optimize(cols, &mut pivots)?;
    let infeasibility = -tab.t[(m, cols)];
    let scale = 1.0 + b.amax();
    if infeasibility > FEASIBILITY_TOL * scale {
        return Ok(LpResult::without_solution(LpStatus::Infeasible, n));
    }

    // drive remaining artificials out of the basis; rows where that fails are redundant
    let mut redundant = vec![false; m];
    for r in 0..m {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| tab.t[(r, j)].abs() > PIVOT_TOL) {
                Some(j) => tab.pivot(r, j),
                None => redundant[r] = true,
            }
        }
    }
    for r in 0..m {
        if redundant[r] {
            for j in 0..=cols {
                tab.t[(r, j)] = 0.0;
            }
        }
    }

    // phase 2: minimize -cᵀx over the original columns
    for j in 0..=cols {
        tab.t[(m, j)] = 0.0;
    }
    for j in 0..n {
        tab.t[(m, j)] = -c[j];
    }
    for r in 0..m {
        let bj = tab.basis[r];
        if redundant[r] || bj >= n {
            continue;
        }
        let f = tab.t[(m, bj)];
        if f != 0.0 {
            for j in 0..=cols {
                let v = tab.t[(r, j)];
                tab.t[(m, j)] -= f * v;
            }
        }
    }
    if !tab.optimize(n, &mut pivots)? {
        return Ok(LpResult::without_solution(LpStatus::Unbounded, n));
    }

    let mut x = vec![0.0; n];
    for r in 0..m {
        if !redundant[r] && tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    let objective = x.iter().zip(c.iter()).map(|(xi, ci)| xi * ci).sum();
    Ok(LpResult {
        status: LpStatus::Optimal,
        objective,
        solution: x,
    })
}
