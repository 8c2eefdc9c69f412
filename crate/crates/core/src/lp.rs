//! Dense primal simplex for `max c.x  s.t.  A x <= b, x >= 0`.
//!
//! The solver keeps a condensed (Tucker) tableau: one row per constraint and
//! one column per nonbasic variable, so storage is `m x n` rather than
//! `m x (n + m)`. Rate-constraint systems have few variables (at most 63)
//! and many rows, which is exactly the shape this favours. Entering and
//! leaving variables follow Bland's rule. Constraints with negative right-hand
//! sides go through a phase 1 with a single auxiliary variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    fn slack(&self, point: &[f64]) -> f64 {
        self.rhs - self.coeffs.iter().zip(point).map(|(a, x)| a * x).sum::<f64>()
    }
}

/// `max objective.x` subject to `coeffs.x <= rhs` for every constraint and,
/// when `nonneg` is set, `x >= 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
    pub nonneg: bool,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, constraints: Vec::new(), nonneg: true }
    }

    pub fn with_constraint(mut self, coeffs: Vec<f64>, rhs: f64) -> Self {
        self.constraints.push(LinearConstraint::new(coeffs, rhs));
        self
    }

    pub fn push(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.constraints.push(LinearConstraint::new(coeffs, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("objective has non-finite entries".into()));
        }
        for (idx, con) in self.constraints.iter().enumerate() {
            if con.coeffs.len() != n {
                return Err(Error::Contract(format!(
                    "constraint {idx} has {} coefficients, objective has {n}",
                    con.coeffs.len()
                )));
            }
            if !con.rhs.is_finite() || con.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Contract(format!("constraint {idx} has non-finite values")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal value; `+inf` when unbounded, `-inf` when infeasible.
    pub value: f64,
    /// Optimal point (empty unless `status == Optimal`).
    pub solution: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Tableau entries with magnitude below this are treated as zero.
    pub pivot_tol: f64,
    /// Absolute slack allowed when verifying constraints.
    pub feas_tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { pivot_tol: 1e-10, feas_tol: 1e-8, max_iterations: 200_000 }
    }
}

pub fn maximize(lp: &LinearProgram) -> Result<LpSolution> {
    maximize_with(lp, &SimplexOptions::default())
}

pub fn maximize_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    if lp.nonneg {
        return solve_nonneg(lp, opts);
    }
    // Free variables: x = x+ - x-.
    let n = lp.num_vars();
    let split = |row: &[f64]| row.iter().copied().chain(row.iter().map(|v| -v)).collect::<Vec<_>>();
    let mut expanded = LinearProgram::new(split(&lp.objective));
    for con in &lp.constraints {
        expanded.push(split(&con.coeffs), con.rhs);
    }
    let mut sol = solve_nonneg(&expanded, opts)?;
    if sol.status == LpStatus::Optimal {
        sol.solution = (0..n).map(|j| sol.solution[j] - sol.solution[n + j]).collect();
        sol.value = dot(&lp.objective, &sol.solution);
    }
    Ok(sol)
}

/// True iff every constraint holds within `1e-8` and `point >= -1e-10`.
pub fn feasible(constraints: &[LinearConstraint], point: &[f64]) -> Result<bool> {
    feasible_with_tol(constraints, point, 1e-8)
}

pub fn feasible_with_tol(constraints: &[LinearConstraint], point: &[f64], tol: f64) -> Result<bool> {
    for (idx, con) in constraints.iter().enumerate() {
        if con.coeffs.len() != point.len() {
            return Err(Error::Contract(format!(
                "constraint {idx} has {} coefficients, point has {}",
                con.coeffs.len(),
                point.len()
            )));
        }
    }
    if point.iter().any(|&x| x < -1e-10) {
        return Ok(false);
    }
    Ok(constraints.iter().all(|con| con.slack(point) >= -tol))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dictionary `x_B(i) = beta_i - sum_j a_ij x_N(j)`, `z = z0 + sum_j d_j x_N(j)`.
/// Variable labels: `0..n` originals, `n..n+m` slacks, `n+m` auxiliary.
struct Tableau {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    beta: Vec<f64>,
    d: Vec<f64>,
    z0: f64,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let cols = self.cols;
        let p = self.a[r * cols + s];
        let row_r: Vec<f64> = {
            let row = &mut self.a[r * cols..(r + 1) * cols];
            for (j, v) in row.iter_mut().enumerate() {
                *v = if j == s { 1.0 / p } else { *v / p };
            }
            row.to_vec()
        };
        self.beta[r] /= p;
        let beta_r = self.beta[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let factor = self.a[i * cols + s];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.a[i * cols..(i + 1) * cols];
            for (j, v) in row.iter_mut().enumerate() {
                if j == s {
                    *v = -factor * row_r[s];
                } else {
                    *v -= factor * row_r[j];
                }
            }
            self.beta[i] -= factor * beta_r;
        }
        let ds = self.d[s];
        if ds != 0.0 {
            for (j, dj) in self.d.iter_mut().enumerate() {
                if j == s {
                    *dj = -ds * row_r[s];
                } else {
                    *dj -= ds * row_r[j];
                }
            }
            self.z0 += ds * beta_r;
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[s]);
    }

    /// Bland's rule: lowest-label improving column, lowest-label tie in the
    /// ratio test.
    fn run(&mut self, opts: &SimplexOptions) -> Result<Phase> {
        for _ in 0..opts.max_iterations {
            let entering = (0..self.cols)
                .filter(|&j| self.d[j] > opts.pivot_tol)
                .min_by_key(|&j| self.nonbasic[j]);
            let Some(s) = entering else {
                return Ok(Phase::Optimal);
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aij = self.at(i, s);
                if aij <= opts.pivot_tol {
                    continue;
                }
                let ratio = self.beta[i].max(0.0) / aij;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                        if (!tie && ratio < br) || (tie && self.basic[i] < self.basic[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leaving {
                None => return Ok(Phase::Unbounded),
                Some((r, _)) => self.pivot(r, s),
            }
        }
        Err(Error::Numerical(format!(
            "simplex did not terminate within {} pivots",
            opts.max_iterations
        )))
    }

    fn drop_column(&mut self, s: usize) {
        let cols = self.cols;
        let mut a = Vec::with_capacity(self.rows * (cols - 1));
        for i in 0..self.rows {
            for j in 0..cols {
                if j != s {
                    a.push(self.a[i * cols + j]);
                }
            }
        }
        self.a = a;
        self.d.remove(s);
        self.nonbasic.remove(s);
        self.cols -= 1;
    }

    fn drop_row(&mut self, r: usize) {
        let cols = self.cols;
        self.a.drain(r * cols..(r + 1) * cols);
        self.beta.remove(r);
        self.basic.remove(r);
        self.rows -= 1;
    }
}

fn solve_nonneg(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    let n = lp.num_vars();
    let m = lp.constraints.len();
    let aux = n + m;
    let needs_phase_one = lp.constraints.iter().any(|c| c.rhs < 0.0);

    let cols = if needs_phase_one { n + 1 } else { n };
    let mut a = Vec::with_capacity(m * cols);
    for con in &lp.constraints {
        a.extend_from_slice(&con.coeffs);
        if needs_phase_one {
            a.push(-1.0);
        }
    }
    let mut nonbasic: Vec<usize> = (0..n).collect();
    if needs_phase_one {
        nonbasic.push(aux);
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        a,
        beta: lp.constraints.iter().map(|c| c.rhs).collect(),
        d: vec![0.0; cols],
        z0: 0.0,
        basic: (n..n + m).collect(),
        nonbasic,
    };

    if needs_phase_one {
        tab.d[n] = -1.0;
        let r = (0..m)
            .min_by(|&i, &j| tab.beta[i].total_cmp(&tab.beta[j]).then(i.cmp(&j)))
            .expect("phase one requires at least one row");
        tab.pivot(r, n);
        tab.run(opts)?;
        let scale = lp.constraints.iter().fold(1.0f64, |s, c| s.max(c.rhs.abs()));
        if tab.z0 < -opts.feas_tol * scale {
            return Ok(LpSolution { status: LpStatus::Infeasible, value: f64::NEG_INFINITY, solution: vec![] });
        }
        if let Some(r) = tab.basic.iter().position(|&v| v == aux) {
            let s = (0..tab.cols)
                .filter(|&j| tab.at(r, j).abs() > opts.pivot_tol)
                .max_by(|&i, &j| tab.at(r, i).abs().total_cmp(&tab.at(r, j).abs()));
            match s {
                Some(s) => tab.pivot(r, s),
                None => tab.drop_row(r),
            }
        }
        if let Some(s) = tab.nonbasic.iter().position(|&v| v == aux) {
            tab.drop_column(s);
        }
        // Express the real objective in terms of the current nonbasic set.
        tab.z0 = 0.0;
        tab.d = vec![0.0; tab.cols];
        for (j, &label) in tab.nonbasic.iter().enumerate() {
            if label < n {
                tab.d[j] += lp.objective[label];
            }
        }
        for i in 0..tab.rows {
            let label = tab.basic[i];
            if label < n {
                let ck = lp.objective[label];
                tab.z0 += ck * tab.beta[i];
                for j in 0..tab.cols {
                    tab.d[j] -= ck * tab.a[i * tab.cols + j];
                }
            }
        }
    } else {
        tab.d.copy_from_slice(&lp.objective);
    }

    if let Phase::Unbounded = tab.run(opts)? {
        return Ok(LpSolution { status: LpStatus::Unbounded, value: f64::INFINITY, solution: vec![] });
    }

    let mut x = vec![0.0; n];
    for (i, &label) in tab.basic.iter().enumerate() {
        if label < n {
            x[label] = tab.beta[i];
        }
    }
    for v in x.iter_mut() {
        if *v < -opts.feas_tol {
            return Err(Error::Numerical(format!("simplex produced negative variable {v:e}")));
        }
        *v = v.max(0.0);
    }
    if let Some(con) = lp.constraints.iter().find(|c| c.slack(&x) < -opts.feas_tol) {
        return Err(Error::Numerical(format!(
            "simplex solution violates a constraint by {:e}",
            -con.slack(&x)
        )));
    }
    Ok(LpSolution { status: LpStatus::Optimal, value: dot(&lp.objective, &x), solution: x })
}
