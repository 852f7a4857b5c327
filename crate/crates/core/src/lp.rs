//! Dense two-phase primal simplex for `min c·x s.t. Ax = b, x ≥ 0`, and an
//! exhaustive basis enumerator used as an independent oracle on tiny
//! problems.
//!
//! Pivoting follows Bland's rule throughout: the entering column is the
//! lowest-index column with negative reduced cost, the leaving row is the
//! minimum-ratio row whose basic variable has the lowest index. Identical
//! input therefore always yields the identical basis.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Feasibility and optimality tolerance.
pub const TAU_LP: f64 = 1e-9;
/// Pivot elements below this magnitude count as zero.
pub const PIVOT_EPS: f64 = 1e-11;

const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, eq_matrix: Vec<Vec<f64>>, eq_rhs: Vec<f64>) -> Result<Self> {
        let p = Self {
            num_vars: objective.len(),
            objective,
            eq_matrix,
            eq_rhs,
        };
        p.check_dims()?;
        Ok(p)
    }

    fn check_dims(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::DimensionMismatch(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.eq_rhs.len() != self.eq_matrix.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint rows but {} right-hand sides",
                self.eq_matrix.len(),
                self.eq_rhs.len()
            )));
        }
        if let Some(i) = self.eq_matrix.iter().position(|r| r.len() != self.num_vars) {
            return Err(Error::DimensionMismatch(format!(
                "constraint row {i} has {} entries for {} variables",
                self.eq_matrix[i].len(),
                self.num_vars
            )));
        }
        Ok(())
    }

    /// `max_i |A_i·x − b_i|`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.eq_matrix
            .iter()
            .zip(&self.eq_rhs)
            .map(|(row, b)| (dot(row, x) - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Option<Vec<f64>>,
    pub value: Option<f64>,
    /// Sorted basic column indices (original variables only).
    pub basis: Vec<usize>,
    pub pivots: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, pivots: usize) -> Self {
        Self {
            status,
            x: None,
            value: None,
            basis: Vec::new(),
            pivots,
        }
    }
}

/// Row-major simplex tableau. Column `width - 1` holds the right-hand side.
struct Tableau {
    rows: usize,
    width: usize,
    a: Vec<f64>,
    /// Reduced-cost row; last entry is minus the objective value.
    cost: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.a[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.a[pr * w + pc] = 1.0;
        let prow: Vec<f64> = self.a[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.a[r * w + pc];
            if f != 0.0 {
                for (v, p) in self.a[r * w..(r + 1) * w].iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                self.a[r * w + pc] = 0.0;
            }
        }
        let f = self.cost[pc];
        if f != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            self.cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Sets the cost row from an objective over the first `obj.len()` columns.
    fn price(&mut self, obj: &[f64]) {
        self.cost = vec![0.0; self.width];
        self.cost[..obj.len()].copy_from_slice(obj);
        for r in 0..self.rows {
            let cb = obj.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for c in 0..self.width {
                    self.cost[c] -= cb * self.a[r * self.width + c];
                }
            }
        }
    }

    /// Bland-rule iterations over columns `< ncols`.
    fn run(&mut self, ncols: usize) -> Result<Phase> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Internal(format!("simplex exceeded {MAX_PIVOTS} pivots")));
            }
            let Some(enter) = (0..ncols).find(|&c| self.cost[c] < -PIVOT_EPS) else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        if (tie && self.basis[r] < self.basis[lr]) || (!tie && ratio < lratio) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            match leave {
                None => return Ok(Phase::Unbounded),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }

    fn drop_row(&mut self, r: usize) {
        let w = self.width;
        self.a.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }
}

pub fn solve_lp(prob: &LpProblem) -> Result<LpSolution> {
    prob.check_dims()?;
    let n = prob.num_vars;
    let m = prob.eq_matrix.len();
    let width = n + m + 1;
    let mut a = vec![0.0; m * width];
    for (r, (row, &b)) in prob.eq_matrix.iter().zip(&prob.eq_rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for (c, v) in row.iter().enumerate() {
            a[r * width + c] = sign * v;
        }
        a[r * width + n + r] = 1.0;
        a[r * width + width - 1] = sign * b;
    }
    let mut t = Tableau {
        rows: m,
        width,
        a,
        cost: Vec::new(),
        basis: (n..n + m).collect(),
        pivots: 0,
    };

    // Phase I: minimize the sum of artificials.
    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    t.price(&phase1);
    t.run(n + m)?;
    let infeas = -t.cost[width - 1];
    if infeas > TAU_LP {
        return Ok(LpSolution::without_point(LpStatus::Infeasible, t.pivots));
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are redundant.
    let mut r = 0;
    while r < t.rows {
        if t.basis[r] >= n {
            match (0..n).find(|&c| t.at(r, c).abs() > PIVOT_EPS) {
                Some(c) => {
                    t.pivot(r, c);
                    r += 1;
                }
                None => t.drop_row(r),
            }
        } else {
            r += 1;
        }
    }

    // Phase II over original columns only.
    t.price(&prob.objective);
    if let Phase::Unbounded = t.run(n)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, t.pivots));
    }

    let mut x = vec![0.0; n];
    for r in 0..t.rows {
        x[t.basis[r]] = t.rhs(r);
    }
    let mut basis = t.basis.clone();
    basis.sort_unstable();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: Some(prob.value_at(&x)),
        x: Some(x),
        basis,
        pivots: t.pivots,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Every basic feasible solution of `{x ≥ 0 : Ax = b}`, found by solving
/// the square system for each candidate basis. Refuses (rather than
/// truncating) when the number of candidate bases exceeds `cap`.
pub fn enumerate_vertices(prob: &LpProblem, cap: usize) -> Result<Vec<Vec<f64>>> {
    prob.check_dims()?;
    let n = prob.num_vars;
    let augmented: Vec<Vec<f64>> = prob
        .eq_matrix
        .iter()
        .zip(&prob.eq_rhs)
        .map(|(r, &b)| r.iter().copied().chain([b]).collect())
        .collect();
    let keep = linalg::independent_rows(&prob.eq_matrix, n, 1e-10);
    if linalg::rank(&augmented, n + 1, 1e-10) > keep.len() {
        return Ok(Vec::new());
    }
    let rank = keep.len();
    let needed = binomial(n, rank);
    if needed > cap as u128 {
        return Err(Error::CapExceeded { needed, cap });
    }
    let rows: Vec<&Vec<f64>> = keep.iter().map(|&i| &prob.eq_matrix[i]).collect();
    let rhs = DVector::from_iterator(rank, keep.iter().map(|&i| prob.eq_rhs[i]));

    let mut out: Vec<Vec<f64>> = Vec::new();
    for cols in (0..n).combinations(rank) {
        let sub = DMatrix::from_fn(rank, rank, |i, j| rows[i][cols[j]]);
        let lu = sub.full_piv_lu();
        let u = lu.u();
        let min_pivot = (0..rank).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if rank > 0 && min_pivot < 1e-10 {
            continue;
        }
        let xb = if rank == 0 {
            DVector::zeros(0)
        } else {
            match lu.solve(&rhs) {
                Some(v) => v,
                None => continue,
            }
        };
        if xb.iter().any(|&v| v < -TAU_LP) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (k, &c) in cols.iter().enumerate() {
            x[c] = xb[k].max(0.0);
        }
        if prob.residual(&x) > TAU_LP {
            continue;
        }
        let dup = out
            .iter()
            .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() <= TAU_LP));
        if !dup {
            out.push(x);
        }
    }
    Ok(out)
}

/// Minimum objective over the enumerated vertices, `None` when infeasible.
pub fn vertex_minimum(prob: &LpProblem, cap: usize) -> Result<Option<f64>> {
    Ok(enumerate_vertices(prob, cap)?
        .iter()
        .map(|x| prob.value_at(x))
        .min_by(f64::total_cmp))
}
