//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! The engine is a revised simplex with a dense basis inverse; constraint
//! columns are kept as (row, coefficient) lists. `LpProblem` is the public
//! dense inequality form (maximize c'x s.t. Ax <= b, x >= 0); the
//! column-oriented builder with equality rows backs the D-LP and the convex
//! envelope, and a dual-simplex re-solve supports repeated right-hand sides.

use thiserror::Error;

/// Dense LP in standard inequality form: maximize `objective . x`
/// subject to `rows[i] . x <= rhs[i]` and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    /// Structural variable assignment (empty unless optimal).
    pub x: Vec<f64>,
    /// Row duals at the optimum (empty unless optimal).
    pub dual: Vec<f64>,
}

impl LpSolution {
    pub fn dual_value(&self, rhs: &[f64]) -> f64 {
        self.dual.iter().zip(rhs).map(|(y, b)| y * b).sum()
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("simplex cycling guard exceeded after {iterations} iterations (phase {phase}, objective {objective})")]
    CyclingGuard { iterations: usize, phase: u8, objective: f64 },
    #[error("singular basis during refactorization")]
    SingularBasis,
    #[error("non-finite coefficient in LP input")]
    NonFinite,
    #[error("dual re-solve requires a previously solved optimal basis")]
    NotSolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

/// Column-oriented LP: maximize sum obj_j x_j subject to the rows.
#[derive(Debug, Clone, Default)]
pub struct ColumnLp {
    pub rhs: Vec<f64>,
    pub senses: Vec<Sense>,
    pub obj: Vec<f64>,
    pub cols: Vec<Vec<(u32, f64)>>,
}

impl ColumnLp {
    pub fn new(rhs: Vec<f64>, senses: Vec<Sense>) -> Self {
        assert_eq!(rhs.len(), senses.len());
        ColumnLp { rhs, senses, obj: Vec::new(), cols: Vec::new() }
    }

    pub fn push_col(&mut self, obj: f64, entries: Vec<(u32, f64)>) {
        self.obj.push(obj);
        self.cols.push(entries);
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }
}

const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE_TOL: f64 = 1e-12;
const DEGEN_STREAK: usize = 600;
const REFRESH_EVERY: usize = 2500;

#[derive(Clone, Copy, PartialEq)]
enum NSense {
    Le,
    Ge,
    Eq,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

/// Revised simplex over a `ColumnLp`. Retains its optimal basis so the same
/// LP can be re-solved for a new right-hand side with the dual simplex.
pub struct SimplexEngine {
    n_struct: usize,
    n_total: usize,
    first_artificial: usize,
    m: usize,
    obj: Vec<f64>, // phase-2 objective per column (slack/artificial: 0)
    cols: Vec<Vec<(u32, f64)>>,
    rhs: Vec<f64>,       // normalized: all >= 0
    row_sign: Vec<f64>,  // +1 / -1 applied to the caller's rows
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>, // m x m, row-major
    xb: Vec<f64>,
    solved: bool,
    pub iterations: usize,
}

impl SimplexEngine {
    pub fn build(lp: &ColumnLp) -> Result<Self, LpError> {
        let m = lp.n_rows();
        let n_struct = lp.cols.len();
        for c in &lp.cols {
            if c.iter().any(|&(_, v)| !v.is_finite()) {
                return Err(LpError::NonFinite);
            }
        }
        if lp.rhs.iter().chain(lp.obj.iter()).any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }

        // Normalize senses so every rhs is nonnegative: a Le row with b < 0
        // becomes a Ge row with b > 0 (surplus + artificial).
        let mut rhs = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        let mut nsense = Vec::with_capacity(m);
        for i in 0..m {
            let b = lp.rhs[i];
            if b < 0.0 {
                rhs.push(-b);
                row_sign.push(-1.0);
                nsense.push(match lp.senses[i] {
                    Sense::Le => NSense::Ge,
                    Sense::Eq => NSense::Eq,
                });
            } else {
                rhs.push(b);
                row_sign.push(1.0);
                nsense.push(match lp.senses[i] {
                    Sense::Le => NSense::Le,
                    Sense::Eq => NSense::Eq,
                });
            }
        }

        let mut cols: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n_struct + 2 * m);
        let mut obj = Vec::with_capacity(n_struct + 2 * m);
        for (j, c) in lp.cols.iter().enumerate() {
            cols.push(
                c.iter()
                    .filter(|&&(_, v)| v != 0.0)
                    .map(|&(r, v)| (r, v * row_sign[r as usize]))
                    .collect(),
            );
            obj.push(lp.obj[j]);
        }
        let mut slack_of_row = vec![usize::MAX; m];
        for i in 0..m {
            match nsense[i] {
                NSense::Le => {
                    slack_of_row[i] = cols.len();
                    cols.push(vec![(i as u32, 1.0)]);
                    obj.push(0.0);
                }
                NSense::Ge => {
                    cols.push(vec![(i as u32, -1.0)]);
                    obj.push(0.0);
                }
                NSense::Eq => {}
            }
        }
        let first_artificial = cols.len();
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            if nsense[i] == NSense::Le {
                basis.push(slack_of_row[i]);
            } else {
                basis.push(cols.len());
                cols.push(vec![(i as u32, 1.0)]);
                obj.push(0.0);
            }
        }
        let n_total = cols.len();
        let mut in_basis = vec![false; n_total];
        for &b in &basis {
            in_basis[b] = true;
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let xb = rhs.clone();
        Ok(SimplexEngine {
            n_struct,
            n_total,
            first_artificial,
            m,
            obj,
            cols,
            rhs,
            row_sign,
            basis,
            in_basis,
            binv,
            xb,
            solved: false,
            iterations: 0,
        })
    }

    pub fn solve(&mut self) -> Result<LpSolution, LpError> {
        let max_iter = 60_000 + 60 * self.m;
        if self.first_artificial < self.n_total {
            // Phase 1: maximize -(sum of artificials).
            let mut costs = vec![0.0; self.n_total];
            for c in costs.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            match self.primal_phase(&costs, true, max_iter)? {
                PhaseOutcome::Optimal => {}
                PhaseOutcome::Unbounded => unreachable!("phase-1 objective is bounded above by 0"),
            }
            let art_sum: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(&b, _)| b >= self.first_artificial)
                .map(|(_, &x)| x)
                .sum();
            let scale: f64 = 1.0 + self.rhs.iter().map(|b| b.abs()).sum::<f64>();
            if art_sum > 1e-8 * scale {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    value: 0.0,
                    x: vec![],
                    dual: vec![],
                });
            }
            self.drive_out_artificials();
        }
        let costs = self.obj.clone();
        match self.primal_phase(&costs, false, max_iter)? {
            PhaseOutcome::Optimal => Ok(self.extract_solution()),
            PhaseOutcome::Unbounded => Ok(LpSolution {
                status: LpStatus::Unbounded,
                value: f64::INFINITY,
                x: vec![],
                dual: vec![],
            }),
        }
    }

    /// Pivots basic artificials (at value 0 after a successful phase 1) out
    /// of the basis wherever a non-artificial column has a nonzero entry in
    /// their row. Rows where none exists are redundant; their artificial
    /// stays basic at 0 and the phase-2 ratio test pins it there.
    fn drive_out_artificials(&mut self) {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let brow: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut pick = usize::MAX;
            for j in 0..self.first_artificial {
                if self.in_basis[j] {
                    continue;
                }
                let mut alpha = 0.0;
                for &(row, v) in &self.cols[j] {
                    alpha += brow[row as usize] * v;
                }
                if alpha.abs() > 1e-7 {
                    pick = j;
                    break;
                }
            }
            if pick != usize::MAX {
                let w = self.ftran(pick);
                self.pivot(pick, r, &w);
                self.xb[r] = 0.0; // degenerate pivot; clamp the noise
            }
        }
    }

    fn extract_solution(&mut self) -> LpSolution {
        self.solved = true;
        let mut x = vec![0.0; self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.xb[i].max(0.0);
            }
        }
        let value: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .map(|(&b, &xv)| self.obj[b] * xv)
            .sum();
        let y = self.dual_prices(&self.obj);
        let dual = y
            .iter()
            .zip(&self.row_sign)
            .map(|(&yi, &s)| yi * s)
            .collect();
        LpSolution { status: LpStatus::Optimal, value, x, dual }
    }

    pub fn objective_value(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .map(|(&b, &xv)| self.obj[b] * xv)
            .sum()
    }

    fn dual_prices(&self, costs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &bv) in self.basis.iter().enumerate() {
            let c = costs[bv];
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, &bk) in y.iter_mut().zip(row) {
                    *yk += c * bk;
                }
            }
        }
        y
    }

    #[inline]
    fn reduced_cost(&self, j: usize, costs: &[f64], y: &[f64]) -> f64 {
        let mut d = costs[j];
        for &(r, v) in &self.cols[j] {
            d -= y[r as usize] * v;
        }
        d
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut w = vec![0.0; m];
        for &(r, v) in &self.cols[j] {
            let col = r as usize;
            for (i, wi) in w.iter_mut().enumerate() {
                *wi += self.binv[i * m + col] * v;
            }
        }
        w
    }

    fn pivot(&mut self, entering: usize, leave_row: usize, w: &[f64]) {
        let m = self.m;
        let inv = 1.0 / w[leave_row];
        for v in self.binv[leave_row * m..(leave_row + 1) * m].iter_mut() {
            *v *= inv;
        }
        self.xb[leave_row] *= inv;
        let xp = self.xb[leave_row];
        // Work on a copy of the pivot row to keep the borrow checker happy
        // without splitting; m <= a few thousand so this is cheap.
        let prow: Vec<f64> = self.binv[leave_row * m..(leave_row + 1) * m].to_vec();
        for i in 0..m {
            if i == leave_row {
                continue;
            }
            let f = w[i];
            if f != 0.0 {
                let row = &mut self.binv[i * m..(i + 1) * m];
                for (a, &p) in row.iter_mut().zip(&prow) {
                    *a -= f * p;
                }
                self.xb[i] -= f * xp;
                if self.xb[i] < 0.0 && self.xb[i] > -FEAS_TOL {
                    self.xb[i] = 0.0;
                }
            }
        }
        let leaving = self.basis[leave_row];
        self.in_basis[leaving] = false;
        self.in_basis[entering] = true;
        self.basis[leave_row] = entering;
    }

    /// Recomputes the basis inverse from the basis columns (Gauss-Jordan with
    /// partial pivoting) and refreshes xb.
    fn refactorize(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let w = 2 * m;
        let mut aug = vec![0.0; m * w];
        for (i, &bv) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[bv] {
                aug[r as usize * w + i] = v;
            }
        }
        for i in 0..m {
            aug[i * w + m + i] = 1.0;
        }
        for col in 0..m {
            let mut best = col;
            let mut best_abs = aug[col * w + col].abs();
            for r in col + 1..m {
                let a = aug[r * w + col].abs();
                if a > best_abs {
                    best_abs = a;
                    best = r;
                }
            }
            if best_abs < 1e-12 {
                return Err(LpError::SingularBasis);
            }
            if best != col {
                for k in 0..w {
                    aug.swap(col * w + k, best * w + k);
                }
            }
            let inv = 1.0 / aug[col * w + col];
            for k in 0..w {
                aug[col * w + k] *= inv;
            }
            for r in 0..m {
                if r != col {
                    let f = aug[r * w + col];
                    if f != 0.0 {
                        for k in 0..w {
                            aug[r * w + k] -= f * aug[col * w + k];
                        }
                    }
                }
            }
        }
        for r in 0..m {
            for k in 0..m {
                self.binv[r * m + k] = aug[r * w + m + k];
            }
        }
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += self.binv[i * m + k] * self.rhs[k];
            }
            self.xb[i] = if s < 0.0 && s > -FEAS_TOL { 0.0 } else { s };
        }
        Ok(())
    }

    /// Primal simplex over the given costs. Dantzig pricing with a switch to
    /// Bland's rule after a degeneracy streak; artificial columns may enter
    /// only during phase 1.
    fn primal_phase(
        &mut self,
        costs: &[f64],
        phase_one: bool,
        max_iter: usize,
    ) -> Result<PhaseOutcome, LpError> {
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = f64::NEG_INFINITY;
        for _ in 0..max_iter {
            self.iterations += 1;
            if self.iterations % REFRESH_EVERY == 0 {
                self.refactorize()?;
            }
            let y = self.dual_prices(costs);
            let limit = if phase_one { self.n_total } else { self.first_artificial };
            let mut entering = usize::MAX;
            let mut best_d = OPT_TOL;
            for j in 0..limit {
                if self.in_basis[j] {
                    continue;
                }
                let d = self.reduced_cost(j, costs, &y);
                if d > best_d {
                    best_d = d;
                    entering = j;
                    if bland {
                        break;
                    }
                }
            }
            if entering == usize::MAX {
                return Ok(PhaseOutcome::Optimal);
            }
            let w = self.ftran(entering);
            let mut leave_row = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            let mut best_bvar = usize::MAX;
            for i in 0..self.m {
                // A basic artificial sits at 0 on a redundant row; force it
                // out (ratio 0) whenever the entering column touches its row,
                // so it can never grow back in phase 2.
                if !phase_one && self.basis[i] >= self.first_artificial && w[i].abs() > PIVOT_TOL {
                    leave_row = i;
                    break;
                }
                if w[i] > PIVOT_TOL {
                    let ratio = self.xb[i] / w[i];
                    if ratio < best_ratio - RATIO_TIE_TOL {
                        best_ratio = ratio;
                        best_bvar = self.basis[i];
                        leave_row = i;
                    } else if ratio < best_ratio + RATIO_TIE_TOL && self.basis[i] < best_bvar {
                        // Bland-style tie break on the leaving variable.
                        best_ratio = best_ratio.min(ratio);
                        best_bvar = self.basis[i];
                        leave_row = i;
                    }
                }
            }
            if leave_row == usize::MAX {
                return Ok(PhaseOutcome::Unbounded);
            }
            self.pivot(entering, leave_row, &w);
            let obj: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .map(|(&b, &x)| costs[b] * x)
                .sum();
            if obj > last_obj + 1e-13 {
                last_obj = obj;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > DEGEN_STREAK {
                    bland = true;
                }
            }
        }
        let objective = self.objective_value();
        Err(LpError::CyclingGuard {
            iterations: self.iterations,
            phase: if phase_one { 1 } else { 2 },
            objective,
        })
    }

    /// Re-solves the LP after replacing the right-hand side, starting from the
    /// retained optimal (dual-feasible) basis via the dual simplex. Returns
    /// the new optimal objective value.
    pub fn resolve_rhs(&mut self, new_rhs: &[f64]) -> Result<f64, LpError> {
        if !self.solved {
            return Err(LpError::NotSolved);
        }
        assert_eq!(new_rhs.len(), self.m);
        let m = self.m;
        for (i, (b, s)) in new_rhs.iter().zip(&self.row_sign).enumerate() {
            self.rhs[i] = b * s;
        }
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += self.binv[i * m + k] * self.rhs[k];
            }
            self.xb[i] = s;
        }
        let max_iter = 20_000 + 20 * m;
        for _ in 0..max_iter {
            let mut leave_row = usize::MAX;
            let mut most_neg = -FEAS_TOL;
            for i in 0..m {
                if self.xb[i] < most_neg {
                    most_neg = self.xb[i];
                    leave_row = i;
                }
            }
            if leave_row == usize::MAX {
                for v in self.xb.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                return Ok(self.objective_value());
            }
            self.iterations += 1;
            let y = self.dual_prices(&self.obj);
            let brow: Vec<f64> = self.binv[leave_row * m..(leave_row + 1) * m].to_vec();
            let mut entering = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            for j in 0..self.first_artificial {
                if self.in_basis[j] {
                    continue;
                }
                let mut alpha = 0.0;
                for &(r, v) in &self.cols[j] {
                    alpha += brow[r as usize] * v;
                }
                if alpha < -PIVOT_TOL {
                    let d = self.reduced_cost(j, &self.obj, &y).min(0.0);
                    // Maintained dual feasibility means d <= tol; clamp noise.
                    let ratio = d / alpha; // >= 0
                    if ratio < best_ratio {
                        best_ratio = ratio;
                        entering = j;
                    }
                }
            }
            if entering == usize::MAX {
                return Err(LpError::CyclingGuard {
                    iterations: self.iterations,
                    phase: 3,
                    objective: self.objective_value(),
                });
            }
            let w = self.ftran(entering);
            self.pivot(entering, leave_row, &w);
        }
        Err(LpError::CyclingGuard {
            iterations: self.iterations,
            phase: 3,
            objective: self.objective_value(),
        })
    }

    /// Max constraint violation of the current basic solution, for diagnostics.
    pub fn primal_residual(&self) -> f64 {
        let m = self.m;
        let mut ax = vec![0.0; m];
        for (i, &bv) in self.basis.iter().enumerate() {
            let x = self.xb[i];
            if x != 0.0 {
                for &(r, v) in &self.cols[bv] {
                    ax[r as usize] += v * x;
                }
            }
        }
        ax.iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Optimal basic solution of a dense inequality-form LP.
pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    let m = problem.rows.len();
    let senses = vec![Sense::Le; m];
    let mut lp = ColumnLp::new(problem.rhs.clone(), senses);
    let n = problem.objective.len();
    for j in 0..n {
        let entries: Vec<(u32, f64)> = problem
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, row)| {
                let v = row[j];
                (v != 0.0).then_some((i as u32, v))
            })
            .collect();
        lp.push_col(problem.objective[j], entries);
    }
    SimplexEngine::build(&lp)?.solve()
}
