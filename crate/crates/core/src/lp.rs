//! Bounded revised primal simplex.
//!
//! Every row `i` gets a logical variable `r_i = a_i x` whose bounds encode the
//! row sense, so the working system is `A x - r = 0` with bounds on all
//! columns. The basis inverse is kept explicitly (dense, column-major) and
//! updated with product-form pivots; it is rebuilt periodically by factoring
//! only the structural part of the basis. Phase 1 minimizes the sum of
//! infeasibilities, phase 2 the objective. The solver keeps its basis between
//! calls, so re-solving after bound changes is a warm start.

use std::time::Instant;

use thiserror::Error;

use crate::model::{LinearProgram, Sense};

/// Iteration cap applied in truncated mode when none is given.
pub const DEFAULT_TRUNCATION: usize = 5000;

const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-10;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub max_iterations: Option<usize>,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub truncated: bool,
    pub deadline: Option<Instant>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { max_iterations: None, feasibility_tol: 1e-7, optimality_tol: 1e-7, truncated: false, deadline: None }
    }
}

impl LpOptions {
    pub fn truncated(cap: Option<usize>) -> Self {
        LpOptions { truncated: true, max_iterations: cap, ..Default::default() }
    }

    fn iteration_cap(&self) -> Option<usize> {
        match (self.truncated, self.max_iterations) {
            (true, None) => Some(DEFAULT_TRUNCATION),
            (_, cap) => cap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    IterationLimit,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Objective of the current primal point; `+inf` while it is infeasible.
    pub objective: f64,
    /// Structural values, aligned with `LinearProgram::variables`.
    pub values: Vec<f64>,
    /// A valid lower bound on the LP optimum (possibly `-inf`).
    pub dual_bound: f64,
    pub iterations: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("program has no variables")]
    Empty,
    #[error("variable {0} has lower bound above upper bound")]
    InvertedBounds(usize),
    #[error("basis stayed singular after repair")]
    Singular,
    #[error("simplex failed to make progress after refactorization")]
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    Lower,
    Upper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

/// Reusable simplex state for one program.
#[derive(Debug, Clone)]
pub struct SimplexSolver {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    cost: Vec<f64>,
    objective_offset: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    /// Column-major: `binv[k * m + p]` is entry (p, k) of B^-1.
    binv: Vec<f64>,
    updates: usize,
    /// `binv` matches the current basis.
    factored: bool,
    /// Basic values were recomputed from `binv` since the last change.
    fresh: bool,
    bland: bool,
    pub opts: LpOptions,
}

fn nonbasic_state(lo: f64, hi: f64) -> VarState {
    if lo.is_finite() {
        VarState::Lower
    } else if hi.is_finite() {
        VarState::Upper
    } else {
        VarState::Zero
    }
}

fn state_value(state: VarState, lo: f64, hi: f64) -> f64 {
    match state {
        VarState::Lower => lo,
        VarState::Upper => hi,
        _ => 0.0,
    }
}

impl SimplexSolver {
    pub fn new(lp: &LinearProgram, opts: LpOptions) -> Result<Self, LpError> {
        let n = lp.n_variables();
        if n == 0 {
            return Err(LpError::Empty);
        }
        let m = lp.n_constraints();
        let mut row_scale = vec![1.0; m];
        for (i, c) in lp.constraints.iter().enumerate() {
            let big = c.coeffs.iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
            if big > 0.0 {
                row_scale[i] = 1.0 / big;
            }
        }
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, c) in lp.constraints.iter().enumerate() {
            for &(j, a) in &c.coeffs {
                if a != 0.0 {
                    columns[j].push((i, a * row_scale[i]));
                }
            }
        }
        let mut col_start = Vec::with_capacity(n + 1);
        let mut col_row = Vec::new();
        let mut col_val = Vec::new();
        col_start.push(0);
        for mut col in columns {
            col.sort_by_key(|&(i, _)| i);
            // merge duplicate row entries
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for (i, a) in col {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += a,
                    _ => merged.push((i, a)),
                }
            }
            for (i, a) in merged {
                col_row.push(i);
                col_val.push(a);
            }
            col_start.push(col_row.len());
        }

        let mut cost = vec![0.0; n + m];
        for &(j, c) in &lp.objective {
            cost[j] += c;
        }
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for (j, v) in lp.variables.iter().enumerate() {
            if v.lower > v.upper {
                return Err(LpError::InvertedBounds(j));
            }
            lower.push(v.lower);
            upper.push(v.upper);
        }
        for (i, c) in lp.constraints.iter().enumerate() {
            let rhs = c.rhs * row_scale[i];
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, rhs),
                Sense::Ge => (rhs, f64::INFINITY),
                Sense::Eq => (rhs, rhs),
            };
            lower.push(lo);
            upper.push(hi);
        }

        let mut state = Vec::with_capacity(n + m);
        let mut x = vec![0.0; n + m];
        for j in 0..n {
            let s = nonbasic_state(lower[j], upper[j]);
            x[j] = state_value(s, lower[j], upper[j]);
            state.push(s);
        }
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            state.push(VarState::Basic(i));
            basis.push(n + i);
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = -1.0;
        }
        let mut solver = SimplexSolver {
            n,
            m,
            col_start,
            col_row,
            col_val,
            cost,
            objective_offset: lp.objective_offset,
            lower,
            upper,
            x,
            state,
            basis,
            binv,
            updates: 0,
            factored: false,
            fresh: false,
            bland: false,
            opts,
        };
        solver.recompute_basic_values();
        Ok(solver)
    }

    pub fn n_variables(&self) -> usize {
        self.n
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Changes the bounds of structural variable `j`; the current basis is kept.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        assert!(j < self.n, "structural variable index out of range");
        self.lower[j] = lo;
        self.upper[j] = hi;
        if let VarState::Basic(_) = self.state[j] {
            return;
        }
        let s = match self.state[j] {
            VarState::Upper if hi.is_finite() => VarState::Upper,
            _ => nonbasic_state(lo, hi),
        };
        let new_value = state_value(s, lo, hi);
        let delta = new_value - self.x[j];
        self.state[j] = s;
        self.x[j] = new_value;
        if delta != 0.0 {
            // B x_B = -N x_N, so x_B moves by -delta * B^-1 a_j.
            let alpha = self.ftran(j);
            for (p, &a) in alpha.iter().enumerate() {
                self.x[self.basis[p]] -= delta * a;
            }
            self.fresh = false;
        }
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.col_start[j], self.col_start[j + 1]);
        self.col_row[s..e].iter().copied().zip(self.col_val[s..e].iter().copied())
    }

    /// B^-1 a_j for structural or logical column j.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if j >= self.n {
            let i = j - self.n;
            for (o, &b) in out.iter_mut().zip(&self.binv[i * m..(i + 1) * m]) {
                *o = -b;
            }
        } else {
            for (i, a) in self.column(j) {
                for (o, &b) in out.iter_mut().zip(&self.binv[i * m..(i + 1) * m]) {
                    *o += a * b;
                }
            }
        }
        out
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + self.m {
            if let VarState::Basic(_) = self.state[j] {
                continue;
            }
            let v = self.x[j];
            if v == 0.0 {
                continue;
            }
            if j >= self.n {
                rhs[j - self.n] += v;
            } else {
                for (i, a) in self.column(j) {
                    rhs[i] -= a * v;
                }
            }
        }
        let mut xb = vec![0.0; m];
        for (k, &r) in rhs.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            for (o, &b) in xb.iter_mut().zip(&self.binv[k * m..(k + 1) * m]) {
                *o += r * b;
            }
        }
        for (p, v) in xb.into_iter().enumerate() {
            self.x[self.basis[p]] = v;
        }
    }

    /// Rebuilds B^-1 from scratch. Dependent structural columns are swapped
    /// for logicals of uncovered rows.
    fn refactor(&mut self) -> Result<(), LpError> {
        let (n, m) = (self.n, self.m);
        for _attempt in 0..=m {
            let mut row_has_logical = vec![false; m];
            let mut structural_pos = Vec::new();
            for (p, &j) in self.basis.iter().enumerate() {
                if j >= n {
                    row_has_logical[j - n] = true;
                } else {
                    structural_pos.push(p);
                }
            }
            let t_rows: Vec<usize> = (0..m).filter(|&i| !row_has_logical[i]).collect();
            let k = structural_pos.len();
            if t_rows.len() != k {
                return Err(LpError::Singular);
            }
            let mut t_index = vec![usize::MAX; m];
            for (ti, &i) in t_rows.iter().enumerate() {
                t_index[i] = ti;
            }
            // M = A[T, S], row-major k x k.
            let mut mat = vec![0.0; k * k];
            for (si, &p) in structural_pos.iter().enumerate() {
                for (i, a) in self.column(self.basis[p]) {
                    let ti = t_index[i];
                    if ti != usize::MAX {
                        mat[ti * k + si] = a;
                    }
                }
            }
            match invert_dense(&mut mat, k) {
                Ok(minv) => {
                    self.assemble_inverse(&structural_pos, &t_rows, &t_index, &minv);
                    self.updates = 0;
                    self.factored = true;
                    self.recompute_basic_values();
                    self.fresh = true;
                    return Ok(());
                }
                Err(Dependent { columns, free_rows }) => {
                    for (&si, &ti) in columns.iter().zip(&free_rows) {
                        let p = structural_pos[si];
                        let j = self.basis[p];
                        let s = if self.x[j] - self.lower[j] <= self.upper[j] - self.x[j] || !self.upper[j].is_finite() {
                            nonbasic_state(self.lower[j], self.upper[j])
                        } else {
                            VarState::Upper
                        };
                        self.state[j] = s;
                        self.x[j] = state_value(s, self.lower[j], self.upper[j]);
                        let logical = n + t_rows[ti];
                        self.basis[p] = logical;
                        self.state[logical] = VarState::Basic(p);
                    }
                    self.bland = true;
                    log::debug!("simplex: replaced {} dependent basis columns", columns.len());
                }
            }
        }
        Err(LpError::Singular)
    }

    fn assemble_inverse(&mut self, structural_pos: &[usize], t_rows: &[usize], t_index: &[usize], minv: &[f64]) {
        let (n, m) = (self.n, self.m);
        let k = structural_pos.len();
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        // Logical rows: G = A[L, S] * M^-1 (one length-k row per logical row).
        let mut g: Vec<Vec<f64>> = vec![Vec::new(); m];
        for (si, &p) in structural_pos.iter().enumerate() {
            let minv_row = &minv[si * k..(si + 1) * k];
            for (i, a) in self.column(self.basis[p]) {
                if t_index[i] != usize::MAX {
                    continue;
                }
                let row = &mut g[i];
                if row.is_empty() {
                    row.resize(k, 0.0);
                }
                for (r, &v) in row.iter_mut().zip(minv_row) {
                    *r += a * v;
                }
            }
        }
        for (si, &p) in structural_pos.iter().enumerate() {
            for (ti, &i) in t_rows.iter().enumerate() {
                self.binv[i * m + p] = minv[si * k + ti];
            }
        }
        for p in 0..m {
            let j = self.basis[p];
            if j < n {
                continue;
            }
            let i = j - n;
            self.binv[i * m + p] = -1.0;
            if !g[i].is_empty() {
                for (ti, &t) in t_rows.iter().enumerate() {
                    self.binv[t * m + p] = g[i][ti];
                }
            }
        }
    }

    fn pivot_update(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let ar = alpha[r];
        for k in 0..m {
            let col = &mut self.binv[k * m..(k + 1) * m];
            let v = col[r];
            if v == 0.0 {
                continue;
            }
            let v = v / ar;
            for (c, &a) in col.iter_mut().zip(alpha) {
                *c -= a * v;
            }
            col[r] = v;
        }
        self.updates += 1;
    }

    fn duals(&self, basic_cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let nz: Vec<(usize, f64)> =
            basic_cost.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(p, &c)| (p, c)).collect();
        (0..m)
            .map(|k| {
                let col = &self.binv[k * m..(k + 1) * m];
                nz.iter().map(|&(p, c)| col[p] * c).sum()
            })
            .collect()
    }

    fn reduced_cost(&self, j: usize, cost_j: f64, y: &[f64]) -> f64 {
        if j >= self.n {
            cost_j + y[j - self.n]
        } else {
            cost_j - self.column(j).map(|(i, a)| a * y[i]).sum::<f64>()
        }
    }

    fn objective(&self) -> f64 {
        self.objective_offset + (0..self.n).map(|j| self.cost[j] * self.x[j]).sum::<f64>()
    }

    fn total_infeasibility(&self) -> f64 {
        let tol = self.opts.feasibility_tol;
        self.basis
            .iter()
            .map(|&j| {
                let v = self.x[j];
                if v < self.lower[j] - tol {
                    self.lower[j] - v
                } else if v > self.upper[j] + tol {
                    v - self.upper[j]
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Lagrangian bound from the phase-2 duals of the current basis.
    fn dual_bound(&self) -> f64 {
        let basic_cost: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        let y = self.duals(&basic_cost);
        let tol = self.opts.optimality_tol;
        let mut bound = self.objective_offset;
        for j in 0..self.n + self.m {
            if let VarState::Basic(_) = self.state[j] {
                continue;
            }
            let d = self.reduced_cost(j, self.cost[j], &y);
            if d.abs() <= tol {
                continue;
            }
            let end = if d > 0.0 { self.lower[j] } else { self.upper[j] };
            if !end.is_finite() {
                return f64::NEG_INFINITY;
            }
            bound += d * end;
        }
        bound
    }

    fn result(&self, status: LpStatus, iterations: usize) -> LpResult {
        let feasible = matches!(status, LpStatus::Optimal | LpStatus::Unbounded)
            || self.total_infeasibility() == 0.0;
        let objective = if feasible { self.objective() } else { f64::INFINITY };
        let dual_bound = match status {
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => self.dual_bound().min(objective),
        };
        let objective = if status == LpStatus::Optimal { objective.max(dual_bound) } else { objective };
        LpResult { status, objective, values: self.x[..self.n].to_vec(), dual_bound, iterations }
    }

    /// Runs the simplex from the current basis.
    pub fn solve(&mut self) -> Result<LpResult, LpError> {
        let cap = self.opts.iteration_cap();
        let ftol = self.opts.feasibility_tol;
        let otol = self.opts.optimality_tol;
        let total = self.n + self.m;
        let mut iterations = 0usize;
        let mut degenerate = 0usize;
        let mut stalls = 0usize;
        if !self.factored {
            self.refactor()?;
        }
        loop {
            if self.updates >= REFACTOR_EVERY {
                self.refactor()?;
            }
            if cap.is_some_and(|c| iterations >= c) {
                return Ok(self.result(LpStatus::IterationLimit, iterations));
            }
            if iterations.is_multiple_of(32) {
                if let Some(deadline) = self.opts.deadline {
                    if Instant::now() >= deadline {
                        return Ok(self.result(LpStatus::IterationLimit, iterations));
                    }
                }
            }

            let mut phase_one = false;
            let basic_cost: Vec<f64> = self
                .basis
                .iter()
                .map(|&j| {
                    let v = self.x[j];
                    if v < self.lower[j] - ftol {
                        phase_one = true;
                        -1.0
                    } else if v > self.upper[j] + ftol {
                        phase_one = true;
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let basic_cost = if phase_one {
                basic_cost
            } else {
                self.basis.iter().map(|&j| self.cost[j]).collect()
            };
            let y = self.duals(&basic_cost);

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..total {
                let (lo, hi) = (self.lower[j], self.upper[j]);
                if matches!(self.state[j], VarState::Basic(_)) || lo == hi {
                    continue;
                }
                let cj = if phase_one { 0.0 } else { self.cost[j] };
                let d = self.reduced_cost(j, cj, &y);
                let attractive = match self.state[j] {
                    VarState::Lower => d < -otol,
                    VarState::Upper => d > otol,
                    _ => d.abs() > otol,
                };
                if !attractive {
                    continue;
                }
                match entering {
                    None => entering = Some((j, d)),
                    Some((_, best)) if !self.bland && d.abs() > best.abs() => entering = Some((j, d)),
                    _ => {}
                }
                if self.bland && entering.is_some() {
                    break;
                }
            }

            let Some((q, dq)) = entering else {
                if !self.fresh {
                    self.recompute_basic_values();
                    self.fresh = true;
                    continue;
                }
                let status = if phase_one { LpStatus::Infeasible } else { LpStatus::Optimal };
                return Ok(self.result(status, iterations));
            };

            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);
            let step = self.ratio_test(&alpha, dir);
            let flip = if self.lower[q].is_finite() && self.upper[q].is_finite() {
                Some(self.upper[q] - self.lower[q])
            } else {
                None
            };

            let (t, leave) = match (step, flip) {
                (Some((t, _, _)), Some(f)) if f <= t => (f, None),
                (Some((t, p, at_upper)), _) => (t, Some((p, at_upper))),
                (None, Some(f)) => (f, None),
                (None, None) => {
                    if phase_one || !self.fresh {
                        // Numerical trouble: rebuild and retry with Bland's rule.
                        stalls += 1;
                        if stalls > 3 {
                            return Err(LpError::Stalled);
                        }
                        self.bland = true;
                        self.refactor()?;
                        continue;
                    }
                    return Ok(self.result(LpStatus::Unbounded, iterations));
                }
            };

            iterations += 1;
            self.x[q] += dir * t;
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    self.x[self.basis[p]] -= dir * t * a;
                }
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 { VarState::Upper } else { VarState::Lower };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((r, at_upper)) => {
                    let out = self.basis[r];
                    if at_upper {
                        self.state[out] = VarState::Upper;
                        self.x[out] = self.upper[out];
                    } else {
                        self.state[out] = if self.lower[out].is_finite() { VarState::Lower } else { VarState::Zero };
                        self.x[out] = if self.lower[out].is_finite() { self.lower[out] } else { 0.0 };
                    }
                    self.basis[r] = q;
                    self.state[q] = VarState::Basic(r);
                    if alpha[r].abs() < PIVOT_TOL * 10.0 {
                        // Small pivot: update, then rebuild immediately.
                        self.pivot_update(r, &alpha);
                        self.refactor()?;
                    } else {
                        self.pivot_update(r, &alpha);
                    }
                }
            }
            self.fresh = false;
            if t <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    self.bland = true;
                }
            } else {
                degenerate = 0;
                self.bland = false;
            }
        }
    }

    /// Two-pass (Harris) ratio test. Returns (step, leaving position, leaves at upper).
    fn ratio_test(&self, alpha: &[f64], dir: f64) -> Option<(f64, usize, bool)> {
        let ftol = self.opts.feasibility_tol;
        // For each candidate: (strict ratio, relaxed ratio, position, leaves at upper, |rate|)
        let mut cands: Vec<(f64, f64, usize, bool, f64)> = Vec::new();
        for (p, &a) in alpha.iter().enumerate() {
            let rate = -dir * a;
            if rate.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[p];
            let (v, lo, hi) = (self.x[j], self.lower[j], self.upper[j]);
            if rate < 0.0 {
                if v < lo - ftol {
                    continue;
                }
                let (target, at_upper) = if v > hi + ftol { (hi, true) } else { (lo, false) };
                if !target.is_finite() {
                    continue;
                }
                let strict = ((v - target) / -rate).max(0.0);
                let relaxed = (v - target + ftol) / -rate;
                cands.push((strict, relaxed, p, at_upper, -rate));
            } else {
                if v > hi + ftol {
                    continue;
                }
                let (target, at_upper) = if v < lo - ftol { (lo, false) } else { (hi, true) };
                if !target.is_finite() {
                    continue;
                }
                let strict = ((target - v) / rate).max(0.0);
                let relaxed = (target - v + ftol) / rate;
                cands.push((strict, relaxed, p, at_upper, rate));
            }
        }
        if cands.is_empty() {
            return None;
        }
        if self.bland {
            let tmin = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
            let pick = cands
                .iter()
                .filter(|c| c.0 <= tmin + 1e-12)
                .min_by_key(|c| self.basis[c.2])
                .expect("non-empty");
            return Some((pick.0, pick.2, pick.3));
        }
        let bound = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let pick = cands
            .iter()
            .filter(|c| c.0 <= bound)
            .fold(None::<&(f64, f64, usize, bool, f64)>, |best, c| match best {
                Some(b) if b.4 >= c.4 => Some(b),
                _ => Some(c),
            })
            .expect("the minimizing candidate always qualifies");
        Some((pick.0, pick.2, pick.3))
    }
}

struct Dependent {
    columns: Vec<usize>,
    free_rows: Vec<usize>,
}

/// Inverts a row-major k x k matrix (consumed) with partial pivoting.
fn invert_dense(a: &mut [f64], k: usize) -> Result<Vec<f64>, Dependent> {
    // LU with row pivoting, skipping columns without a usable pivot.
    let mut perm: Vec<usize> = (0..k).collect();
    let mut pivot_row_of_col = vec![usize::MAX; k];
    let mut dependent = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let mut best = r;
        let mut best_val = 0.0;
        for i in r..k {
            let v = a[i * k + c].abs();
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        if best_val < SINGULAR_TOL || r >= k {
            dependent.push(c);
            continue;
        }
        if best != r {
            for col in 0..k {
                a.swap(r * k + col, best * k + col);
            }
            perm.swap(r, best);
        }
        let piv = a[r * k + c];
        for i in (r + 1)..k {
            let f = a[i * k + c] / piv;
            if f == 0.0 {
                continue;
            }
            a[i * k + c] = f;
            for col in (c + 1)..k {
                a[i * k + col] -= f * a[r * k + col];
            }
        }
        pivot_row_of_col[c] = r;
        r += 1;
    }
    if !dependent.is_empty() {
        let free_rows = perm[r..].to_vec();
        return Err(Dependent { columns: dependent, free_rows });
    }
    // Here column c pivots at row c, so a holds L (unit, below) and U.
    let mut inv = vec![0.0; k * k];
    let mut work = vec![0.0; k];
    for e in 0..k {
        // Solve L U z = P e_e.
        for (i, w) in work.iter_mut().enumerate() {
            *w = if perm[i] == e { 1.0 } else { 0.0 };
        }
        for i in 0..k {
            let mut s = work[i];
            for c in 0..i {
                s -= a[i * k + c] * work[c];
            }
            work[i] = s;
        }
        for i in (0..k).rev() {
            let mut s = work[i];
            for c in (i + 1)..k {
                s -= a[i * k + c] * work[c];
            }
            work[i] = s / a[i * k + i];
        }
        for i in 0..k {
            inv[i * k + e] = work[i];
        }
    }
    Ok(inv)
}

/// One-shot LP solve of `lp` (integrality ignored).
pub fn solve_lp(lp: &LinearProgram, opts: &LpOptions) -> Result<LpResult, LpError> {
    SimplexSolver::new(lp, *opts)?.solve()
}
