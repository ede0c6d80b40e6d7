//! LP-based branch and bound for programs with integer variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lp::{LpError, LpOptions, LpResult, LpStatus, SimplexSolver};
use crate::model::{LinearProgram, FEAS_TOL, INT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct MipOptions {
    pub time_limit: Option<Duration>,
    /// Relative gap at which the search stops with `Optimal`.
    pub gap_target: f64,
    pub node_limit: Option<usize>,
    /// Return as soon as any integer-feasible point is known.
    pub stop_at_first_feasible: bool,
    /// Accepted for interface stability; the search itself is deterministic.
    pub seed: u64,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions { time_limit: None, gap_target: 1e-8, node_limit: None, stop_at_first_feasible: false, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    /// Incumbent proven optimal within the gap target.
    Optimal,
    /// A limit was hit with an incumbent in hand.
    Feasible,
    Infeasible,
    /// A limit was hit before any incumbent was found.
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipResult {
    pub status: MipStatus,
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    /// Global lower bound at termination.
    pub best_bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl MipResult {
    /// Relative gap in percent between incumbent and bound, if an incumbent exists.
    pub fn gap_percent(&self) -> Option<f64> {
        self.objective.map(|z| crate::harness::gap_percent(z, self.best_bound))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MipError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP relaxation is unbounded")]
    Unbounded,
}

/// Primal heuristic: given a relaxation point and the node's structural
/// bounds, propose a full variable vector. Integer entries of the proposal are
/// fixed and the continuous part is re-optimized before it is accepted.
pub type Heuristic<'a> = dyn Fn(&[f64], &[f64], &[f64]) -> Option<Vec<f64>> + Sync + 'a;

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    depth: usize,
    order: usize,
    changes: Vec<(usize, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: the smallest bound is "greatest"; ties prefer deeper, then older.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.order.cmp(&self.order))
    }
}

struct Search<'a> {
    lp: &'a LinearProgram,
    opts: &'a MipOptions,
    solver: SimplexSolver,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    touched: Vec<usize>,
    integer: Vec<usize>,
    incumbent: Option<(f64, Vec<f64>)>,
    lp_iterations: usize,
    deadline: Option<Instant>,
}

impl<'a> Search<'a> {
    fn limit_reached(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn prune_threshold(&self) -> f64 {
        match &self.incumbent {
            Some((z, _)) => z - (self.opts.gap_target * z.abs()).max(1e-9),
            None => f64::INFINITY,
        }
    }

    fn apply(&mut self, changes: &[(usize, f64, f64)]) {
        for j in std::mem::take(&mut self.touched) {
            self.solver.set_bounds(j, self.root_lower[j], self.root_upper[j]);
        }
        for &(j, lo, hi) in changes {
            self.solver.set_bounds(j, lo, hi);
            self.touched.push(j);
        }
    }

    fn solve_node(&mut self) -> Result<LpResult, MipError> {
        self.solver.opts.deadline = self.deadline;
        let r = self.solver.solve()?;
        self.lp_iterations += r.iterations;
        if r.status == LpStatus::Unbounded {
            return Err(MipError::Unbounded);
        }
        Ok(r)
    }

    fn most_fractional(&self, values: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.integer {
            let f = values[j] - values[j].floor();
            let score = f.min(1.0 - f);
            if score <= INT_TOL {
                continue;
            }
            if best.is_none_or(|(_, s)| score > s + 1e-12) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    fn offer(&mut self, values: Vec<f64>, objective: f64) -> bool {
        if self.incumbent.as_ref().is_some_and(|(z, _)| *z <= objective) {
            return false;
        }
        log::debug!("mip: new incumbent {objective}");
        self.incumbent = Some((objective, values));
        true
    }

    /// Fixes the integer part of `candidate` and re-optimizes the rest.
    fn polish(&mut self, candidate: &[f64]) -> Result<bool, MipError> {
        if candidate.len() != self.lp.n_variables() {
            return Ok(false);
        }
        let mut fixed = self.lp.clone();
        for &j in &self.integer {
            let v = candidate[j].round();
            if v < fixed.variables[j].lower - INT_TOL || v > fixed.variables[j].upper + INT_TOL {
                return Ok(false);
            }
            fixed.variables[j].lower = v;
            fixed.variables[j].upper = v;
        }
        let r = SimplexSolver::new(&fixed, LpOptions { deadline: self.deadline, ..Default::default() })?.solve()?;
        self.lp_iterations += r.iterations;
        if r.status != LpStatus::Optimal || !self.lp.is_feasible(&r.values, FEAS_TOL, INT_TOL) {
            return Ok(false);
        }
        let z = self.lp.objective_value(&r.values);
        Ok(self.offer(r.values, z))
    }

    fn accept_integral(&mut self, values: &[f64]) -> Result<bool, MipError> {
        let mut v = values.to_vec();
        for &j in &self.integer {
            v[j] = v[j].round();
        }
        if self.lp.is_feasible(&v, FEAS_TOL, INT_TOL) {
            let z = self.lp.objective_value(&v);
            return Ok(self.offer(v, z));
        }
        self.polish(values)
    }
}

/// Minimizes `lp` honoring integrality, optionally seeded with a primal heuristic.
pub fn solve_mip(lp: &LinearProgram, opts: &MipOptions, heuristic: Option<&Heuristic<'_>>) -> Result<MipResult, MipError> {
    let start = Instant::now();
    let deadline = opts.time_limit.map(|t| start + t);
    let solver = SimplexSolver::new(lp, LpOptions { deadline, ..Default::default() })?;
    let root_lower: Vec<f64> = lp.variables.iter().map(|v| v.lower).collect();
    let root_upper: Vec<f64> = lp.variables.iter().map(|v| v.upper).collect();
    let integer = lp.variables.iter().enumerate().filter(|(_, v)| v.integer).map(|(j, _)| j).collect();
    let mut search = Search {
        lp,
        opts,
        solver,
        root_lower,
        root_upper,
        touched: Vec::new(),
        integer,
        incumbent: None,
        lp_iterations: 0,
        deadline,
    };

    let mut heap = BinaryHeap::new();
    let mut next_dive: Option<Node> = Some(Node { bound: f64::NEG_INFINITY, depth: 0, order: 0, changes: Vec::new() });
    let mut order = 1usize;
    let mut nodes = 0usize;
    let mut limited = false;

    let finish = |search: Search, heap: &BinaryHeap<Node>, limited: bool, nodes: usize, open_bound: f64| {
        let heap_bound = heap.iter().map(|n| n.bound).fold(open_bound, f64::min);
        let (status, objective, values, best_bound) = match search.incumbent {
            Some((z, v)) => {
                let bound = heap_bound.min(z);
                let closed = crate::harness::gap_fraction(z, bound) <= search.opts.gap_target;
                let status = if limited && !closed { MipStatus::Feasible } else { MipStatus::Optimal };
                (status, Some(z), Some(v), bound)
            }
            None if limited => (MipStatus::TimeLimit, None, None, heap_bound),
            None => (MipStatus::Infeasible, None, None, f64::INFINITY),
        };
        MipResult { status, objective, values, best_bound, nodes, lp_iterations: search.lp_iterations }
    };

    loop {
        if search.incumbent.is_some() && opts.stop_at_first_feasible {
            limited = true;
            let open = next_dive.as_ref().map_or(f64::INFINITY, |n| n.bound);
            return Ok(finish(search, &heap, limited, nodes, open));
        }
        let node = match next_dive.take() {
            Some(n) => n,
            None => match heap.pop() {
                Some(n) => n,
                None => break,
            },
        };
        if node.bound >= search.prune_threshold() {
            continue;
        }
        if let Some((z, _)) = &search.incumbent {
            let global = heap.iter().map(|n| n.bound).fold(node.bound, f64::min);
            if crate::harness::gap_fraction(*z, global) <= opts.gap_target {
                heap.push(node);
                break;
            }
        }
        if search.limit_reached() || opts.node_limit.is_some_and(|l| nodes >= l) {
            limited = true;
            heap.push(node);
            break;
        }
        nodes += 1;
        search.apply(&node.changes);
        let r = search.solve_node()?;
        match r.status {
            LpStatus::Infeasible => {
                log::trace!("mip node {nodes} depth {} infeasible", node.depth);
                continue;
            }
            LpStatus::IterationLimit => {
                limited = true;
                heap.push(node);
                break;
            }
            _ => {}
        }
        let bound = r.objective.max(node.bound);
        log::trace!("mip node {nodes} depth {} bound {bound} iters {}", node.depth, r.iterations);
        if bound >= search.prune_threshold() {
            continue;
        }
        let branch_var = search.most_fractional(&r.values);
        let Some(j) = branch_var else {
            search.accept_integral(&r.values)?;
            continue;
        };
        if let Some(h) = heuristic {
            if nodes == 1 || nodes.is_multiple_of(25) || search.incumbent.is_none() && nodes.is_multiple_of(5) {
                let lower: Vec<f64> = (0..lp.n_variables()).map(|k| search.solver.bounds(k).0).collect();
                let upper: Vec<f64> = (0..lp.n_variables()).map(|k| search.solver.bounds(k).1).collect();
                if let Some(candidate) = h(&r.values, &lower, &upper) {
                    search.polish(&candidate)?;
                }
            }
        }
        if bound >= search.prune_threshold() {
            continue;
        }
        let v = r.values[j];
        let (lo, hi) = search.solver.bounds(j);
        let mut down = node.changes.clone();
        down.push((j, lo, v.floor()));
        let mut up = node.changes;
        up.push((j, v.ceil(), hi));
        let make = |changes, order| Node { bound, depth: node.depth + 1, order, changes };
        let (first, second) = if v - v.floor() >= 0.5 { (up, down) } else { (down, up) };
        let first = make(first, order);
        let second = make(second, order + 1);
        order += 2;
        if search.incumbent.is_none() {
            next_dive = Some(first);
        } else {
            heap.push(first);
        }
        heap.push(second);
    }
    Ok(finish(search, &heap, limited, nodes, f64::INFINITY))
}
