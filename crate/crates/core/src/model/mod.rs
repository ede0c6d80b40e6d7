//! Binary linear programs for BAN design (nominal, robust, and the
//! hamming-restricted neighborhood program), plus solution evaluation and
//! feasibility checking.

mod mps;
mod program;

use std::collections::VecDeque;

use thiserror::Error;

use crate::instance::{BanInstance, Scenario};
use crate::mip::{solve_mip, MipError, MipOptions, MipResult};
use crate::netgraph::BanGraph;

pub use mps::write_mps;
pub use program::{Constraint, LinearProgram, ProgramError, Sense, Variable, VariableKey};

/// Absolute row-activity tolerance used when checking candidate solutions.
pub const FEAS_TOL: f64 = 1e-6;
/// Distance to the nearest integer tolerated for binary variables.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("couple ({biosensor}, {sink}) has positive demand but no path")]
    Unreachable { biosensor: String, sink: String },
    #[error("no scenarios given")]
    NoScenarios,
    #[error("routing is incomplete: couple ({biosensor}, {sink}) has no flow")]
    IncompleteRouting { biosensor: String, sink: String },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// A biosensor-sink couple with positive demand in at least one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Couple {
    pub b: usize,
    pub s: usize,
    /// Arcs usable by this couple, ascending.
    pub arcs: Vec<usize>,
    /// Rate per scenario, bit/s.
    pub rates: Vec<f64>,
}

impl Couple {
    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }

    /// Position of `arc` within `self.arcs`.
    pub fn local(&self, arc: usize) -> Option<usize> {
        self.arcs.binary_search(&arc).ok()
    }
}

/// The couple set C together with per-scenario rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupleSet {
    pub couples: Vec<Couple>,
    pub scenario_ids: Vec<String>,
}

impl CoupleSet {
    pub fn new(graph: &BanGraph, scenarios: &[Scenario]) -> Self {
        let mut couples = Vec::new();
        for b in graph.biosensors() {
            for s in graph.sinks() {
                let (bid, sid) = (&graph.vertices[b].id, &graph.vertices[s].id);
                let rates: Vec<f64> = scenarios.iter().map(|sc| sc.rate(bid, sid)).collect();
                if rates.iter().any(|&d| d > 0.0) {
                    couples.push(Couple { b, s, arcs: graph.couple_arcs(b, s), rates });
                }
            }
        }
        CoupleSet { couples, scenario_ids: scenarios.iter().map(|s| s.id.clone()).collect() }
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenario_ids.len()
    }

    pub fn position(&self, b: usize, s: usize) -> Option<usize> {
        self.couples.iter().position(|c| c.b == b && c.s == s)
    }

    fn check_reachable(&self, graph: &BanGraph) -> Result<(), ModelError> {
        for c in &self.couples {
            if !graph.reachable(c.b, c.s) {
                return Err(ModelError::Unreachable {
                    biosensor: graph.vertices[c.b].id.clone(),
                    sink: graph.vertices[c.s].id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Energy per scenario (nJ/s) of routing each couple on the arcs in `x`.
    pub fn scenario_energies(&self, graph: &BanGraph, x: &[Vec<usize>]) -> Vec<f64> {
        (0..self.n_scenarios())
            .map(|k| {
                self.couples
                    .iter()
                    .zip(x)
                    .map(|(c, arcs)| c.rates[k] * arcs.iter().map(|&a| graph.arcs[a].e_coeff).sum::<f64>())
                    .sum()
            })
            .collect()
    }

    /// Worst-scenario energy of a complete routing: max over scenarios of
    /// sum of E_ij * d * x.
    pub fn evaluate_energy(&self, graph: &BanGraph, x: &[Vec<usize>]) -> Result<f64, ModelError> {
        for (ci, c) in self.couples.iter().enumerate() {
            if x.get(ci).is_none_or(|arcs| arcs.is_empty()) {
                return Err(ModelError::IncompleteRouting {
                    biosensor: graph.vertices[c.b].id.clone(),
                    sink: graph.vertices[c.s].id.clone(),
                });
            }
        }
        Ok(self.scenario_energies(graph, x).into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Relays (by ordinal) touched by any arc in `x`.
    pub fn derive_relays(graph: &BanGraph, x: &[Vec<usize>]) -> Vec<bool> {
        let mut y = vec![false; graph.n_relays];
        for &a in x.iter().flatten() {
            for v in [graph.arcs[a].tail, graph.arcs[a].head] {
                if let Some(r) = graph.relay_ordinal(v) {
                    y[r] = true;
                }
            }
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Nominal,
    Robust,
}

/// A materialized BAN program with the index bookkeeping needed to move
/// between routings and variable vectors.
#[derive(Debug, Clone)]
pub struct BandModel {
    pub lp: LinearProgram,
    pub kind: ModelKind,
    pub couples: CoupleSet,
    /// Flow variable index per couple, aligned with `Couple::arcs`.
    pub flow_vars: Vec<Vec<usize>>,
    /// y variable index per relay ordinal.
    pub relay_vars: Vec<usize>,
    pub energy_var: Option<usize>,
    /// One energy-bound row per scenario (robust models only).
    pub energy_rows: Vec<usize>,
    pub budget: usize,
}

fn build(graph: &BanGraph, scenarios: &[Scenario], budget: usize, kind: ModelKind) -> Result<BandModel, ModelError> {
    if scenarios.is_empty() {
        return Err(ModelError::NoScenarios);
    }
    let couples = CoupleSet::new(graph, scenarios);
    couples.check_reachable(graph)?;
    let mut lp = LinearProgram::new();

    // y before x so that ties in branching prefer the structural decisions.
    let relay_vars: Vec<usize> = graph
        .relays()
        .map(|r| lp.add_binary(VariableKey::Relay(r)))
        .collect::<Result<_, _>>()?;
    let mut flow_vars = Vec::with_capacity(couples.couples.len());
    for c in &couples.couples {
        let vars = c
            .arcs
            .iter()
            .map(|&a| {
                let arc = &graph.arcs[a];
                lp.add_binary(VariableKey::Flow { b: c.b, s: c.s, tail: arc.tail, head: arc.head })
            })
            .collect::<Result<Vec<_>, _>>()?;
        flow_vars.push(vars);
    }
    let energy_var = match kind {
        ModelKind::Robust => Some(lp.add_variable(VariableKey::EnergyBound, 0.0, f64::INFINITY, false)?),
        ModelKind::Nominal => None,
    };

    let id = |v: usize| graph.vertices[v].id.as_str();
    for (ci, c) in couples.couples.iter().enumerate() {
        let var_of = |a: usize| flow_vars[ci][c.local(a).expect("couple arc")];
        let usable = |a: &usize| c.local(*a).is_some();
        let out_b: Vec<_> = graph.out_arcs[c.b].iter().filter(|a| usable(a)).map(|&a| (var_of(a), -1.0)).collect();
        lp.add_constraint(format!("bio[{},{}]", id(c.b), id(c.s)), out_b, Sense::Eq, -1.0);
        for r in graph.relays() {
            let mut row: Vec<(usize, f64)> =
                graph.in_arcs[r].iter().filter(|a| usable(a)).map(|&a| (var_of(a), 1.0)).collect();
            row.extend(graph.out_arcs[r].iter().filter(|a| usable(a)).map(|&a| (var_of(a), -1.0)));
            lp.add_constraint(format!("relay[{},{},{}]", id(c.b), id(c.s), id(r)), row, Sense::Eq, 0.0);
        }
        let in_s: Vec<_> = graph.in_arcs[c.s].iter().filter(|a| usable(a)).map(|&a| (var_of(a), 1.0)).collect();
        lp.add_constraint(format!("sink[{},{}]", id(c.b), id(c.s)), in_s, Sense::Eq, 1.0);
    }

    for (k, sc) in scenarios.iter().enumerate() {
        if kind == ModelKind::Nominal && k > 0 {
            break;
        }
        for r in graph.relays() {
            let ordinal = r - graph.n_biosensors;
            let mut row = Vec::new();
            for (ci, c) in couples.couples.iter().enumerate() {
                let d = c.rates[k];
                if d == 0.0 {
                    continue;
                }
                for &a in &graph.out_arcs[r] {
                    if let Some(l) = c.local(a) {
                        row.push((flow_vars[ci][l], d));
                    }
                }
            }
            row.push((relay_vars[ordinal], -graph.relay_capacity[ordinal]));
            let name = match kind {
                ModelKind::Nominal => format!("cap[{}]", id(r)),
                ModelKind::Robust => format!("cap[{},{}]", id(r), sc.id),
            };
            lp.add_constraint(name, row, Sense::Le, 0.0);
        }
    }

    lp.add_constraint("budget", relay_vars.iter().map(|&j| (j, 1.0)).collect(), Sense::Le, budget as f64);

    let energy_terms = |k: usize| -> Vec<(usize, f64)> {
        let mut terms = Vec::new();
        for (ci, c) in couples.couples.iter().enumerate() {
            let d = c.rates[k];
            if d == 0.0 {
                continue;
            }
            for (l, &a) in c.arcs.iter().enumerate() {
                terms.push((flow_vars[ci][l], graph.arcs[a].e_coeff * d));
            }
        }
        terms
    };
    let mut energy_rows = Vec::new();
    match energy_var {
        Some(e) => {
            for (k, sc) in scenarios.iter().enumerate() {
                let mut row = energy_terms(k);
                row.push((e, -1.0));
                energy_rows.push(lp.add_constraint(format!("energy[{}]", sc.id), row, Sense::Le, 0.0));
            }
            lp.objective = vec![(e, 1.0)];
        }
        None => lp.objective = energy_terms(0),
    }

    Ok(BandModel { lp, kind, couples, flow_vars, relay_vars, energy_var, energy_rows, budget })
}

/// Nominal BAND program for a single rate vector.
pub fn build_band_blp(graph: &BanGraph, rates: &Scenario, budget: usize) -> Result<BandModel, ModelError> {
    build(graph, std::slice::from_ref(rates), budget, ModelKind::Nominal)
}

/// Min-max robust counterpart over `scenarios`.
pub fn build_rob_band_blp(graph: &BanGraph, scenarios: &[Scenario], budget: usize) -> Result<BandModel, ModelError> {
    build(graph, scenarios, budget, ModelKind::Robust)
}

/// Neighborhood program: `base` plus the hamming row around `anchor_y` and,
/// when an incumbent value is given, the strict-improvement row.
pub fn build_mod_rob(base: &BandModel, anchor_y: &[bool], gamma: usize, best_energy: Option<f64>, epsilon: f64) -> BandModel {
    let mut model = base.clone();
    let mut row = Vec::with_capacity(anchor_y.len());
    let mut ones = 0usize;
    for (&j, &on) in base.relay_vars.iter().zip(anchor_y) {
        if on {
            ones += 1;
            row.push((j, -1.0));
        } else {
            row.push((j, 1.0));
        }
    }
    model.lp.add_constraint("hamming", row, Sense::Le, gamma as f64 - ones as f64);
    if let Some(best) = best_energy {
        let e = base.energy_var.expect("neighborhood programs extend the robust model");
        model.lp.add_constraint("improve", vec![(e, 1.0)], Sense::Le, best - epsilon);
    }
    model
}

/// Human-readable name of a variable: `y(r03)`, `x(b0,s0,b0,r03)` or `E`.
pub fn variable_label(graph: &BanGraph, key: &VariableKey) -> String {
    let id = |v: usize| graph.vertices[v].id.as_str();
    match *key {
        VariableKey::Relay(r) => format!("y({})", id(r)),
        VariableKey::Flow { b, s, tail, head } => format!("x({},{},{},{})", id(b), id(s), id(tail), id(head)),
        VariableKey::EnergyBound => "E".to_string(),
        VariableKey::Aux(j) => format!("v{j}"),
    }
}

/// Number of relay decisions that differ between two relay vectors.
pub fn hamming_distance(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

impl BandModel {
    /// Variable vector for routing `x` (arc sets per couple) and relays `y`.
    /// E is set to the worst-scenario energy.
    pub fn encode(&self, graph: &BanGraph, x: &[Vec<usize>], y: &[bool]) -> Vec<f64> {
        let mut values = vec![0.0; self.lp.n_variables()];
        for (ci, arcs) in x.iter().enumerate() {
            for &a in arcs {
                if let Some(l) = self.couples.couples[ci].local(a) {
                    values[self.flow_vars[ci][l]] = 1.0;
                }
            }
        }
        for (&j, &on) in self.relay_vars.iter().zip(y) {
            values[j] = if on { 1.0 } else { 0.0 };
        }
        if let Some(e) = self.energy_var {
            values[e] = self.couples.scenario_energies(graph, x).into_iter().fold(0.0, f64::max);
        }
        values
    }

    /// Arc sets (value > 0.5) per couple and relay vector from a variable vector.
    pub fn decode(&self, values: &[f64]) -> (Vec<Vec<usize>>, Vec<bool>) {
        let x = self
            .couples
            .couples
            .iter()
            .zip(&self.flow_vars)
            .map(|(c, vars)| c.arcs.iter().zip(vars).filter(|(_, &j)| values[j] > 0.5).map(|(&a, _)| a).collect())
            .collect();
        let y = self.relay_vars.iter().map(|&j| values[j] > 0.5).collect();
        (x, y)
    }

    /// Rounding proposal for branch and bound: each couple takes the path
    /// minimizing the sum of (1 - x) over arcs its node bounds still allow,
    /// and the relays on those paths are switched on.
    pub fn round(&self, graph: &BanGraph, values: &[f64], lower: &[f64], upper: &[f64]) -> Option<Vec<f64>> {
        let relay_allowed: Vec<bool> = self.relay_vars.iter().map(|&j| upper[j] > 0.5).collect();
        let vertex_ok = |v: usize| graph.relay_ordinal(v).is_none_or(|r| relay_allowed[r]);
        let mut x = Vec::with_capacity(self.couples.couples.len());
        for (c, vars) in self.couples.couples.iter().zip(&self.flow_vars) {
            let weight = |a: usize| {
                let j = vars[c.local(a)?];
                let arc = &graph.arcs[a];
                (upper[j] > 0.5 && vertex_ok(arc.tail) && vertex_ok(arc.head))
                    .then(|| (1.0 - values[j]).max(0.0) + 1e-9)
            };
            x.push(graph.shortest_path(c.b, c.s, weight)?);
        }
        let mut y = CoupleSet::derive_relays(graph, &x);
        for (on, &j) in y.iter_mut().zip(&self.relay_vars) {
            *on |= lower[j] > 0.5;
        }
        Some(self.encode(graph, &x, &y))
    }

    /// Exact solve with the rounding heuristic attached.
    pub fn solve(&self, graph: &BanGraph, opts: &MipOptions) -> Result<MipResult, MipError> {
        let hook = |v: &[f64], lo: &[f64], hi: &[f64]| self.round(graph, v, lo, hi);
        solve_mip(&self.lp, opts, Some(&hook))
    }

    pub fn evaluate_energy(&self, graph: &BanGraph, x: &[Vec<usize>]) -> Result<f64, ModelError> {
        self.couples.evaluate_energy(graph, x)
    }
}

/// Ordered b->s path contained in `arcs`, if any.
pub fn extract_path(graph: &BanGraph, b: usize, s: usize, arcs: &[usize]) -> Option<Vec<usize>> {
    let mut pred: Vec<Option<usize>> = vec![None; graph.n_vertices()];
    let mut seen = vec![false; graph.n_vertices()];
    seen[b] = true;
    let mut queue = VecDeque::from([b]);
    while let Some(v) = queue.pop_front() {
        if v == s {
            let mut path = Vec::new();
            let mut cur = s;
            while let Some(a) = pred[cur] {
                path.push(a);
                cur = graph.arcs[a].tail;
            }
            path.reverse();
            return Some(path);
        }
        for &a in arcs.iter().filter(|&&a| graph.arcs[a].tail == v) {
            let h = graph.arcs[a].head;
            if !seen[h] {
                seen[h] = true;
                pred[h] = Some(a);
                queue.push_back(h);
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityViolation {
    pub relay: String,
    pub scenario: String,
    pub load: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservationViolation {
    pub biosensor: String,
    pub sink: String,
    pub vertex: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationReport {
    pub capacity_violations: Vec<CapacityViolation>,
    /// (active relays, U) when the budget is exceeded.
    pub budget_violation: Option<(usize, usize)>,
    pub conservation_violations: Vec<ConservationViolation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.capacity_violations.is_empty() && self.budget_violation.is_none() && self.conservation_violations.is_empty()
    }
}

/// Checks a routing (arc set per couple of `CoupleSet::new(graph, &instance.scenarios)`)
/// and relay vector against every robust constraint family.
pub fn check_feasibility(graph: &BanGraph, instance: &BanInstance, x: &[Vec<usize>], y: &[bool]) -> ViolationReport {
    let couples = CoupleSet::new(graph, &instance.scenarios);
    check_with(graph, &couples, instance.relay_budget, x, y)
}

pub fn check_with(graph: &BanGraph, couples: &CoupleSet, budget: usize, x: &[Vec<usize>], y: &[bool]) -> ViolationReport {
    let mut report = ViolationReport::default();
    let empty = Vec::new();
    for (ci, c) in couples.couples.iter().enumerate() {
        let arcs = x.get(ci).unwrap_or(&empty);
        let mut balance = vec![0i64; graph.n_vertices()];
        for &a in arcs {
            balance[graph.arcs[a].tail] -= 1;
            balance[graph.arcs[a].head] += 1;
        }
        for (v, &bal) in balance.iter().enumerate() {
            let expected = if v == c.b {
                -1
            } else if v == c.s {
                1
            } else {
                0
            };
            if bal != expected {
                report.conservation_violations.push(ConservationViolation {
                    biosensor: graph.vertices[c.b].id.clone(),
                    sink: graph.vertices[c.s].id.clone(),
                    vertex: graph.vertices[v].id.clone(),
                });
            }
        }
    }
    for r in graph.relays() {
        let ordinal = r - graph.n_biosensors;
        let capacity = if y.get(ordinal).copied().unwrap_or(false) { graph.relay_capacity[ordinal] } else { 0.0 };
        for (k, sid) in couples.scenario_ids.iter().enumerate() {
            let load: f64 = couples
                .couples
                .iter()
                .enumerate()
                .map(|(ci, c)| {
                    let arcs = x.get(ci).unwrap_or(&empty);
                    c.rates[k] * arcs.iter().filter(|&&a| graph.arcs[a].tail == r).count() as f64
                })
                .sum();
            if load > capacity + FEAS_TOL {
                report.capacity_violations.push(CapacityViolation {
                    relay: graph.vertices[r].id.clone(),
                    scenario: sid.clone(),
                    load,
                    capacity,
                });
            }
        }
    }
    let active = y.iter().filter(|&&on| on).count();
    if active > budget {
        report.budget_violation = Some((active, budget));
    }
    report
}

#[cfg(test)]
mod tests;
