//! Versioned solution files: variable label -> value plus status and objective.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{variable_label, CoupleSet, VariableKey};
use crate::netgraph::BanGraph;

use super::HarnessError;

pub const SOLUTION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub format_version: u32,
    pub instance: String,
    /// `exact`, `robuband` or `oracle`.
    pub solver: String,
    pub status: String,
    /// Worst-scenario energy E (nJ/s).
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    pub gap_percent: Option<f64>,
    /// Demand-weighted energy per bit averaged over scenarios (uJ/bit).
    pub e_avg: Option<f64>,
    /// Nonzero variables only.
    pub values: BTreeMap<String, f64>,
}

impl SolutionDoc {
    /// A document without a design (infeasible, or nothing found in time).
    pub fn empty(instance: &str, solver: &str, status: &str) -> Self {
        SolutionDoc {
            format_version: SOLUTION_FORMAT_VERSION,
            instance: instance.to_string(),
            solver: solver.to_string(),
            status: status.to_string(),
            objective: None,
            best_bound: None,
            gap_percent: None,
            e_avg: None,
            values: BTreeMap::new(),
        }
    }

    /// Fills `values` (and `objective`) from a routing and relay vector.
    pub fn set_design(&mut self, graph: &BanGraph, couples: &CoupleSet, routing: &[Vec<usize>], relays: &[bool]) {
        self.values.clear();
        for (r, _) in relays.iter().enumerate().filter(|(_, &on)| on) {
            self.values.insert(variable_label(graph, &VariableKey::Relay(graph.relay_vertex(r))), 1.0);
        }
        for (c, arcs) in couples.couples.iter().zip(routing) {
            for &a in arcs {
                let arc = &graph.arcs[a];
                let key = VariableKey::Flow { b: c.b, s: c.s, tail: arc.tail, head: arc.head };
                self.values.insert(variable_label(graph, &key), 1.0);
            }
        }
        let energy = couples.scenario_energies(graph, routing).into_iter().fold(0.0, f64::max);
        self.values.insert("E".to_string(), energy);
        self.objective = Some(energy);
    }

    /// Routing (arc sets per couple) and relay vector encoded in `values`.
    /// Variables at or below 0.5 count as off.
    pub fn design(&self, graph: &BanGraph, couples: &CoupleSet) -> Result<(Vec<Vec<usize>>, Vec<bool>), HarnessError> {
        let bad = |key: &str, why: &str| HarnessError::Solution(format!("{key}: {why}"));
        let vertex = |key: &str, id: &str| graph.vertex_index(id).ok_or_else(|| bad(key, &format!("unknown device {id}")));
        let mut routing = vec![Vec::new(); couples.couples.len()];
        let mut relays = vec![false; graph.n_relays];
        for (key, &v) in &self.values {
            if key == "E" {
                continue;
            }
            let inner = key
                .strip_suffix(')')
                .and_then(|k| k.split_once('('))
                .ok_or_else(|| bad(key, "not a variable label"))?;
            let ids: Vec<&str> = inner.1.split(',').collect();
            match (inner.0, ids.as_slice()) {
                ("y", [r]) => {
                    let r = graph.relay_ordinal(vertex(key, r)?).ok_or_else(|| bad(key, "not a relay"))?;
                    relays[r] = v > 0.5;
                }
                ("x", [b, s, i, j]) => {
                    let ci = couples
                        .position(vertex(key, b)?, vertex(key, s)?)
                        .ok_or_else(|| bad(key, "not a couple with demand"))?;
                    let a = graph.find_arc(vertex(key, i)?, vertex(key, j)?).ok_or_else(|| bad(key, "no such link"))?;
                    if couples.couples[ci].local(a).is_none() {
                        return Err(bad(key, "link not usable by this couple"));
                    }
                    if v > 0.5 {
                        routing[ci].push(a);
                    }
                }
                _ => return Err(bad(key, "not a variable label")),
            }
        }
        for arcs in &mut routing {
            arcs.sort_unstable();
        }
        Ok((routing, relays))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution documents always serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let doc: SolutionDoc = serde_json::from_str(text).map_err(|e| HarnessError::Solution(e.to_string()))?;
        if doc.format_version != SOLUTION_FORMAT_VERSION {
            return Err(HarnessError::Solution(format!("unsupported format_version {}", doc.format_version)));
        }
        Ok(doc)
    }
}
