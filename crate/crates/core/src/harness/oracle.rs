use crate::instance::BanInstance;
use crate::model::{CoupleSet, FEAS_TOL};
use crate::netgraph::{build_graph, BanGraph};

use super::HarnessError;

/// Largest number of routing combinations the brute force will enumerate.
pub const MAX_COMBINATIONS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Worst-scenario energy, nJ/s.
    pub energy: f64,
    /// Arc path per couple (couple order of `CoupleSet::new`).
    pub routing: Vec<Vec<usize>>,
    /// Activated relays by ordinal.
    pub relays: Vec<bool>,
    pub combinations: u64,
}

/// All simple b->s paths over `arcs`, as arc sequences, in DFS order.
pub fn simple_paths(graph: &BanGraph, b: usize, s: usize, arcs: &[usize]) -> Vec<Vec<usize>> {
    fn dfs(
        graph: &BanGraph,
        v: usize,
        s: usize,
        allowed: &[bool],
        on_path: &mut [bool],
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if v == s {
            out.push(path.clone());
            return;
        }
        for &a in &graph.out_arcs[v] {
            let h = graph.arcs[a].head;
            if !allowed[a] || on_path[h] {
                continue;
            }
            on_path[h] = true;
            path.push(a);
            dfs(graph, h, s, allowed, on_path, path, out);
            path.pop();
            on_path[h] = false;
        }
    }
    let mut allowed = vec![false; graph.arcs.len()];
    for &a in arcs {
        allowed[a] = true;
    }
    let mut on_path = vec![false; graph.n_vertices()];
    on_path[b] = true;
    let mut out = Vec::new();
    dfs(graph, b, s, &allowed, &mut on_path, &mut Vec::new(), &mut out);
    out
}

/// Exact optimum of the robust design problem by exhaustive enumeration of
/// one simple path per couple. `Ok(None)` means no feasible routing exists.
pub fn brute_force_optimum(instance: &BanInstance) -> Result<Option<OracleSolution>, HarnessError> {
    let graph = build_graph(instance)?;
    let couples = CoupleSet::new(&graph, &instance.scenarios);
    let paths: Vec<Vec<Vec<usize>>> =
        couples.couples.iter().map(|c| simple_paths(&graph, c.b, c.s, &c.arcs)).collect();
    let total: u128 = paths.iter().map(|p| p.len() as u128).product();
    if total > MAX_COMBINATIONS {
        return Err(HarnessError::TooLarge { combinations: total, limit: MAX_COMBINATIONS });
    }
    if total == 0 {
        return Ok(None);
    }

    let n_scen = couples.n_scenarios();
    // Per couple and path: relays the path leaves from, energy per unit demand.
    let summaries: Vec<Vec<(Vec<usize>, f64)>> = paths
        .iter()
        .map(|ps| {
            ps.iter()
                .map(|p| {
                    let relays = p.iter().filter_map(|&a| graph.relay_ordinal(graph.arcs[a].tail)).collect();
                    let e = p.iter().map(|&a| graph.arcs[a].e_coeff).sum();
                    (relays, e)
                })
                .collect()
        })
        .collect();

    let mut choice = vec![0usize; paths.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut combinations = 0u64;
    let mut load = vec![0.0; graph.n_relays * n_scen];
    loop {
        combinations += 1;
        load.iter_mut().for_each(|l| *l = 0.0);
        let mut active = vec![false; graph.n_relays];
        let mut energy = vec![0.0; n_scen];
        for (ci, &k) in choice.iter().enumerate() {
            let (relays, e) = &summaries[ci][k];
            let rates = &couples.couples[ci].rates;
            for &r in relays {
                active[r] = true;
                for (sc, &d) in rates.iter().enumerate() {
                    load[r * n_scen + sc] += d;
                }
            }
            for (sc, &d) in rates.iter().enumerate() {
                energy[sc] += d * e;
            }
        }
        let within_budget = active.iter().filter(|&&a| a).count() <= instance.relay_budget;
        let within_capacity = (0..graph.n_relays)
            .all(|r| (0..n_scen).all(|sc| load[r * n_scen + sc] <= graph.relay_capacity[r] + FEAS_TOL));
        if within_budget && within_capacity {
            let worst = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if best.as_ref().is_none_or(|(b, _)| worst < *b) {
                best = Some((worst, choice.clone()));
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == choice.len() {
                return Ok(best.map(|(energy, choice)| {
                    let routing: Vec<Vec<usize>> =
                        choice.iter().enumerate().map(|(ci, &k)| paths[ci][k].clone()).collect();
                    let relays = CoupleSet::derive_relays(&graph, &routing);
                    OracleSolution { energy, routing, relays, combinations }
                }));
            }
            choice[i] += 1;
            if choice[i] < paths[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}
