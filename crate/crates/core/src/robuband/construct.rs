use rand::Rng;

use crate::lp::{LpOptions, LpStatus, SimplexSolver};
use crate::model::Couple;
use crate::netgraph::BanGraph;

use super::pheromone::PheromoneTable;
use super::{Context, RobuParams};

/// Arcs with relaxation value at or below this are outside the support graph.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Partial or complete assignment of one path per couple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingState {
    /// Ordered arc path per couple, `None` while unassigned.
    pub assigned: Vec<Option<Vec<usize>>>,
    /// Unassigned couples in processing order.
    pub remaining: Vec<usize>,
}

impl RoutingState {
    pub fn new(order: &[usize]) -> Self {
        RoutingState { assigned: vec![None; order.len()], remaining: order.to_vec() }
    }

    pub fn assign(&mut self, ci: usize, path: Vec<usize>) {
        self.remaining.retain(|&c| c != ci);
        self.assigned[ci] = Some(path);
    }

    pub fn is_complete(&self) -> bool {
        self.remaining.is_empty()
    }

    /// Arc paths per couple once every couple is assigned.
    pub fn routing(&self) -> Option<Vec<Vec<usize>>> {
        self.assigned.iter().cloned().collect()
    }
}

/// Couples by descending maximum rate; ties by biosensor id, then sink id.
pub fn couple_order(graph: &BanGraph, couples: &[Couple]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..couples.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&couples[a], &couples[b]);
        cb.max_rate()
            .total_cmp(&ca.max_rate())
            .then_with(|| graph.vertices[ca.b].id.cmp(&graph.vertices[cb.b].id))
            .then_with(|| graph.vertices[ca.s].id.cmp(&graph.vertices[cb.s].id))
    });
    order
}

/// Up to `limit` distinct b->s paths in the support graph of `couple`.
/// `support` holds the relaxation value per local arc. Each round takes the
/// shortest path (weights 1 - x, or x when `literal_weights`) and then deletes
/// that path's arc with the lowest support, stopping early on disconnection.
pub fn candidate_paths(
    graph: &BanGraph,
    couple: &Couple,
    support: &[f64],
    limit: usize,
    literal_weights: bool,
) -> Vec<Vec<usize>> {
    let mut alive: Vec<bool> = support.iter().map(|&x| x > SUPPORT_TOL).collect();
    let mut paths = Vec::new();
    while paths.len() < limit {
        let weight = |a: usize| {
            let l = couple.local(a)?;
            alive[l].then(|| if literal_weights { support[l] } else { (1.0 - support[l]).max(0.0) })
        };
        let Some(path) = graph.shortest_path(couple.b, couple.s, weight) else { break };
        let weakest = path
            .iter()
            .map(|&a| couple.local(a).expect("support arcs belong to the couple"))
            .min_by(|&p, &q| support[p].total_cmp(&support[q]).then(p.cmp(&q)))
            .expect("a b->s path has at least one arc");
        alive[weakest] = false;
        paths.push(path);
    }
    paths
}

/// Samples a candidate index with probability alpha * tau_hat + (1 - alpha) * eta_hat.
/// `tau_scores` are summed path trails; `bounds` are relaxation lower bounds
/// (lower is better, `+inf` for candidates whose relaxation is infeasible).
pub fn selection_probabilities(tau_scores: &[f64], bounds: &[f64], alpha: f64) -> Vec<f64> {
    let n = tau_scores.len();
    let normalize = |v: Vec<f64>| -> Option<Vec<f64>> {
        let total: f64 = v.iter().sum();
        (total > 0.0 && total.is_finite()).then(|| v.iter().map(|x| x / total).collect())
    };
    let uniform = vec![1.0 / n as f64; n];
    let tau_hat = normalize(tau_scores.to_vec()).unwrap_or_else(|| uniform.clone());
    let b_max = bounds.iter().copied().filter(|b| b.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let eta_hat = if b_max.is_finite() {
        let raw = bounds.iter().map(|&b| if b.is_finite() { b_max - b + 1e-6 } else { 0.0 }).collect();
        normalize(raw).unwrap_or_else(|| uniform.clone())
    } else {
        uniform.clone()
    };
    let p: Vec<f64> = tau_hat.iter().zip(&eta_hat).map(|(t, e)| alpha * t + (1.0 - alpha) * e).collect();
    normalize(p).unwrap_or(uniform)
}

pub fn select_path(tau_scores: &[f64], bounds: &[f64], alpha: f64, rng: &mut impl Rng) -> usize {
    let p = selection_probabilities(tau_scores, bounds, alpha);
    if p.len() == 1 {
        return 0;
    }
    let mut r: f64 = rng.gen();
    for (k, &pk) in p.iter().enumerate() {
        if r < pk {
            return k;
        }
        r -= pk;
    }
    p.len() - 1
}

fn fix_couple(solver: &mut SimplexSolver, couple: &Couple, vars: &[usize], path: &[usize]) {
    for (&a, &j) in couple.arcs.iter().zip(vars) {
        let v = if path.contains(&a) { 1.0 } else { 0.0 };
        solver.set_bounds(j, v, v);
    }
}

fn release_couple(solver: &mut SimplexSolver, vars: &[usize]) {
    for &j in vars {
        solver.set_bounds(j, 0.0, 1.0);
    }
}

fn relaxation_bound(solver: &mut SimplexSolver) -> f64 {
    match solver.solve() {
        Ok(r) => match r.status {
            LpStatus::Optimal => r.objective,
            LpStatus::IterationLimit => r.dual_bound,
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
        },
        Err(e) => {
            log::debug!("attractiveness relaxation failed: {e}");
            f64::INFINITY
        }
    }
}

/// One ant: routes every couple in turn, guided by the relaxation with
/// previously routed couples fixed, the trail snapshot, and nominal bounds.
pub fn build_routing(ctx: &Context, pheromone: &PheromoneTable, params: &RobuParams, rng: &mut impl Rng) -> RoutingState {
    let graph = &ctx.graph;
    let couples = &ctx.robust.couples.couples;
    let mut robust = ctx.root_solver.clone();
    robust.opts = LpOptions::default();
    let mut nominal = ctx.nominal_solver.clone();
    nominal.opts = LpOptions::truncated(params.eta_iteration_cap);
    let mut state = RoutingState::new(&ctx.order);

    for (pos, &ci) in ctx.order.iter().enumerate() {
        let couple = &couples[ci];
        let vars = &ctx.robust.flow_vars[ci];
        let relaxed: Option<Vec<f64>> = if pos == 0 {
            Some(ctx.root_values.clone())
        } else {
            match robust.solve() {
                Ok(r) if r.status != LpStatus::Infeasible => Some(r.values),
                _ => None,
            }
        };
        let mut candidates = match &relaxed {
            Some(values) => {
                let support: Vec<f64> = vars.iter().map(|&j| values[j]).collect();
                candidate_paths(graph, couple, &support, params.candidate_paths, params.raw_support_weights)
            }
            None => Vec::new(),
        };
        if candidates.is_empty() {
            let fallback = graph
                .shortest_path(couple.b, couple.s, |a| couple.local(a).map(|_| graph.arcs[a].e_coeff))
                .expect("couples are reachable by construction");
            candidates.push(fallback);
        }

        let chosen = if candidates.len() == 1 {
            0
        } else {
            let tau: Vec<f64> = candidates
                .iter()
                .map(|p| {
                    let local: Vec<usize> = p.iter().filter_map(|&a| couple.local(a)).collect();
                    pheromone.path_score(ci, &local)
                })
                .collect();
            let nominal_vars = &ctx.nominal.flow_vars[ci];
            let bounds: Vec<f64> = candidates
                .iter()
                .map(|p| {
                    fix_couple(&mut nominal, couple, nominal_vars, p);
                    let b = relaxation_bound(&mut nominal);
                    release_couple(&mut nominal, nominal_vars);
                    b
                })
                .collect();
            select_path(&tau, &bounds, params.alpha, rng)
        };
        let path = candidates.swap_remove(chosen);
        fix_couple(&mut robust, couple, vars, &path);
        fix_couple(&mut nominal, couple, &ctx.nominal.flow_vars[ci], &path);
        state.assign(ci, path);
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::BodyPosition;
    use crate::model::CoupleSet;
    use crate::netgraph::build_graph;
    use crate::netgraph::tests::line_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// b -> r0 -> s, b -> r1 -> s, r0 <-> r1, no direct link.
    fn diamond() -> (BanGraph, Couple) {
        let mut inst = line_instance(0.2, &[BodyPosition::new(0.1, 0.03, 0.0), BodyPosition::new(0.1, -0.03, 0.0)]);
        inst.tx_range = 0.12;
        let g = build_graph(&inst).unwrap();
        let c = CoupleSet::new(&g, &inst.scenarios).couples.remove(0);
        (g, c)
    }

    fn arc(g: &BanGraph, t: &str, h: &str) -> usize {
        g.find_arc(g.vertex_index(t).unwrap(), g.vertex_index(h).unwrap()).unwrap()
    }

    fn support(g: &BanGraph, c: &Couple, values: &[(&str, &str, f64)]) -> Vec<f64> {
        let mut s = vec![0.0; c.arcs.len()];
        for &(t, h, v) in values {
            s[c.local(arc(g, t, h)).unwrap()] = v;
        }
        s
    }

    #[test]
    fn single_candidate_when_limit_is_one() {
        let (g, c) = diamond();
        let s = support(&g, &c, &[("b0", "r0", 0.7), ("r0", "s0", 0.7), ("b0", "r1", 0.3), ("r1", "s0", 0.3)]);
        let paths = candidate_paths(&g, &c, &s, 1, false);
        assert_eq!(paths, vec![vec![arc(&g, "b0", "r0"), arc(&g, "r0", "s0")]]);
    }

    #[test]
    fn two_disjoint_paths_then_disconnection() {
        let (g, c) = diamond();
        let s = support(&g, &c, &[("b0", "r0", 0.7), ("r0", "s0", 0.7), ("b0", "r1", 0.3), ("r1", "s0", 0.3)]);
        let paths = candidate_paths(&g, &c, &s, 5, false);
        assert_eq!(
            paths,
            vec![vec![arc(&g, "b0", "r0"), arc(&g, "r0", "s0")], vec![arc(&g, "b0", "r1"), arc(&g, "r1", "s0")]]
        );
    }

    #[test]
    fn diamond_with_cross_arc_deletion_sequence() {
        let (g, c) = diamond();
        // 0.6 via r0 directly, 0.4 enters r1 and crosses to r0 with 0.1 of it
        let s = support(
            &g,
            &c,
            &[("b0", "r0", 0.6), ("r0", "s0", 0.7), ("b0", "r1", 0.4), ("r1", "s0", 0.3), ("r1", "r0", 0.1)],
        );
        let paths = candidate_paths(&g, &c, &s, 5, false);
        // 1-x weights: b-r0-s = 0.4 + 0.3 = 0.7 is shortest; its weakest arc b->r0 goes.
        // Then b-r1-s = 0.6 + 0.7 = 1.3 beats b-r1-r0-s = 0.6 + 0.9 + 0.3 = 1.8; r1->s0 goes.
        // Then b-r1-r0-s; its weakest arc r1->r0 goes, leaving s unreachable.
        let expected = vec![
            vec![arc(&g, "b0", "r0"), arc(&g, "r0", "s0")],
            vec![arc(&g, "b0", "r1"), arc(&g, "r1", "s0")],
            vec![arc(&g, "b0", "r1"), arc(&g, "r1", "r0"), arc(&g, "r0", "s0")],
        ];
        assert_eq!(paths, expected);
    }

    #[test]
    fn literal_weights_prefer_low_support() {
        let (g, c) = diamond();
        let s = support(&g, &c, &[("b0", "r0", 0.7), ("r0", "s0", 0.7), ("b0", "r1", 0.3), ("r1", "s0", 0.3)]);
        let paths = candidate_paths(&g, &c, &s, 1, true);
        assert_eq!(paths, vec![vec![arc(&g, "b0", "r1"), arc(&g, "r1", "s0")]]);
    }

    #[test]
    fn probability_examples() {
        let p = selection_probabilities(&[3.0, 1.0], &[5.0, 1.0], 1.0);
        assert!((p[0] - 0.75).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12);
        let p = selection_probabilities(&[0.6, 0.4], &[2.0, 2.0], 0.5);
        assert!((p[0] - 0.55).abs() < 1e-12 && (p[1] - 0.45).abs() < 1e-12);
        assert_eq!(selection_probabilities(&[0.0], &[f64::INFINITY], 0.3), vec![1.0]);
        // lower bound wins under pure attractiveness; infeasible candidate gets nothing
        let p = selection_probabilities(&[1.0, 1.0, 1.0], &[1.0, 3.0, f64::INFINITY], 0.0);
        assert!(p[0] > 0.99 && p[2] == 0.0);
        // everything degenerate -> uniform
        let p = selection_probabilities(&[0.0, 0.0], &[f64::INFINITY, f64::INFINITY], 0.5);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn sampling_follows_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hits = (0..4000).filter(|_| select_path(&[3.0, 1.0], &[0.0, 0.0], 1.0, &mut rng) == 0).count();
        assert!((hits as f64 / 4000.0 - 0.75).abs() < 0.03);
        assert_eq!(select_path(&[0.0], &[0.0], 0.5, &mut rng), 0);
    }

    #[test]
    fn order_by_rate_then_ids() {
        let (g, mut c) = diamond();
        c.rates = vec![5.0];
        let mut d = c.clone();
        d.rates = vec![9.0];
        let e = c.clone();
        assert_eq!(couple_order(&g, &[c, d, e]), vec![1, 0, 2]);
    }

    #[test]
    fn routing_state_progress() {
        let mut s = RoutingState::new(&[1, 0]);
        assert!(!s.is_complete() && s.routing().is_none());
        s.assign(1, vec![3]);
        assert_eq!(s.remaining, vec![0]);
        s.assign(0, vec![1, 2]);
        assert_eq!(s.routing(), Some(vec![vec![1, 2], vec![3]]));
    }
}
