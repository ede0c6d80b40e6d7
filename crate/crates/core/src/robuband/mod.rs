//! RobuBAND: randomized LP-guided path construction with trail learning,
//! check-and-repair, and a final exact neighborhood search on relay vectors.

mod construct;
mod pheromone;
mod vns;

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{gap_fraction, gap_percent};
use crate::instance::{BanInstance, CoupleRate, InstanceError, Scenario};
use crate::lp::{LpError, LpOptions, LpStatus, SimplexSolver};
use crate::mip::MipError;
use crate::model::{build_band_blp, build_rob_band_blp, check_with, BandModel, CoupleSet, ModelError};
use crate::netgraph::{build_graph, BanGraph};

pub use construct::{
    build_routing, candidate_paths, couple_order, select_path, selection_probabilities, RoutingState, SUPPORT_TOL,
};
pub use pheromone::{MovingWindow, PheromoneTable, UpdateOutcome};
pub use vns::{mip_vns, VnsMode, VnsOutcome, VnsStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobuParams {
    /// L: candidate paths per couple.
    pub candidate_paths: usize,
    pub alpha: f64,
    /// m: ants per outer iteration.
    pub ants: usize,
    /// w: moving-average width for the trail update.
    pub window: usize,
    pub epsilon: f64,
    /// Initial hamming radius; `None` means ceil(0.1 |R|).
    pub gamma0: Option<usize>,
    /// Radius increment; `None` means max(1, ceil(0.05 |R|)).
    pub delta_step: Option<usize>,
    /// Seconds.
    pub outer_time_limit: f64,
    pub vns_improve_limit: f64,
    pub vns_repair_limit: f64,
    pub sub_mip_time_limit: f64,
    pub sub_mip_repair_time_limit: f64,
    pub pheromone_floor: f64,
    /// Use raw relaxation values as shortest-path weights.
    pub raw_support_weights: bool,
    /// Stop the construction phase after this many outer iterations.
    pub max_outer_iterations: Option<usize>,
    /// Simplex iteration cap for attractiveness bounds; `None` uses the LP default.
    pub eta_iteration_cap: Option<usize>,
    pub seed: u64,
}

impl Default for RobuParams {
    fn default() -> Self {
        RobuParams {
            candidate_paths: 5,
            alpha: 0.5,
            ants: 20,
            window: 4,
            epsilon: 0.1,
            gamma0: None,
            delta_step: None,
            outer_time_limit: 1800.0,
            vns_improve_limit: 600.0,
            vns_repair_limit: 60.0,
            sub_mip_time_limit: 10.0,
            sub_mip_repair_time_limit: 5.0,
            pheromone_floor: 1e-3,
            raw_support_weights: false,
            max_outer_iterations: None,
            eta_iteration_cap: None,
            seed: 0,
        }
    }
}

impl RobuParams {
    pub fn validate(&self) -> Result<(), RobuError> {
        let bad = |m: &str| Err(RobuError::InvalidParams(m.to_string()));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.candidate_paths == 0 || self.ants == 0 || self.window == 0 {
            return bad("candidate_paths, ants and window must be at least 1");
        }
        if !(self.epsilon > 0.0) || !(self.pheromone_floor > 0.0) {
            return bad("epsilon and pheromone_floor must be positive");
        }
        let limits = [
            self.outer_time_limit,
            self.vns_improve_limit,
            self.vns_repair_limit,
            self.sub_mip_time_limit,
            self.sub_mip_repair_time_limit,
        ];
        if limits.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("time limits must be finite and non-negative");
        }
        Ok(())
    }

    pub fn gamma0_for(&self, n_relays: usize) -> usize {
        self.gamma0.unwrap_or_else(|| (0.1 * n_relays as f64).ceil() as usize)
    }

    pub fn delta_for(&self, n_relays: usize) -> usize {
        self.delta_step.unwrap_or_else(|| (0.05 * n_relays as f64).ceil() as usize).max(1)
    }
}

#[derive(Debug, Error)]
pub enum RobuError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("root relaxation is infeasible: no design can satisfy every scenario")]
    RootInfeasible,
    #[error("root relaxation did not reach optimality ({0:?})")]
    RootNotSolved(LpStatus),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Mip(#[from] MipError),
}

/// A complete routing with its relay vector and worst-scenario energy (nJ/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub routing: Vec<Vec<usize>>,
    pub relays: Vec<bool>,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Construction,
    Improvement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub phase: Phase,
    /// Seconds since the start of the run.
    pub time: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunStats {
    pub best_energy: Option<f64>,
    /// Root relaxation value of the robust program.
    pub best_bound: f64,
    pub gap_percent: Option<f64>,
    pub iterations: usize,
    pub repairs_attempted: usize,
    pub repairs_succeeded: usize,
    pub wall_time: f64,
    pub history: Vec<HistoryEntry>,
    pub improve_steps: Vec<VnsStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub best: Option<Design>,
    pub stats: RunStats,
}

/// Models, graph, and solved root relaxations shared by all ants.
#[derive(Debug, Clone)]
pub struct Context {
    pub graph: BanGraph,
    pub robust: BandModel,
    /// Nominal program at the mean scenario rates, used for attractiveness.
    pub nominal: BandModel,
    pub root_solver: SimplexSolver,
    pub nominal_solver: SimplexSolver,
    pub root_values: Vec<f64>,
    pub lower_bound: f64,
    pub order: Vec<usize>,
}

/// Per-couple rate averaged over scenarios.
pub fn mean_scenario(instance: &BanInstance) -> Scenario {
    let n = instance.scenarios.len() as f64;
    let rates = instance.scenarios[0]
        .rates
        .iter()
        .map(|r| CoupleRate {
            biosensor: r.biosensor.clone(),
            sink: r.sink.clone(),
            rate: instance.scenarios.iter().map(|s| s.rate(&r.biosensor, &r.sink)).sum::<f64>() / n,
        })
        .collect();
    Scenario { id: "mean".into(), rates }
}

impl Context {
    pub fn new(instance: &BanInstance) -> Result<Context, RobuError> {
        let graph = build_graph(instance)?;
        let robust = build_rob_band_blp(&graph, &instance.scenarios, instance.relay_budget)?;
        let nominal = build_band_blp(&graph, &mean_scenario(instance), instance.relay_budget)?;
        let mut root_solver = SimplexSolver::new(&robust.lp, LpOptions::default())?;
        let root = root_solver.solve()?;
        match root.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(RobuError::RootInfeasible),
            other => return Err(RobuError::RootNotSolved(other)),
        }
        let mut nominal_solver = SimplexSolver::new(&nominal.lp, LpOptions::default())?;
        nominal_solver.solve()?;
        let order = couple_order(&graph, &robust.couples.couples);
        Ok(Context {
            graph,
            robust,
            nominal,
            root_solver,
            nominal_solver,
            root_values: root.values,
            lower_bound: root.objective,
            order,
        })
    }

    /// Design for a complete routing (relays derived from it) and whether it
    /// satisfies capacity and budget.
    pub fn design_of(&self, routing: Vec<Vec<usize>>) -> Result<(Design, bool), RobuError> {
        let relays = CoupleSet::derive_relays(&self.graph, &routing);
        let energy = self.robust.evaluate_energy(&self.graph, &routing)?;
        let feasible = check_with(&self.graph, &self.robust.couples, self.robust.budget, &routing, &relays).is_empty();
        Ok((Design { routing, relays, energy }, feasible))
    }

    /// Local arc positions per couple of a routing, for trail updates.
    fn local_arcs(&self, routing: &[Vec<usize>]) -> Vec<Vec<usize>> {
        self.robust
            .couples
            .couples
            .iter()
            .zip(routing)
            .map(|(c, arcs)| arcs.iter().filter_map(|&a| c.local(a)).collect())
            .collect()
    }
}

/// Result of one ant.
#[derive(Debug, Clone, PartialEq)]
pub struct AntResult {
    pub constructed: Design,
    pub constructed_feasible: bool,
    /// Feasible design after optional repair.
    pub design: Option<Design>,
    pub repair_attempted: bool,
}

/// Random stream of ant `k` in outer iteration `outer`.
pub fn ant_rng(seed: u64, outer: usize, ants: usize, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((outer * ants + k) as u64);
    rng
}

pub fn run_ant(
    ctx: &Context,
    pheromone: &PheromoneTable,
    params: &RobuParams,
    outer: usize,
    k: usize,
    incumbent: Option<f64>,
    repair_deadline: Instant,
) -> Result<AntResult, RobuError> {
    let mut rng = ant_rng(params.seed, outer, params.ants, k);
    let state = build_routing(ctx, pheromone, params, &mut rng);
    let routing = state.routing().expect("construction routes every couple");
    let (constructed, feasible) = ctx.design_of(routing)?;
    if feasible {
        return Ok(AntResult { design: Some(constructed.clone()), constructed, constructed_feasible: true, repair_attempted: false });
    }
    let limit = Duration::from_secs_f64(params.vns_repair_limit).min(repair_deadline.saturating_duration_since(Instant::now()));
    let outcome = mip_vns(ctx, &constructed, VnsMode::Repair, incumbent, params, limit)?;
    let design = match outcome.best {
        Some(d) => Some(ctx.design_of(d.routing)?.0),
        None => None,
    };
    Ok(AntResult { constructed, constructed_feasible: false, design, repair_attempted: true })
}

/// Runs the full heuristic on `instance`; deterministic in `(instance, params)`
/// whenever no time limit interrupts a solve.
pub fn run(instance: &BanInstance, params: &RobuParams) -> Result<RunOutcome, RobuError> {
    params.validate()?;
    let start = Instant::now();
    let ctx = Context::new(instance)?;
    run_with_context(&ctx, params, start)
}

pub fn run_with_context(ctx: &Context, params: &RobuParams, start: Instant) -> Result<RunOutcome, RobuError> {
    let lb = ctx.lower_bound;
    let mut pheromone = PheromoneTable::from_relaxation(&ctx.robust, &ctx.root_values, params.pheromone_floor);
    let mut window = MovingWindow::new(params.window);
    let mut best: Option<Design> = None;
    let mut stats = RunStats { best_bound: lb, ..Default::default() };
    let outer_deadline = start + Duration::from_secs_f64(params.outer_time_limit);
    let closed = |best: &Option<Design>| best.as_ref().is_some_and(|d| gap_fraction(d.energy, lb) <= 1e-9);

    let mut outer = 0usize;
    while Instant::now() < outer_deadline
        && params.max_outer_iterations.is_none_or(|cap| outer < cap)
        && !closed(&best)
    {
        let incumbent = best.as_ref().map(|d| d.energy);
        let ants: Vec<AntResult> = (0..params.ants)
            .into_par_iter()
            .map(|k| run_ant(ctx, &pheromone, params, outer, k, incumbent, outer_deadline))
            .collect::<Result<_, _>>()?;

        let feasible: Vec<&Design> = ants.iter().filter_map(|a| a.design.as_ref()).collect();
        stats.repairs_attempted += ants.iter().filter(|a| a.repair_attempted).count();
        stats.repairs_succeeded += ants.iter().filter(|a| a.repair_attempted && a.design.is_some()).count();
        if let Some(first) = feasible.first() {
            if window.mean().is_none() {
                window.push(first.energy);
            }
            let z_bar = window.mean().expect("window seeded");
            let mut degenerate = false;
            for d in &feasible {
                degenerate |= pheromone.update(&ctx.local_arcs(&d.routing), d.energy, z_bar, lb) == UpdateOutcome::Degenerate;
            }
            if degenerate && gap_fraction(z_bar, lb) > 0.0 {
                log::warn!("iteration {outer}: pheromone update skipped, moving average {z_bar} below bound {lb}");
            }
            for d in &feasible {
                window.push(d.energy);
            }
        }
        let inner_best = feasible.iter().copied().fold(None::<&Design>, |acc, d| match acc {
            Some(b) if b.energy <= d.energy => Some(b),
            _ => Some(d),
        });
        if let Some(ib) = inner_best {
            if best.as_ref().is_none_or(|b| ib.energy < b.energy) {
                log::info!("iteration {outer}: new best {}", ib.energy);
                best = Some(ib.clone());
                stats.history.push(HistoryEntry {
                    iteration: outer,
                    phase: Phase::Construction,
                    time: start.elapsed().as_secs_f64(),
                    energy: ib.energy,
                });
            }
        }
        log::debug!(
            "iteration {outer}: {} of {} ants feasible, best {:?}",
            feasible.len(),
            params.ants,
            best.as_ref().map(|b| b.energy)
        );
        outer += 1;
    }
    stats.iterations = outer;

    if let Some(current) = best.clone() {
        if !closed(&best) {
            let limit = Duration::from_secs_f64(params.vns_improve_limit);
            let outcome = mip_vns(ctx, &current, VnsMode::Improve, Some(current.energy), params, limit)?;
            if let Some(improved) = outcome.best {
                if improved.energy < current.energy {
                    stats.history.push(HistoryEntry {
                        iteration: outer,
                        phase: Phase::Improvement,
                        time: start.elapsed().as_secs_f64(),
                        energy: improved.energy,
                    });
                    best = Some(ctx.design_of(improved.routing)?.0);
                }
            }
            stats.improve_steps = outcome.steps;
        }
    }

    stats.best_energy = best.as_ref().map(|d| d.energy);
    stats.gap_percent = stats.best_energy.map(|z| gap_percent(z, lb));
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok(RunOutcome { best, stats })
}
