use std::time::{Duration, Instant};

use crate::mip::{MipOptions, MipStatus};
use crate::model::{build_mod_rob, check_with, hamming_distance};

use super::{Context, Design, RobuError, RobuParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VnsMode {
    /// Stop at the first feasible design.
    Repair,
    /// Keep improving until the time limit or the whole space is exhausted.
    Improve,
}

/// One neighborhood subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct VnsStep {
    pub gamma: usize,
    pub status: MipStatus,
    /// Hamming distance between the step's anchor and the design it found.
    pub anchor_distance: Option<usize>,
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VnsOutcome {
    /// Best design found; in improve mode at worst the starting design.
    pub best: Option<Design>,
    pub steps: Vec<VnsStep>,
}

/// Neighborhood search around `start`'s relay vector. In repair mode `start`
/// may be infeasible and `incumbent_energy` is the global best (if any), which
/// keeps the improvement row in force. In improve mode `start` is feasible
/// and its energy is the value to beat.
pub fn mip_vns(
    ctx: &Context,
    start: &Design,
    mode: VnsMode,
    incumbent_energy: Option<f64>,
    params: &RobuParams,
    time_limit: Duration,
) -> Result<VnsOutcome, RobuError> {
    let began = Instant::now();
    let deadline = began + time_limit;
    let n_relays = ctx.graph.n_relays;
    let mut gamma = params.gamma0_for(n_relays).min(n_relays);
    let delta = params.delta_for(n_relays);
    let mut anchor = start.relays.clone();
    let (mut best, mut best_energy) = match mode {
        VnsMode::Improve => (Some(start.clone()), Some(start.energy)),
        VnsMode::Repair => (None, incumbent_energy),
    };
    let sub_limit = match mode {
        VnsMode::Repair => params.sub_mip_repair_time_limit,
        VnsMode::Improve => params.sub_mip_time_limit,
    };
    let mut steps = Vec::new();

    loop {
        let now = Instant::now();
        if now >= deadline {
            break;
        }
        let model = build_mod_rob(&ctx.robust, &anchor, gamma, best_energy, params.epsilon);
        let opts = MipOptions {
            time_limit: Some(Duration::from_secs_f64(sub_limit).min(deadline - now)),
            stop_at_first_feasible: mode == VnsMode::Repair,
            seed: params.seed,
            ..Default::default()
        };
        let r = model.solve(&ctx.graph, &opts)?;
        let mut step = VnsStep { gamma, status: r.status, anchor_distance: None, energy: None };
        if let Some(values) = &r.values {
            let (x, y) = model.decode(values);
            let energy = ctx.robust.evaluate_energy(&ctx.graph, &x)?;
            debug_assert!(check_with(&ctx.graph, &ctx.robust.couples, ctx.robust.budget, &x, &y).is_empty());
            step.anchor_distance = Some(hamming_distance(&anchor, &y));
            step.energy = Some(energy);
            log::info!("vns ({mode:?}) radius {gamma}: energy {energy}");
            anchor = y.clone();
            best_energy = Some(energy);
            best = Some(Design { routing: x, relays: y, energy });
            if mode == VnsMode::Repair {
                steps.push(step);
                break;
            }
        }
        log::trace!("vns step {step:?}");
        steps.push(step);
        if gamma >= n_relays && matches!(r.status, MipStatus::Optimal | MipStatus::Infeasible) {
            break;
        }
        gamma = (gamma + delta).min(n_relays);
    }
    Ok(VnsOutcome { best, steps })
}
