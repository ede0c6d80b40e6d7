//! Small hand-shaped instances for oracle cross-checks and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{
    BanInstance, Biosensor, BodyPosition, CoupleRate, EnergyParams, LosPredicate, RateSpec, RelayCandidate, Scenario,
    Sink,
};
use crate::model::CoupleSet;
use crate::netgraph::build_graph;

use super::oracle::{brute_force_optimum, simple_paths};

/// Per-couple simple path counts accepted for toy instances.
pub const TOY_PATHS: std::ops::RangeInclusive<usize> = 2..=6;

fn toy_candidate(rng: &mut ChaCha8Rng, name: String) -> BanInstance {
    let n_b = rng.gen_range(2..=4);
    let n_r = rng.gen_range(4..=8);
    let n_scen = rng.gen_range(1..=3);
    let place = |rng: &mut ChaCha8Rng, x0: f64, x1: f64| {
        BodyPosition::new(rng.gen_range(x0..x1), rng.gen_range(0.0..0.12), rng.gen_range(0.0..0.06))
    };
    let biosensors: Vec<Biosensor> = (0..n_b)
        .map(|i| {
            let rate_spec = if rng.gen_bool(0.5) {
                RateSpec::Constant { rate: [40_000.0, 60_000.0, 80_000.0][rng.gen_range(0..3)] }
            } else {
                RateSpec::Variable { lo: 30_000.0, hi: 90_000.0 }
            };
            Biosensor { id: format!("b{i}"), position: place(rng, 0.0, 0.08), rate_spec }
        })
        .collect();
    let relays: Vec<RelayCandidate> = (0..n_r)
        .map(|i| RelayCandidate {
            id: format!("r{i}"),
            position: place(rng, 0.06, 0.2),
            capacity: [100_000.0, 150_000.0, 250_000.0][rng.gen_range(0..3)],
        })
        .collect();
    let sinks = vec![Sink { id: "s0".into(), position: place(rng, 0.2, 0.26) }];
    let scenarios = (0..n_scen)
        .map(|k| Scenario {
            id: format!("sigma{k}"),
            rates: biosensors
                .iter()
                .map(|b| CoupleRate {
                    biosensor: b.id.clone(),
                    sink: "s0".into(),
                    rate: match b.rate_spec {
                        RateSpec::Constant { rate } => rate,
                        RateSpec::Variable { lo, hi } => (rng.gen_range(lo..=hi) / 1000.0).round() * 1000.0,
                    },
                })
                .collect(),
        })
        .collect();
    let mut los_predicate = LosPredicate::default();
    for r in &relays {
        if rng.gen_bool(0.3) {
            los_predicate.set_nlos(&r.id, "s0");
        }
    }
    BanInstance {
        name,
        biosensors,
        sinks,
        relay_budget: rng.gen_range(n_r / 2..=n_r),
        relays,
        energy: EnergyParams::nrf2401(),
        tx_range: rng.gen_range(0.09..0.13),
        scenarios,
        los_predicate,
    }
}

/// A tiny instance (|B| <= 4, |S| = 1, |R| <= 8, |Sigma| <= 3) in which every
/// couple has between 2 and 6 simple paths and a feasible design exists. Capacities and budget are small
/// enough to bind. Deterministic in `seed`.
pub fn toy_instance(seed: u64) -> BanInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let inst = toy_candidate(&mut rng, format!("toy-{seed}"));
        let Ok(graph) = build_graph(&inst) else { continue };
        let couples = CoupleSet::new(&graph, &inst.scenarios);
        let ok = couples
            .couples
            .iter()
            .all(|c| TOY_PATHS.contains(&simple_paths(&graph, c.b, c.s, &c.arcs).len()));
        if ok && inst.validate().is_ok() && matches!(brute_force_optimum(&inst), Ok(Some(_))) {
            return inst;
        }
    }
}

/// Two biosensors share relay `r0` (250 kbit/s) on the way to `s0`; `b0`
/// sends a constant 200 kbit/s and `b1` a variable load whose scenario values
/// are `variable_loads` (bit/s). Relay `r1` is a spare within range of both
/// biosensors and the sink.
pub fn example1_instance(variable_loads: &[f64]) -> BanInstance {
    let relay = |id: &str, x: f64, y: f64| RelayCandidate {
        id: id.into(),
        position: BodyPosition::new(x, y, 0.0),
        capacity: 250_000.0,
    };
    let scenarios = variable_loads
        .iter()
        .enumerate()
        .map(|(k, &v)| Scenario {
            id: format!("sigma{k}"),
            rates: vec![
                CoupleRate { biosensor: "b0".into(), sink: "s0".into(), rate: 200_000.0 },
                CoupleRate { biosensor: "b1".into(), sink: "s0".into(), rate: v },
            ],
        })
        .collect();
    let (lo, hi) = variable_loads
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    BanInstance {
        name: "example1".into(),
        biosensors: vec![
            Biosensor {
                id: "b0".into(),
                position: BodyPosition::new(0.0, 0.0, 0.0),
                rate_spec: RateSpec::Constant { rate: 200_000.0 },
            },
            Biosensor {
                id: "b1".into(),
                position: BodyPosition::new(0.0, 0.02, 0.0),
                rate_spec: RateSpec::Variable { lo: lo.min(hi), hi },
            },
        ],
        sinks: vec![Sink { id: "s0".into(), position: BodyPosition::new(0.2, 0.0, 0.0) }],
        relays: vec![relay("r0", 0.1, 0.0), relay("r1", 0.1, 0.05)],
        energy: EnergyParams::nrf2401(),
        tx_range: 0.12,
        relay_budget: 2,
        scenarios,
        los_predicate: LosPredicate::default(),
    }
}
