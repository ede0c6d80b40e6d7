//! Seeded structural checks shared by the property suites and the acceptance run.
//! Each check returns a description of the first violation it finds.

use std::time::Duration;

use band_core::harness::fixtures::toy_instance;
use band_core::harness::simple_paths;
use band_core::instance::{generate_instance, GeneratorConfig};
use band_core::model::Sense;
use band_core::netgraph::{build_graph, VertexKind};
use band_core::robuband::{build_routing, mip_vns, Context, PheromoneTable, RobuParams, RoutingState, VnsMode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random small generator configuration.
pub fn small_config(rng: &mut ChaCha8Rng) -> GeneratorConfig {
    GeneratorConfig {
        n_biosensors: rng.gen_range(1..=6),
        n_sinks: rng.gen_range(1..=3),
        n_relays: rng.gen_range(0..=30),
        n_scenarios: rng.gen_range(1..=4),
        tx_range: rng.gen_range(0.1..0.6),
        body_box: (0.4, 0.4, 0.8),
        ..Default::default()
    }
}

/// No arc enters a biosensor or leaves a sink; arcs are sorted, unique,
/// within range and have positive energy; adjacency lists agree with arcs.
pub fn graph_structure(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Degenerate layouts are rejected at generation; nothing to check then.
    let Ok(inst) = generate_instance(&small_config(&mut rng), seed) else {
        return Ok(());
    };
    let g = build_graph(&inst).map_err(|e| e.to_string())?;
    for (a, arc) in g.arcs.iter().enumerate() {
        ensure(g.kind(arc.head) != VertexKind::Biosensor, || format!("seed {seed}: arc {a} enters a biosensor"))?;
        ensure(g.kind(arc.tail) != VertexKind::Sink, || format!("seed {seed}: arc {a} leaves a sink"))?;
        ensure(arc.tail != arc.head, || format!("seed {seed}: self loop {a}"))?;
        ensure(arc.delta <= inst.tx_range, || format!("seed {seed}: arc {a} longer than the range"))?;
        ensure(arc.e_coeff > 0.0, || format!("seed {seed}: arc {a} has non-positive energy"))?;
        ensure(g.out_arcs[arc.tail].contains(&a) && g.in_arcs[arc.head].contains(&a), || {
            format!("seed {seed}: adjacency misses arc {a}")
        })?;
    }
    let keys: Vec<(usize, usize)> = g.arcs.iter().map(|a| (a.tail, a.head)).collect();
    ensure(keys.windows(2).all(|w| w[0] < w[1]), || format!("seed {seed}: arcs not strictly sorted"))?;
    let listed: usize = g.out_arcs.iter().map(Vec::len).sum();
    ensure(listed == g.arcs.len(), || format!("seed {seed}: out-adjacency lists {listed} arcs"))
}

fn random_routing(ctx: &Context, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let couples = &ctx.robust.couples.couples;
    let mut state = RoutingState::new(&ctx.order);
    while let Some(&ci) = state.remaining.first() {
        let c = &couples[ci];
        let paths = simple_paths(&ctx.graph, c.b, c.s, &c.arcs);
        state.assign(ci, paths.choose(rng).expect("toy couples have paths").clone());
    }
    state.routing().expect("every couple assigned")
}

/// Conservation rows hold at any routing decoded from a complete routing state,
/// whether assembled at random or built by an ant.
pub fn routing_decode(seed: u64) -> Check {
    let inst = toy_instance(seed);
    let ctx = Context::new(&inst).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = PheromoneTable::from_relaxation(&ctx.robust, &ctx.root_values, 1e-3);
    let params = RobuParams { seed, ..Default::default() };
    let built = build_routing(&ctx, &table, &params, &mut rng).routing().ok_or("ant left couples unrouted")?;
    for routing in [random_routing(&ctx, &mut rng), built] {
        let (design, _) = ctx.design_of(routing).map_err(|e| e.to_string())?;
        let values = ctx.robust.encode(&ctx.graph, &design.routing, &design.relays);
        for row in &ctx.robust.lp.constraints {
            let conservation = ["bio[", "relay[", "sink["].iter().any(|p| row.name.starts_with(p));
            if conservation {
                ensure(row.sense == Sense::Eq && row.violation(&values) <= 1e-9, || {
                    format!("seed {seed}: row {} violated by {}", row.name, row.violation(&values))
                })?;
            }
        }
    }
    Ok(())
}

/// Trails never drop below the floor and the initial trails never change.
pub fn pheromone_floor(seed: u64) -> Check {
    let inst = toy_instance(seed);
    let ctx = Context::new(&inst).map_err(|e| e.to_string())?;
    let floor = 1e-3;
    let mut table = PheromoneTable::from_relaxation(&ctx.robust, &ctx.root_values, floor);
    let tau0 = table.tau0().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lb = ctx.lower_bound;
    for step in 0..1000 {
        let used: Vec<Vec<usize>> =
            tau0.iter().map(|arcs| (0..arcs.len()).filter(|_| rng.gen_bool(0.4)).collect()).collect();
        let z = lb * rng.gen_range(1.0..4.0);
        let z_bar = lb * rng.gen_range(1.0..2.0);
        table.update(&used, z, z_bar, lb);
        ensure(table.tau.iter().flatten().all(|&t| t >= floor), || format!("seed {seed}: trail below floor at step {step}"))?;
    }
    ensure(table.tau0() == tau0.as_slice(), || format!("seed {seed}: initial trails changed"))
}

/// Every design a neighborhood step returns lies within that step's radius.
pub fn hamming_radius(seed: u64) -> Check {
    let inst = toy_instance(seed);
    let ctx = Context::new(&inst).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (start, feasible) = ctx.design_of(random_routing(&ctx, &mut rng)).map_err(|e| e.to_string())?;
    let n = ctx.graph.n_relays;
    let params = RobuParams {
        gamma0: Some(rng.gen_range(0..=n)),
        delta_step: Some(rng.gen_range(1..=2)),
        sub_mip_time_limit: 5.0,
        sub_mip_repair_time_limit: 5.0,
        ..Default::default()
    };
    let mode = if feasible { VnsMode::Improve } else { VnsMode::Repair };
    let out = mip_vns(&ctx, &start, mode, None, &params, Duration::from_secs(20)).map_err(|e| e.to_string())?;
    for step in &out.steps {
        if let Some(d) = step.anchor_distance {
            ensure(d <= step.gamma, || format!("seed {seed}: distance {d} beyond radius {}", step.gamma))?;
        }
    }
    Ok(())
}
