use super::*;
use crate::harness::brute_force_optimum;
use crate::harness::fixtures::{example1_instance, toy_instance};
use crate::instance::BodyPosition;
use crate::lp::{solve_lp, LpOptions, LpStatus};
use crate::mip::{MipOptions, MipStatus};
use crate::netgraph::build_graph;
use crate::netgraph::tests::line_instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact(model: &BandModel, graph: &BanGraph) -> f64 {
    let r = model.solve(graph, &MipOptions::default()).unwrap();
    assert_eq!(r.status, MipStatus::Optimal);
    r.objective.unwrap()
}

#[test]
fn forced_direct_arc() {
    let inst = line_instance(0.1, &[]);
    let g = build_graph(&inst).unwrap();
    let m = build_band_blp(&g, &inst.scenarios[0], inst.relay_budget).unwrap();
    assert_eq!(m.flow_vars[0].len(), 1);
    let r = solve_lp(&m.lp, &LpOptions::default()).unwrap();
    assert_eq!(r.status, LpStatus::Optimal);
    assert!((r.objective - 100.0 * g.arcs[0].e_coeff).abs() < 1e-9);
    assert_eq!(r.values[m.flow_vars[0][0]], 1.0);
}

#[test]
fn evaluate_single_forced_arc() {
    // zero-length link: E = 16.7 + 36.1 = 52.8 nJ/bit, 100 bit/s
    let mut inst = line_instance(0.0, &[]);
    inst.sinks[0].position = BodyPosition::new(0.0, 0.0, 0.0);
    let g = build_graph(&inst).unwrap();
    let couples = CoupleSet::new(&g, &inst.scenarios);
    assert!((couples.evaluate_energy(&g, &[vec![0]]).unwrap() - 5280.0).abs() < 1e-9);
    assert!(matches!(couples.evaluate_energy(&g, &[vec![]]), Err(ModelError::IncompleteRouting { .. })));
}

#[test]
fn cheaper_of_two_paths() {
    let inst = line_instance(0.2, &[BodyPosition::new(0.1, 0.0, 0.0)]);
    let g = build_graph(&inst).unwrap();
    let m = build_band_blp(&g, &inst.scenarios[0], 1).unwrap();
    let direct = g.arcs[g.find_arc(0, 2).unwrap()].e_coeff;
    let hop = g.arcs[g.find_arc(0, 1).unwrap()].e_coeff + g.arcs[g.find_arc(1, 2).unwrap()].e_coeff;
    assert!((exact(&m, &g) - 100.0 * direct.min(hop)).abs() < 1e-9);
}

#[test]
fn structural_counts() {
    for seed in 0..5 {
        let inst = toy_instance(seed);
        let g = build_graph(&inst).unwrap();
        let m = build_rob_band_blp(&g, &inst.scenarios, inst.relay_budget).unwrap();
        let n_c = m.couples.couples.len();
        let (n_r, n_sc) = (g.n_relays, inst.scenarios.len());
        let arcs_per_couple: usize = m.couples.couples.iter().map(|c| g.couple_arcs(c.b, c.s).len()).sum();
        assert_eq!(m.lp.n_variables(), n_r + arcs_per_couple + 1);
        assert_eq!(m.lp.n_constraints(), n_c * (n_r + 2) + n_r * n_sc + 1 + n_sc);
        let nominal = build_band_blp(&g, &inst.scenarios[0], inst.relay_budget).unwrap();
        assert_eq!(nominal.lp.n_constraints(), n_c * (n_r + 2) + n_r + 1);
        assert_eq!(nominal.lp.n_variables(), n_r + arcs_per_couple);
        assert!(m.lp.validate().is_ok());
    }
}

#[test]
fn zero_demand_couples_get_no_variables() {
    let mut inst = example1_instance(&[0.0]);
    inst.biosensors[1].rate_spec = crate::instance::RateSpec::Constant { rate: 0.0 };
    let g = build_graph(&inst).unwrap();
    let m = build_rob_band_blp(&g, &inst.scenarios, 2).unwrap();
    assert_eq!(m.couples.couples.len(), 1);
}

#[test]
fn unreachable_couple_is_an_error() {
    let inst = line_instance(0.5, &[]);
    let g = build_graph(&inst).unwrap();
    assert!(matches!(
        build_band_blp(&g, &inst.scenarios[0], 0),
        Err(ModelError::Unreachable { .. })
    ));
    assert_eq!(build_rob_band_blp(&g, &[], 0).unwrap_err(), ModelError::NoScenarios);
}

#[test]
fn singleton_and_duplicate_scenarios() {
    for seed in 0..4 {
        let inst = toy_instance(seed);
        let g = build_graph(&inst).unwrap();
        let sc = &inst.scenarios[0];
        let nominal = exact(&build_band_blp(&g, sc, inst.relay_budget).unwrap(), &g);
        let robust = exact(&build_rob_band_blp(&g, std::slice::from_ref(sc), inst.relay_budget).unwrap(), &g);
        assert!((nominal - robust).abs() <= 1e-6 * nominal);
        let mut twin = sc.clone();
        twin.id = "twin".into();
        let doubled = exact(&build_rob_band_blp(&g, &[sc.clone(), twin], inst.relay_budget).unwrap(), &g);
        assert!((doubled - robust).abs() <= 1e-6 * robust);
    }
}

#[test]
fn adding_a_dominating_scenario_never_helps() {
    let inst = toy_instance(11);
    let g = build_graph(&inst).unwrap();
    let base = &inst.scenarios[0];
    let mut worse = base.clone();
    worse.id = "worse".into();
    for r in &mut worse.rates {
        r.rate *= 1.2;
    }
    let v_nominal = exact(&build_rob_band_blp(&g, std::slice::from_ref(base), inst.relay_budget).unwrap(), &g);
    let both = build_rob_band_blp(&g, &[base.clone(), worse], inst.relay_budget).unwrap();
    let r = both.solve(&g, &MipOptions::default()).unwrap();
    match r.status {
        MipStatus::Optimal => assert!(r.objective.unwrap() >= v_nominal - 1e-6),
        MipStatus::Infeasible => {}
        other => panic!("unexpected status {other:?}"),
    }
}

#[test]
fn exact_matches_brute_force_on_toys() {
    for seed in 0..6 {
        let inst = toy_instance(seed);
        let g = build_graph(&inst).unwrap();
        let m = build_rob_band_blp(&g, &inst.scenarios, inst.relay_budget).unwrap();
        let r = m.solve(&g, &MipOptions::default()).unwrap();
        match brute_force_optimum(&inst).unwrap() {
            Some(o) => {
                assert_eq!(r.status, MipStatus::Optimal, "seed {seed}");
                assert!((r.objective.unwrap() - o.energy).abs() <= 1e-6 * o.energy, "seed {seed}");
                let (x, y) = m.decode(r.values.as_ref().unwrap());
                assert!(check_feasibility(&g, &inst, &x, &y).is_empty());
            }
            None => assert_eq!(r.status, MipStatus::Infeasible, "seed {seed}"),
        }
    }
}

#[test]
fn fixing_a_routing_prices_it_exactly() {
    let inst = toy_instance(3);
    let g = build_graph(&inst).unwrap();
    let m = build_rob_band_blp(&g, &inst.scenarios, g.n_relays).unwrap();
    let x: Vec<Vec<usize>> = m
        .couples
        .couples
        .iter()
        .map(|c| g.shortest_path(c.b, c.s, |a| c.local(a).map(|_| 1.0)).unwrap())
        .collect();
    let mut fixings = Vec::new();
    for (ci, c) in m.couples.couples.iter().enumerate() {
        for &a in &c.arcs {
            let arc = &g.arcs[a];
            let v = if x[ci].contains(&a) { 1.0 } else { 0.0 };
            fixings.push((VariableKey::Flow { b: c.b, s: c.s, tail: arc.tail, head: arc.head }, v));
        }
    }
    let fixed = m.lp.relax().fix_variables(&fixings).unwrap();
    let r = solve_lp(&fixed, &LpOptions::default()).unwrap();
    let expected = m.evaluate_energy(&g, &x).unwrap();
    if check_with(&g, &m.couples, g.n_relays, &x, &CoupleSet::derive_relays(&g, &x)).is_empty() {
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - expected).abs() <= 1e-7 * expected);
    }
}

#[test]
fn hamming_rows() {
    assert_eq!(hamming_distance(&[true, false, true], &[true, true, false]), 2);
    let inst = toy_instance(5);
    let g = build_graph(&inst).unwrap();
    let base = build_rob_band_blp(&g, &inst.scenarios, inst.relay_budget).unwrap();
    let r = base.solve(&g, &MipOptions::default()).unwrap();
    let (_, y_opt) = base.decode(r.values.as_ref().unwrap());

    // radius 0 pins y to the anchor
    let pinned = build_mod_rob(&base, &y_opt, 0, None, 0.1);
    let rp = pinned.solve(&g, &MipOptions::default()).unwrap();
    assert_eq!(pinned.decode(rp.values.as_ref().unwrap()).1, y_opt);

    // full radius without incumbent is the base program
    let open = build_mod_rob(&base, &y_opt, g.n_relays, None, 0.1);
    let ro = open.solve(&g, &MipOptions::default()).unwrap();
    assert!((ro.objective.unwrap() - r.objective.unwrap()).abs() <= 1e-6 * r.objective.unwrap());

    // demanding improvement over the optimum leaves nothing
    let improve = build_mod_rob(&base, &y_opt, g.n_relays, r.objective, 0.1);
    assert_eq!(improve.solve(&g, &MipOptions::default()).unwrap().status, MipStatus::Infeasible);
}

#[test]
fn example1_capacity_flags() {
    let routing_through_r0 = |inst: &BanInstance| {
        let g = build_graph(inst).unwrap();
        let couples = CoupleSet::new(&g, &inst.scenarios);
        let r0 = g.vertex_index("r0").unwrap();
        let s0 = g.vertex_index("s0").unwrap();
        let x: Vec<Vec<usize>> =
            couples.couples.iter().map(|c| vec![g.find_arc(c.b, r0).unwrap(), g.find_arc(r0, s0).unwrap()]).collect();
        let y = CoupleSet::derive_relays(&g, &x);
        check_feasibility(&g, inst, &x, &y)
    };
    for (v, flagged) in [(0.0, false), (50_000.0, false), (60_000.0, true), (100_000.0, true)] {
        let report = routing_through_r0(&example1_instance(&[v]));
        assert_eq!(!report.is_empty(), flagged, "variable load {v}");
        if flagged {
            assert_eq!(report.capacity_violations.len(), 1);
            assert_eq!(report.capacity_violations[0].load, 200_000.0 + v);
            assert_eq!(report.capacity_violations[0].capacity, 250_000.0);
        }
    }
}

#[test]
fn budget_and_conservation_reports() {
    let inst = line_instance(0.2, &[BodyPosition::new(0.1, 0.0, 0.0)]);
    let g = build_graph(&inst).unwrap();
    let couples = CoupleSet::new(&g, &inst.scenarios);
    let via_relay = vec![vec![g.find_arc(0, 1).unwrap(), g.find_arc(1, 2).unwrap()]];
    assert!(check_with(&g, &couples, 1, &via_relay, &[true]).is_empty());
    assert_eq!(check_with(&g, &couples, 0, &via_relay, &[true]).budget_violation, Some((1, 0)));
    let broken = vec![vec![g.find_arc(0, 1).unwrap()]];
    let report = check_with(&g, &couples, 1, &broken, &[true]);
    assert_eq!(report.conservation_violations.len(), 2);
    // relay used but not activated: zero capacity
    assert_eq!(check_with(&g, &couples, 1, &via_relay, &[false]).capacity_violations.len(), 1);
}

#[test]
fn model_rows_agree_with_checker_on_random_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..5 {
        let inst = toy_instance(seed);
        let g = build_graph(&inst).unwrap();
        let m = build_rob_band_blp(&g, &inst.scenarios, inst.relay_budget).unwrap();
        for _ in 0..40 {
            // random walk-based candidate paths (may be invalid) and random relay flips
            let x: Vec<Vec<usize>> = m
                .couples
                .couples
                .iter()
                .map(|c| {
                    let paths = crate::harness::simple_paths(&g, c.b, c.s, &c.arcs);
                    let mut p = paths[rng.gen_range(0..paths.len())].clone();
                    if rng.gen_bool(0.2) {
                        p.pop();
                    }
                    p
                })
                .collect();
            let mut y = CoupleSet::derive_relays(&g, &x);
            for on in &mut y {
                if rng.gen_bool(0.15) {
                    *on = !*on;
                }
            }
            let values = m.encode(&g, &x, &y);
            let lp_ok = m.lp.is_feasible(&values, FEAS_TOL, INT_TOL);
            let report = check_with(&g, &m.couples, inst.relay_budget, &x, &y);
            assert_eq!(lp_ok, report.is_empty(), "seed {seed}: {report:?}");
        }
    }
}

#[test]
fn extract_path_orders_arcs() {
    let inst = line_instance(0.2, &[BodyPosition::new(0.1, 0.0, 0.0)]);
    let g = build_graph(&inst).unwrap();
    let (a, b) = (g.find_arc(0, 1).unwrap(), g.find_arc(1, 2).unwrap());
    assert_eq!(extract_path(&g, 0, 2, &[b, a]), Some(vec![a, b]));
    assert_eq!(extract_path(&g, 0, 2, &[a]), None);
}

#[test]
fn mps_export_of_a_band_model() {
    let inst = toy_instance(1);
    let g = build_graph(&inst).unwrap();
    let m = build_rob_band_blp(&g, &inst.scenarios, inst.relay_budget).unwrap();
    let text = write_mps(&m.lp, "toy", |k| format!("{k:?}"));
    assert_eq!(text.lines().filter(|l| l.starts_with(" E  ")).count(), m.couples.couples.len() * (g.n_relays + 2));
    assert!(text.ends_with("ENDATA\n"));
}

#[test]
fn relaxation_bounds_the_optimum() {
    for seed in 0..4 {
        let inst = toy_instance(seed);
        let g = build_graph(&inst).unwrap();
        let m = build_rob_band_blp(&g, &inst.scenarios, inst.relay_budget).unwrap();
        let relaxed = solve_lp(&m.lp.relax(), &LpOptions::default()).unwrap();
        let r = m.solve(&g, &MipOptions::default()).unwrap();
        if let Some(z) = r.objective {
            assert!(relaxed.objective <= r.best_bound + 1e-6);
            assert!(r.best_bound <= z + 1e-6);
        }
    }
}
