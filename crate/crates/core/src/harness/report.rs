use serde::{Deserialize, Serialize};

use crate::model::CoupleSet;
use crate::netgraph::BanGraph;

use super::HarnessError;

/// Energy figures of one routing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Per-bit energy (uJ/bit), demand-weighted within each scenario and
    /// averaged over scenarios.
    pub e_avg: f64,
    /// Worst-scenario energy E (nJ/s), the objective being minimized.
    pub e_max: f64,
}

/// Energy report of `routing` (arc sets per couple, in `couples` order).
pub fn report_energy(graph: &BanGraph, couples: &CoupleSet, routing: &[Vec<usize>]) -> Result<EnergyReport, HarnessError> {
    let per_scenario = couples.scenario_energies(graph, routing);
    let mut sum = 0.0;
    for (k, energy) in per_scenario.iter().enumerate() {
        let demand: f64 = couples.couples.iter().map(|c| c.rates[k]).sum();
        if !(demand > 0.0) {
            return Err(HarnessError::ZeroDemand(couples.scenario_ids[k].clone()));
        }
        sum += energy / demand / 1000.0;
    }
    Ok(EnergyReport {
        e_avg: sum / per_scenario.len() as f64,
        e_max: per_scenario.into_iter().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::brute_force_optimum;
    use crate::harness::fixtures::toy_instance;
    use crate::instance::{BodyPosition, CoupleRate, Scenario};
    use crate::netgraph::build_graph;
    use crate::netgraph::tests::line_instance;

    #[test]
    fn single_arc_reports_its_coefficient() {
        let inst = line_instance(0.1, &[]);
        let g = build_graph(&inst).unwrap();
        let couples = CoupleSet::new(&g, &inst.scenarios);
        let r = report_energy(&g, &couples, &[vec![0]]).unwrap();
        assert!((r.e_avg - g.arcs[0].e_coeff / 1000.0).abs() <= 1e-12 * r.e_avg);
    }

    #[test]
    fn identical_scenarios_average_to_one() {
        let mut inst = line_instance(0.2, &[BodyPosition::new(0.1, 0.0, 0.0)]);
        inst.tx_range = 0.15;
        let g = build_graph(&inst).unwrap();
        let one = CoupleSet::new(&g, &inst.scenarios);
        inst.scenarios.push(Scenario { id: "copy".into(), ..inst.scenarios[0].clone() });
        let two = CoupleSet::new(&g, &inst.scenarios);
        let path = vec![vec![0, 1]];
        assert_eq!(report_energy(&g, &one, &path).unwrap(), report_energy(&g, &two, &path).unwrap());
    }

    #[test]
    fn matches_double_loop_summation() {
        for seed in 0..5 {
            let inst = toy_instance(seed);
            let g = build_graph(&inst).unwrap();
            let couples = CoupleSet::new(&g, &inst.scenarios);
            let sol = brute_force_optimum(&inst).unwrap().unwrap();
            let mut per_bit = Vec::new();
            for sc in &inst.scenarios {
                let (mut num, mut den) = (0.0, 0.0);
                for (c, path) in couples.couples.iter().zip(&sol.routing) {
                    let d = sc.rate(&g.vertices[c.b].id, &g.vertices[c.s].id);
                    for &a in path {
                        num += g.arcs[a].e_coeff * d;
                    }
                    den += d;
                }
                per_bit.push(num / den / 1000.0);
            }
            let expected = per_bit.iter().sum::<f64>() / per_bit.len() as f64;
            let r = report_energy(&g, &couples, &sol.routing).unwrap();
            assert!((r.e_avg - expected).abs() <= 1e-12 * expected);
            assert!((r.e_max - sol.energy).abs() <= 1e-9 * sol.energy);
        }
    }

    #[test]
    fn zero_demand_scenario_is_undefined() {
        let mut inst = line_instance(0.1, &[]);
        let mut idle = inst.scenarios[0].clone();
        idle.id = "idle".into();
        idle.rates = idle.rates.iter().map(|r| CoupleRate { rate: 0.0, ..r.clone() }).collect();
        inst.scenarios.push(idle);
        let g = build_graph(&inst).unwrap();
        let couples = CoupleSet::new(&g, &inst.scenarios);
        assert!(matches!(report_energy(&g, &couples, &[vec![0]]), Err(HarnessError::ZeroDemand(s)) if s == "idle"));
    }
}
