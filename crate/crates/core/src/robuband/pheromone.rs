use crate::harness::gap_fraction;
use crate::model::BandModel;

/// Trail values per (couple, arc), aligned with `Couple::arcs`.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneTable {
    pub tau: Vec<Vec<f64>>,
    tau0: Vec<Vec<f64>>,
    pub floor: f64,
}

/// Outcome of one trail update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateOutcome {
    Applied { delta_scale: f64 },
    /// Moving average not above the bound; nothing changed.
    Degenerate,
}

impl PheromoneTable {
    /// Initial trails from a relaxation point of `model`, clamped at `floor`.
    pub fn from_relaxation(model: &BandModel, values: &[f64], floor: f64) -> Self {
        let tau0: Vec<Vec<f64>> =
            model.flow_vars.iter().map(|vars| vars.iter().map(|&j| values[j].max(floor)).collect()).collect();
        PheromoneTable { tau: tau0.clone(), tau0, floor }
    }

    pub fn tau0(&self) -> &[Vec<f64>] {
        &self.tau0
    }

    /// Sum of current trails over the local arc positions of `path` for couple `ci`.
    pub fn path_score(&self, ci: usize, local_arcs: &[usize]) -> f64 {
        local_arcs.iter().map(|&l| self.tau[ci][l]).sum()
    }

    /// Rewards (or penalizes) the arcs of one solution with value `z`:
    /// tau += tau0 * (1 - (z - lb) / (z_bar - lb)), then clamps at the floor.
    /// Nothing changes when z_bar is not meaningfully above lb.
    /// `used` lists local arc positions per couple.
    pub fn update(&mut self, used: &[Vec<usize>], z: f64, z_bar: f64, lb: f64) -> UpdateOutcome {
        if !(z_bar > lb) || gap_fraction(z_bar, lb) == 0.0 {
            log::debug!("pheromone update skipped: moving average {z_bar} not above bound {lb}");
            return UpdateOutcome::Degenerate;
        }
        let scale = 1.0 - (z - lb) / (z_bar - lb);
        for (ci, arcs) in used.iter().enumerate() {
            for &l in arcs {
                let t = &mut self.tau[ci][l];
                *t = (*t + self.tau0[ci][l] * scale).max(self.floor);
            }
        }
        UpdateOutcome::Applied { delta_scale: scale }
    }
}

/// Fixed-width moving average seeded with copies of the first value.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingWindow {
    values: std::collections::VecDeque<f64>,
    width: usize,
}

impl MovingWindow {
    pub fn new(width: usize) -> Self {
        MovingWindow { values: Default::default(), width: width.max(1) }
    }

    pub fn push(&mut self, z: f64) {
        if self.values.is_empty() {
            self.values.extend(std::iter::repeat_n(z, self.width));
            return;
        }
        self.values.pop_front();
        self.values.push_back(z);
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.values.is_empty()).then(|| self.values.iter().sum::<f64>() / self.values.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(tau0: Vec<Vec<f64>>) -> PheromoneTable {
        PheromoneTable { tau: tau0.clone(), tau0, floor: 1e-3 }
    }

    #[test]
    fn reward_at_bound_and_neutral_at_average() {
        let mut t = table(vec![vec![0.5, 0.25]]);
        t.update(&[vec![0]], 10.0, 20.0, 10.0);
        assert_eq!(t.tau[0], vec![1.0, 0.25]);
        t.update(&[vec![0, 1]], 20.0, 20.0, 10.0);
        assert_eq!(t.tau[0], vec![1.0, 0.25]);
    }

    #[test]
    fn penalty_is_clamped_at_floor() {
        let mut t = table(vec![vec![0.5]]);
        // z - lb is three times z_bar - lb: delta = 0.5 * (1 - 3) = -1
        assert_eq!(t.update(&[vec![0]], 40.0, 20.0, 10.0), UpdateOutcome::Applied { delta_scale: -2.0 });
        assert_eq!(t.tau[0][0], 1e-3);
        assert_eq!(t.tau0()[0][0], 0.5);
    }

    #[test]
    fn degenerate_average_changes_nothing() {
        let mut t = table(vec![vec![0.5]]);
        assert_eq!(t.update(&[vec![0]], 12.0, 10.0, 10.0), UpdateOutcome::Degenerate);
        assert_eq!(t.tau[0][0], 0.5);
    }

    #[test]
    fn window_seeds_and_slides() {
        let mut w = MovingWindow::new(4);
        assert_eq!(w.mean(), None);
        w.push(8.0);
        assert_eq!(w.mean(), Some(8.0));
        w.push(4.0);
        assert_eq!(w.mean(), Some(7.0));
    }

    proptest! {
        #[test]
        fn floor_survives_many_updates(
            seeds in proptest::collection::vec(0.0f64..1.0, 6),
            steps in proptest::collection::vec((0usize..6, 0.0f64..100.0, 0.0f64..100.0), 1000),
        ) {
            let mut t = PheromoneTable { tau: vec![seeds.iter().map(|v| v.max(1e-3)).collect()], tau0: vec![seeds.iter().map(|v| v.max(1e-3)).collect()], floor: 1e-3 };
            for (arc, z, zbar) in steps {
                t.update(&[vec![arc, (arc + 1) % 6]], 50.0 + z, 50.0 + zbar, 50.0);
                prop_assert!(t.tau[0].iter().all(|&v| v >= 1e-3));
            }
        }
    }
}
