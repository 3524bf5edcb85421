//! Plain tabular Q-learning over the full, fixed state space.

use rand::Rng;

use crate::gridworld::GridConfig;
use crate::qlearn::{q_update, select_epsilon_greedy, LearnParams, QTable};
use crate::{EpisodeStats, Error, Learner};

/// Q-learning with a dense table over every `width × height` cell and all
/// four actions. The table is rebuilt whenever the environment changes.
#[derive(Debug, Clone)]
pub struct QLearner {
    q: QTable,
    params: LearnParams,
}

impl QLearner {
    pub fn new(config: &GridConfig, params: LearnParams) -> Self {
        QLearner {
            q: QTable::dense(config),
            params,
        }
    }

    /// Starts from an existing table, e.g. one learned by another agent.
    pub fn with_table(q: QTable, params: LearnParams) -> Self {
        QLearner { q, params }
    }

    pub fn params(&self) -> &LearnParams {
        &self.params
    }
}

impl Learner for QLearner {
    fn run_episode<E: Rng + ?Sized, P: Rng + ?Sized>(
        &mut self,
        env: &GridConfig,
        env_rng: &mut E,
        policy_rng: &mut P,
    ) -> Result<EpisodeStats, Error> {
        let mut stats = EpisodeStats::default();
        let mut s = env.start();
        while stats.steps < self.params.max_steps {
            let a = select_epsilon_greedy(&self.q, s, &self.params, policy_rng);
            let out = env.step(s, a, env_rng)?;
            q_update(
                &mut self.q,
                s,
                a,
                out.reward,
                out.next,
                out.terminal,
                &self.params,
            )?;
            stats.record(out.reward);
            s = out.next;
            if out.terminal {
                stats.reached_goal = true;
                break;
            }
        }
        Ok(stats)
    }

    fn q(&self) -> &QTable {
        &self.q
    }

    fn known_pairs(&self) -> usize {
        self.q.len()
    }

    fn environment_changed(&mut self, config: &GridConfig) {
        self.q = QTable::dense(config);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::Cell;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    #[test]
    fn pair_count_is_fixed_and_reset_restores_it() {
        let config = GridConfig::corners(4, 4, BTreeSet::from([Cell::new(1, 1)]), 0.9).unwrap();
        let mut agent = QLearner::new(&config, LearnParams::default());
        assert_eq!(agent.known_pairs(), 64);
        let (mut e, mut p) = (ChaCha8Rng::seed_from_u64(1), ChaCha8Rng::seed_from_u64(2));
        for _ in 0..20 {
            agent.run_episode(&config, &mut e, &mut p).unwrap();
            assert_eq!(agent.known_pairs(), 64);
        }
        assert!(agent.q().iter().any(|(_, v)| v != 0.0));
        agent.environment_changed(&config);
        assert_eq!(agent.q(), &QTable::dense(&config));
    }

    #[test]
    fn episode_accounting() {
        let config = GridConfig::corners(5, 5, BTreeSet::new(), 0.9).unwrap();
        let mut agent = QLearner::new(&config, LearnParams::default());
        let (mut e, mut p) = (ChaCha8Rng::seed_from_u64(3), ChaCha8Rng::seed_from_u64(4));
        for _ in 0..50 {
            let st = agent.run_episode(&config, &mut e, &mut p).unwrap();
            assert!(st.steps >= 1 && st.steps <= 1000);
            if st.reached_goal {
                assert_eq!(st.return_, 100.0 - st.steps as f64);
            } else {
                assert_eq!(st.return_, -(st.steps as f64));
            }
        }
    }
}
