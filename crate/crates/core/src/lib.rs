//! Online answer-set construction of an MDP's state set, wrapped around
//! tabular Q-learning, plus the non-stationary grid-world experiments that
//! compare it against plain Q-learning.
//!
//! * [`asp`]: fragment logic programs (facts, `1{..}1` choice rules,
//!   integrity constraints), their text format, and answer-set enumeration.
//! * [`gridworld`]: the stochastic grid environment and its change schedule.
//! * [`qlearn`]: the Q-table, update rule, and action selection.
//! * [`oasp`]: the agent that builds per-state programs while it explores.
//! * [`baseline`]: plain Q-learning over the full fixed table.
//! * [`experiment`]: scenario driver, metrics, aggregation, CSV output.
//! * [`cli`]: argument and config-file handling for the `oaspmdp` binary.

pub mod asp;
pub mod baseline;
pub mod cli;
pub mod experiment;
pub mod gridworld;
pub mod oasp;
pub mod par;
pub mod qlearn;
pub mod rng;

use rand::Rng;

use crate::gridworld::GridConfig;
use crate::qlearn::QTable;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Asp(#[from] asp::AspError),
    #[error(transparent)]
    Grid(#[from] gridworld::GridError),
    #[error(transparent)]
    Q(#[from] qlearn::QError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("aggregation: {0}")]
    Aggregate(String),
    #[error("scenario: {0}")]
    Scenario(String),
}

/// Outcome of one episode.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeStats {
    pub steps: usize,
    pub return_: f64,
    pub reached_goal: bool,
}

impl EpisodeStats {
    fn record(&mut self, reward: f64) {
        self.steps += 1;
        self.return_ += reward;
    }
}

/// An agent that learns across episodes in a (possibly changing) grid.
///
/// Environment transitions draw from `env_rng` and action selection from
/// `policy_rng`, so two learners fed equal streams can be compared step for
/// step.
pub trait Learner {
    fn run_episode<E: Rng + ?Sized, P: Rng + ?Sized>(
        &mut self,
        env: &GridConfig,
        env_rng: &mut E,
        policy_rng: &mut P,
    ) -> Result<EpisodeStats, Error>;

    fn q(&self) -> &QTable;

    /// Number of `(state, action)` pairs the learner holds values for.
    fn known_pairs(&self) -> usize;

    /// Called by the experiment driver before the first episode of a new
    /// phase. Only the baseline reacts.
    fn environment_changed(&mut self, config: &GridConfig);
}
