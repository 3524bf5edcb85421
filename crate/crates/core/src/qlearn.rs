//! Tabular Q-learning over grid cells.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use rand::Rng;

use crate::gridworld::{Action, Cell, GridConfig, GridError};

#[derive(Debug, thiserror::Error)]
pub enum QError {
    #[error("reward must be finite, got {0}")]
    NonFiniteReward(f64),
    #[error("invalid learning parameter: {0}")]
    InvalidParams(String),
    #[error("q-table csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("q-table csv row {row}: {message}")]
    CsvRow { row: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub max_steps: usize,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            alpha: 0.2,
            gamma: 0.9,
            epsilon: 0.1,
            max_steps: 1000,
        }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<(), QError> {
        let bad = |msg: String| Err(QError::InvalidParams(msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must be in [0, 1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must be in [0, 1], got {}", self.epsilon));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        Ok(())
    }
}

/// Sparse action-value table. Absent entries read as `0.0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    entries: BTreeMap<(Cell, Action), f64>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// A table holding an explicit zero for every cell and action of `config`,
    /// walls included.
    pub fn dense(config: &GridConfig) -> Self {
        let entries = config
            .cells()
            .flat_map(|c| Action::ALL.map(|a| ((c, a), 0.0)))
            .collect();
        QTable { entries }
    }

    pub fn get(&self, s: Cell, a: Action) -> f64 {
        self.entries.get(&(s, a)).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, s: Cell, a: Action) -> bool {
        self.entries.contains_key(&(s, a))
    }

    /// Creates a zero entry if none exists.
    pub fn ensure(&mut self, s: Cell, a: Action) {
        self.entries.entry((s, a)).or_insert(0.0);
    }

    pub fn set(&mut self, s: Cell, a: Action, value: f64) {
        debug_assert!(value.is_finite());
        self.entries.insert((s, a), value);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((Cell, Action), f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = (Cell, Action)> + '_ {
        self.entries.keys().copied()
    }

    pub fn row(&self, s: Cell) -> [f64; 4] {
        Action::ALL.map(|a| self.get(s, a))
    }

    pub fn max_value(&self, s: Cell) -> f64 {
        self.row(s).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn reset(&mut self) {
        self.entries.clear();
    }

    /// `state_x,state_y,action,value`, one row per stored entry.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), QError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["state_x", "state_y", "action", "value"])?;
        for ((c, a), v) in self.iter() {
            w.write_record([
                c.x.to_string(),
                c.y.to_string(),
                a.name().to_string(),
                format!("{v:?}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), QError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, QError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut table = QTable::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = i + 2;
            let bad = |message: String| QError::CsvRow { row, message };
            if rec.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", rec.len())));
            }
            let x = rec[0].parse().map_err(|e| bad(format!("state_x: {e}")))?;
            let y = rec[1].parse().map_err(|e| bad(format!("state_y: {e}")))?;
            let a =
                Action::from_name(&rec[2]).ok_or_else(|| bad(format!("action `{}`", &rec[2])))?;
            let v: f64 = rec[3].parse().map_err(|e| bad(format!("value: {e}")))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value {v}")));
            }
            table.set(Cell::new(x, y), a, v);
        }
        Ok(table)
    }
}

/// `Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))`, with the
/// bootstrap term dropped when `s'` is terminal.
pub fn q_update(
    q: &mut QTable,
    s: Cell,
    a: Action,
    reward: f64,
    next: Cell,
    terminal: bool,
    params: &LearnParams,
) -> Result<(), QError> {
    if !reward.is_finite() {
        return Err(QError::NonFiniteReward(reward));
    }
    let bootstrap = if terminal { 0.0 } else { q.max_value(next) };
    let current = q.get(s, a);
    let target = reward + params.gamma * bootstrap;
    q.set(s, a, current + params.alpha * (target - current));
    Ok(())
}

/// Maximising actions of `Q(s, ·)` in `Action` order.
pub fn argmax_actions(q: &QTable, s: Cell) -> Vec<Action> {
    let row = q.row(s);
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Action::ALL
        .into_iter()
        .filter(|a| row[a.index()] == best)
        .collect()
}

/// With probability `epsilon` a uniformly random action, otherwise a
/// maximiser of `Q(s, ·)` with ties broken uniformly.
pub fn select_epsilon_greedy<R: Rng + ?Sized>(
    q: &QTable,
    s: Cell,
    params: &LearnParams,
    rng: &mut R,
) -> Action {
    if rng.gen::<f64>() < params.epsilon {
        return Action::ALL[rng.gen_range(0..Action::ALL.len())];
    }
    let best = argmax_actions(q, s);
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.gen_range(0..best.len())]
    }
}

/// Per-state argmax, ties resolved by `Up < Down < Left < Right`.
pub fn greedy_policy(q: &QTable, states: &BTreeSet<Cell>) -> BTreeMap<Cell, Action> {
    states
        .iter()
        .map(|&s| (s, argmax_actions(q, s)[0]))
        .collect()
}

/// Follows `policy` deterministically from the start. Returns the number of
/// steps to the goal, or `None` if the rollout loops or leaves the policy's
/// domain within `limit` steps.
pub fn greedy_rollout_steps(
    config: &GridConfig,
    policy: &BTreeMap<Cell, Action>,
    limit: usize,
) -> Result<Option<usize>, GridError> {
    let mut s = config.start();
    for steps in 1..=limit {
        let Some(&a) = policy.get(&s) else {
            return Ok(None);
        };
        s = config.destination(s, a);
        if s == config.goal() {
            return Ok(Some(steps));
        }
    }
    Ok(None)
}
