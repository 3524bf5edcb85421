//! Scenario driver: runs the baseline learner and the oASP agent through
//! identical change schedules and records per-episode metrics.

mod table;

use std::fmt;
use std::fs;
use std::path::Path;

pub use table::{aggregate, fmt_sig, MeanRow, MeanTable, CSV_HEADER};

use crate::baseline::QLearner;
use crate::gridworld::{generate_walls, Cell, GridConfig, Schedule};
use crate::oasp::OaspAgent;
use crate::par::{self, Execution};
use crate::qlearn::{LearnParams, QTable};
use crate::rng::substream;
use crate::{Error, Learner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentKind {
    Baseline,
    Oasp,
}

impl AgentKind {
    pub const ALL: [AgentKind; 2] = [AgentKind::Baseline, AgentKind::Oasp];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Baseline => "baseline",
            AgentKind::Oasp => "oasp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        AgentKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Wall ratio changes 0% -> 10% -> 25% under 90/5/5 transitions.
    Walls,
    /// Fixed 25% walls, transitions 50/25 -> 75/12.5 -> 90/5.
    Probs,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Walls => "walls",
            ScenarioKind::Probs => "probs",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "walls" => Some(ScenarioKind::Walls),
            "probs" => Some(ScenarioKind::Probs),
            _ => None,
        }
    }
}

/// Root-mean-square difference between two tables over the union of their
/// keys, absent entries reading as zero. Two empty tables give 0.
pub fn rmsd(prev: &QTable, curr: &QTable) -> f64 {
    let mut a = prev.iter().peekable();
    let mut b = curr.iter().peekable();
    let (mut sum, mut n) = (0.0, 0usize);
    loop {
        let d = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(&(ka, va)), Some(&(kb, vb))) => match ka.cmp(&kb) {
                std::cmp::Ordering::Less => {
                    a.next();
                    va
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                    vb
                }
                std::cmp::Ordering::Equal => {
                    a.next();
                    b.next();
                    vb - va
                }
            },
            (Some(&(_, va)), None) => {
                a.next();
                va
            }
            (None, Some(&(_, vb))) => {
                b.next();
                vb
            }
        };
        sum += d * d;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub width: usize,
    pub height: usize,
    pub episodes: usize,
    pub trials: usize,
    pub params: LearnParams,
    /// Wall ratio per phase; a single value applies to every phase.
    pub wall_ratios: Vec<f64>,
    /// Intended-direction probability per phase; a single value applies to
    /// every phase. Each orthogonal direction gets `(1 - p) / 2`.
    pub probs: Vec<f64>,
    /// Episodes at which phases 1, 2, ... begin.
    pub changes: Vec<usize>,
}

impl ScenarioSpec {
    pub fn standard(kind: ScenarioKind) -> Self {
        let (wall_ratios, probs) = match kind {
            ScenarioKind::Walls => (vec![0.0, 0.10, 0.25], vec![0.9]),
            ScenarioKind::Probs => (vec![0.25], vec![0.5, 0.75, 0.9]),
        };
        ScenarioSpec {
            kind,
            width: 10,
            height: 10,
            episodes: 3000,
            trials: 30,
            params: LearnParams::default(),
            wall_ratios,
            probs,
            changes: vec![1000, 2000],
        }
    }

    pub fn phase_count(&self) -> usize {
        self.changes.len() + 1
    }

    pub fn phase_starts(&self) -> Vec<usize> {
        std::iter::once(0)
            .chain(self.changes.iter().copied())
            .collect()
    }

    fn per_phase(values: &[f64], k: usize) -> f64 {
        if values.len() == 1 {
            values[0]
        } else {
            values[k]
        }
    }

    pub fn wall_ratio(&self, phase: usize) -> f64 {
        Self::per_phase(&self.wall_ratios, phase)
    }

    pub fn p_intended(&self, phase: usize) -> f64 {
        Self::per_phase(&self.probs, phase)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Scenario(m));
        self.params.validate()?;
        if self.width == 0 || self.height == 0 || self.width * self.height < 2 {
            return bad(format!("grid {}x{} too small", self.width, self.height));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.episodes == 0 {
            return bad("episodes must be at least 1".into());
        }
        if self.changes.contains(&0) || self.changes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("change episodes must be positive and strictly increasing".into());
        }
        let phases = self.phase_count();
        for (name, values) in [("wall ratios", &self.wall_ratios), ("probs", &self.probs)] {
            if values.len() != 1 && values.len() != phases {
                return bad(format!(
                    "{name}: expected 1 or {phases} values, got {}",
                    values.len()
                ));
            }
        }
        if let Some(r) = self.wall_ratios.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return bad(format!("wall ratio {r} outside [0, 1)"));
        }
        if let Some(p) = self.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("probability {p} outside [0, 1]"));
        }
        Ok(())
    }

    /// Phase configurations for one trial. A phase draws a fresh wall
    /// layout when its ratio differs from the previous phase's; otherwise it
    /// keeps the previous layout.
    pub fn build_schedule(&self, trial_seed: u64) -> Result<Schedule, Error> {
        let start = Cell::new(0, 0);
        let goal = Cell::new(self.width - 1, self.height - 1);
        let mut phases = Vec::with_capacity(self.phase_count());
        let mut walls = Default::default();
        for (k, first_episode) in self.phase_starts().into_iter().enumerate() {
            let ratio = self.wall_ratio(k);
            if k == 0 || ratio != self.wall_ratio(k - 1) {
                let mut rng = substream(trial_seed, "walls", k as u64);
                walls = generate_walls(self.width, self.height, ratio, start, goal, &mut rng)?;
            }
            let config = GridConfig::new(
                self.width,
                self.height,
                walls.clone(),
                start,
                goal,
                self.p_intended(k),
            )?;
            phases.push((first_episode, config));
        }
        Ok(Schedule::new(phases)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub agent: AgentKind,
    pub rmsd: f64,
    pub return_: f64,
    pub steps: usize,
    pub pair_count: usize,
    pub reached_goal: bool,
}

/// Deterministic-optimal performance for one phase's layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReference {
    pub start_episode: usize,
    pub steps: usize,
    pub return_: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    /// Episode-major, baseline before oASP within an episode.
    pub records: Vec<EpisodeRecord>,
    pub references: Vec<PhaseReference>,
}

impl TrialResult {
    pub fn reference_at(&self, episode: usize) -> PhaseReference {
        let i = self
            .references
            .partition_point(|r| r.start_episode <= episode)
            - 1;
        self.references[i]
    }

    pub fn series(&self, agent: AgentKind) -> impl Iterator<Item = &EpisodeRecord> + '_ {
        self.records.iter().filter(move |r| r.agent == agent)
    }
}

/// What a trial leaves behind besides its metrics.
#[derive(Debug, Clone)]
pub struct TrialArtifacts {
    pub schedule: Schedule,
    pub oasp: OaspAgent,
}

struct Runner<L> {
    kind: AgentKind,
    learner: L,
    env_rng: crate::rng::Stream,
    policy_rng: crate::rng::Stream,
}

impl<L: Learner> Runner<L> {
    fn new(kind: AgentKind, learner: L, seed: u64) -> Self {
        Runner {
            kind,
            learner,
            env_rng: substream(seed, &format!("{}/env", kind.name()), 0),
            policy_rng: substream(seed, &format!("{}/policy", kind.name()), 0),
        }
    }

    fn episode(&mut self, schedule: &Schedule, episode: usize) -> Result<EpisodeRecord, Error> {
        let config = schedule.config_at(episode);
        // taken before a reset so the reset itself shows in the deviation
        let before = self.learner.q().clone();
        if schedule.is_change(episode) {
            self.learner.environment_changed(config);
        }
        let stats = self
            .learner
            .run_episode(config, &mut self.env_rng, &mut self.policy_rng)?;
        Ok(EpisodeRecord {
            episode,
            agent: self.kind,
            rmsd: rmsd(&before, self.learner.q()),
            return_: stats.return_,
            steps: stats.steps,
            pair_count: self.learner.known_pairs(),
            reached_goal: stats.reached_goal,
        })
    }
}

/// One trial: both agents over the same schedule, each with its own
/// environment and policy streams derived from `seed`.
pub fn run_trial(spec: &ScenarioSpec, seed: u64) -> Result<(TrialResult, TrialArtifacts), Error> {
    let schedule = spec.build_schedule(seed)?;
    let references = schedule
        .phases()
        .iter()
        .map(|(start, config)| {
            let steps = config.optimal_steps()?;
            Ok(PhaseReference {
                start_episode: *start,
                steps,
                return_: crate::gridworld::GOAL_BONUS - steps as f64,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let first = schedule.config_at(0);
    let mut baseline = Runner::new(AgentKind::Baseline, QLearner::new(first, spec.params), seed);
    let mut oasp = Runner::new(AgentKind::Oasp, OaspAgent::new(spec.params), seed);

    let mut records = Vec::with_capacity(2 * spec.episodes);
    for episode in 0..spec.episodes {
        records.push(baseline.episode(&schedule, episode)?);
        records.push(oasp.episode(&schedule, episode)?);
    }
    Ok((
        TrialResult {
            seed,
            records,
            references,
        },
        TrialArtifacts {
            schedule,
            oasp: oasp.learner,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub spec: ScenarioSpec,
    pub base_seed: u64,
    pub trials: Vec<TrialResult>,
    /// Schedule and final oASP agent of the first trial.
    pub first: TrialArtifacts,
}

/// Runs `spec.trials` trials with seeds `base_seed + i`.
pub fn run_scenario(
    spec: &ScenarioSpec,
    base_seed: u64,
    exec: Execution,
) -> Result<ScenarioRun, Error> {
    spec.validate()?;
    let seeds: Vec<u64> = (0..spec.trials as u64)
        .map(|i| base_seed.wrapping_add(i))
        .collect();
    let outcomes = par::map(seeds, exec, |seed| run_trial(spec, seed));

    let mut trials = Vec::with_capacity(spec.trials);
    let mut first = None;
    for outcome in outcomes {
        let (trial, artifacts) = outcome?;
        trials.push(trial);
        first.get_or_insert(artifacts);
    }
    Ok(ScenarioRun {
        spec: spec.clone(),
        base_seed,
        trials,
        first: first.expect("at least one trial"),
    })
}

/// Mean steps and return per agent over the last `window` episodes.
pub fn final_summary(table: &MeanTable, window: usize) -> Vec<(AgentKind, f64, f64)> {
    AgentKind::ALL
        .into_iter()
        .map(|kind| {
            let rows: Vec<&MeanRow> = table.rows.iter().filter(|r| r.agent == kind).collect();
            let tail = &rows[rows.len().saturating_sub(window)..];
            let n = tail.len().max(1) as f64;
            let steps = tail.iter().map(|r| r.steps).sum::<f64>() / n;
            let ret = tail.iter().map(|r| r.return_).sum::<f64>() / n;
            (kind, steps, ret)
        })
        .collect()
}

/// Writes `curves.csv`, `grid_phase<k>.txt`, and the first trial's oASP
/// snapshot (`programs/`, `qtable.csv`) under `dir`.
pub fn write_outputs(run: &ScenarioRun, table: &MeanTable, dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    table.write_csv(&dir.join("curves.csv"))?;
    for (k, (_, config)) in run.first.schedule.phases().iter().enumerate() {
        fs::write(dir.join(format!("grid_phase{k}.txt")), config.to_ascii())?;
    }
    run.first.oasp.save_snapshot(dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::Action;

    fn table(entries: &[((usize, usize), Action, f64)]) -> QTable {
        let mut q = QTable::new();
        for &((x, y), a, v) in entries {
            q.set(Cell::new(x, y), a, v);
        }
        q
    }

    #[test]
    fn rmsd_cases() {
        let q = table(&[((0, 0), Action::Up, 1.5), ((1, 0), Action::Left, -2.0)]);
        assert_eq!(rmsd(&q, &q), 0.0);
        assert_eq!(rmsd(&QTable::new(), &QTable::new()), 0.0);
        assert_eq!(
            rmsd(&QTable::new(), &table(&[((0, 0), Action::Up, 2.0)])),
            2.0
        );

        let prev = table(&[((0, 0), Action::Up, 1.0), ((0, 1), Action::Up, 0.0)]);
        let curr = table(&[((0, 0), Action::Up, 0.0), ((0, 1), Action::Up, 2.0)]);
        assert!((rmsd(&prev, &curr) - (2.5f64).sqrt()).abs() < 1e-12);
        assert!((rmsd(&prev, &curr) - 1.5811).abs() < 1e-4);
    }

    #[test]
    fn rmsd_is_symmetric_over_disjoint_keys() {
        let a = table(&[((0, 0), Action::Up, 1.0), ((2, 2), Action::Down, 3.0)]);
        let b = table(&[((1, 1), Action::Right, -4.0), ((2, 2), Action::Down, 1.0)]);
        assert_eq!(rmsd(&a, &b), rmsd(&b, &a));
        // keys: 3 in the union; squared diffs 1 + 4 + 16
        assert!((rmsd(&a, &b) - (21.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn standard_defaults() {
        let walls = ScenarioSpec::standard(ScenarioKind::Walls);
        assert_eq!((walls.width, walls.height, walls.episodes), (10, 10, 3000));
        assert_eq!(walls.phase_starts(), vec![0, 1000, 2000]);
        assert_eq!(walls.wall_ratio(2), 0.25);
        assert_eq!(walls.p_intended(1), 0.9);
        let probs = ScenarioSpec::standard(ScenarioKind::Probs);
        assert_eq!(probs.p_intended(0), 0.5);
        assert_eq!(probs.p_intended(1), 0.75);
        assert_eq!(probs.wall_ratio(1), 0.25);
        assert!(walls.validate().is_ok() && probs.validate().is_ok());
    }

    #[test]
    fn schedules_follow_the_scenario() {
        let s = ScenarioSpec::standard(ScenarioKind::Walls)
            .build_schedule(4)
            .unwrap();
        let counts: Vec<usize> = s.phases().iter().map(|(_, c)| c.walls().len()).collect();
        assert_eq!(counts, vec![0, 10, 25]);

        let s = ScenarioSpec::standard(ScenarioKind::Probs)
            .build_schedule(4)
            .unwrap();
        let phases = s.phases();
        assert_eq!(phases[0].1.walls().len(), 25);
        assert_eq!(phases[0].1.walls(), phases[2].1.walls());
        assert_eq!(phases[1].1.p_orthogonal(), 0.125);
        assert!((phases[2].1.p_orthogonal() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let base = ScenarioSpec::standard(ScenarioKind::Walls);
        let cases = [
            ScenarioSpec {
                trials: 0,
                ..base.clone()
            },
            ScenarioSpec {
                changes: vec![2000, 1000],
                ..base.clone()
            },
            ScenarioSpec {
                wall_ratios: vec![0.0, 0.1],
                ..base.clone()
            },
            ScenarioSpec {
                probs: vec![1.2],
                ..base.clone()
            },
            ScenarioSpec {
                width: 1,
                height: 1,
                ..base.clone()
            },
        ];
        for spec in cases {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
    }

    #[test]
    fn smoke_single_episode() {
        let spec = ScenarioSpec {
            trials: 1,
            episodes: 1,
            ..ScenarioSpec::standard(ScenarioKind::Walls)
        };
        let run = run_scenario(&spec, 3, Execution::Sequential).unwrap();
        assert_eq!(run.trials.len(), 1);
        let records = &run.trials[0].records;
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].agent, AgentKind::Baseline);
        assert_eq!(records[1].agent, AgentKind::Oasp);
        assert_eq!(records[0].pair_count, 400);
        assert_eq!(run.trials[0].reference_at(0).steps, 18);
        assert_eq!(run.trials[0].reference_at(0).return_, 82.0);
    }
}
