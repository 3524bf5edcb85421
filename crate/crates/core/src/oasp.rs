//! Online construction of the observed state set around Q-learning.
//!
//! The agent starts knowing only the four actions. Each cell it visits gets
//! a logic program with the cell's atom as its only fact; every observed
//! transition `(s, a, s')` adds `s'` as a head of the choice rule keyed by
//! the body `{a, s}`. Enumerating the answer sets of a state's program with
//! the action asserted yields that action's known successors, and each
//! `(s, a)` found this way gets a Q entry. Q-learning then runs over exactly
//! those entries.
//!
//! State atoms are `s_<x>_<y>`, action atoms `a_up`, `a_down`, `a_left`,
//! `a_right`.
//!
//! ```text
//! % programs/s_0_0.lp after an upward move that slipped right once
//! s_0_0.
//! 1{ s_0_1; s_1_0 }1 :- a_up, s_0_0.
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::asp::{enumerate_answer_sets, parse_program, AspError, Atom, Program};
use crate::gridworld::{Action, Cell, GridConfig};
use crate::qlearn::{q_update, select_epsilon_greedy, LearnParams, QTable};
use crate::{EpisodeStats, Error, Learner};

pub fn state_atom(c: Cell) -> Atom {
    Atom::new(&format!("s_{}_{}", c.x, c.y)).expect("state atom names are well-formed")
}

pub fn action_atom(a: Action) -> Atom {
    Atom::new(&format!("a_{}", a.name())).expect("action atom names are well-formed")
}

pub fn cell_of(atom: &Atom) -> Option<Cell> {
    let rest = atom.name().strip_prefix("s_")?;
    let (x, y) = rest.split_once('_')?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(x) || !digits(y) {
        return None;
    }
    Some(Cell::new(x.parse().ok()?, y.parse().ok()?))
}

pub fn action_of(atom: &Atom) -> Option<Action> {
    Action::from_name(atom.name().strip_prefix("a_")?)
}

fn body(s: Cell, a: Action) -> BTreeSet<Atom> {
    BTreeSet::from([state_atom(s), action_atom(a)])
}

#[derive(Debug, Clone)]
pub struct OaspAgent {
    observed: BTreeSet<Cell>,
    programs: BTreeMap<Cell, Program>,
    q: QTable,
    params: LearnParams,
}

impl OaspAgent {
    pub fn new(params: LearnParams) -> Self {
        OaspAgent {
            observed: BTreeSet::new(),
            programs: BTreeMap::new(),
            q: QTable::new(),
            params,
        }
    }

    pub fn observed(&self) -> &BTreeSet<Cell> {
        &self.observed
    }

    pub fn programs(&self) -> &BTreeMap<Cell, Program> {
        &self.programs
    }

    pub fn program(&self, s: Cell) -> Option<&Program> {
        self.programs.get(&s)
    }

    pub fn params(&self) -> &LearnParams {
        &self.params
    }

    /// Distinct `(state, action)` bodies across all state programs.
    pub fn known_pairs(&self) -> usize {
        self.programs.values().map(|p| p.choice_rules().len()).sum()
    }

    /// Successors of `(s, a)` read off the answer sets of `s`'s program with
    /// `a` asserted. A set holding no atom besides `s` and `a` is a move that
    /// stayed in place.
    pub fn successors(&self, s: Cell, a: Action) -> Result<Vec<Cell>, AspError> {
        let Some(program) = self.programs.get(&s) else {
            return Ok(Vec::new());
        };
        let (s_atom, a_atom) = (state_atom(s), action_atom(a));
        let mut query = program.clone();
        query.add_fact(a_atom.clone());
        let mut out = Vec::new();
        for set in enumerate_answer_sets(&query)? {
            if !set.contains(&a_atom) {
                continue;
            }
            let mut moved = set
                .atoms()
                .iter()
                .filter(|x| **x != s_atom && **x != a_atom)
                .filter_map(cell_of)
                .peekable();
            if moved.peek().is_none() {
                out.push(s);
            }
            out.extend(moved);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Adds `next` to the choice rule for `(s, a)`, re-enumerating that
    /// rule's answer sets when the program changed. Returns whether the
    /// transition was new.
    pub fn record_transition(&mut self, s: Cell, a: Action, next: Cell) -> Result<bool, AspError> {
        let program = self.programs.entry(s).or_insert_with(|| {
            let mut p = Program::new();
            p.add_fact(state_atom(s));
            p
        });
        if !program.add_transition_head(body(s, a), state_atom(next)) {
            return Ok(false);
        }
        if !self.successors(s, a)?.is_empty() {
            self.q.ensure(s, a);
        }
        Ok(true)
    }

    /// The goal is absorbing: every action taken there leaves the agent in
    /// place with no further reward. On each arrival the agent performs one
    /// not-yet-recorded goal action, so the goal's four self-loops become
    /// known like any other state's actions. No randomness is consumed.
    fn settle_at_goal(&mut self, goal: Cell) -> Result<(), Error> {
        self.observed.insert(goal);
        let known = |a: Action| {
            self.programs
                .get(&goal)
                .is_some_and(|p| p.rule_for_body(&body(goal, a)).is_some())
        };
        if let Some(a) = Action::ALL.into_iter().find(|&a| !known(a)) {
            self.record_transition(goal, a, goal)?;
            q_update(&mut self.q, goal, a, 0.0, goal, true, &self.params)?;
        }
        Ok(())
    }

    /// Writes one `s_<x>_<y>.lp` file per observed state with a program.
    pub fn dump_programs(&self, dir: &Path) -> Result<usize, Error> {
        fs::create_dir_all(dir)?;
        for (cell, program) in &self.programs {
            let name = format!("{}.lp", state_atom(*cell));
            fs::write(dir.join(name), program.render())?;
        }
        Ok(self.programs.len())
    }

    /// Program dump under `dir/programs/` plus `dir/qtable.csv`.
    pub fn save_snapshot(&self, dir: &Path) -> Result<(), Error> {
        self.dump_programs(&dir.join("programs"))?;
        self.q.save_csv(&dir.join("qtable.csv"))?;
        Ok(())
    }

    pub fn load_snapshot(dir: &Path, params: LearnParams) -> Result<Self, Error> {
        let programs = load_programs(&dir.join("programs"))?;
        let q = QTable::read_csv(fs::File::open(dir.join("qtable.csv"))?)?;
        Ok(OaspAgent {
            observed: programs.keys().copied().collect(),
            programs,
            q,
            params,
        })
    }
}

/// Reads every `s_<x>_<y>.lp` file in `dir`.
pub fn load_programs(dir: &Path) -> Result<BTreeMap<Cell, Program>, Error> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("lp") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let cell = Atom::new(stem)
            .ok()
            .as_ref()
            .and_then(cell_of)
            .ok_or_else(|| {
                Error::Snapshot(format!("unexpected program file {}", path.display()))
            })?;
        let program = parse_program(&fs::read_to_string(&path)?)?;
        out.insert(cell, program);
    }
    Ok(out)
}

impl Learner for OaspAgent {
    fn run_episode<E: Rng + ?Sized, P: Rng + ?Sized>(
        &mut self,
        env: &GridConfig,
        env_rng: &mut E,
        policy_rng: &mut P,
    ) -> Result<EpisodeStats, Error> {
        let mut stats = EpisodeStats::default();
        let mut s = env.start();
        while stats.steps < self.params.max_steps {
            let a = if self.observed.insert(s) {
                Action::ALL[policy_rng.gen_range(0..Action::ALL.len())]
            } else {
                select_epsilon_greedy(&self.q, s, &self.params, policy_rng)
            };
            let out = env.step(s, a, env_rng)?;
            self.record_transition(s, a, out.next)?;
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
        if stats.reached_goal {
            self.settle_at_goal(env.goal())?;
        }
        Ok(stats)
    }

    fn q(&self) -> &QTable {
        &self.q
    }

    fn known_pairs(&self) -> usize {
        OaspAgent::known_pairs(self)
    }

    fn environment_changed(&mut self, _config: &GridConfig) {}
}
