//! Logic programs over the restricted choice-rule fragment.
//!
//! A [`Program`] holds ground facts, choice rules of the form
//! `1{ h1; h2; ... }1 :- b1, b2.` whose bodies are positive atoms, and
//! integrity constraints `:- b1, b2.`. This is the only shape the online
//! state-construction agent emits, so the solver here is specialised to it
//! instead of being a general stable-model engine.
//!
//! ```text
//! s_0_0.
//! 1{ s_0_1; s_1_0 }1 :- a_up, s_0_0.
//! ```

mod parse;
mod solve;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use parse::parse_program;
pub use solve::{brute_force_answer_sets, enumerate_answer_sets, BRUTE_FORCE_MAX_ATOMS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AspError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported fragment: {0}")]
    UnsupportedFragment(String),
    #[error("invalid atom name `{0}`")]
    InvalidAtom(String),
    #[error("atom universe too large for brute force: {count} atoms (limit {limit})")]
    UniverseTooLarge { count: usize, limit: usize },
}

/// A propositional atom. Two atoms are equal iff their names are equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom(Arc<str>);

impl Atom {
    /// Builds an atom, checking the name against `[a-z][a-zA-Z0-9_]*`.
    pub fn new(name: &str) -> Result<Self, AspError> {
        if is_atom_name(name) {
            Ok(Atom(Arc::from(name)))
        } else {
            Err(AspError::InvalidAtom(name.to_string()))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `1{ heads }1 :- body.`
///
/// The cardinality bounds are fixed at 1..1. A head atom may also occur in
/// the body: a transition that leaves the agent in place is written
/// `1{ s }1 :- a, s.`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceRule {
    heads: BTreeSet<Atom>,
    body: BTreeSet<Atom>,
}

impl ChoiceRule {
    /// Returns `None` if either side is empty.
    pub fn new(
        heads: impl IntoIterator<Item = Atom>,
        body: impl IntoIterator<Item = Atom>,
    ) -> Option<Self> {
        let heads: BTreeSet<Atom> = heads.into_iter().collect();
        let body: BTreeSet<Atom> = body.into_iter().collect();
        if heads.is_empty() || body.is_empty() {
            return None;
        }
        Some(ChoiceRule { heads, body })
    }

    pub fn heads(&self) -> &BTreeSet<Atom> {
        &self.heads
    }

    pub fn body(&self) -> &BTreeSet<Atom> {
        &self.body
    }

    pub const fn lower(&self) -> usize {
        1
    }

    pub const fn upper(&self) -> usize {
        1
    }
}

/// Headless rule `:- body.` eliminating every candidate containing the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrityConstraint {
    body: BTreeSet<Atom>,
}

impl IntegrityConstraint {
    pub fn new(body: impl IntoIterator<Item = Atom>) -> Option<Self> {
        let body: BTreeSet<Atom> = body.into_iter().collect();
        (!body.is_empty()).then_some(IntegrityConstraint { body })
    }

    pub fn body(&self) -> &BTreeSet<Atom> {
        &self.body
    }
}

/// A fragment program. Choice rules are keyed by body: there is at most one
/// rule per distinct body, and adding a head to an existing body extends that
/// rule.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    facts: BTreeSet<Atom>,
    choice_rules: Vec<ChoiceRule>,
    constraints: Vec<IntegrityConstraint>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn facts(&self) -> &BTreeSet<Atom> {
        &self.facts
    }

    pub fn choice_rules(&self) -> &[ChoiceRule] {
        &self.choice_rules
    }

    pub fn constraints(&self) -> &[IntegrityConstraint] {
        &self.constraints
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty() && self.choice_rules.is_empty() && self.constraints.is_empty()
    }

    pub fn add_fact(&mut self, atom: Atom) -> bool {
        self.facts.insert(atom)
    }

    pub fn add_constraint(&mut self, constraint: IntegrityConstraint) {
        self.constraints.push(constraint);
    }

    pub fn rule_for_body(&self, body: &BTreeSet<Atom>) -> Option<&ChoiceRule> {
        self.choice_rules.iter().find(|r| &r.body == body)
    }

    /// Appends `rule`, or merges its heads into the rule that already has the
    /// same body. Returns `true` if any head was new.
    pub fn add_choice_rule(&mut self, rule: ChoiceRule) -> bool {
        match self.choice_rules.iter_mut().find(|r| r.body == rule.body) {
            Some(existing) => {
                let before = existing.heads.len();
                existing.heads.extend(rule.heads);
                existing.heads.len() != before
            }
            None => {
                self.choice_rules.push(rule);
                true
            }
        }
    }

    /// Records an observed transition: `head` becomes a possible outcome of
    /// the choice rule keyed by `body`. Returns whether `head` was new.
    ///
    /// # Panics
    ///
    /// If `body` is empty.
    pub fn add_transition_head(&mut self, body: BTreeSet<Atom>, head: Atom) -> bool {
        assert!(!body.is_empty(), "choice-rule body must be non-empty");
        match self.choice_rules.iter_mut().find(|r| r.body == body) {
            Some(rule) => rule.heads.insert(head),
            None => {
                self.choice_rules.push(ChoiceRule {
                    heads: BTreeSet::from([head]),
                    body,
                });
                true
            }
        }
    }

    /// Canonical text: sorted facts, then choice rules in insertion order,
    /// then constraints.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

fn join(atoms: &BTreeSet<Atom>, sep: &str) -> String {
    atoms.iter().map(Atom::name).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in &self.facts {
            writeln!(f, "{fact}.")?;
        }
        for rule in &self.choice_rules {
            writeln!(
                f,
                "1{{ {} }}1 :- {}.",
                join(&rule.heads, "; "),
                join(&rule.body, ", ")
            )?;
        }
        for c in &self.constraints {
            writeln!(f, ":- {}.", join(&c.body, ", "))?;
        }
        Ok(())
    }
}

pub fn render_program(program: &Program) -> String {
    program.render()
}

/// A stable model: a duplicate-free set of atoms, listed in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AnswerSet(BTreeSet<Atom>);

impl AnswerSet {
    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.0
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.0.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<Atom> for AnswerSet {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        AnswerSet(iter.into_iter().collect())
    }
}

impl fmt::Display for AnswerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", join(&self.0, ", "))
    }
}
