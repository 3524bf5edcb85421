//! Answer-set enumeration for the fragment.
//!
//! Atoms are interned into a local symbol table per call so candidate models
//! can be compared and filtered as bitsets.

use std::collections::{BTreeMap, BTreeSet};

use super::{AnswerSet, AspError, Atom, Program};

pub const BRUTE_FORCE_MAX_ATOMS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    fn is_subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn intersection_count(&self, other: &Bits) -> u32 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }
}

struct Symbols {
    atoms: Vec<Atom>,
    index: BTreeMap<Atom, usize>,
}

impl Symbols {
    fn of(program: &Program) -> Self {
        let mut all = BTreeSet::new();
        all.extend(program.facts().iter().cloned());
        for rule in program.choice_rules() {
            all.extend(rule.heads().iter().cloned());
            all.extend(rule.body().iter().cloned());
        }
        for c in program.constraints() {
            all.extend(c.body().iter().cloned());
        }
        let atoms: Vec<Atom> = all.into_iter().collect();
        let index = atoms
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, a)| (a, i))
            .collect();
        Symbols { atoms, index }
    }

    fn len(&self) -> usize {
        self.atoms.len()
    }

    fn bits<'a>(&self, atoms: impl IntoIterator<Item = &'a Atom>) -> Bits {
        let mut b = Bits::new(self.len());
        for a in atoms {
            b.set(self.index[a]);
        }
        b
    }

    fn answer_set(&self, bits: &Bits) -> AnswerSet {
        (0..self.len())
            .filter(|&i| bits.get(i))
            .map(|i| self.atoms[i].clone())
            .collect()
    }
}

struct Compiled {
    symbols: Symbols,
    facts: Bits,
    /// (heads, body) per choice rule.
    rules: Vec<(Bits, Bits)>,
    constraints: Vec<Bits>,
}

impl Compiled {
    fn new(program: &Program) -> Self {
        let symbols = Symbols::of(program);
        let facts = symbols.bits(program.facts());
        let rules = program
            .choice_rules()
            .iter()
            .map(|r| (symbols.bits(r.heads()), symbols.bits(r.body())))
            .collect();
        let constraints = program
            .constraints()
            .iter()
            .map(|c| symbols.bits(c.body()))
            .collect();
        Compiled {
            symbols,
            facts,
            rules,
            constraints,
        }
    }

    fn violates_constraint(&self, model: &Bits) -> bool {
        self.constraints.iter().any(|c| c.is_subset_of(model))
    }
}

/// Rejects programs whose rule applicability would depend on a choice: a
/// body atom that some rule can derive must already be a fact.
fn check_fragment(program: &Program) -> Result<(), AspError> {
    let derivable: BTreeSet<&Atom> = program
        .choice_rules()
        .iter()
        .flat_map(|r| r.heads())
        .filter(|a| !program.facts().contains(*a))
        .collect();
    for rule in program.choice_rules() {
        if let Some(atom) = rule.body().iter().find(|a| derivable.contains(a)) {
            return Err(AspError::UnsupportedFragment(format!(
                "body atom `{atom}` is a choice head but not a fact"
            )));
        }
    }
    Ok(())
}

/// All answer sets of a fragment program, sorted.
///
/// A rule applies iff its body is contained in the facts. Candidates are
/// the facts plus one head per applicable rule; a candidate is kept when
/// every applicable rule ends up with exactly one true head (heads may
/// coincide with facts or with another rule's pick) and no constraint body is
/// contained in it.
pub fn enumerate_answer_sets(program: &Program) -> Result<Vec<AnswerSet>, AspError> {
    check_fragment(program)?;
    let c = Compiled::new(program);

    let applicable: Vec<&(Bits, Bits)> = c
        .rules
        .iter()
        .filter(|(_, body)| body.is_subset_of(&c.facts))
        .collect();
    let choices: Vec<Vec<usize>> = applicable
        .iter()
        .map(|(heads, _)| (0..c.symbols.len()).filter(|&i| heads.get(i)).collect())
        .collect();

    let mut found = BTreeSet::new();
    let mut odometer = vec![0usize; choices.len()];
    loop {
        let mut model = c.facts.clone();
        for (options, &pick) in choices.iter().zip(&odometer) {
            model.set(options[pick]);
        }
        let exact = applicable
            .iter()
            .all(|(heads, _)| heads.intersection_count(&model) == 1);
        if exact && !c.violates_constraint(&model) {
            found.insert(model);
        }

        // advance, last position fastest
        let mut pos = choices.len();
        loop {
            if pos == 0 {
                let mut sets: Vec<AnswerSet> =
                    found.iter().map(|m| c.symbols.answer_set(m)).collect();
                sets.sort();
                return Ok(sets);
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < choices[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

/// Reference enumeration over every subset of the atom universe. `M` is kept
/// iff the facts are in `M`, every atom of `M` is a fact or a head of a rule
/// whose body is in `M`, each such rule has exactly one head in `M`, and no
/// constraint body is in `M`.
pub fn brute_force_answer_sets(program: &Program) -> Result<Vec<AnswerSet>, AspError> {
    let c = Compiled::new(program);
    let n = c.symbols.len();
    if n > BRUTE_FORCE_MAX_ATOMS {
        return Err(AspError::UniverseTooLarge {
            count: n,
            limit: BRUTE_FORCE_MAX_ATOMS,
        });
    }

    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let model = Bits(vec![mask]);
        if !c.facts.is_subset_of(&model) {
            continue;
        }
        let applicable: Vec<&Bits> = c
            .rules
            .iter()
            .filter(|(_, body)| body.is_subset_of(&model))
            .map(|(heads, _)| heads)
            .collect();
        let supported = (0..n)
            .filter(|&i| model.get(i))
            .all(|i| c.facts.get(i) || applicable.iter().any(|h| h.get(i)));
        if !supported {
            continue;
        }
        if !applicable.iter().all(|h| h.intersection_count(&model) == 1) {
            continue;
        }
        if c.violates_constraint(&model) {
            continue;
        }
        out.push(c.symbols.answer_set(&model));
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::parse_program;

    fn sets(program: &str) -> Vec<Vec<String>> {
        let p = parse_program(program).unwrap();
        let fast = enumerate_answer_sets(&p).unwrap();
        let slow = brute_force_answer_sets(&p).unwrap();
        assert_eq!(fast, slow, "enumerator and oracle disagree on {program}");
        fast.iter()
            .map(|s| s.atoms().iter().map(|a| a.name().to_string()).collect())
            .collect()
    }

    fn v(items: &[&[&str]]) -> Vec<Vec<String>> {
        items
            .iter()
            .map(|s| s.iter().map(|a| a.to_string()).collect())
            .collect()
    }

    #[test]
    fn one_answer_set_per_head() {
        assert_eq!(
            sets("s. a. 1{ s1; s2; s3 }1 :- a, s."),
            v(&[&["a", "s", "s1"], &["a", "s", "s2"], &["a", "s", "s3"]])
        );
    }

    #[test]
    fn empty_program_has_the_empty_answer_set() {
        assert_eq!(sets(""), v(&[&[]]));
    }

    #[test]
    fn constraint_filters_candidates() {
        assert_eq!(
            sets("s. a. 1{ s1; s2 }1 :- a, s. :- s2, a."),
            v(&[&["a", "s", "s1"]])
        );
    }

    #[test]
    fn inapplicable_rule_never_fires() {
        assert_eq!(sets("f. 1{ x; y }1 :- g."), v(&[&["f"]]));
    }

    #[test]
    fn contradiction_has_no_answer_set() {
        assert_eq!(sets("f. :- f."), Vec::<Vec<String>>::new());
    }

    #[test]
    fn self_loop_head_is_already_true() {
        // staying in place: the state atom is both fact and head
        assert_eq!(
            sets("s1. go_up. 1{ s1 }1 :- go_up, s1."),
            v(&[&["go_up", "s1"]])
        );
        // a fact head already saturates the 1..1 bound
        assert_eq!(
            sets("s1. go_up. 1{ s0; s1 }1 :- go_up, s1."),
            v(&[&["go_up", "s1"]])
        );
    }

    #[test]
    fn overlapping_heads_across_rules() {
        assert_eq!(
            sets("a. b. 1{ x; y }1 :- a. 1{ y; z }1 :- b."),
            v(&[&["a", "b", "x", "z"], &["a", "b", "y"]])
        );
    }

    #[test]
    fn product_of_independent_choices() {
        let out = sets("a. b. 1{ x1; x2 }1 :- a. 1{ y1; y2; y3 }1 :- b.");
        assert_eq!(out.len(), 6);
    }

    #[test]
    fn body_on_derivable_atom_is_rejected() {
        let p = parse_program("a. 1{ x; y }1 :- a. 1{ z }1 :- x.").unwrap();
        assert!(matches!(
            enumerate_answer_sets(&p),
            Err(AspError::UnsupportedFragment(_))
        ));
    }

    #[test]
    fn brute_force_limit() {
        let text: String = (0..21).map(|i| format!("a{i}. ")).collect();
        let p = parse_program(&text).unwrap();
        assert!(matches!(
            brute_force_answer_sets(&p),
            Err(AspError::UniverseTooLarge { count: 21, .. })
        ));
    }

    #[test]
    fn wide_universe_uses_multiple_words() {
        let mut text: String = (0..70).map(|i| format!("f{i}. ")).collect();
        text.push_str("1{ h1; h2 }1 :- f3, f69. :- h2, f65.");
        let p = parse_program(&text).unwrap();
        let out = enumerate_answer_sets(&p).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].contains(&Atom::new("h1").unwrap()));
        assert_eq!(out[0].len(), 71);
    }
}
