//! Reduction from DFA intersection nonemptiness to Ω-NE existence, used as a
//! generator of instances with known answers.
//!
//! Each input DFA gets a fresh end marker `K` and two sinks: `K` sends
//! accepting states to `accept` and all other states to `reject`. Agent 0
//! plays the original symbols and `K`; every other agent has the single
//! action `*`. All goals are met on one trace iff some word before the first
//! `K` is accepted by every input DFA.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::model::{Alphabet, GameSpec, GoalDfa, Letter, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HardnessError {
    #[error("no DFAs given")]
    NoDfas,
    #[error("DFA #{index} has alphabet {found:?}, expected {expected:?}")]
    AlphabetMismatch {
        index: usize,
        found: Vec<String>,
        expected: Vec<String>,
    },
    #[error("product automaton exceeds {budget} states")]
    SizeBudgetExceeded { budget: usize },
}

/// A classical DFA over a flat symbol alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatDfa {
    symbols: Vec<String>,
    dfa: GoalDfa,
}

impl FlatDfa {
    /// Panics if the automaton's letter count differs from the symbol count.
    pub fn new(symbols: Vec<String>, dfa: GoalDfa) -> Self {
        assert_eq!(symbols.len(), dfa.num_letters());
        FlatDfa { symbols, dfa }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn dfa(&self) -> &GoalDfa {
        &self.dfa
    }

    /// Membership of a finite word given as symbol indices.
    pub fn accepts(&self, word: &[usize]) -> bool {
        let letters: Vec<Letter> = word.iter().map(|&s| Letter::from_index(s)).collect();
        let run = self.dfa.run(&letters);
        self.dfa.is_accepting(*run.last().expect("run is nonempty"))
    }
}

/// `Â`: the input DFA extended by the end marker and the two sinks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HatDfa {
    pub dfa: FlatDfa,
    /// Symbol index of the end marker `K`.
    pub end_marker: usize,
    pub accept: StateId,
    pub reject: StateId,
}

fn fresh(base: &str, taken: &[String]) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

pub fn hat_transform(input: &FlatDfa) -> HatDfa {
    let dfa = &input.dfa;
    let n = dfa.num_states();
    let sigma = input.symbols.len();
    let mut symbols = input.symbols.clone();
    symbols.push(fresh("K", &input.symbols));
    let end_marker = sigma;
    let letters = sigma + 1;

    let mut states = dfa.state_names().to_vec();
    let accept_name = fresh("accept", &states);
    states.push(accept_name);
    let reject_name = fresh("reject", &states);
    states.push(reject_name);
    let (accept, reject) = (n, n + 1);

    let mut delta = Vec::with_capacity((n + 2) * letters);
    for q in 0..n {
        for a in 0..sigma {
            delta.push(dfa.step(q, Letter::from_index(a)));
        }
        delta.push(if dfa.is_accepting(q) { accept } else { reject });
    }
    for sink in [accept, reject] {
        delta.extend(std::iter::repeat_n(sink, letters));
    }
    HatDfa {
        dfa: FlatDfa::new(
            symbols,
            GoalDfa::new(states, dfa.initial(), &[accept], delta, letters),
        ),
        end_marker,
        accept,
        reject,
    }
}

/// Fresh name for the single action of agents `1..k`.
pub fn idle_action(symbols: &[String]) -> String {
    fresh("*", symbols)
}

/// The game whose Ω-NE exist iff the DFAs have a common word.
pub fn build_dfaie_game(dfas: &[FlatDfa]) -> Result<GameSpec, HardnessError> {
    let first = dfas.first().ok_or(HardnessError::NoDfas)?;
    for (index, d) in dfas.iter().enumerate() {
        if d.symbols != first.symbols {
            return Err(HardnessError::AlphabetMismatch {
                index,
                found: d.symbols.clone(),
                expected: first.symbols.clone(),
            });
        }
    }
    let hats: Vec<HatDfa> = dfas.iter().map(hat_transform).collect();
    let agent0 = hats[0].dfa.symbols.clone();
    let idle = idle_action(&agent0);
    let mut actions = vec![agent0.clone()];
    actions.extend((1..dfas.len()).map(|_| vec![idle.clone()]));
    let alphabet = Alphabet::new(actions).expect("nonempty distinct actions");

    // joint letters are (symbol, *, …, *), in the same order as the symbols
    let mut comps = vec![0usize; dfas.len()];
    let joint: Vec<Letter> = (0..agent0.len())
        .map(|a| {
            comps[0] = a;
            alphabet.letter(&comps).expect("in range")
        })
        .collect();
    let goals = hats
        .iter()
        .map(|h| {
            let d = &h.dfa.dfa;
            let mut delta = vec![0; d.num_states() * alphabet.size()];
            for q in 0..d.num_states() {
                for (a, &l) in joint.iter().enumerate() {
                    delta[q * alphabet.size() + l.index()] = d.step(q, Letter::from_index(a));
                }
            }
            let accepting: Vec<StateId> = d.accepting_states().collect();
            GoalDfa::new(
                d.state_names().to_vec(),
                d.initial(),
                &accepting,
                delta,
                alphabet.size(),
            )
        })
        .collect();
    Ok(GameSpec::new(alphabet, goals).expect("hat goals never accept initially"))
}

/// Shortest word (symbol indices, least in symbol order among the shortest)
/// accepted by every DFA, by breadth-first search of the product.
pub fn dfa_intersection_witness(
    dfas: &[FlatDfa],
    budget: usize,
) -> Result<Option<Vec<usize>>, HardnessError> {
    let first = dfas.first().ok_or(HardnessError::NoDfas)?;
    for (index, d) in dfas.iter().enumerate() {
        if d.symbols != first.symbols {
            return Err(HardnessError::AlphabetMismatch {
                index,
                found: d.symbols.clone(),
                expected: first.symbols.clone(),
            });
        }
    }
    let sigma = first.symbols.len();
    let all_accept = |t: &[StateId]| dfas.iter().zip(t).all(|(d, &q)| d.dfa.is_accepting(q));

    let start: Vec<StateId> = dfas.iter().map(|d| d.dfa.initial()).collect();
    let mut parent: HashMap<Vec<StateId>, Option<(Vec<StateId>, usize)>> = HashMap::new();
    parent.insert(start.clone(), None);
    let mut queue = VecDeque::from([start]);
    while let Some(tuple) = queue.pop_front() {
        if all_accept(&tuple) {
            let mut word = Vec::new();
            let mut cur = tuple;
            while let Some((prev, a)) = parent[&cur].clone() {
                word.push(a);
                cur = prev;
            }
            word.reverse();
            return Ok(Some(word));
        }
        for a in 0..sigma {
            let next: Vec<StateId> = dfas
                .iter()
                .zip(&tuple)
                .map(|(d, &q)| d.dfa.step(q, Letter::from_index(a)))
                .collect();
            if parent.contains_key(&next) {
                continue;
            }
            if parent.len() >= budget {
                return Err(HardnessError::SizeBudgetExceeded { budget });
            }
            parent.insert(next.clone(), Some((tuple.clone(), a)));
            queue.push_back(next);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    /// accepts exactly "ab"
    fn exactly_ab() -> FlatDfa {
        // 0 -a-> 1 -b-> 2 (acc); everything else -> 3 (dead)
        let delta = vec![1, 3, 3, 2, 3, 3, 3, 3];
        FlatDfa::new(ab(), GoalDfa::from_table(4, 0, &[2], delta, 2))
    }

    fn ends_in_a() -> FlatDfa {
        FlatDfa::new(ab(), GoalDfa::from_table(2, 0, &[1], vec![1, 0, 1, 0], 2))
    }

    fn even_length() -> FlatDfa {
        // q0 accepting: ε has even length
        FlatDfa::new(ab(), GoalDfa::from_table(2, 0, &[0], vec![1, 1, 0, 0], 2))
    }

    #[test]
    fn hat_shape() {
        let h = hat_transform(&exactly_ab());
        let d = h.dfa.dfa();
        assert_eq!(d.num_states(), 4 + 2);
        assert_eq!(h.dfa.symbols(), ["a", "b", "K"]);
        assert_eq!(d.accepting_states().collect::<Vec<_>>(), [h.accept]);
        for l in 0..3 {
            let l = Letter::from_index(l);
            assert_eq!(d.step(h.accept, l), h.accept);
            assert_eq!(d.step(h.reject, l), h.reject);
        }
        // "ab" then K accepts; anything else before K rejects
        assert!(h.dfa.accepts(&[0, 1, 2]));
        assert!(h.dfa.accepts(&[0, 1, 2, 0, 2]));
        assert!(!h.dfa.accepts(&[0, 2]));
        assert!(!h.dfa.accepts(&[0, 1, 1, 2]));
        assert!(!h.dfa.accepts(&[0, 1]));
    }

    #[test]
    fn hat_of_empty_language_never_accepts() {
        let empty = FlatDfa::new(ab(), GoalDfa::from_table(1, 0, &[], vec![0, 0], 2));
        let h = hat_transform(&empty);
        let d = h.dfa.dfa();
        let reachable: Vec<bool> = {
            let mut seen = vec![false; d.num_states()];
            let mut stack = vec![d.initial()];
            while let Some(q) = stack.pop() {
                if !std::mem::replace(&mut seen[q], true) {
                    stack.extend((0..3).map(|l| d.step(q, Letter::from_index(l))));
                }
            }
            seen
        };
        assert!(!reachable[h.accept]);
    }

    #[test]
    fn fresh_names_avoid_collisions() {
        let syms: Vec<String> = vec!["K".into(), "*".into()];
        let d = FlatDfa::new(syms, GoalDfa::from_table(1, 0, &[], vec![0, 0], 2));
        let h = hat_transform(&d);
        assert_eq!(h.dfa.symbols()[2], "K'");
        assert_eq!(idle_action(h.dfa.symbols()), "*'");
    }

    #[test]
    fn dfaie_game_shape() {
        let g = build_dfaie_game(&[ends_in_a(), even_length(), ends_in_a()]).unwrap();
        assert_eq!(g.agents(), 3);
        assert_eq!(g.alphabet().size(), 3);
        assert_eq!(g.alphabet().actions(1), ["*"]);
        let single = build_dfaie_game(&[ends_in_a()]).unwrap();
        assert_eq!(single.agents(), 1);
        assert_eq!(single.alphabet().size(), 3);
    }

    #[test]
    fn mismatched_alphabets_rejected() {
        let other = FlatDfa::new(vec!["c".into()], GoalDfa::from_table(1, 0, &[], vec![0], 1));
        assert!(matches!(
            build_dfaie_game(&[ends_in_a(), other]),
            Err(HardnessError::AlphabetMismatch { index: 1, .. })
        ));
        assert_eq!(build_dfaie_game(&[]), Err(HardnessError::NoDfas));
    }

    #[test]
    fn intersection_examples() {
        let w = dfa_intersection_witness(&[ends_in_a(), even_length()], 1000).unwrap();
        assert_eq!(w, Some(vec![0, 0]));
        let w = dfa_intersection_witness(&[exactly_ab(), exactly_ab()], 1000).unwrap();
        assert_eq!(w, Some(vec![0, 1]));
        // a+ versus b+
        let a_plus = FlatDfa::new(
            ab(),
            GoalDfa::from_table(3, 0, &[1], vec![1, 2, 1, 2, 2, 2], 2),
        );
        let b_plus = FlatDfa::new(
            ab(),
            GoalDfa::from_table(3, 0, &[1], vec![2, 1, 2, 1, 2, 2], 2),
        );
        assert_eq!(
            dfa_intersection_witness(&[a_plus, b_plus], 1000).unwrap(),
            None
        );
    }
}
