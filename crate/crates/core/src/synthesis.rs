//! Finite-state strategy profiles: synthesis from a witness lasso and exact
//! verification against the W-NE definition.
//!
//! A profile is a Moore machine over joint letters. Its mode determines the
//! letter every agent plays next; the letter actually observed moves it to the
//! next mode. Synthesized profiles have three kinds of modes: trace modes that
//! replay the lasso, per-deviator punishment modes that follow a winning
//! safety strategy, and a sink for histories no equilibrium condition looks at.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::agent_set::AgentSet;
use crate::equilibrium::{accepts_lasso, DeviationGuards, SolveError};
use crate::model::{AgentId, GameSpec, Lasso, Letter, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("lasso is not an accepting word of the pruned automaton for W = {0}")]
    LassoNotAccepting(AgentSet),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("profile is defined over {found} letters, but the game has {expected}")]
    AlphabetMismatch { found: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransducerError {
    #[error("profile has no modes")]
    NoModes,
    #[error("initial mode {0} does not exist")]
    BadInitial(usize),
    #[error("mode {mode}: output letter {letter} is out of range")]
    BadOutput { mode: usize, letter: usize },
    #[error("mode {mode}: successor table has {found} entries, expected {expected}")]
    BadTable {
        mode: usize,
        found: usize,
        expected: usize,
    },
    #[error("mode {mode}: successor {target} does not exist")]
    BadTarget { mode: usize, target: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeKind {
    /// Replays position `position` of the lasso (prefix first, then cycle).
    Trace {
        position: usize,
    },
    /// Punishes agent `agent`, whose goal automaton is in `state`.
    Deviation {
        agent: AgentId,
        state: StateId,
    },
    Sink,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mode {
    pub kind: ModeKind,
    pub output: Letter,
    /// Successor per observed letter, in canonical letter order.
    pub next: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileTransducer {
    letters: usize,
    modes: Vec<Mode>,
    initial: usize,
}

impl ProfileTransducer {
    pub fn new(letters: usize, modes: Vec<Mode>, initial: usize) -> Result<Self, TransducerError> {
        if modes.is_empty() {
            return Err(TransducerError::NoModes);
        }
        if initial >= modes.len() {
            return Err(TransducerError::BadInitial(initial));
        }
        for (i, m) in modes.iter().enumerate() {
            if m.output.index() >= letters {
                return Err(TransducerError::BadOutput {
                    mode: i,
                    letter: m.output.index(),
                });
            }
            if m.next.len() != letters {
                return Err(TransducerError::BadTable {
                    mode: i,
                    found: m.next.len(),
                    expected: letters,
                });
            }
            if let Some(&target) = m.next.iter().find(|&&t| t >= modes.len()) {
                return Err(TransducerError::BadTarget { mode: i, target });
            }
        }
        Ok(ProfileTransducer {
            letters,
            modes,
            initial,
        })
    }

    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn output(&self, mode: usize) -> Letter {
        self.modes[mode].output
    }

    pub fn next(&self, mode: usize, observed: Letter) -> usize {
        self.modes[mode].next[observed.index()]
    }

    /// The primary trace as a lasso.
    ///
    /// Some mode repeats within `#modes + 1` steps, which closes the cycle.
    pub fn primary_lasso(&self) -> Lasso {
        let mut first_seen: HashMap<usize, usize> = HashMap::new();
        let mut outputs = Vec::new();
        let mut mode = self.initial;
        loop {
            if let Some(&start) = first_seen.get(&mode) {
                let cycle = outputs.split_off(start);
                return Lasso::new(outputs, cycle).expect("a mode repeated");
            }
            first_seen.insert(mode, outputs.len());
            let out = self.output(mode);
            outputs.push(out);
            mode = self.next(mode, out);
        }
    }
}

/// Builds a profile whose primary trace is `lasso` and which answers every
/// unilateral deviation of an agent outside `w` with a winning safety strategy.
pub fn synthesize_profile(
    game: &GameSpec,
    w: AgentSet,
    lasso: &Lasso,
    guards: &DeviationGuards,
) -> Result<ProfileTransducer, SynthesisError> {
    guards.check(game, w)?;
    if let Some(agent) = w.iter().find(|&a| a >= game.agents()) {
        return Err(SolveError::UnknownAgent { agent }.into());
    }
    if !accepts_lasso(game, w, guards, lasso) {
        return Err(SynthesisError::LassoNotAccepting(w));
    }
    let alphabet = game.alphabet();
    let letters = alphabet.size();
    let deviators: Vec<AgentId> = (0..game.agents())
        .filter(|&j| !w.contains(j) && guards.get(j).is_some())
        .collect();

    // Trace modes: unroll the lasso until (cycle position, deviator states) repeats.
    struct TraceMode {
        position: usize,
        output: Letter,
        states: Vec<StateId>,
        next: usize,
    }
    let mut trace: Vec<TraceMode> = Vec::new();
    let mut keys: HashMap<(usize, Vec<StateId>), usize> = HashMap::new();
    let mut states: Vec<StateId> = game.goals().iter().map(|g| g.initial()).collect();
    let (plen, clen) = (lasso.prefix().len(), lasso.cycle().len());
    let mut i = 0;
    loop {
        let position = if i < plen {
            i
        } else {
            plen + (i - plen) % clen
        };
        let key: Vec<StateId> = deviators.iter().map(|&j| states[j]).collect();
        if let Some(&existing) = keys.get(&(position, key.clone())) {
            trace.last_mut().expect("prefix modes are unique").next = existing;
            break;
        }
        let id = trace.len();
        keys.insert((position, key), id);
        if let Some(prev) = trace.last_mut() {
            prev.next = id;
        }
        let output = lasso.letter_at(i);
        trace.push(TraceMode {
            position,
            output,
            states: states.clone(),
            next: usize::MAX,
        });
        for (q, g) in states.iter_mut().zip(game.goals()) {
            *q = g.step(*q, output);
        }
        i += 1;
    }

    let sink = trace.len();
    let mut punish = PunishmentModes {
        first_id: sink + 1,
        ids: HashMap::new(),
        order: Vec::new(),
    };

    let mut modes: Vec<Mode> = Vec::with_capacity(trace.len() + 1);
    for tm in &trace {
        let mut next = Vec::with_capacity(letters);
        for beta in alphabet.letters() {
            if beta == tm.output {
                next.push(tm.next);
                continue;
            }
            let deviator = deviators
                .iter()
                .copied()
                .find(|&j| alphabet.project_out(beta, j) == alphabet.project_out(tm.output, j));
            next.push(match deviator {
                Some(j) => punish.id(j, game.goal(j).step(tm.states[j], beta)),
                None => sink,
            });
        }
        modes.push(Mode {
            kind: ModeKind::Trace {
                position: tm.position,
            },
            output: tm.output,
            next,
        });
    }
    modes.push(Mode {
        kind: ModeKind::Sink,
        output: Letter::from_index(0),
        next: vec![sink; letters],
    });

    let mut k = 0;
    while k < punish.order.len() {
        let (j, q) = punish.order[k];
        let sol = guards.get(j).expect("deviator has a solution");
        let p = sol
            .strategy(q)
            .expect("punishment modes only visit winning states");
        let output = alphabet.lift(p, 0);
        let mut next = Vec::with_capacity(letters);
        for beta in alphabet.letters() {
            if alphabet.project_out(beta, j) == p {
                next.push(punish.id(j, game.goal(j).step(q, beta)));
            } else {
                next.push(sink);
            }
        }
        modes.push(Mode {
            kind: ModeKind::Deviation { agent: j, state: q },
            output,
            next,
        });
        k += 1;
    }

    Ok(ProfileTransducer::new(letters, modes, 0).expect("well-formed by construction"))
}

struct PunishmentModes {
    first_id: usize,
    ids: HashMap<(AgentId, StateId), usize>,
    order: Vec<(AgentId, StateId)>,
}

impl PunishmentModes {
    fn id(&mut self, j: AgentId, q: StateId) -> usize {
        if let Some(&id) = self.ids.get(&(j, q)) {
            return id;
        }
        let id = self.first_id + self.order.len();
        self.ids.insert((j, q), id);
        self.order.push((j, q));
        id
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimaryCheck {
    pub passed: bool,
    pub trace: Lasso,
    /// Agents whose goals the primary trace satisfies.
    pub satisfied: AgentSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationCheck {
    pub agent: AgentId,
    pub passed: bool,
    /// Observed letters of a deviation that satisfies the agent's goal.
    pub counterexample: Option<Vec<Letter>>,
    pub explored: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub winning_set: AgentSet,
    pub primary: PrimaryCheck,
    pub deviations: Vec<DeviationCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.primary.passed && self.deviations.iter().all(|d| d.passed)
    }
}

/// Checks a profile against the W-NE definition.
///
/// The primary trace must satisfy exactly the goals in `w`. For every agent
/// `j` outside `w`, all histories where only `j`'s component departs from the
/// profile are explored in the finite product of modes and `A^j` states; none
/// may reach an accepting state of `A^j`.
pub fn verify_profile(
    game: &GameSpec,
    w: AgentSet,
    t: &ProfileTransducer,
) -> Result<VerificationReport, SynthesisError> {
    let alphabet = game.alphabet();
    if t.letters() != alphabet.size() {
        return Err(SynthesisError::AlphabetMismatch {
            found: t.letters(),
            expected: alphabet.size(),
        });
    }
    if let Some(agent) = w.iter().find(|&a| a >= game.agents()) {
        return Err(SolveError::UnknownAgent { agent }.into());
    }

    let trace = t.primary_lasso();
    let satisfied: AgentSet = (0..game.agents())
        .filter(|&i| game.goal(i).lasso_satisfies(&trace))
        .collect();
    let primary = PrimaryCheck {
        passed: satisfied == w,
        trace,
        satisfied,
    };

    let deviations = (0..game.agents())
        .filter(|&j| !w.contains(j))
        .map(|j| check_deviations(game, t, j))
        .collect();

    Ok(VerificationReport {
        winning_set: w,
        primary,
        deviations,
    })
}

/// (transducer mode, deviator goal state)
type ProductState = (usize, StateId);

fn check_deviations(game: &GameSpec, t: &ProfileTransducer, j: AgentId) -> DeviationCheck {
    let alphabet = game.alphabet();
    let goal = game.goal(j);
    let start = (t.initial(), goal.initial());
    let mut parent: HashMap<ProductState, Option<(ProductState, Letter)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some((mode, q)) = queue.pop_front() {
        let p = alphabet.project_out(t.output(mode), j);
        for beta in alphabet.letters_with_projection(p) {
            let succ = (t.next(mode, beta), goal.step(q, beta));
            if parent.contains_key(&succ) {
                continue;
            }
            parent.insert(succ, Some(((mode, q), beta)));
            if goal.is_accepting(succ.1) {
                let mut path = Vec::new();
                let mut cur = succ;
                while let Some((prev, l)) = parent[&cur] {
                    path.push(l);
                    cur = prev;
                }
                path.reverse();
                return DeviationCheck {
                    agent: j,
                    passed: false,
                    counterexample: Some(path),
                    explored: parent.len(),
                };
            }
            queue.push_back(succ);
        }
    }
    DeviationCheck {
        agent: j,
        passed: true,
        counterexample: None,
        explored: parent.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Alphabet, GoalDfa};

    #[test]
    fn rejects_malformed_tables() {
        let m = |next: Vec<usize>| Mode {
            kind: ModeKind::Sink,
            output: Letter::from_index(0),
            next,
        };
        assert_eq!(
            ProfileTransducer::new(2, vec![], 0),
            Err(TransducerError::NoModes)
        );
        assert!(matches!(
            ProfileTransducer::new(2, vec![m(vec![0])], 0),
            Err(TransducerError::BadTable { .. })
        ));
        assert!(matches!(
            ProfileTransducer::new(2, vec![m(vec![0, 3])], 0),
            Err(TransducerError::BadTarget { target: 3, .. })
        ));
        assert!(ProfileTransducer::new(2, vec![m(vec![0, 0])], 1).is_err());
    }

    #[test]
    fn primary_lasso_of_two_mode_loop() {
        let modes = vec![
            Mode {
                kind: ModeKind::Trace { position: 0 },
                output: Letter::from_index(1),
                next: vec![1, 1],
            },
            Mode {
                kind: ModeKind::Trace { position: 1 },
                output: Letter::from_index(0),
                next: vec![1, 1],
            },
        ];
        let t = ProfileTransducer::new(2, modes, 0).unwrap();
        let l = t.primary_lasso();
        assert_eq!(l.prefix(), &[Letter::from_index(1)]);
        assert_eq!(l.cycle(), &[Letter::from_index(0)]);
    }

    #[test]
    fn non_accepting_lasso_rejected() {
        let al = Alphabet::new(vec![vec!["a".into(), "b".into()]]).unwrap();
        // accept after letter b
        let g = GameSpec::new(
            al,
            vec![GoalDfa::from_table(2, 0, &[1], vec![0, 1, 1, 1], 2)],
        )
        .unwrap();
        let w = AgentSet::all(1);
        let guards = DeviationGuards::for_winning_set(&g, w);
        let a = Letter::from_index(0);
        let lasso = Lasso::new(vec![], vec![a]).unwrap();
        assert_eq!(
            synthesize_profile(&g, w, &lasso, &guards),
            Err(SynthesisError::LassoNotAccepting(w))
        );
    }
}
