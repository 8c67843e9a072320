//! Independent oracle: the Büchi tree automaton `T_W` over strategy trees,
//! built as an explicit table, and its nonemptiness decided by a Büchi game.
//!
//! Labels and directions are both joint letters. A tree node labelled `α`
//! prescribes the letter every agent plays; the direction `β` taken from it
//! is the letter actually played. This module shares only the data model with
//! the main pipeline and is sized for small games.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::agent_set::AgentSet;
use crate::model::{AgentId, GameSpec, StateId};

/// Default cap on transition-table entries (`|states| · |Σ|²`).
pub const DEFAULT_TABLE_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("tree automaton exceeds {budget} table entries")]
    SizeBudgetExceeded { budget: usize },
    #[error("unknown agent {agent}")]
    UnknownAgent { agent: AgentId },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TwState {
    /// On the primary path: every goal state plus the pending winners.
    Primary {
        components: Vec<StateId>,
        pending: AgentSet,
    },
    /// After a deviation of `agent`, tracking its goal automaton only.
    Deviant { agent: AgentId, state: StateId },
    /// Catch-all accepting state for paths no condition constrains.
    Accept,
}

const UNDEFINED: u32 = u32::MAX;

/// Explicit `T_W` restricted to primary states reachable along the primary path.
#[derive(Debug, Clone)]
pub struct TwAutomaton {
    letters: usize,
    states: Vec<TwState>,
    index: HashMap<TwState, usize>,
    accepting: Vec<bool>,
    // [(state * letters + label) * letters + direction]
    table: Vec<u32>,
}

pub fn build_tw(game: &GameSpec, w: AgentSet) -> Result<TwAutomaton, OracleError> {
    build_tw_with_budget(game, w, DEFAULT_TABLE_BUDGET)
}

pub fn build_tw_with_budget(
    game: &GameSpec,
    w: AgentSet,
    budget: usize,
) -> Result<TwAutomaton, OracleError> {
    let k = game.agents();
    if let Some(agent) = w.iter().find(|&a| a >= k) {
        return Err(OracleError::UnknownAgent { agent });
    }
    let alphabet = game.alphabet();
    let letters = alphabet.size();
    let comps: Vec<Vec<usize>> = alphabet.letters().map(|l| alphabet.components(l)).collect();
    // α and β agree everywhere except possibly at j
    let agree_off =
        |a: usize, b: usize, j: AgentId| (0..k).all(|i| i == j || comps[a][i] == comps[b][i]);
    let goals = game.goals();
    let losers: Vec<AgentId> = (0..k).filter(|&j| !w.contains(j)).collect();

    // A_W step on the primary path; None when a loser's goal would accept
    let primary_step = |components: &[StateId], pending: AgentSet, a: usize| {
        let letter = crate::model::Letter::from_index(a);
        let mut next = Vec::with_capacity(k);
        let mut pending = pending;
        for i in 0..k {
            let q = goals[i].step(components[i], letter);
            if goals[i].is_accepting(q) {
                if !w.contains(i) {
                    return None;
                }
                pending.remove(i);
            }
            next.push(q);
        }
        Some(TwState::Primary {
            components: next,
            pending,
        })
    };

    let mut states = Vec::new();
    let mut index = HashMap::new();
    let mut intern = |s: TwState, states: &mut Vec<TwState>| -> usize {
        *index.entry(s.clone()).or_insert_with(|| {
            states.push(s);
            states.len() - 1
        })
    };

    let initial = TwState::Primary {
        components: goals.iter().map(|g| g.initial()).collect(),
        pending: w,
    };
    intern(initial, &mut states);
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let TwState::Primary {
            components,
            pending,
        } = states[v].clone()
        else {
            unreachable!()
        };
        for a in 0..letters {
            if let Some(s) = primary_step(&components, pending, a) {
                let before = states.len();
                let id = intern(s, &mut states);
                if id == before {
                    queue.push_back(id);
                }
            }
        }
    }
    for &j in &losers {
        for q in 0..goals[j].num_states() {
            intern(TwState::Deviant { agent: j, state: q }, &mut states);
        }
    }
    let accept = intern(TwState::Accept, &mut states);

    let entries = states
        .len()
        .checked_mul(letters * letters)
        .filter(|&e| e <= budget)
        .ok_or(OracleError::SizeBudgetExceeded { budget })?;
    let mut table = vec![UNDEFINED; entries];
    let lookup = |s: &TwState, index: &HashMap<TwState, usize>| index[s] as u32;
    for (id, s) in states.iter().enumerate() {
        for alpha in 0..letters {
            for beta in 0..letters {
                let target: Option<u32> = match s {
                    TwState::Primary {
                        components,
                        pending,
                    } => {
                        if alpha == beta {
                            primary_step(components, *pending, alpha).map(|t| lookup(&t, &index))
                        } else if let Some(&j) = losers.iter().find(|&&j| agree_off(alpha, beta, j))
                        {
                            let q = goals[j]
                                .step(components[j], crate::model::Letter::from_index(beta));
                            (!goals[j].is_accepting(q))
                                .then(|| lookup(&TwState::Deviant { agent: j, state: q }, &index))
                        } else {
                            Some(accept as u32)
                        }
                    }
                    TwState::Deviant { agent, state } => {
                        if agree_off(alpha, beta, *agent) {
                            let q =
                                goals[*agent].step(*state, crate::model::Letter::from_index(beta));
                            (!goals[*agent].is_accepting(q)).then(|| {
                                lookup(
                                    &TwState::Deviant {
                                        agent: *agent,
                                        state: q,
                                    },
                                    &index,
                                )
                            })
                        } else {
                            Some(accept as u32)
                        }
                    }
                    TwState::Accept => Some(accept as u32),
                };
                table[(id * letters + alpha) * letters + beta] = target.unwrap_or(UNDEFINED);
            }
        }
    }

    let accepting = states
        .iter()
        .map(|s| match s {
            TwState::Primary { pending, .. } => pending.is_empty(),
            TwState::Deviant { agent, state } => !goals[*agent].is_accepting(*state),
            TwState::Accept => true,
        })
        .collect();

    Ok(TwAutomaton {
        letters,
        states,
        index,
        accepting,
        table,
    })
}

impl TwAutomaton {
    pub fn initial(&self) -> usize {
        0
    }

    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, id: usize) -> &TwState {
        &self.states[id]
    }

    pub fn state_id(&self, s: &TwState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn is_accepting(&self, id: usize) -> bool {
        self.accepting[id]
    }

    /// `τ(state, label, direction)`; `None` where the automaton is stuck.
    pub fn transition(&self, state: usize, label: usize, direction: usize) -> Option<usize> {
        let t = self.table[(state * self.letters + label) * self.letters + direction];
        (t != UNDEFINED).then_some(t as usize)
    }

    /// The acceptance game: Player 0 picks labels, Player 1 picks directions.
    ///
    /// Positions `0..n` are automaton states, `n + s·|Σ| + α` are label
    /// choices, and the last position is the losing sink for undefined moves.
    pub fn acceptance_game(&self) -> BuchiGame {
        let n = self.states.len();
        let l = self.letters;
        let sink = n + n * l;
        let mut owner = vec![Player::Zero; n];
        owner.extend(std::iter::repeat_n(Player::One, n * l));
        owner.push(Player::Zero);
        let mut succ = Vec::with_capacity(sink + 1);
        for s in 0..n {
            succ.push((0..l).map(|a| n + s * l + a).collect());
        }
        for s in 0..n {
            for a in 0..l {
                let mut out: Vec<usize> = (0..l)
                    .map(|b| self.transition(s, a, b).unwrap_or(sink))
                    .collect();
                out.sort_unstable();
                out.dedup();
                succ.push(out);
            }
        }
        succ.push(vec![sink]);
        let mut accepting = self.accepting.clone();
        accepting.extend(std::iter::repeat_n(false, n * l + 1));
        BuchiGame::new(owner, succ, accepting)
    }

    /// For every state, whether some tree is accepted when started there.
    pub fn nonempty_states(&self) -> Vec<bool> {
        let win = solve_buchi_game(&self.acceptance_game());
        win[..self.states.len()].to_vec()
    }
}

pub fn tw_nonempty_from(tw: &TwAutomaton, start: usize) -> bool {
    tw.nonempty_states()[start]
}

/// Existence of a W-NE, decided through `T_W`.
pub fn oracle_decide_w_ne(game: &GameSpec, w: AgentSet) -> Result<bool, OracleError> {
    let tw = build_tw(game, w)?;
    Ok(tw_nonempty_from(&tw, tw.initial()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    Zero,
    One,
}

/// A finite two-player game where Player 0 wants to visit accepting
/// positions infinitely often.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiGame {
    owner: Vec<Player>,
    succ: Vec<Vec<usize>>,
    accepting: Vec<bool>,
}

impl BuchiGame {
    /// Panics unless every position has at least one successor.
    pub fn new(owner: Vec<Player>, succ: Vec<Vec<usize>>, accepting: Vec<bool>) -> Self {
        assert_eq!(owner.len(), succ.len());
        assert_eq!(owner.len(), accepting.len());
        for (v, s) in succ.iter().enumerate() {
            assert!(!s.is_empty(), "position {v} has no move");
            assert!(
                s.iter().all(|&t| t < owner.len()),
                "position {v} has a dangling move"
            );
        }
        BuchiGame {
            owner,
            succ,
            accepting,
        }
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn owner(&self, v: usize) -> Player {
        self.owner[v]
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn is_accepting(&self, v: usize) -> bool {
        self.accepting[v]
    }
}

/// Player 0's winning region.
///
/// Repeatedly: positions outside Player 0's attractor to the accepting set
/// form a trap where Player 1 wins; remove Player 1's attractor to that trap
/// and start over. When the trap is empty, every remaining position wins.
pub fn solve_buchi_game(game: &BuchiGame) -> Vec<bool> {
    let n = game.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        for &t in &game.succ[v] {
            preds[t].push(v);
        }
    }
    let mut alive = vec![true; n];
    loop {
        let target: Vec<bool> = (0..n).map(|v| alive[v] && game.accepting[v]).collect();
        let reach = attractor(game, &preds, Player::Zero, &target, &alive);
        let trap: Vec<bool> = (0..n).map(|v| alive[v] && !reach[v]).collect();
        if !trap.contains(&true) {
            return alive;
        }
        let lost = attractor(game, &preds, Player::One, &trap, &alive);
        for v in 0..n {
            if lost[v] {
                alive[v] = false;
            }
        }
    }
}

/// Positions of the subgame `alive` from which `player` forces a visit to `target`.
fn attractor(
    game: &BuchiGame,
    preds: &[Vec<usize>],
    player: Player,
    target: &[bool],
    alive: &[bool],
) -> Vec<bool> {
    let n = game.len();
    let mut attr = vec![false; n];
    let mut remaining: Vec<usize> = (0..n)
        .map(|v| game.succ[v].iter().filter(|&&t| alive[t]).count())
        .collect();
    let mut queue = VecDeque::new();
    for v in 0..n {
        if target[v] {
            attr[v] = true;
            queue.push_back(v);
        }
    }
    while let Some(t) = queue.pop_front() {
        for &v in &preds[t] {
            if !alive[v] || attr[v] {
                continue;
            }
            if game.owner[v] == player {
                attr[v] = true;
                queue.push_back(v);
            } else {
                remaining[v] -= 1;
                if remaining[v] == 0 {
                    attr[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    attr
}
