//! Safety games for potential deviators.
//!
//! For a deviator `j`, Player 0 owns the states of `A^j` and picks the joint
//! letter the other agents play (a projection with `j` removed); Player 1 owns
//! `(state, projection)` pairs and completes the letter with any action of
//! `j`. Accepting states of `A^j` have no successors, so reaching one leaves
//! Player 0 stuck and losing.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{AgentId, Alphabet, GameSpec, Letter, ProjectedLetter, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SafetyError {
    #[error("agent {agent} has a single action and cannot deviate")]
    DeviatorHasSingletonAlphabet { agent: AgentId },
    #[error("unknown agent {agent}")]
    UnknownAgent { agent: AgentId },
    #[error("state {state} is not a state of agent {agent}'s goal")]
    UnknownState { agent: AgentId, state: StateId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    /// A goal state; Player 0 chooses the other agents' actions.
    Player0(StateId),
    /// A goal state plus the chosen projection; Player 1 chooses the deviator's action.
    Player1 { state: StateId, projection: usize },
}

/// The game graph `G_j`, with Player-1 nodes keyed by projected letters.
#[derive(Debug, Clone)]
pub struct SafetyArena {
    deviator: AgentId,
    num_states: usize,
    projections: usize,
    dead_end: Vec<bool>,
    // CSR successor lists of Player-1 nodes, indexed by state * projections + p
    p1_offsets: Vec<usize>,
    p1_targets: Vec<StateId>,
}

pub fn build_safety_arena(game: &GameSpec, j: AgentId) -> Result<SafetyArena, SafetyError> {
    if j >= game.agents() {
        return Err(SafetyError::UnknownAgent { agent: j });
    }
    if !game.can_deviate(j) {
        return Err(SafetyError::DeviatorHasSingletonAlphabet { agent: j });
    }
    let alphabet = game.alphabet();
    let goal = game.goal(j);
    let n = goal.num_states();
    let projections = alphabet.projection_count(j);

    let mut p1_offsets = Vec::with_capacity(n * projections + 1);
    let mut p1_targets = Vec::new();
    let mut seen = vec![usize::MAX; n];
    p1_offsets.push(0);
    for q in 0..n {
        for p in 0..projections {
            let node = q * projections + p;
            let start = p1_targets.len();
            for beta in alphabet.letters_with_projection(ProjectedLetter::new(j, p)) {
                let t = goal.step(q, beta);
                if seen[t] != node {
                    seen[t] = node;
                    p1_targets.push(t);
                }
            }
            p1_targets[start..].sort_unstable();
            p1_offsets.push(p1_targets.len());
        }
    }
    Ok(SafetyArena {
        deviator: j,
        num_states: n,
        projections,
        dead_end: (0..n).map(|q| goal.is_accepting(q)).collect(),
        p1_offsets,
        p1_targets,
    })
}

impl SafetyArena {
    pub fn deviator(&self) -> AgentId {
        self.deviator
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn projections(&self) -> usize {
        self.projections
    }

    pub fn is_dead_end(&self, q: StateId) -> bool {
        self.dead_end[q]
    }

    pub fn node_count(&self) -> usize {
        self.num_states * (self.projections + 1)
    }

    pub fn edge_count(&self) -> usize {
        let p0 = self.dead_end.iter().filter(|&&d| !d).count() * self.projections;
        p0 + self.p1_targets.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        let p0 = (0..self.num_states).map(Node::Player0);
        let p1 = (0..self.num_states).flat_map(move |state| {
            (0..self.projections).map(move |projection| Node::Player1 { state, projection })
        });
        p0.chain(p1)
    }

    /// Player-1 successors of `(state, projection)`.
    pub fn responses(&self, state: StateId, projection: usize) -> &[StateId] {
        let i = state * self.projections + projection;
        &self.p1_targets[self.p1_offsets[i]..self.p1_offsets[i + 1]]
    }

    pub fn successors(&self, node: Node) -> Vec<Node> {
        match node {
            Node::Player0(q) if self.dead_end[q] => Vec::new(),
            Node::Player0(q) => (0..self.projections)
                .map(|projection| Node::Player1 {
                    state: q,
                    projection,
                })
                .collect(),
            Node::Player1 { state, projection } => self
                .responses(state, projection)
                .iter()
                .map(|&t| Node::Player0(t))
                .collect(),
        }
    }

    /// Line-oriented listing: one line per node with its owner and successors.
    pub fn dump(&self, game: &GameSpec) -> String {
        let alphabet = game.alphabet();
        let goal = game.goal(self.deviator);
        let proj = |p: usize| alphabet.format_projected(ProjectedLetter::new(self.deviator, p));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# arena agent={} nodes={} edges={}",
            self.deviator,
            self.node_count(),
            self.edge_count()
        );
        for q in 0..self.num_states {
            let _ = write!(out, "node {} owner 0 ->", goal.state_name(q));
            if self.dead_end[q] {
                out.push_str(" (dead end)");
            }
            for p in 0..self.projections {
                if !self.dead_end[q] {
                    let _ = write!(out, " {}/{}", goal.state_name(q), proj(p));
                }
            }
            out.push('\n');
        }
        for q in 0..self.num_states {
            for p in 0..self.projections {
                let _ = write!(out, "node {}/{} owner 1 ->", goal.state_name(q), proj(p));
                for &t in self.responses(q, p) {
                    let _ = write!(out, " {}", goal.state_name(t));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Winning region and positional strategy of Player 0 in `G_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetySolution {
    deviator: AgentId,
    projections: usize,
    win_p0: Vec<bool>,
    win_p1: Vec<bool>,
    strategy: Vec<Option<usize>>,
}

/// Complement of Player 1's attractor to the dead ends, in `O(|V| + |E|)`.
pub fn solve_safety(arena: &SafetyArena) -> SafetySolution {
    let n = arena.num_states;
    let m = arena.projections;

    // reverse edges Player0(t) <- Player1(node)
    let mut pred_count = vec![0usize; n + 1];
    for &t in &arena.p1_targets {
        pred_count[t + 1] += 1;
    }
    for i in 0..n {
        pred_count[i + 1] += pred_count[i];
    }
    let mut fill = pred_count.clone();
    let mut preds = vec![0usize; arena.p1_targets.len()];
    for node in 0..n * m {
        for &t in &arena.p1_targets[arena.p1_offsets[node]..arena.p1_offsets[node + 1]] {
            preds[fill[t]] = node;
            fill[t] += 1;
        }
    }

    let mut lost_p0 = vec![false; n];
    let mut lost_p1 = vec![false; n * m];
    let mut remaining = vec![m; n];
    let mut queue = VecDeque::new();
    for (q, &dead) in arena.dead_end.iter().enumerate() {
        if dead {
            lost_p0[q] = true;
            queue.push_back(q);
        }
    }
    while let Some(q) = queue.pop_front() {
        for &node in &preds[pred_count[q]..pred_count[q + 1]] {
            if lost_p1[node] {
                continue;
            }
            lost_p1[node] = true;
            let owner = node / m;
            if arena.dead_end[owner] || lost_p0[owner] {
                continue;
            }
            remaining[owner] -= 1;
            if remaining[owner] == 0 {
                lost_p0[owner] = true;
                queue.push_back(owner);
            }
        }
    }

    let win_p0: Vec<bool> = lost_p0.iter().map(|&l| !l).collect();
    let win_p1: Vec<bool> = lost_p1.iter().map(|&l| !l).collect();
    let strategy = (0..n)
        .map(|q| {
            if win_p0[q] {
                (0..m).find(|&p| win_p1[q * m + p])
            } else {
                None
            }
        })
        .collect();
    SafetySolution {
        deviator: arena.deviator,
        projections: m,
        win_p0,
        win_p1,
        strategy,
    }
}

impl SafetySolution {
    pub fn deviator(&self) -> AgentId {
        self.deviator
    }

    pub fn num_states(&self) -> usize {
        self.win_p0.len()
    }

    /// `q ∈ Win_0(G_j)`.
    #[inline]
    pub fn is_winning_state(&self, q: StateId) -> bool {
        self.win_p0[q]
    }

    /// Whether the Player-1 node `(q, projection)` is winning for Player 0.
    #[inline]
    pub fn is_winning_response(&self, q: StateId, projection: usize) -> bool {
        self.win_p1[q * self.projections + projection]
    }

    pub fn is_winning_node(&self, node: Node) -> bool {
        match node {
            Node::Player0(q) => self.win_p0[q],
            Node::Player1 { state, projection } => self.is_winning_response(state, projection),
        }
    }

    pub fn winning_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.win_p0.len()).filter(|&q| self.win_p0[q])
    }

    /// The positional move chosen at a winning state.
    pub fn strategy(&self, q: StateId) -> Option<ProjectedLetter> {
        self.strategy[q].map(|p| ProjectedLetter::new(self.deviator, p))
    }

    /// Whether playing `letter` at goal state `q` keeps Player 0 winning.
    pub fn winning_moves(
        &self,
        alphabet: &Alphabet,
        q: StateId,
        letter: Letter,
    ) -> Result<bool, SafetyError> {
        if q >= self.win_p0.len() {
            return Err(SafetyError::UnknownState {
                agent: self.deviator,
                state: q,
            });
        }
        let p = alphabet.project_out(letter, self.deviator);
        Ok(self.is_winning_response(q, p.index()))
    }
}
