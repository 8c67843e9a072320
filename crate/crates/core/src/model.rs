//! Joint alphabets, goal automata, games and lassos.
//!
//! A joint letter picks one action per agent. Letters are identified by their
//! canonical index: the mixed-radix number whose digits are the per-agent
//! action indices, agent 0 most significant. Iterating `0..size` therefore
//! enumerates letters in lexicographic order of their action-index tuples,
//! which is the tie-breaking order used everywhere in the crate.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type AgentId = usize;
pub type StateId = usize;

/// Wildcard token accepted in transition letters of game files.
pub const WILDCARD: &str = "_";

/// A joint letter, stored as its canonical index in the joint alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(usize);

impl Letter {
    pub fn from_index(index: usize) -> Self {
        Letter(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// A joint letter with one agent's component removed.
///
/// Two projections compare equal exactly when they remove the same agent and
/// the original letters agree on every other component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProjectedLetter {
    agent: AgentId,
    index: usize,
}

impl ProjectedLetter {
    pub fn new(agent: AgentId, index: usize) -> Self {
        ProjectedLetter { agent, index }
    }

    /// The agent whose component was removed.
    pub fn agent(self) -> AgentId {
        self.agent
    }

    /// Canonical index among all projections that remove `agent`.
    pub fn index(self) -> usize {
        self.index
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("game has no agents")]
    NoAgents,
    #[error("{0} agents given; at most 64 are supported")]
    TooManyAgents(usize),
    #[error("agent ids must be exactly 0..{expected}; found id {found}")]
    BadAgentId { expected: usize, found: AgentId },
    #[error("agent id {0} is declared twice")]
    DuplicateAgent(AgentId),
    #[error("agent {agent} has an empty action alphabet")]
    EmptyAlphabet { agent: AgentId },
    #[error("agent {agent} lists action `{action}` twice")]
    DuplicateAction { agent: AgentId, action: String },
    #[error("agent {agent}: `_` is reserved as the wildcard and cannot name an action")]
    ReservedAction { agent: AgentId },
    #[error("joint alphabet size overflows")]
    AlphabetTooLarge,
    #[error("no goal given for agent {agent}")]
    MissingGoal { agent: AgentId },
    #[error("agent {agent} has more than one goal")]
    DuplicateGoal { agent: AgentId },
    #[error("goal refers to unknown agent {agent}")]
    UnknownGoalAgent { agent: AgentId },
    #[error("goal of agent {agent} has no states")]
    NoStates { agent: AgentId },
    #[error("goal of agent {agent} declares state `{state}` twice")]
    DuplicateState { agent: AgentId, state: String },
    #[error("goal of agent {agent}: unknown state `{state}` ({context})")]
    UnknownState {
        agent: AgentId,
        state: String,
        context: String,
    },
    #[error("goal of agent {agent}, transitions[{entry}]: letter has {found} components, expected {expected}")]
    LetterArity {
        agent: AgentId,
        entry: usize,
        found: usize,
        expected: usize,
    },
    #[error(
        "goal of agent {agent}, transitions[{entry}]: `{action}` is not an action of agent {owner}"
    )]
    UnknownActionInTransition {
        agent: AgentId,
        entry: usize,
        owner: AgentId,
        action: String,
    },
    #[error("goal of agent {agent}: transitions[{first}] and transitions[{second}] both cover state `{state}` on letter {letter} with different targets")]
    ConflictingTransition {
        agent: AgentId,
        first: usize,
        second: usize,
        state: String,
        letter: String,
    },
    #[error("goal of agent {agent}: no transition from state `{state}` on letter {letter}")]
    NonTotalTransition {
        agent: AgentId,
        state: String,
        letter: String,
    },
    #[error("goal of agent {agent}: initial state `{state}` is accepting")]
    AcceptingInitialState { agent: AgentId, state: String },
    #[error("goal of agent {agent} is defined over {found} letters, but the joint alphabet has {expected}")]
    GoalAlphabetMismatch {
        agent: AgentId,
        found: usize,
        expected: usize,
    },
}

/// Every violation found while validating a game.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValidationErrors(pub Vec<GameError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl From<GameError> for ValidationErrors {
    fn from(e: GameError) -> Self {
        ValidationErrors(vec![e])
    }
}

/// The factored joint alphabet `Σ_0 × … × Σ_{k-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    actions: Vec<Vec<String>>,
    strides: Vec<usize>,
    size: usize,
}

impl Alphabet {
    pub fn new(actions: Vec<Vec<String>>) -> Result<Self, GameError> {
        if actions.is_empty() {
            return Err(GameError::NoAgents);
        }
        if actions.len() > 64 {
            return Err(GameError::TooManyAgents(actions.len()));
        }
        for (agent, acts) in actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(GameError::EmptyAlphabet { agent });
            }
            let mut seen = HashMap::new();
            for a in acts {
                if a == WILDCARD {
                    return Err(GameError::ReservedAction { agent });
                }
                if seen.insert(a.as_str(), ()).is_some() {
                    return Err(GameError::DuplicateAction {
                        agent,
                        action: a.clone(),
                    });
                }
            }
        }
        let mut strides = vec![1usize; actions.len()];
        let mut size = 1usize;
        for i in (0..actions.len()).rev() {
            strides[i] = size;
            size = size
                .checked_mul(actions[i].len())
                .ok_or(GameError::AlphabetTooLarge)?;
        }
        Ok(Alphabet {
            actions,
            strides,
            size,
        })
    }

    pub fn agents(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self, agent: AgentId) -> &[String] {
        &self.actions[agent]
    }

    pub fn num_actions(&self, agent: AgentId) -> usize {
        self.actions[agent].len()
    }

    /// Number of joint letters.
    pub fn size(&self) -> usize {
        self.size
    }

    /// All letters in canonical order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + Clone {
        (0..self.size).map(Letter)
    }

    pub fn component(&self, letter: Letter, agent: AgentId) -> usize {
        (letter.0 / self.strides[agent]) % self.actions[agent].len()
    }

    pub fn components(&self, letter: Letter) -> Vec<usize> {
        (0..self.agents())
            .map(|i| self.component(letter, i))
            .collect()
    }

    /// The letter with the given action indices, if they are all in range.
    pub fn letter(&self, components: &[usize]) -> Option<Letter> {
        if components.len() != self.agents() {
            return None;
        }
        let mut index = 0;
        for (i, &c) in components.iter().enumerate() {
            if c >= self.actions[i].len() {
                return None;
            }
            index += c * self.strides[i];
        }
        Some(Letter(index))
    }

    /// Removes agent `j`'s component.
    pub fn project_out(&self, letter: Letter, j: AgentId) -> ProjectedLetter {
        let stride = self.strides[j];
        let block = stride * self.actions[j].len();
        let high = letter.0 / block;
        let low = letter.0 % stride;
        ProjectedLetter {
            agent: j,
            index: high * stride + low,
        }
    }

    /// Number of distinct projections with agent `j` removed.
    pub fn projection_count(&self, j: AgentId) -> usize {
        self.size / self.actions[j].len()
    }

    /// Re-inserts agent `p.agent()`'s component as `action`.
    pub fn lift(&self, p: ProjectedLetter, action: usize) -> Letter {
        let j = p.agent;
        let stride = self.strides[j];
        let block = stride * self.actions[j].len();
        let high = p.index / stride;
        let low = p.index % stride;
        Letter(high * block + action * stride + low)
    }

    /// All letters whose projection is `p`, in canonical order.
    pub fn letters_with_projection(&self, p: ProjectedLetter) -> impl Iterator<Item = Letter> + '_ {
        (0..self.actions[p.agent].len()).map(move |a| self.lift(p, a))
    }

    /// Action indices of a projected letter, in agent order with the removed slot skipped.
    pub fn projected_components(&self, p: ProjectedLetter) -> Vec<usize> {
        let full = self.lift(p, 0);
        (0..self.agents())
            .filter(|&i| i != p.agent)
            .map(|i| self.component(full, i))
            .collect()
    }

    pub fn action_names(&self, letter: Letter) -> Vec<String> {
        (0..self.agents())
            .map(|i| self.actions[i][self.component(letter, i)].clone())
            .collect()
    }

    /// Looks up a letter by action names, one per agent.
    pub fn parse_letter<S: AsRef<str>>(&self, names: &[S]) -> Option<Letter> {
        if names.len() != self.agents() {
            return None;
        }
        let mut comps = Vec::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            comps.push(self.actions[i].iter().position(|a| a == n.as_ref())?);
        }
        self.letter(&comps)
    }

    /// `(a,x)` style rendering.
    pub fn format_letter(&self, letter: Letter) -> String {
        format!("({})", self.action_names(letter).join(","))
    }

    pub fn format_projected(&self, p: ProjectedLetter) -> String {
        let names: Vec<&str> = self
            .projected_components(p)
            .into_iter()
            .zip((0..self.agents()).filter(|&i| i != p.agent))
            .map(|(c, i)| self.actions[i][c].as_str())
            .collect();
        format!("({})", names.join(","))
    }
}

/// A complete deterministic automaton over joint letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalDfa {
    state_names: Vec<String>,
    initial: StateId,
    accepting: Vec<bool>,
    // row-major: state * letters + letter
    delta: Vec<StateId>,
    letters: usize,
}

impl GoalDfa {
    /// Builds a DFA from a complete row-major transition table.
    ///
    /// Panics if the table shape or any target is out of range; callers that
    /// handle untrusted input go through [`validate_game`].
    pub fn new(
        state_names: Vec<String>,
        initial: StateId,
        accepting: &[StateId],
        delta: Vec<StateId>,
        letters: usize,
    ) -> Self {
        let n = state_names.len();
        assert!(n > 0, "a DFA needs at least one state");
        assert!(initial < n, "initial state out of range");
        assert_eq!(delta.len(), n * letters, "transition table is not total");
        assert!(
            delta.iter().all(|&t| t < n),
            "transition target out of range"
        );
        let mut acc = vec![false; n];
        for &q in accepting {
            acc[q] = true;
        }
        GoalDfa {
            state_names,
            initial,
            accepting: acc,
            delta,
            letters,
        }
    }

    /// Same as [`GoalDfa::new`] with states named `q0, q1, …`.
    pub fn from_table(
        num_states: usize,
        initial: StateId,
        accepting: &[StateId],
        delta: Vec<StateId>,
        letters: usize,
    ) -> Self {
        let names = (0..num_states).map(|i| format!("q{i}")).collect();
        Self::new(names, initial, accepting, delta, letters)
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_letters(&self) -> usize {
        self.letters
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states()).filter(|&q| self.accepting[q])
    }

    #[inline]
    pub fn step(&self, q: StateId, letter: Letter) -> StateId {
        self.delta[q * self.letters + letter.0]
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.state_names[q]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.state_names.iter().position(|s| s == name)
    }

    /// The run `q_0, q_1, …, q_n` on a finite word.
    pub fn run(&self, word: &[Letter]) -> Vec<StateId> {
        let mut states = Vec::with_capacity(word.len() + 1);
        let mut q = self.initial;
        states.push(q);
        for &l in word {
            q = self.step(q, l);
            states.push(q);
        }
        states
    }

    /// Whether some nonempty finite prefix of `prefix · cycle^ω` is accepted.
    ///
    /// The state at consecutive cycle boundaries repeats within `|Q|` periods,
    /// so `|prefix| + |cycle|·|Q|` steps decide the question.
    pub fn lasso_satisfies(&self, lasso: &Lasso) -> bool {
        let mut q = self.initial;
        for &l in &lasso.prefix {
            q = self.step(q, l);
            if self.accepting[q] {
                return true;
            }
        }
        for _ in 0..self.num_states() {
            for &l in &lasso.cycle {
                q = self.step(q, l);
                if self.accepting[q] {
                    return true;
                }
            }
        }
        false
    }
}

/// A validated iterated Boolean game: a joint alphabet and one goal per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSpec {
    alphabet: Alphabet,
    goals: Vec<GoalDfa>,
}

impl GameSpec {
    pub fn new(alphabet: Alphabet, goals: Vec<GoalDfa>) -> Result<Self, ValidationErrors> {
        let mut errors = Vec::new();
        if goals.len() != alphabet.agents() {
            for agent in goals.len()..alphabet.agents() {
                errors.push(GameError::MissingGoal { agent });
            }
            for agent in alphabet.agents()..goals.len() {
                errors.push(GameError::UnknownGoalAgent { agent });
            }
        }
        for (agent, g) in goals.iter().enumerate() {
            if g.num_letters() != alphabet.size() {
                errors.push(GameError::GoalAlphabetMismatch {
                    agent,
                    found: g.num_letters(),
                    expected: alphabet.size(),
                });
            }
            if g.is_accepting(g.initial()) {
                errors.push(GameError::AcceptingInitialState {
                    agent,
                    state: g.state_name(g.initial()).to_string(),
                });
            }
        }
        if errors.is_empty() {
            Ok(GameSpec { alphabet, goals })
        } else {
            Err(ValidationErrors(errors))
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn agents(&self) -> usize {
        self.alphabet.agents()
    }

    pub fn goal(&self, agent: AgentId) -> &GoalDfa {
        &self.goals[agent]
    }

    pub fn goals(&self) -> &[GoalDfa] {
        &self.goals
    }

    /// Agents with at least two actions; only they can deviate.
    pub fn can_deviate(&self, agent: AgentId) -> bool {
        self.alphabet.num_actions(agent) >= 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("lasso cycle must be nonempty")]
pub struct EmptyCycle;

/// An ultimately periodic word `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lasso {
    prefix: Vec<Letter>,
    cycle: Vec<Letter>,
}

impl Lasso {
    pub fn new(prefix: Vec<Letter>, cycle: Vec<Letter>) -> Result<Self, EmptyCycle> {
        if cycle.is_empty() {
            return Err(EmptyCycle);
        }
        Ok(Lasso { prefix, cycle })
    }

    pub fn prefix(&self) -> &[Letter] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Letter] {
        &self.cycle
    }

    /// Letter at position `i` of the infinite word.
    pub fn letter_at(&self, i: usize) -> Letter {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    pub fn format(&self, alphabet: &Alphabet) -> String {
        let show = |w: &[Letter]| {
            w.iter()
                .map(|&l| alphabet.format_letter(l))
                .collect::<Vec<_>>()
                .join("")
        };
        let prefix = if self.prefix.is_empty() {
            "ε".to_string()
        } else {
            show(&self.prefix)
        };
        format!("{prefix}·({})^ω", show(&self.cycle))
    }
}

// ---------------------------------------------------------------------------
// Raw game documents

/// The JSON game document as written on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGame {
    pub agents: Vec<RawAgent>,
    pub goals: Vec<RawGoal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAgent {
    pub id: AgentId,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGoal {
    pub agent: AgentId,
    pub states: Vec<String>,
    pub initial: String,
    pub accepting: Vec<String>,
    pub transitions: Vec<RawTransition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTransition {
    pub from: String,
    pub letter: Vec<String>,
    pub to: String,
}

/// Expands wildcards and checks every game invariant, collecting all violations.
pub fn validate_game(raw: &RawGame) -> Result<GameSpec, ValidationErrors> {
    let alphabet = build_alphabet(&raw.agents)?;
    let k = alphabet.agents();

    let mut by_agent: BTreeMap<AgentId, &RawGoal> = BTreeMap::new();
    let mut errors = Vec::new();
    for g in &raw.goals {
        if g.agent >= k {
            errors.push(GameError::UnknownGoalAgent { agent: g.agent });
        } else if by_agent.insert(g.agent, g).is_some() {
            errors.push(GameError::DuplicateGoal { agent: g.agent });
        }
    }
    for agent in 0..k {
        if !by_agent.contains_key(&agent) {
            errors.push(GameError::MissingGoal { agent });
        }
    }

    let mut goals = Vec::with_capacity(k);
    for (&agent, g) in &by_agent {
        match build_goal(&alphabet, agent, g) {
            Ok(dfa) => goals.push(dfa),
            Err(mut es) => errors.append(&mut es),
        }
    }
    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }
    GameSpec::new(alphabet, goals)
}

pub(crate) fn build_alphabet(agents: &[RawAgent]) -> Result<Alphabet, GameError> {
    if agents.is_empty() {
        return Err(GameError::NoAgents);
    }
    let k = agents.len();
    let mut slots: Vec<Option<Vec<String>>> = vec![None; k];
    for a in agents {
        if a.id >= k {
            return Err(GameError::BadAgentId {
                expected: k,
                found: a.id,
            });
        }
        if slots[a.id].is_some() {
            return Err(GameError::DuplicateAgent(a.id));
        }
        slots[a.id] = Some(a.actions.clone());
    }
    Alphabet::new(slots.into_iter().map(|s| s.unwrap_or_default()).collect())
}

pub(crate) fn build_goal(
    alphabet: &Alphabet,
    agent: AgentId,
    g: &RawGoal,
) -> Result<GoalDfa, Vec<GameError>> {
    let mut errors = Vec::new();
    if g.states.is_empty() {
        return Err(vec![GameError::NoStates { agent }]);
    }
    let mut index: HashMap<&str, StateId> = HashMap::new();
    for (i, s) in g.states.iter().enumerate() {
        if index.insert(s.as_str(), i).is_some() {
            errors.push(GameError::DuplicateState {
                agent,
                state: s.clone(),
            });
        }
    }
    let lookup = |name: &str, context: String, errors: &mut Vec<GameError>| {
        let found = index.get(name).copied();
        if found.is_none() {
            errors.push(GameError::UnknownState {
                agent,
                state: name.to_string(),
                context,
            });
        }
        found
    };
    let initial = lookup(&g.initial, "initial".into(), &mut errors);
    let accepting: Vec<StateId> = g
        .accepting
        .iter()
        .filter_map(|s| lookup(s, "accepting".into(), &mut errors))
        .collect();

    let n = g.states.len();
    let letters = alphabet.size();
    // (target, source entry) per (state, letter)
    let mut table: Vec<Option<(StateId, usize)>> = vec![None; n * letters];
    for (entry, t) in g.transitions.iter().enumerate() {
        let from = lookup(&t.from, format!("transitions[{entry}].from"), &mut errors);
        let to = lookup(&t.to, format!("transitions[{entry}].to"), &mut errors);
        if t.letter.len() != alphabet.agents() {
            errors.push(GameError::LetterArity {
                agent,
                entry,
                found: t.letter.len(),
                expected: alphabet.agents(),
            });
            continue;
        }
        // per-agent candidate action indices after wildcard expansion
        let mut choices: Vec<Vec<usize>> = Vec::with_capacity(alphabet.agents());
        let mut bad = false;
        for (owner, name) in t.letter.iter().enumerate() {
            if name == WILDCARD {
                choices.push((0..alphabet.num_actions(owner)).collect());
            } else if let Some(a) = alphabet.actions(owner).iter().position(|x| x == name) {
                choices.push(vec![a]);
            } else {
                errors.push(GameError::UnknownActionInTransition {
                    agent,
                    entry,
                    owner,
                    action: name.clone(),
                });
                bad = true;
            }
        }
        let (Some(from), Some(to)) = (from, to) else {
            continue;
        };
        if bad {
            continue;
        }
        for letter in expand(alphabet, &choices) {
            let slot = &mut table[from * letters + letter.index()];
            match *slot {
                None => *slot = Some((to, entry)),
                Some((prev, first)) if prev != to => {
                    errors.push(GameError::ConflictingTransition {
                        agent,
                        first,
                        second: entry,
                        state: g.states[from].clone(),
                        letter: alphabet.format_letter(letter),
                    });
                }
                Some(_) => {}
            }
        }
    }

    let mut delta = Vec::with_capacity(n * letters);
    for q in 0..n {
        for l in alphabet.letters() {
            match table[q * letters + l.index()] {
                Some((to, _)) => delta.push(to),
                None => {
                    errors.push(GameError::NonTotalTransition {
                        agent,
                        state: g.states[q].clone(),
                        letter: alphabet.format_letter(l),
                    });
                    delta.push(0);
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let initial = initial.expect("checked above");
    Ok(GoalDfa::new(
        g.states.clone(),
        initial,
        &accepting,
        delta,
        letters,
    ))
}

fn expand(alphabet: &Alphabet, choices: &[Vec<usize>]) -> Vec<Letter> {
    let mut out = vec![Vec::new()];
    for opts in choices {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for prefix in &out {
            for &c in opts {
                let mut p: Vec<usize> = prefix.clone();
                p.push(c);
                next.push(p);
            }
        }
        out = next;
    }
    out.iter()
        .map(|c| alphabet.letter(c).expect("expanded in range"))
        .collect()
}

/// Canonical raw form: agents in id order, one explicit transition per
/// (state, letter) in canonical letter order.
pub fn game_to_raw(game: &GameSpec) -> RawGame {
    let alphabet = game.alphabet();
    let agents = (0..game.agents())
        .map(|id| RawAgent {
            id,
            actions: alphabet.actions(id).to_vec(),
        })
        .collect();
    let goals = game
        .goals()
        .iter()
        .enumerate()
        .map(|(agent, g)| RawGoal {
            agent,
            states: g.state_names().to_vec(),
            initial: g.state_name(g.initial()).to_string(),
            accepting: g
                .accepting_states()
                .map(|q| g.state_name(q).to_string())
                .collect(),
            transitions: (0..g.num_states())
                .flat_map(|q| {
                    alphabet.letters().map(move |l| RawTransition {
                        from: g.state_name(q).to_string(),
                        letter: alphabet.action_names(l),
                        to: g.state_name(g.step(q, l)).to_string(),
                    })
                })
                .collect(),
        })
        .collect();
    RawGame { agents, goals }
}
