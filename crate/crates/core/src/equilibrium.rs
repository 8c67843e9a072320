//! The word automata `A_W` and `A'_W`, Büchi nonemptiness with lasso
//! extraction, and the W-NE decision procedure built on them.
//!
//! A state of `A_W` tracks every goal automaton plus the set of agents in `W`
//! whose goals are still pending. A letter that would drive an agent outside
//! `W` into an accepting state has no transition. `A'_W` further drops every
//! letter that is not a winning move of Player 0 in the safety game of some
//! deviator outside `W`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::hash::Hash;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::agent_set::AgentSet;
use crate::model::{AgentId, GameSpec, Lasso, Letter, StateId};
use crate::safety::{build_safety_arena, solve_safety, SafetyError, SafetySolution};

pub const DEFAULT_STATE_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("explored more than {budget} states")]
    StateBudgetExceeded { budget: usize },
    #[error("no safety solution supplied for deviator {agent}")]
    MissingSolution { agent: AgentId },
    #[error("unknown agent {agent}")]
    UnknownAgent { agent: AgentId },
    #[error(transparent)]
    Safety(#[from] SafetyError),
}

/// A state of `A_W` (and of `A'_W`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AwState {
    pub components: Vec<StateId>,
    pub pending: AgentSet,
}

impl AwState {
    pub fn is_accepting(&self) -> bool {
        self.pending.is_empty()
    }
}

fn check_winning_set(game: &GameSpec, w: AgentSet) -> Result<(), SolveError> {
    match w.iter().find(|&a| a >= game.agents()) {
        Some(agent) => Err(SolveError::UnknownAgent { agent }),
        None => Ok(()),
    }
}

pub fn aw_initial(game: &GameSpec, w: AgentSet) -> AwState {
    AwState {
        components: game.goals().iter().map(|g| g.initial()).collect(),
        pending: w,
    }
}

/// One step of `A_W`; `None` means the automaton is stuck.
pub fn aw_step(game: &GameSpec, w: AgentSet, s: &AwState, letter: Letter) -> Option<AwState> {
    let mut components = Vec::with_capacity(s.components.len());
    let mut pending = s.pending;
    for (i, (&q, goal)) in s.components.iter().zip(game.goals()).enumerate() {
        let next = goal.step(q, letter);
        if goal.is_accepting(next) {
            if !w.contains(i) {
                return None;
            }
            pending.remove(i);
        }
        components.push(next);
    }
    Some(AwState {
        components,
        pending,
    })
}

/// Safety solutions for the agents that may deviate.
#[derive(Debug, Clone, Default)]
pub struct DeviationGuards {
    solutions: Vec<Option<SafetySolution>>,
}

impl DeviationGuards {
    /// Solves `G_j` for every agent `j` that has at least two actions.
    pub fn for_all(game: &GameSpec) -> Self {
        Self::for_agents(game, 0..game.agents())
    }

    /// Solves `G_j` for every deviating agent outside `w`.
    pub fn for_winning_set(game: &GameSpec, w: AgentSet) -> Self {
        Self::for_agents(game, (0..game.agents()).filter(|&j| !w.contains(j)))
    }

    fn for_agents(game: &GameSpec, agents: impl IntoIterator<Item = AgentId>) -> Self {
        let mut solutions = vec![None; game.agents()];
        for j in agents {
            if game.can_deviate(j) {
                let arena = build_safety_arena(game, j).expect("agent can deviate");
                solutions[j] = Some(solve_safety(&arena));
            }
        }
        DeviationGuards { solutions }
    }

    pub fn from_solutions(solutions: Vec<Option<SafetySolution>>) -> Self {
        DeviationGuards { solutions }
    }

    pub fn get(&self, j: AgentId) -> Option<&SafetySolution> {
        self.solutions.get(j).and_then(Option::as_ref)
    }

    /// Checks that every deviator outside `w` has a solution.
    pub fn check(&self, game: &GameSpec, w: AgentSet) -> Result<(), SolveError> {
        for j in 0..game.agents() {
            if !w.contains(j) && game.can_deviate(j) && self.get(j).is_none() {
                return Err(SolveError::MissingSolution { agent: j });
            }
        }
        Ok(())
    }
}

/// One step of `A'_W`; `None` means stuck.
pub fn apw_step(
    game: &GameSpec,
    w: AgentSet,
    guards: &DeviationGuards,
    s: &AwState,
    letter: Letter,
) -> Result<Option<AwState>, SolveError> {
    guards.check(game, w)?;
    Ok(apw_step_checked(game, w, guards, s, letter))
}

fn apw_step_checked(
    game: &GameSpec,
    w: AgentSet,
    guards: &DeviationGuards,
    s: &AwState,
    letter: Letter,
) -> Option<AwState> {
    let alphabet = game.alphabet();
    for j in 0..game.agents() {
        if w.contains(j) {
            continue;
        }
        if let Some(sol) = guards.get(j) {
            let p = alphabet.project_out(letter, j);
            if !sol.is_winning_response(s.components[j], p.index()) {
                return None;
            }
        }
    }
    let next = aw_step(game, w, s, letter)?;
    for j in 0..game.agents() {
        if w.contains(j) {
            continue;
        }
        if let Some(sol) = guards.get(j) {
            if !sol.is_winning_state(next.components[j]) {
                return None;
            }
        }
    }
    Some(next)
}

/// Result of a Büchi nonemptiness search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub lasso: Option<Lasso>,
    pub explored: usize,
}

struct Explorer<S, F> {
    states: Vec<S>,
    index: HashMap<S, usize>,
    succ: Vec<Option<Vec<(Letter, usize)>>>,
    letters: usize,
    step: F,
    budget: usize,
}

impl<S, F> Explorer<S, F>
where
    S: Clone + Eq + Hash,
    F: FnMut(&S, Letter) -> Option<S>,
{
    fn intern(&mut self, s: S) -> Result<usize, SolveError> {
        if let Some(&i) = self.index.get(&s) {
            return Ok(i);
        }
        if self.states.len() >= self.budget {
            return Err(SolveError::StateBudgetExceeded {
                budget: self.budget,
            });
        }
        let i = self.states.len();
        self.index.insert(s.clone(), i);
        self.states.push(s);
        self.succ.push(None);
        Ok(i)
    }

    fn successors(&mut self, i: usize) -> Result<&[(Letter, usize)], SolveError> {
        if self.succ[i].is_none() {
            let mut out = Vec::new();
            for l in 0..self.letters {
                let letter = Letter::from_index(l);
                let from = self.states[i].clone();
                if let Some(t) = (self.step)(&from, letter) {
                    out.push((letter, self.intern(t)?));
                }
            }
            self.succ[i] = Some(out);
        }
        Ok(self.succ[i].as_deref().expect("just filled"))
    }

    /// Shortest cycle from `start` back to itself, lexicographically least
    /// among the shortest.
    fn cycle_from(&mut self, start: usize) -> Result<Option<Vec<Letter>>, SolveError> {
        let mut parent: HashMap<usize, (usize, Letter)> = HashMap::new();
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let succ = self.successors(v)?.to_vec();
            for (letter, t) in succ {
                if t == start {
                    let mut word = vec![letter];
                    let mut cur = v;
                    while cur != start {
                        let (p, l) = parent[&cur];
                        word.push(l);
                        cur = p;
                    }
                    word.reverse();
                    return Ok(Some(word));
                }
                if t != start && !parent.contains_key(&t) {
                    parent.insert(t, (v, letter));
                    queue.push_back(t);
                }
            }
        }
        Ok(None)
    }
}

/// Explicit on-the-fly Büchi nonemptiness.
///
/// Breadth-first search in canonical letter order finds accepting states
/// nearest first; the first one lying on a cycle yields the lasso `u · v^ω`
/// with `u` the BFS path to it and `v` the shortest cycle through it.
pub fn buchi_nonempty<S, F, A>(
    initial: S,
    letters: usize,
    step: F,
    accepting: A,
    budget: usize,
) -> Result<SearchOutcome, SolveError>
where
    S: Clone + Eq + Hash,
    F: FnMut(&S, Letter) -> Option<S>,
    A: Fn(&S) -> bool,
{
    let mut ex = Explorer {
        states: Vec::new(),
        index: HashMap::new(),
        succ: Vec::new(),
        letters,
        step,
        budget,
    };
    let root = ex.intern(initial)?;
    // BFS discovery data, indexed by explorer id
    let mut bfs_parent: HashMap<usize, Option<(usize, Letter)>> = HashMap::new();
    bfs_parent.insert(root, None);
    let mut bfs_order = vec![root];
    let mut queue = VecDeque::from([root]);
    let mut fallback = false;

    let prefix_to = |bfs_parent: &HashMap<usize, Option<(usize, Letter)>>, mut v: usize| {
        let mut word = Vec::new();
        while let Some((p, l)) = bfs_parent[&v] {
            word.push(l);
            v = p;
        }
        word.reverse();
        word
    };

    if accepting(&ex.states[root]) {
        match ex.cycle_from(root)? {
            Some(cycle) => {
                return Ok(SearchOutcome {
                    lasso: Some(Lasso::new(Vec::new(), cycle).expect("nonempty")),
                    explored: ex.states.len(),
                })
            }
            None => fallback = true,
        }
    }

    while let Some(v) = queue.pop_front() {
        let succ = ex.successors(v)?.to_vec();
        for (letter, t) in succ {
            if bfs_parent.contains_key(&t) {
                continue;
            }
            bfs_parent.insert(t, Some((v, letter)));
            bfs_order.push(t);
            queue.push_back(t);
            if !fallback && accepting(&ex.states[t]) {
                match ex.cycle_from(t)? {
                    Some(cycle) => {
                        let prefix = prefix_to(&bfs_parent, t);
                        return Ok(SearchOutcome {
                            lasso: Some(Lasso::new(prefix, cycle).expect("nonempty")),
                            explored: ex.states.len(),
                        });
                    }
                    None => fallback = true,
                }
            }
        }
    }

    if !fallback {
        return Ok(SearchOutcome {
            lasso: None,
            explored: ex.states.len(),
        });
    }

    // Some accepting state had no cycle back to itself; the whole reachable
    // graph is now explored, so pick the first accepting state (BFS order)
    // that sits on a cycle.
    let n = ex.states.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            ex.succ[i]
                .as_ref()
                .map(|s| s.iter().map(|&(_, t)| t).collect())
                .unwrap_or_default()
        })
        .collect();
    let on_cycle = nodes_on_cycles(&adj);
    for &v in &bfs_order {
        if on_cycle[v] && accepting(&ex.states[v]) {
            let cycle = ex.cycle_from(v)?.expect("node lies on a cycle");
            let prefix = prefix_to(&bfs_parent, v);
            return Ok(SearchOutcome {
                lasso: Some(Lasso::new(prefix, cycle).expect("nonempty")),
                explored: ex.states.len(),
            });
        }
    }
    Ok(SearchOutcome {
        lasso: None,
        explored: ex.states.len(),
    })
}

/// Marks nodes that belong to a nontrivial strongly connected component or
/// carry a self-loop (iterative Tarjan).
pub(crate) fn nodes_on_cycles(adj: &[Vec<usize>]) -> Vec<bool> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut result = vec![false; n];
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adj[v].len() {
                let t = adj[v][*next];
                *next += 1;
                if index[t] == usize::MAX {
                    index[t] = counter;
                    low[t] = counter;
                    counter += 1;
                    stack.push(t);
                    on_stack[t] = true;
                    call.push((t, 0));
                } else if on_stack[t] {
                    low[v] = low[v].min(index[t]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut members = Vec::new();
                    loop {
                        let x = stack.pop().expect("tarjan stack");
                        on_stack[x] = false;
                        members.push(x);
                        if x == v {
                            break;
                        }
                    }
                    let cyclic = members.len() > 1 || adj[v].contains(&v);
                    if cyclic {
                        for x in members {
                            result[x] = true;
                        }
                    }
                }
            }
        }
    }
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub state_budget: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            state_budget: DEFAULT_STATE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stats {
    pub explored_states: usize,
    pub elapsed: Duration,
}

/// Answer to "is there a Nash equilibrium whose winners are exactly `W`?".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub winning_set: AgentSet,
    pub exists: bool,
    /// Primary trace of some W-NE profile; present iff `exists`.
    pub witness: Option<Lasso>,
    pub stats: Stats,
}

pub fn decide_w_ne(game: &GameSpec, w: AgentSet) -> Result<Verdict, SolveError> {
    check_winning_set(game, w)?;
    let guards = DeviationGuards::for_winning_set(game, w);
    decide_w_ne_with(game, w, &guards, SolveOptions::default())
}

/// Decides W-NE existence with precomputed safety solutions.
pub fn decide_w_ne_with(
    game: &GameSpec,
    w: AgentSet,
    guards: &DeviationGuards,
    options: SolveOptions,
) -> Result<Verdict, SolveError> {
    check_winning_set(game, w)?;
    guards.check(game, w)?;
    let started = Instant::now();
    let outcome = buchi_nonempty(
        aw_initial(game, w),
        game.alphabet().size(),
        |s, l| {
            let next = apw_step_checked(game, w, guards, s, l);
            debug_assert!(next.as_ref().is_none_or(|n| {
                n.pending.is_subset(w)
                    && (0..game.agents()).all(|j| {
                        w.contains(j)
                            || guards
                                .get(j)
                                .is_none_or(|sol| sol.is_winning_state(n.components[j]))
                    })
            }));
            next
        },
        AwState::is_accepting,
        options.state_budget,
    )?;
    Ok(Verdict {
        winning_set: w,
        exists: outcome.lasso.is_some(),
        witness: outcome.lasso,
        stats: Stats {
            explored_states: outcome.explored,
            elapsed: started.elapsed(),
        },
    })
}

/// One verdict per subset of agents, sharing the safety solutions.
pub fn enumerate_ne_sets(
    game: &GameSpec,
    options: SolveOptions,
) -> Result<BTreeMap<AgentSet, Verdict>, SolveError> {
    let guards = DeviationGuards::for_all(game);
    AgentSet::subsets(game.agents())
        .map(|w| decide_w_ne_with(game, w, &guards, options).map(|v| (w, v)))
        .collect()
}

/// [`enumerate_ne_sets`] spread over `workers` threads.
pub fn enumerate_ne_sets_parallel(
    game: &GameSpec,
    options: SolveOptions,
    workers: usize,
) -> Result<BTreeMap<AgentSet, Verdict>, SolveError> {
    let guards = DeviationGuards::for_all(game);
    let subsets: Vec<AgentSet> = AgentSet::subsets(game.agents()).collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(subsets.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&w) = subsets.get(i) else { break };
                let r = decide_w_ne_with(game, w, &guards, options);
                results.lock().expect("poisoned").push((w, r));
            });
        }
    });
    results
        .into_inner()
        .expect("poisoned")
        .into_iter()
        .map(|(w, r)| r.map(|v| (w, v)))
        .collect()
}

/// Runs `A'_W` (or `A_W` when `guards` is empty) on a lasso.
///
/// Returns whether the run is infinite and visits accepting states infinitely
/// often.
pub fn accepts_lasso(
    game: &GameSpec,
    w: AgentSet,
    guards: &DeviationGuards,
    lasso: &Lasso,
) -> bool {
    let mut s = aw_initial(game, w);
    for &l in lasso.prefix() {
        match apw_step_checked(game, w, guards, &s, l) {
            Some(n) => s = n,
            None => return false,
        }
    }
    let mut boundary: HashMap<AwState, ()> = HashMap::new();
    loop {
        if boundary.insert(s.clone(), ()).is_some() {
            // the run is periodic from here; one period decides acceptance
            let mut cur = s.clone();
            let mut seen_accepting = cur.is_accepting();
            for &l in lasso.cycle() {
                cur = apw_step_checked(game, w, guards, &cur, l).expect("replayed");
                seen_accepting |= cur.is_accepting();
            }
            return seen_accepting;
        }
        for &l in lasso.cycle() {
            match apw_step_checked(game, w, guards, &s, l) {
                Some(n) => s = n,
                None => return false,
            }
        }
    }
}
