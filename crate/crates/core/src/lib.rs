//! Nash equilibria with prescribed winners in iterated Boolean games whose
//! agents have DFA goals.
//!
//! The main pipeline solves one safety game per potential deviator, prunes
//! the product of all goal automata accordingly and searches it for an
//! accepting lasso. [`oracle`] decides the same question through an explicit
//! Büchi tree automaton and is meant for cross-checking on small games.

pub mod agent_set;
pub mod equilibrium;
pub mod hardness;
pub mod io;
pub mod model;
pub mod oracle;
pub mod safety;
pub mod synthesis;

pub use agent_set::AgentSet;
pub use equilibrium::{
    decide_w_ne, decide_w_ne_with, enumerate_ne_sets, DeviationGuards, SolveError, SolveOptions,
    Verdict,
};
pub use model::{Alphabet, GameSpec, GoalDfa, Lasso, Letter};
