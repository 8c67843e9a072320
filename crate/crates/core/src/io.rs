//! JSON documents: game files, verdicts, transducers and safety dumps.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent_set::AgentSet;
use crate::equilibrium::{Stats, Verdict};
use crate::hardness::FlatDfa;
use crate::model::{
    build_alphabet, build_goal, game_to_raw, validate_game, AgentId, Alphabet, GameSpec, Lasso,
    Letter, RawGame, ValidationErrors,
};
use crate::safety::SafetySolution;
use crate::synthesis::{Mode, ModeKind, ProfileTransducer, TransducerError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Syntax {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: {errors}")]
    Invalid {
        origin: String,
        errors: ValidationErrors,
    },
    #[error("{origin}: {message}")]
    FlatDfa { origin: String, message: String },
    #[error("{origin}: {message}")]
    Transducer { origin: String, message: String },
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str, origin: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Syntax {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Game files

pub fn parse_game_str(text: &str, origin: &str) -> Result<GameSpec, IoError> {
    let raw: RawGame = from_json(text, origin)?;
    validate_game(&raw).map_err(|errors| IoError::Invalid {
        origin: origin.to_string(),
        errors,
    })
}

pub fn parse_game(path: &Path) -> Result<GameSpec, IoError> {
    parse_game_str(&read(path)?, &path.display().to_string())
}

/// Canonical JSON form of a game (explicit transitions, no wildcards).
pub fn game_to_json(game: &GameSpec) -> serde_json::Value {
    serde_json::to_value(game_to_raw(game)).expect("raw game serializes")
}

/// A flat DFA file is a game file with exactly one agent and one goal. The
/// initial state may be accepting.
pub fn parse_flat_dfa_str(text: &str, origin: &str) -> Result<FlatDfa, IoError> {
    let raw: RawGame = from_json(text, origin)?;
    let fail = |message: String| IoError::FlatDfa {
        origin: origin.to_string(),
        message,
    };
    if raw.agents.len() != 1 || raw.goals.len() != 1 {
        return Err(fail(format!(
            "expected one agent and one goal, found {} and {}",
            raw.agents.len(),
            raw.goals.len()
        )));
    }
    let invalid = |errors: ValidationErrors| IoError::Invalid {
        origin: origin.to_string(),
        errors,
    };
    let alphabet = build_alphabet(&raw.agents).map_err(|e| invalid(e.into()))?;
    let goal = &raw.goals[0];
    if goal.agent != 0 {
        return Err(fail(format!("goal names agent {}, expected 0", goal.agent)));
    }
    let dfa = build_goal(&alphabet, 0, goal).map_err(|es| invalid(ValidationErrors(es)))?;
    Ok(FlatDfa::new(alphabet.actions(0).to_vec(), dfa))
}

pub fn parse_flat_dfa(path: &Path) -> Result<FlatDfa, IoError> {
    parse_flat_dfa_str(&read(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Verdicts

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub prefix: Vec<Vec<String>>,
    pub cycle: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub explored_states: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub winning_set: AgentSet,
    pub exists: bool,
    pub witness: Option<WitnessFile>,
    pub stats: StatsFile,
}

fn names(alphabet: &Alphabet, word: &[Letter]) -> Vec<Vec<String>> {
    word.iter().map(|&l| alphabet.action_names(l)).collect()
}

pub fn lasso_to_file(alphabet: &Alphabet, lasso: &Lasso) -> WitnessFile {
    WitnessFile {
        prefix: names(alphabet, lasso.prefix()),
        cycle: names(alphabet, lasso.cycle()),
    }
}

fn stats_to_file(stats: &Stats) -> StatsFile {
    StatsFile {
        explored_states: stats.explored_states,
        elapsed_ms: stats.elapsed.as_secs_f64() * 1e3,
    }
}

impl VerdictFile {
    pub fn new(game: &GameSpec, verdict: &Verdict) -> Self {
        VerdictFile {
            winning_set: verdict.winning_set,
            exists: verdict.exists,
            witness: verdict
                .witness
                .as_ref()
                .map(|l| lasso_to_file(game.alphabet(), l)),
            stats: stats_to_file(&verdict.stats),
        }
    }

    /// Reads the witness back as a lasso over `alphabet`.
    pub fn witness_lasso(&self, alphabet: &Alphabet) -> Option<Lasso> {
        let w = self.witness.as_ref()?;
        let parse = |word: &[Vec<String>]| -> Option<Vec<Letter>> {
            word.iter().map(|l| alphabet.parse_letter(l)).collect()
        };
        Lasso::new(parse(&w.prefix)?, parse(&w.cycle)?).ok()
    }
}

// ---------------------------------------------------------------------------
// Transducers

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeFile {
    pub letter: Vec<String>,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeKindFile {
    Trace { position: usize },
    Deviation { agent: AgentId, state: String },
    Sink,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeFile {
    pub id: usize,
    #[serde(flatten)]
    pub kind: ModeKindFile,
    pub output: Vec<String>,
    /// One entry per joint letter the mode may observe.
    pub next: Vec<EdgeFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransducerFile {
    pub initial: usize,
    pub modes: Vec<ModeFile>,
}

impl TransducerFile {
    pub fn new(game: &GameSpec, t: &ProfileTransducer) -> Self {
        let alphabet = game.alphabet();
        let modes = t
            .modes()
            .iter()
            .enumerate()
            .map(|(id, m)| ModeFile {
                id,
                kind: match m.kind {
                    ModeKind::Trace { position } => ModeKindFile::Trace { position },
                    ModeKind::Deviation { agent, state } => ModeKindFile::Deviation {
                        agent,
                        state: game.goal(agent).state_name(state).to_string(),
                    },
                    ModeKind::Sink => ModeKindFile::Sink,
                },
                output: alphabet.action_names(m.output),
                next: alphabet
                    .letters()
                    .map(|l| EdgeFile {
                        letter: alphabet.action_names(l),
                        to: m.next[l.index()],
                    })
                    .collect(),
            })
            .collect();
        TransducerFile {
            initial: t.initial(),
            modes,
        }
    }

    pub fn to_transducer(
        &self,
        game: &GameSpec,
        origin: &str,
    ) -> Result<ProfileTransducer, IoError> {
        let alphabet = game.alphabet();
        let fail = |message: String| IoError::Transducer {
            origin: origin.to_string(),
            message,
        };
        let letter = |ctx: &str, names: &[String]| {
            alphabet
                .parse_letter(names)
                .ok_or_else(|| fail(format!("{ctx}: unknown letter {names:?}")))
        };
        let mut modes = Vec::with_capacity(self.modes.len());
        for (i, m) in self.modes.iter().enumerate() {
            if m.id != i {
                return Err(fail(format!("modes[{i}] has id {}", m.id)));
            }
            let kind = match &m.kind {
                ModeKindFile::Trace { position } => ModeKind::Trace {
                    position: *position,
                },
                ModeKindFile::Deviation { agent, state } => {
                    if *agent >= game.agents() {
                        return Err(fail(format!("mode {i}: unknown agent {agent}")));
                    }
                    let q = game.goal(*agent).state_index(state).ok_or_else(|| {
                        fail(format!("mode {i}: unknown state {state} of agent {agent}"))
                    })?;
                    ModeKind::Deviation {
                        agent: *agent,
                        state: q,
                    }
                }
                ModeKindFile::Sink => ModeKind::Sink,
            };
            let output = letter(&format!("mode {i} output"), &m.output)?;
            let mut next = vec![None; alphabet.size()];
            for e in &m.next {
                let l = letter(&format!("mode {i} next"), &e.letter)?;
                if next[l.index()].replace(e.to).is_some() {
                    return Err(fail(format!(
                        "mode {i}: letter {} listed twice",
                        alphabet.format_letter(l)
                    )));
                }
            }
            let next = next
                .into_iter()
                .enumerate()
                .map(|(l, to)| {
                    to.ok_or_else(|| {
                        fail(format!(
                            "mode {i}: no successor for {}",
                            alphabet.format_letter(Letter::from_index(l))
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            modes.push(Mode { kind, output, next });
        }
        ProfileTransducer::new(alphabet.size(), modes, self.initial)
            .map_err(|e: TransducerError| fail(e.to_string()))
    }
}

pub fn parse_transducer_str(
    text: &str,
    origin: &str,
    game: &GameSpec,
) -> Result<ProfileTransducer, IoError> {
    let file: TransducerFile = from_json(text, origin)?;
    file.to_transducer(game, origin)
}

pub fn parse_transducer(path: &Path, game: &GameSpec) -> Result<ProfileTransducer, IoError> {
    parse_transducer_str(&read(path)?, &path.display().to_string(), game)
}

// ---------------------------------------------------------------------------
// Safety solutions

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyFile {
    pub agent: AgentId,
    pub winning_states: Vec<String>,
    pub losing_states: Vec<String>,
    /// A winning move per winning state: the other agents' actions in id
    /// order, agent `agent` omitted.
    pub strategy: BTreeMap<String, Vec<String>>,
}

impl SafetyFile {
    pub fn new(game: &GameSpec, sol: &SafetySolution) -> Self {
        let j = sol.deviator();
        let goal = game.goal(j);
        let alphabet = game.alphabet();
        let mut winning_states = Vec::new();
        let mut losing_states = Vec::new();
        let mut strategy = BTreeMap::new();
        for q in 0..goal.num_states() {
            let name = goal.state_name(q).to_string();
            match sol.strategy(q) {
                Some(p) if sol.is_winning_state(q) => {
                    let comps = alphabet.projected_components(p);
                    let actions = (0..game.agents())
                        .filter(|&i| i != j)
                        .zip(comps)
                        .map(|(i, c)| alphabet.actions(i)[c].clone())
                        .collect();
                    strategy.insert(name.clone(), actions);
                    winning_states.push(name);
                }
                _ if sol.is_winning_state(q) => winning_states.push(name),
                _ => losing_states.push(name),
            }
        }
        SafetyFile {
            agent: j,
            winning_states,
            losing_states,
            strategy,
        }
    }
}
