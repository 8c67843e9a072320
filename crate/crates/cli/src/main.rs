use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use nashdfa::equilibrium::{enumerate_ne_sets, enumerate_ne_sets_parallel, DEFAULT_STATE_BUDGET};
use nashdfa::hardness::{build_dfaie_game, HardnessError};
use nashdfa::io::{
    game_to_json, lasso_to_file, parse_flat_dfa, parse_game, parse_transducer, SafetyFile,
    TransducerFile, VerdictFile,
};
use nashdfa::oracle::{oracle_decide_w_ne, OracleError};
use nashdfa::safety::{build_safety_arena, solve_safety};
use nashdfa::synthesis::{synthesize_profile, verify_profile, VerificationReport};
use nashdfa::{decide_w_ne_with, AgentSet, DeviationGuards, GameSpec, SolveError, SolveOptions};

const EXIT_OK: u8 = 0;
const EXIT_NO_NE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nashdfa",
    version,
    about = "Nash equilibria with prescribed winners in iterated Boolean games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a NE with winning set exactly W exists.
    Check(Query),
    /// Decide every winning set, one verdict per line.
    Enumerate {
        #[command(flatten)]
        game: GameArgs,
        /// Number of worker threads.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Like `check`, and also emit a strategy profile for the witness.
    Witness {
        #[command(flatten)]
        query: Query,
        /// Also write the profile alone to this file.
        #[arg(long = "profile-out")]
        profile_out: Option<PathBuf>,
    },
    /// Check a strategy profile against the NE definition.
    Verify {
        #[command(flatten)]
        query: Query,
        #[arg(long)]
        profile: PathBuf,
    },
    /// Winning region and strategy of the safety game against one deviator.
    SolveSafety {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        agent: usize,
        /// Write the arena in a line-oriented text format to this file.
        #[arg(long = "dump-arena")]
        dump_arena: Option<PathBuf>,
    },
    /// Build the game whose Ω-equilibria witness a common word of flat DFAs.
    Reduce {
        #[arg(long, num_args = 1.., required = true)]
        dfas: Vec<PathBuf>,
        #[arg(long)]
        pretty: bool,
    },
    /// Compare the solver with the tree-automaton oracle.
    #[command(hide = true)]
    OracleCheck {
        #[command(flatten)]
        game: GameArgs,
        /// Defaults to every subset.
        #[arg(long = "winning-set")]
        winning_set: Option<AgentSet>,
    },
}

#[derive(Args)]
struct GameArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long = "state-budget", default_value_t = DEFAULT_STATE_BUDGET)]
    state_budget: usize,
    /// Human-readable output instead of JSON lines.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct Query {
    #[command(flatten)]
    game: GameArgs,
    /// Comma-separated agent ids, or `none` for the empty set.
    #[arg(long = "winning-set")]
    winning_set: AgentSet,
}

impl GameArgs {
    fn load(&self) -> Result<GameSpec> {
        Ok(parse_game(&self.game)?)
    }

    fn options(&self) -> SolveOptions {
        SolveOptions {
            state_budget: self.state_budget,
        }
    }
}

fn emit(value: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{value}")?;
    out.flush()?;
    Ok(())
}

fn show_verdict(game: &GameSpec, v: &VerdictFile, pretty: bool) -> Result<()> {
    if !pretty {
        return emit(&serde_json::to_value(v)?);
    }
    let witness = match &v.witness {
        Some(_) => format!(
            ", witness {}",
            v.witness_lasso(game.alphabet())
                .expect("own witness parses")
                .format(game.alphabet())
        ),
        None => String::new(),
    };
    println!(
        "W = {}: {}{} ({} states, {:.1} ms)",
        v.winning_set,
        if v.exists { "NE exists" } else { "no NE" },
        witness,
        v.stats.explored_states,
        v.stats.elapsed_ms
    );
    Ok(())
}

fn check(q: &Query) -> Result<u8> {
    let game = q.game.load()?;
    let guards = DeviationGuards::for_winning_set(&game, q.winning_set);
    let v = decide_w_ne_with(&game, q.winning_set, &guards, q.game.options())?;
    show_verdict(&game, &VerdictFile::new(&game, &v), q.game.pretty)?;
    Ok(if v.exists { EXIT_OK } else { EXIT_NO_NE })
}

fn enumerate(args: &GameArgs, parallel: usize) -> Result<u8> {
    let game = args.load()?;
    let verdicts = if parallel > 1 {
        enumerate_ne_sets_parallel(&game, args.options(), parallel)?
    } else {
        enumerate_ne_sets(&game, args.options())?
    };
    for v in verdicts.values() {
        show_verdict(&game, &VerdictFile::new(&game, v), args.pretty)?;
    }
    Ok(EXIT_OK)
}

fn witness(q: &Query, profile_out: Option<&Path>) -> Result<u8> {
    let game = q.game.load()?;
    let w = q.winning_set;
    let guards = DeviationGuards::for_winning_set(&game, w);
    let v = decide_w_ne_with(&game, w, &guards, q.game.options())?;
    let profile = match &v.witness {
        Some(lasso) => Some(TransducerFile::new(
            &game,
            &synthesize_profile(&game, w, lasso, &guards)?,
        )),
        None => None,
    };
    if let (Some(path), Some(p)) = (profile_out, &profile) {
        fs::write(path, serde_json::to_string_pretty(p)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let verdict = VerdictFile::new(&game, &v);
    if q.game.pretty {
        show_verdict(&game, &verdict, true)?;
        match &profile {
            Some(p) => println!("{}", serde_json::to_string_pretty(p)?),
            None => println!("no profile"),
        }
    } else {
        emit(&json!({ "verdict": verdict, "profile": profile }))?;
    }
    Ok(EXIT_OK)
}

fn report_json(game: &GameSpec, r: &VerificationReport) -> Value {
    let alphabet = game.alphabet();
    json!({
        "winning_set": r.winning_set,
        "passed": r.passed(),
        "primary": {
            "passed": r.primary.passed,
            "satisfied": r.primary.satisfied,
            "trace": lasso_to_file(alphabet, &r.primary.trace),
        },
        "deviations": r.deviations.iter().map(|d| json!({
            "agent": d.agent,
            "passed": d.passed,
            "explored": d.explored,
            "counterexample": d.counterexample.as_ref().map(|word| {
                word.iter().map(|&l| alphabet.action_names(l)).collect::<Vec<_>>()
            }),
        })).collect::<Vec<_>>(),
    })
}

fn verify(q: &Query, profile: &Path) -> Result<u8> {
    let game = q.game.load()?;
    let t = parse_transducer(profile, &game)?;
    let r = verify_profile(&game, q.winning_set, &t)?;
    if q.game.pretty {
        println!(
            "W = {}: {}",
            r.winning_set,
            if r.passed() {
                "profile is a NE"
            } else {
                "profile is not a NE"
            }
        );
        println!(
            "  primary trace {} satisfies {}: {}",
            r.primary.trace.format(game.alphabet()),
            r.primary.satisfied,
            if r.primary.passed { "ok" } else { "FAIL" }
        );
        for d in &r.deviations {
            match &d.counterexample {
                None => println!("  agent {} cannot profit ({} states)", d.agent, d.explored),
                Some(word) => {
                    let word: Vec<String> = word
                        .iter()
                        .map(|&l| game.alphabet().format_letter(l))
                        .collect();
                    println!("  agent {} profits via {}: FAIL", d.agent, word.join(""));
                }
            }
        }
    } else {
        emit(&report_json(&game, &r))?;
    }
    Ok(EXIT_OK)
}

fn solve_safety_cmd(args: &GameArgs, agent: usize, dump: Option<&Path>) -> Result<u8> {
    let game = args.load()?;
    let arena = build_safety_arena(&game, agent)?;
    if let Some(path) = dump {
        fs::write(path, arena.dump(&game))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let sol = solve_safety(&arena);
    let file = SafetyFile::new(&game, &sol);
    if args.pretty {
        println!(
            "agent {agent}: winning {{{}}}",
            file.winning_states.join(", ")
        );
        for (q, moves) in &file.strategy {
            println!("  {q} -> ({})", moves.join(","));
        }
    } else {
        emit(&serde_json::to_value(&file)?)?;
    }
    Ok(EXIT_OK)
}

fn reduce(paths: &[PathBuf], pretty: bool) -> Result<u8> {
    let dfas = paths
        .iter()
        .map(|p| parse_flat_dfa(p))
        .collect::<Result<Vec<_>, _>>()?;
    let game = build_dfaie_game(&dfas)?;
    let value = game_to_json(&game);
    if pretty {
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        emit(&value)?;
    }
    Ok(EXIT_OK)
}

fn oracle_check(args: &GameArgs, w: Option<AgentSet>) -> Result<u8> {
    let game = args.load()?;
    let subsets: Vec<AgentSet> = match w {
        Some(w) => vec![w],
        None => AgentSet::subsets(game.agents()).collect(),
    };
    let guards = DeviationGuards::for_all(&game);
    for w in subsets {
        let solver = decide_w_ne_with(&game, w, &guards, args.options())?.exists;
        let oracle = oracle_decide_w_ne(&game, w)?;
        if args.pretty {
            let tag = if solver == oracle {
                "agree"
            } else {
                "DISAGREE"
            };
            println!("W = {w}: solver {solver}, oracle {oracle}: {tag}");
        } else {
            emit(&json!({
                "winning_set": w,
                "solver": solver,
                "oracle": oracle,
                "agree": solver == oracle,
            }))?;
        }
    }
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Check(q) => check(q),
        Command::Enumerate { game, parallel } => enumerate(game, *parallel),
        Command::Witness { query, profile_out } => witness(query, profile_out.as_deref()),
        Command::Verify { query, profile } => verify(query, profile),
        Command::SolveSafety {
            game,
            agent,
            dump_arena,
        } => solve_safety_cmd(game, *agent, dump_arena.as_deref()),
        Command::Reduce { dfas, pretty } => reduce(dfas, *pretty),
        Command::OracleCheck { game, winning_set } => oracle_check(game, *winning_set),
    }
}

fn exhausted_budget(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        matches!(
            e.downcast_ref::<SolveError>(),
            Some(SolveError::StateBudgetExceeded { .. })
        ) || matches!(
            e.downcast_ref::<OracleError>(),
            Some(OracleError::SizeBudgetExceeded { .. })
        ) || matches!(
            e.downcast_ref::<HardnessError>(),
            Some(HardnessError::SizeBudgetExceeded { .. })
        )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if exhausted_budget(&err) {
                EXIT_BUDGET
            } else {
                EXIT_INPUT
            })
        }
    }
}
