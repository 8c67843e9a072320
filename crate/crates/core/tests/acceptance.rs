//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nashdfa::equilibrium::{aw_initial, aw_step, decide_w_ne_with, SolveOptions};
use nashdfa::hardness::{build_dfaie_game, dfa_intersection_witness};
use nashdfa::model::{Alphabet, GameSpec, GoalDfa, Lasso};
use nashdfa::oracle::{build_tw, oracle_decide_w_ne, TwState};
use nashdfa::safety::{build_safety_arena, solve_safety};
use nashdfa::synthesis::{synthesize_profile, verify_profile};
use nashdfa::{AgentSet, DeviationGuards};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

struct Outcome {
    passed: bool,
    detail: String,
}

/// A true verdict kept for the synthesis round trip.
struct Positive {
    game: GameSpec,
    w: AgentSet,
    lasso: Lasso,
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> (Outcome, Duration, bool) {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    (out, elapsed, elapsed < limit)
}

fn solver_vs_oracle(positives: &mut Vec<Positive>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut queries, mut mismatches, mut trues) = (0, 0, 0);
    for _ in 0..250 {
        let game = random_game(&mut rng, 3, 2, 4);
        let guards = DeviationGuards::for_all(&game);
        for w in AgentSet::subsets(game.agents()) {
            let v = decide_w_ne_with(&game, w, &guards, SolveOptions::default()).unwrap();
            let oracle = oracle_decide_w_ne(&game, w).unwrap();
            queries += 1;
            if v.exists != oracle || v.exists != v.witness.is_some() {
                mismatches += 1;
            }
            if let Some(lasso) = v.witness {
                trues += 1;
                positives.push(Positive {
                    game: game.clone(),
                    w,
                    lasso,
                });
            }
        }
    }
    Outcome {
        passed: mismatches == 0,
        detail: format!("250 games, {queries} queries ({trues} true), {mismatches} discrepancies"),
    }
}

fn safety_vs_tree_automaton() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let (mut checked, mut mismatches) = (0, 0);
    for _ in 0..120 {
        let game = random_game_with_deviators(&mut rng, 3, 2, 4);
        let tw = build_tw(&game, AgentSet::empty()).unwrap();
        let nonempty = tw.nonempty_states();
        for j in 0..game.agents() {
            let sol = solve_safety(&build_safety_arena(&game, j).unwrap());
            let goal = game.goal(j);
            for q in (0..goal.num_states()).filter(|&q| !goal.is_accepting(q)) {
                let id = tw
                    .state_id(&TwState::Deviant { agent: j, state: q })
                    .unwrap();
                checked += 1;
                if sol.is_winning_state(q) != nonempty[id] {
                    mismatches += 1;
                }
            }
        }
    }
    Outcome {
        passed: mismatches == 0,
        detail: format!("120 games, {checked} (agent, state) pairs, {mismatches} discrepancies"),
    }
}

fn aw_accepts(game: &GameSpec, w: AgentSet, lasso: &Lasso) -> bool {
    let mut s = aw_initial(game, w);
    for &l in lasso.prefix() {
        match aw_step(game, w, &s, l) {
            Some(n) => s = n,
            None => return false,
        }
    }
    let mut seen = HashSet::new();
    while seen.insert(s.clone()) {
        for &l in lasso.cycle() {
            match aw_step(game, w, &s, l) {
                Some(n) => s = n,
                None => return false,
            }
        }
    }
    s.is_accepting()
}

fn aw_characterization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let (mut triples, mut mismatches, mut accepted) = (0, 0, 0);
    while triples < 1200 {
        let game = random_game(&mut rng, 3, 2, 4);
        let lasso = random_lasso(&mut rng, game.alphabet().size(), 5, 4);
        let satisfied: AgentSet = (0..game.agents())
            .filter(|&i| game.goal(i).lasso_satisfies(&lasso))
            .collect();
        for w in AgentSet::subsets(game.agents()) {
            let acc = aw_accepts(&game, w, &lasso);
            triples += 1;
            accepted += acc as usize;
            if acc != (satisfied == w) {
                mismatches += 1;
            }
        }
    }
    Outcome {
        passed: mismatches == 0,
        detail: format!("{triples} triples ({accepted} accepted), {mismatches} discrepancies"),
    }
}

fn reduction(positives: &mut Vec<Positive>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let symbols: Vec<String> = vec!["a".into(), "b".into()];
    let (mut mismatches, mut nonempty) = (0, 0);
    let tuples = 150;
    for _ in 0..tuples {
        let k = rng.gen_range(1..=3);
        let sigma = rng.gen_range(1..=2);
        let dfas: Vec<_> = (0..k)
            .map(|_| random_flat_dfa(&mut rng, &symbols[..sigma], 4))
            .collect();
        let word = dfa_intersection_witness(&dfas, 1_000_000).unwrap();
        let game = build_dfaie_game(&dfas).unwrap();
        let omega = AgentSet::all(k);
        let guards = DeviationGuards::for_winning_set(&game, omega);
        let v = decide_w_ne_with(&game, omega, &guards, SolveOptions::default()).unwrap();
        let oracle = oracle_decide_w_ne(&game, omega).unwrap();
        if word.is_some() != v.exists || oracle != v.exists {
            mismatches += 1;
        }
        nonempty += word.is_some() as usize;
        if let Some(lasso) = v.witness {
            positives.push(Positive {
                game,
                w: omega,
                lasso,
            });
        }
    }
    Outcome {
        passed: mismatches == 0,
        detail: format!("{tuples} tuples ({nonempty} nonempty), {mismatches} discrepancies"),
    }
}

fn fixtures() -> Outcome {
    let mut problems = Vec::new();
    for (name, game, expected) in [
        ("PENNIES", pennies(), [false, false, false, false]),
        ("COOP", coop(), [true, false, false, true]),
    ] {
        let guards = DeviationGuards::for_all(&game);
        for (w, &want) in AgentSet::subsets(2).zip(&expected) {
            let got = decide_w_ne_with(&game, w, &guards, SolveOptions::default())
                .unwrap()
                .exists;
            let oracle = oracle_decide_w_ne(&game, w).unwrap();
            if got != want || oracle != want {
                problems.push(format!(
                    "{name} W={w}: solver {got}, oracle {oracle}, expected {want}"
                ));
            }
        }
    }
    Outcome {
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            "PENNIES none, COOP exactly {} and {0,1}".to_string()
        } else {
            problems.join("; ")
        },
    }
}

fn synthesis_round_trip(positives: &[Positive]) -> Outcome {
    let mut failures = 0;
    for p in positives {
        let guards = DeviationGuards::for_winning_set(&p.game, p.w);
        let ok = synthesize_profile(&p.game, p.w, &p.lasso, &guards)
            .and_then(|t| verify_profile(&p.game, p.w, &t))
            .map(|r| r.passed())
            .unwrap_or(false);
        failures += !ok as usize;
    }
    Outcome {
        passed: failures == 0 && !positives.is_empty(),
        detail: format!("{} profiles, {failures} failures", positives.len()),
    }
}

fn safety_scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7007);
    // three agents with six actions each; agent 0's goal has 1000 states
    let actions = (0..3)
        .map(|i| (0..6).map(|a| format!("a{i}_{a}")).collect())
        .collect();
    let alphabet = Alphabet::new(actions).unwrap();
    let letters = alphabet.size();
    // each state reaches only five targets, so Player 1's threats overlap
    let n = 1000;
    let mut delta = Vec::with_capacity(n * letters);
    for _ in 0..n {
        let targets: Vec<usize> = (0..5).map(|_| rng.gen_range(0..n)).collect();
        delta.extend((0..letters).map(|_| targets[rng.gen_range(0..5)]));
    }
    let accepting: Vec<usize> = (1..n).filter(|_| rng.gen_bool(0.1)).collect();
    let big = GoalDfa::from_table(n, 0, &accepting, delta, letters);
    let idle = GoalDfa::from_table(1, 0, &[], vec![0; letters], letters);
    let game = GameSpec::new(alphabet, vec![big, idle.clone(), idle]).unwrap();
    let arena = build_safety_arena(&game, 0).unwrap();
    let start = Instant::now();
    let sol = solve_safety(&arena);
    let solve_time = start.elapsed();
    let winning = sol.winning_states().count();
    let big_ok = arena.edge_count() >= 100_000 && solve_time < Duration::from_secs(5);

    let mut small_mismatches = 0;
    let mut arenas = 0;
    while arenas < 500 {
        let game = random_game(&mut rng, 2, 2, 5);
        for j in (0..game.agents()).filter(|&j| game.can_deviate(j)) {
            let arena = build_safety_arena(&game, j).unwrap();
            let sol = solve_safety(&arena);
            arenas += 1;
            if arena
                .nodes()
                .any(|n| sol.is_winning_node(n) != minimax_safety_oracle(&arena, n))
            {
                small_mismatches += 1;
            }
        }
    }
    Outcome {
        passed: big_ok && small_mismatches == 0,
        detail: format!(
            "{} edges solved in {:.1} ms ({winning}/{n} states winning); {arenas} small arenas, {small_mismatches} discrepancies",
            arena.edge_count(),
            solve_time.as_secs_f64() * 1e3
        ),
    }
}

fn main() -> ExitCode {
    let mut positives = Vec::new();
    let mut results = Vec::new();

    let (o, t, fast) = timed(Duration::from_secs(60), || solver_vs_oracle(&mut positives));
    results.push((1, "solver agrees with tree-automaton oracle", o, t, fast));
    let (o, t, fast) = timed(Duration::from_secs(30), safety_vs_tree_automaton);
    results.push((
        2,
        "safety region equals deviant-tree nonemptiness",
        o,
        t,
        fast,
    ));
    let (o, t, fast) = timed(Duration::from_secs(10), aw_characterization);
    results.push((3, "A_W accepts exactly the words won by W", o, t, fast));
    let (o, t, fast) = timed(Duration::from_secs(30), || reduction(&mut positives));
    results.push((4, "DFA intersection reduction", o, t, fast));
    let (o, t, fast) = timed(Duration::from_secs(1), fixtures);
    results.push((5, "PENNIES and COOP fixtures", o, t, fast));
    let (o, t, fast) = timed(Duration::MAX, || synthesis_round_trip(&positives));
    results.push((6, "synthesized profiles verify", o, t, fast));
    let (o, t, fast) = timed(Duration::MAX, safety_scaling);
    results.push((7, "safety solver scaling and minimax agreement", o, t, fast));

    let mut all = true;
    for (n, name, o, t, fast) in &results {
        let ok = o.passed && *fast;
        all &= ok;
        println!(
            "criterion {n}: {} {name}: {} [{:.2} s{}]",
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            t.as_secs_f64(),
            if *fast { "" } else { ", over time limit" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
