//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use nashdfa::hardness::FlatDfa;
use nashdfa::io::parse_game;
use nashdfa::model::{Alphabet, GameSpec, GoalDfa, Lasso, Letter};
use nashdfa::oracle::{BuchiGame, Player};
use nashdfa::safety::{Node, SafetyArena};
use rand::Rng;

pub fn fixture(name: &str) -> GameSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    parse_game(&path).unwrap_or_else(|e| panic!("{e}"))
}

pub fn coop() -> GameSpec {
    fixture("coop.json")
}

pub fn pennies() -> GameSpec {
    fixture("pennies.json")
}

/// Random complete DFA; the initial state is never accepting.
pub fn random_dfa<R: Rng>(rng: &mut R, states: usize, letters: usize, p_accept: f64) -> GoalDfa {
    let delta = (0..states * letters)
        .map(|_| rng.gen_range(0..states))
        .collect();
    let accepting: Vec<usize> = (1..states).filter(|_| rng.gen_bool(p_accept)).collect();
    GoalDfa::from_table(states, 0, &accepting, delta, letters)
}

/// Random game with `1..=max_agents` agents, `1..=max_actions` actions each
/// and `1..=max_states` states per goal.
pub fn random_game<R: Rng>(
    rng: &mut R,
    max_agents: usize,
    max_actions: usize,
    max_states: usize,
) -> GameSpec {
    let k = rng.gen_range(1..=max_agents);
    let actions = (0..k)
        .map(|i| {
            let n = rng.gen_range(1..=max_actions);
            (0..n).map(|a| format!("a{i}_{a}")).collect()
        })
        .collect();
    let alphabet = Alphabet::new(actions).unwrap();
    let letters = alphabet.size();
    let goals = (0..k)
        .map(|_| {
            let n = rng.gen_range(1..=max_states);
            random_dfa(rng, n, letters, 0.35)
        })
        .collect();
    GameSpec::new(alphabet, goals).unwrap()
}

/// Like [`random_game`] with every agent able to deviate.
pub fn random_game_with_deviators<R: Rng>(
    rng: &mut R,
    max_agents: usize,
    max_actions: usize,
    max_states: usize,
) -> GameSpec {
    assert!(max_actions >= 2);
    let k = rng.gen_range(1..=max_agents);
    let actions = (0..k)
        .map(|i| {
            let n = rng.gen_range(2..=max_actions);
            (0..n).map(|a| format!("a{i}_{a}")).collect()
        })
        .collect();
    let alphabet = Alphabet::new(actions).unwrap();
    let letters = alphabet.size();
    let goals = (0..k)
        .map(|_| {
            let n = rng.gen_range(1..=max_states);
            random_dfa(rng, n, letters, 0.35)
        })
        .collect();
    GameSpec::new(alphabet, goals).unwrap()
}

/// Random flat DFA over `symbols`; the initial state may accept.
pub fn random_flat_dfa<R: Rng>(rng: &mut R, symbols: &[String], max_states: usize) -> FlatDfa {
    let n = rng.gen_range(1..=max_states);
    let letters = symbols.len();
    let delta = (0..n * letters).map(|_| rng.gen_range(0..n)).collect();
    let accepting: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
    FlatDfa::new(
        symbols.to_vec(),
        GoalDfa::from_table(n, 0, &accepting, delta, letters),
    )
}

pub fn random_word<R: Rng>(rng: &mut R, letters: usize, len: usize) -> Vec<Letter> {
    (0..len)
        .map(|_| Letter::from_index(rng.gen_range(0..letters)))
        .collect()
}

pub fn random_lasso<R: Rng>(
    rng: &mut R,
    letters: usize,
    max_prefix: usize,
    max_cycle: usize,
) -> Lasso {
    let p = rng.gen_range(0..=max_prefix);
    let c = rng.gen_range(1..=max_cycle);
    Lasso::new(random_word(rng, letters, p), random_word(rng, letters, c)).unwrap()
}

/// Whether the goal accepts some prefix among the first `steps` letters.
pub fn naive_satisfies(dfa: &GoalDfa, lasso: &Lasso, steps: usize) -> bool {
    let mut q = dfa.initial();
    (0..steps).any(|i| {
        q = dfa.step(q, lasso.letter_at(i));
        dfa.is_accepting(q)
    })
}

/// Exhaustive alternating search to depth `|V|`: Player 0 wins from `node`
/// iff it can avoid dead ends for that many moves.
pub fn minimax_safety_oracle(arena: &SafetyArena, node: Node) -> bool {
    fn go(
        arena: &SafetyArena,
        node: Node,
        depth: usize,
        memo: &mut HashMap<(Node, usize), bool>,
    ) -> bool {
        if let Node::Player0(q) = node {
            if arena.is_dead_end(q) {
                return false;
            }
        }
        if depth == 0 {
            return true;
        }
        if let Some(&v) = memo.get(&(node, depth)) {
            return v;
        }
        let succ = arena.successors(node);
        let v = match node {
            Node::Player0(_) => succ.into_iter().any(|s| go(arena, s, depth - 1, memo)),
            Node::Player1 { .. } => succ.into_iter().all(|s| go(arena, s, depth - 1, memo)),
        };
        memo.insert((node, depth), v);
        v
    }
    go(arena, node, arena.node_count(), &mut HashMap::new())
}

/// Player 0's Büchi winning region by trying every positional strategy.
///
/// Against a fixed positional strategy Player 1 wins from `v` iff some cycle
/// of non-accepting positions is reachable from `v`. Positional strategies
/// suffice for Player 0 in Büchi games.
pub fn naive_buchi_oracle(game: &BuchiGame) -> Vec<bool> {
    let n = game.len();
    let p0: Vec<usize> = (0..n).filter(|&v| game.owner(v) == Player::Zero).collect();
    let mut choice = vec![0usize; p0.len()];
    let mut win = vec![false; n];
    loop {
        let mut pick = vec![usize::MAX; n];
        for (i, &v) in p0.iter().enumerate() {
            pick[v] = game.successors(v)[choice[i]];
        }
        let moves = |v: usize| -> Vec<usize> {
            if game.owner(v) == Player::Zero {
                vec![pick[v]]
            } else {
                game.successors(v).to_vec()
            }
        };
        // non-accepting positions on a non-accepting cycle
        let bad_cycle: Vec<bool> = (0..n)
            .map(|v| {
                if game.is_accepting(v) {
                    return false;
                }
                let mut seen = vec![false; n];
                let mut stack = moves(v);
                while let Some(u) = stack.pop() {
                    if u == v {
                        return true;
                    }
                    if game.is_accepting(u) || std::mem::replace(&mut seen[u], true) {
                        continue;
                    }
                    stack.extend(moves(u));
                }
                false
            })
            .collect();
        for (v, w) in win.iter_mut().enumerate() {
            if *w {
                continue;
            }
            let mut seen = vec![false; n];
            let mut stack = vec![v];
            let mut lost = false;
            while let Some(u) = stack.pop() {
                if std::mem::replace(&mut seen[u], true) {
                    continue;
                }
                if bad_cycle[u] {
                    lost = true;
                    break;
                }
                stack.extend(moves(u));
            }
            *w = !lost;
        }
        // next strategy
        let mut i = 0;
        loop {
            if i == p0.len() {
                return win;
            }
            choice[i] += 1;
            if choice[i] < game.successors(p0[i]).len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Random Büchi game where every position has one to three moves.
pub fn random_buchi_game<R: Rng>(rng: &mut R, max_positions: usize) -> BuchiGame {
    let n = rng.gen_range(1..=max_positions);
    let owner = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Player::Zero
            } else {
                Player::One
            }
        })
        .collect();
    let succ = (0..n)
        .map(|_| {
            let m = rng.gen_range(1..=3);
            let mut s: Vec<usize> = (0..m).map(|_| rng.gen_range(0..n)).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let accepting = (0..n).map(|_| rng.gen_bool(0.3)).collect();
    BuchiGame::new(owner, succ, accepting)
}

/// Whether two lassos denote the same infinite word.
pub fn same_omega_word(a: &Lasso, b: &Lasso) -> bool {
    fn gcd(x: usize, y: usize) -> usize {
        if y == 0 {
            x
        } else {
            gcd(y, x % y)
        }
    }
    let (ca, cb) = (a.cycle().len(), b.cycle().len());
    let bound = a.prefix().len().max(b.prefix().len()) + ca / gcd(ca, cb) * cb;
    (0..bound).all(|i| a.letter_at(i) == b.letter_at(i))
}
