//! Reference implementations used as test oracles. They share no evaluation
//! code with the library: formulas are checked with plain boolean semantics
//! and tabular models are solved by value iteration.

#![allow(dead_code)]

use hstl::stl::{Bound, Comparator, Formula, Interval, Predicate, State, Term, Trajectory};
use num_rational::Rational64;
use rand::Rng;

pub fn xy() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

pub const PSI_A: &str = "(x > 3) & (x < 9) & (y > 10) & (y < 14)";
pub const PSI_B: &str = "(x > 1) & (x < 5) & (y > 1) & (y < 5)";
pub const PSI_C: &str = "(x > 9) & (x < 13) & (y > 1) & (y < 7)";

pub fn patrol_text() -> String {
    format!("G[0,inf) (F[0,40) ({PSI_A}) & F[0,40) ({PSI_B}) & F[0,40) ({PSI_C}))")
}

/// Margin of a box `lo_x < x < hi_x, lo_y < y < hi_y` at a cell, written out
/// by hand: the smallest distance to any of the four strict bounds.
pub fn box_margin(b: (i64, i64, i64, i64), cell: (i64, i64)) -> i64 {
    let (lx, hx, ly, hy) = b;
    let (x, y) = cell;
    (x - lx).min(hx - x).min(y - ly).min(hy - y)
}

pub const BOX_A: (i64, i64, i64, i64) = (3, 9, 10, 14);
pub const BOX_B: (i64, i64, i64, i64) = (1, 5, 1, 5);
pub const BOX_C: (i64, i64, i64, i64) = (9, 13, 1, 7);

// ---------------------------------------------------------------------------
// boolean STL

fn predicate_holds(p: &Predicate, s: &State) -> bool {
    let lhs: Rational64 = p.terms().iter().map(|t| t.coeff * Rational64::from_integer(s.0[t.var])).sum();
    match p.comparator() {
        Comparator::Lt => lhs < p.constant(),
        Comparator::Gt => lhs > p.constant(),
    }
}

fn finite_hi(w: &Interval) -> usize {
    match w.hi() {
        Bound::Finite(h) => h,
        Bound::Unbounded => panic!("oracle only handles bounded windows"),
    }
}

/// Textbook boolean satisfaction at time `t`. Windows must fit in the trace.
pub fn satisfies(states: &[State], f: &Formula, t: usize) -> bool {
    match f {
        Formula::Predicate(p) => predicate_holds(p, &states[t]),
        Formula::Not(g) => !satisfies(states, g, t),
        Formula::And(a, b) => satisfies(states, a, t) && satisfies(states, b, t),
        Formula::Or(a, b) => satisfies(states, a, t) || satisfies(states, b, t),
        Formula::Always(w, g) => (t + w.lo()..t + finite_hi(w)).all(|u| satisfies(states, g, u)),
        Formula::Eventually(w, g) => (t + w.lo()..t + finite_hi(w)).any(|u| satisfies(states, g, u)),
        Formula::Until(w, a, b) => {
            (t + w.lo()..t + finite_hi(w)).any(|u| satisfies(states, b, u) && (t..u).all(|v| satisfies(states, a, v)))
        }
    }
}

/// Samples needed after `t` to evaluate `f` at `t`, computed independently
/// of the library's horizon function.
pub fn needed(f: &Formula) -> usize {
    match f {
        Formula::Predicate(_) => 0,
        Formula::Not(g) => needed(g),
        Formula::And(a, b) | Formula::Or(a, b) => needed(a).max(needed(b)),
        Formula::Always(w, g) | Formula::Eventually(w, g) => finite_hi(w) - 1 + needed(g),
        Formula::Until(w, a, b) => finite_hi(w) - 1 + needed(a).max(needed(b)),
    }
}

// ---------------------------------------------------------------------------
// random formulas and traces

pub fn random_predicate<R: Rng>(rng: &mut R) -> Predicate {
    loop {
        let terms: Vec<Term> = (0..rng.gen_range(1..=2))
            .map(|_| {
                let var = rng.gen_range(0..2);
                Term { var, name: ["x", "y"][var].to_string(), coeff: Rational64::from_integer(rng.gen_range(-2..=2)) }
            })
            .collect();
        let cmp = if rng.gen_bool(0.5) { Comparator::Lt } else { Comparator::Gt };
        let c = Rational64::new(rng.gen_range(-6..=6), rng.gen_range(1..=2));
        if let Ok(p) = Predicate::new(terms, cmp, c) {
            return p;
        }
    }
}

fn random_window<R: Rng>(rng: &mut R) -> Interval {
    let lo = rng.gen_range(0..=2);
    Interval::new(lo, lo + rng.gen_range(1..=3)).unwrap()
}

/// Random bounded formula of depth at most `depth` (a predicate has depth 0).
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return Formula::Predicate(random_predicate(rng));
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        0 => Formula::not(random_formula(rng, d)),
        1 => Formula::and(random_formula(rng, d), random_formula(rng, d)),
        2 => Formula::or(random_formula(rng, d), random_formula(rng, d)),
        3 => Formula::always(random_window(rng), random_formula(rng, d)),
        4 => Formula::eventually(random_window(rng), random_formula(rng, d)),
        _ => Formula::until(random_window(rng), random_formula(rng, d), random_formula(rng, d)),
    }
}

pub fn random_states<R: Rng>(rng: &mut R, len: usize) -> Vec<State> {
    (0..len).map(|_| State(vec![rng.gen_range(-4..=4), rng.gen_range(-4..=4)])).collect()
}

/// A formula of depth <= 3 and a trace of 1..=6 samples long enough to
/// evaluate it at time 0.
pub fn random_case<R: Rng>(rng: &mut R) -> (Formula, Trajectory) {
    loop {
        let f = random_formula(rng, 3);
        let need = needed(&f) + 1;
        if need <= 6 {
            let len = rng.gen_range(need..=6);
            return (f, Trajectory::new(random_states(rng, len)).unwrap());
        }
    }
}

// ---------------------------------------------------------------------------
// tabular models

/// Finite MDP with explicit dynamics: `dynamics[s][a]` lists
/// `(probability, next, reward)` outcomes.
#[derive(Debug, Clone)]
pub struct TabularModel {
    pub dynamics: Vec<Vec<Vec<(f64, usize, f64)>>>,
}

impl TabularModel {
    pub fn states(&self) -> usize {
        self.dynamics.len()
    }

    pub fn actions(&self) -> usize {
        self.dynamics[0].len()
    }

    pub fn sample<R: Rng>(&self, s: usize, a: usize, rng: &mut R) -> (usize, f64) {
        let mut u: f64 = rng.gen();
        let outcomes = &self.dynamics[s][a];
        for &(p, next, r) in outcomes {
            if u < p {
                return (next, r);
            }
            u -= p;
        }
        let &(_, next, r) = outcomes.last().unwrap();
        (next, r)
    }

    /// Optimal action values, iterated to a fixed point.
    pub fn value_iteration(&self, gamma: f64) -> Vec<Vec<f64>> {
        let mut q = vec![vec![0.0; self.actions()]; self.states()];
        loop {
            let v: Vec<f64> = q.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
            let mut delta: f64 = 0.0;
            for s in 0..self.states() {
                for a in 0..self.actions() {
                    let new: f64 = self.dynamics[s][a].iter().map(|&(p, n, r)| p * (r + gamma * v[n])).sum();
                    delta = delta.max((new - q[s][a]).abs());
                    q[s][a] = new;
                }
            }
            if delta < 1e-13 {
                return q;
            }
        }
    }
}

pub fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Three-state chain: action 1 moves right, action 0 moves left; entering the
/// right end pays 1, every other move pays 0.
pub fn chain() -> TabularModel {
    let step = |s: usize, a: usize| -> usize {
        if a == 1 {
            (s + 1).min(2)
        } else {
            s.saturating_sub(1)
        }
    };
    TabularModel {
        dynamics: (0..3)
            .map(|s| (0..2).map(|a| { let n = step(s, a); vec![(1.0, n, if n == 2 { 1.0 } else { 0.0 })] }).collect())
            .collect(),
    }
}

/// Five-state deterministic ring with a shortcut and distinct rewards.
pub fn ring() -> TabularModel {
    let rewards = [0.5, -1.0, 2.0, 0.0, -0.5];
    TabularModel {
        dynamics: (0..5)
            .map(|s| {
                vec![
                    vec![(1.0, (s + 1) % 5, rewards[(s + 1) % 5])],
                    vec![(1.0, (s + 4) % 5, rewards[(s + 4) % 5])],
                    vec![(1.0, 0, if s == 3 { 1.5 } else { -0.25 })],
                ]
            })
            .collect(),
    }
}

/// Six-state model with slip: the intended successor with probability 0.7,
/// otherwise one of two fixed alternatives.
pub fn slippery() -> TabularModel {
    let reward = |n: usize| [0.0, 0.2, -0.4, 1.0, 0.1, -0.2][n];
    TabularModel {
        dynamics: (0..6)
            .map(|s| {
                (0..2)
                    .map(|a| {
                        let intended = if a == 0 { (s + 1) % 6 } else { (s + 3) % 6 };
                        let slip1 = (s + 5) % 6;
                        let slip2 = s;
                        vec![(0.7, intended, reward(intended)), (0.2, slip1, reward(slip1)), (0.1, slip2, reward(slip2))]
                    })
                    .collect()
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// learning drivers

use hstl::learn::{epsilon_greedy, flat_q_update, greedy_policy, QTable};

pub fn max_norm(q: &QTable, oracle: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (s, row) in oracle.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            worst = worst.max((q.get(s, a) - v).abs());
        }
    }
    worst
}

pub fn policies_match(q: &QTable, oracle: &[Vec<f64>]) -> bool {
    greedy_policy(q) == oracle.iter().map(|r| argmax_lowest(r)).collect::<Vec<_>>()
}

/// Repeated sweeps over every state-action pair with a constant rate.
pub fn sweep_constant<R: Rng>(model: &TabularModel, gamma: f64, alpha: f64, sweeps: usize, rng: &mut R) -> QTable {
    let mut q = QTable::new(model.states(), model.actions(), 0.0);
    for _ in 0..sweeps {
        for s in 0..model.states() {
            for a in 0..model.actions() {
                let (next, r) = model.sample(s, a, rng);
                flat_q_update(&mut q, s, a, next, r, alpha, gamma);
            }
        }
    }
    q
}

/// Sweeps with a per-pair rate of one over the visit count.
pub fn sweep_averaging<R: Rng>(model: &TabularModel, gamma: f64, sweeps: usize, rng: &mut R) -> QTable {
    let mut q = QTable::new(model.states(), model.actions(), 0.0);
    for n in 1..=sweeps {
        let alpha = 1.0 / n as f64;
        for s in 0..model.states() {
            for a in 0..model.actions() {
                let (next, r) = model.sample(s, a, rng);
                flat_q_update(&mut q, s, a, next, r, alpha, gamma);
            }
        }
    }
    q
}

/// Online learning along a single behavior trajectory with a fixed
/// exploration rate.
pub fn online_epsilon_greedy<R: Rng>(model: &TabularModel, gamma: f64, alpha: f64, epsilon: f64, steps: usize, rng: &mut R) -> QTable {
    let mut q = QTable::new(model.states(), model.actions(), 0.0);
    let actions: Vec<usize> = (0..model.actions()).collect();
    let mut s = 0;
    for _ in 0..steps {
        let a = epsilon_greedy(&q, s, &actions, epsilon, rng).unwrap();
        let (next, r) = model.sample(s, a, rng);
        flat_q_update(&mut q, s, a, next, r, alpha, gamma);
        s = next;
    }
    q
}
