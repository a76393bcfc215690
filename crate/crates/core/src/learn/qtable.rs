use rand::Rng;

use super::LearnError;

/// Dense table of values indexed by (state, action-or-option).
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    states: usize,
    columns: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(states: usize, columns: usize, fill: f64) -> Self {
        QTable { states, columns, values: vec![fill; states * columns] }
    }

    pub fn from_values(states: usize, columns: usize, values: Vec<f64>) -> Result<Self, LearnError> {
        if values.len() != states * columns {
            return Err(LearnError::Shape { expected: states * columns, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite);
        }
        Ok(QTable { states, columns, values })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.columns + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.columns + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.columns..(s + 1) * self.columns]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Column of the largest entry in row `s`, lowest index on ties.
    pub fn argmax(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (i, v) in row.iter().enumerate().skip(1) {
            if *v > row[best] {
                best = i;
            }
        }
        best
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// One-step Q-learning update of `q[s][a]`.
pub fn flat_q_update(q: &mut QTable, s: usize, a: usize, next: usize, reward: f64, alpha: f64, gamma: f64) -> f64 {
    let old = q.get(s, a);
    let new = old + alpha * (reward + gamma * q.max(next) - old);
    q.set(s, a, new);
    new
}

/// Semi-Markov update of `q[s][o]` for an option that ran `k` steps from `s`
/// and stopped in `end`.
#[allow(clippy::too_many_arguments)]
pub fn option_q_update(q: &mut QTable, s: usize, o: usize, end: usize, reward: f64, k: u32, alpha: f64, gamma: f64) -> f64 {
    let old = q.get(s, o);
    let new = old + alpha * (reward + gamma.powi(k as i32) * q.max(end) - old);
    q.set(s, o, new);
    new
}

/// Uniform over `candidates` with probability `epsilon`, otherwise the best
/// candidate with ties broken uniformly at random.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    q: &QTable,
    s: usize,
    candidates: &[usize],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, LearnError> {
    if candidates.is_empty() {
        return Err(LearnError::EmptyCandidates);
    }
    if rng.gen::<f64>() < epsilon {
        return Ok(candidates[rng.gen_range(0..candidates.len())]);
    }
    let row = q.row(s);
    let best = candidates.iter().map(|&c| row[c]).fold(f64::NEG_INFINITY, f64::max);
    let ties = candidates.iter().filter(|&&c| row[c] == best).count();
    let pick = if ties == 1 { 0 } else { rng.gen_range(0..ties) };
    Ok(*candidates.iter().filter(|&&c| row[c] == best).nth(pick).expect("tie index in range"))
}

/// Best column per state, lowest index on ties.
pub fn greedy_policy(q: &QTable) -> Vec<usize> {
    (0..q.states()).map(|s| q.argmax(s)).collect()
}
