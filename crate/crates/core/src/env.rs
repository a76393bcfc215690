//! Environments the learner interacts with. The transition model stays
//! behind [`Mdp::step`]; the learner only sees sampled successor states.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::stl::State;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("state {0} is outside the environment")]
    OutOfBounds(State),
    #[error("action index {action} is not below {count}")]
    InvalidAction { action: usize, count: usize },
    #[error("invalid environment: {0}")]
    InvalidConfig(String),
}

/// Result of one primitive step. The reward slot is part of the MDP tuple but
/// every reward the learner uses is computed from robustness instead, so the
/// environments here always report zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next: State,
    pub reward: f64,
}

/// A finite, fully observed MDP with a hidden transition model.
pub trait Mdp {
    fn state_variables(&self) -> &[String];

    fn action_names(&self) -> &[&'static str];

    fn num_actions(&self) -> usize {
        self.action_names().len()
    }

    fn step<R: Rng + ?Sized>(&self, s: &State, action: usize, rng: &mut R) -> Result<Step, EnvError>;

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> State;

    /// Size of the state space, or `None` if it cannot be enumerated.
    fn num_states(&self) -> Option<usize>;

    /// Dense index of `s`, or `None` if `s` is not a state of this MDP.
    fn state_index(&self, s: &State) -> Option<usize>;

    fn state_at(&self, index: usize) -> Option<State>;

    fn states(&self) -> Option<Vec<State>> {
        let n = self.num_states()?;
        (0..n).map(|i| self.state_at(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];
    pub const NAMES: [&'static str; 4] = ["Up", "Down", "Left", "Right"];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn from_name(name: &str) -> Option<Action> {
        Action::NAMES.iter().position(|n| *n == name).map(|i| Action::ALL[i])
    }

    fn delta(self) -> (i64, i64) {
        match self {
            Action::Up => (0, 1),
            Action::Down => (0, -1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(Action::NAMES[self.index()])
    }
}

/// Slippery grid. `x` indexes columns and `y` rows, origin at the bottom-left.
/// The intended move happens with `intent_prob`; otherwise one of the other
/// three moves is taken, each with `slip_prob`. Moves that would leave the
/// grid leave the state unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    width: i64,
    height: i64,
    intent_prob: f64,
    slip_prob: f64,
    variables: Vec<String>,
}

impl GridWorld {
    pub fn new(width: usize, height: usize, intent_prob: f64, slip_prob: f64) -> Result<Self, EnvError> {
        if width == 0 || height == 0 {
            return Err(EnvError::InvalidConfig("grid dimensions must be positive".into()));
        }
        if !(0.0..=1.0).contains(&intent_prob) || !(0.0..=1.0).contains(&slip_prob) {
            return Err(EnvError::InvalidConfig("probabilities must lie in [0, 1]".into()));
        }
        if (intent_prob + 3.0 * slip_prob - 1.0).abs() > 1e-9 {
            return Err(EnvError::InvalidConfig(format!(
                "intent_prob + 3 * slip_prob must be 1, got {}",
                intent_prob + 3.0 * slip_prob
            )));
        }
        Ok(GridWorld {
            width: width as i64,
            height: height as i64,
            intent_prob,
            slip_prob,
            variables: vec!["x".into(), "y".into()],
        })
    }

    /// 15x15 grid, 0.7 intended, 0.1 for each other direction.
    pub fn case_study() -> Self {
        GridWorld::new(15, 15, 0.7, 0.1).expect("valid parameters")
    }

    /// Same grid with no slip.
    pub fn deterministic(width: usize, height: usize) -> Self {
        GridWorld::new(width, height, 1.0, 0.0).expect("valid parameters")
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn height(&self) -> usize {
        self.height as usize
    }

    pub fn intent_prob(&self) -> f64 {
        self.intent_prob
    }

    pub fn slip_prob(&self) -> f64 {
        self.slip_prob
    }

    pub fn contains(&self, s: &State) -> bool {
        s.dim() == 2 && (0..self.width).contains(&s.0[0]) && (0..self.height).contains(&s.0[1])
    }

    /// The direction actually moved when `intended` is commanded.
    pub fn sample_direction<R: Rng + ?Sized>(&self, intended: Action, rng: &mut R) -> Action {
        if rng.gen::<f64>() < self.intent_prob {
            return intended;
        }
        let pick = rng.gen_range(0..3);
        let others = Action::ALL.iter().copied().filter(|a| *a != intended);
        others.skip(pick).next().expect("three alternatives")
    }

    /// Deterministic successor of moving in `direction`, clamped in place at walls.
    pub fn apply(&self, s: &State, direction: Action) -> State {
        let (dx, dy) = direction.delta();
        let next = State(vec![s.0[0] + dx, s.0[1] + dy]);
        if self.contains(&next) {
            next
        } else {
            s.clone()
        }
    }
}

impl Mdp for GridWorld {
    fn state_variables(&self) -> &[String] {
        &self.variables
    }

    fn action_names(&self) -> &[&'static str] {
        &Action::NAMES
    }

    fn step<R: Rng + ?Sized>(&self, s: &State, action: usize, rng: &mut R) -> Result<Step, EnvError> {
        if !self.contains(s) {
            return Err(EnvError::OutOfBounds(s.clone()));
        }
        let intended = Action::from_index(action).ok_or(EnvError::InvalidAction { action, count: 4 })?;
        let moved = self.sample_direction(intended, rng);
        Ok(Step { next: self.apply(s, moved), reward: 0.0 })
    }

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        State(vec![rng.gen_range(0..self.width), rng.gen_range(0..self.height)])
    }

    fn num_states(&self) -> Option<usize> {
        Some((self.width * self.height) as usize)
    }

    fn state_index(&self, s: &State) -> Option<usize> {
        self.contains(s).then(|| (s.0[1] * self.width + s.0[0]) as usize)
    }

    fn state_at(&self, index: usize) -> Option<State> {
        let index = index as i64;
        (index < self.width * self.height).then(|| State(vec![index % self.width, index / self.width]))
    }
}
