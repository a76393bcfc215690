//! Tabular learning: one flat Q-table per primitive option rewarded by that
//! option's predicate, and one option-value table rewarded by the robustness
//! of the whole formula over the trajectory each option produced.

mod qtable;
mod schedule;

pub use qtable::{epsilon_greedy, flat_q_update, greedy_policy, option_q_update, QTable};
pub use schedule::{EpsilonSchedule, TickSource};

use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, Mdp};
use crate::options::{state_robustness, FlatController};
use crate::stl::{Formula, LeafTable, Monitor, Robustness, StlError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("no candidates to choose from")]
    EmptyCandidates,
    #[error("trajectory has {states} states but {actions} actions; expected one more state than actions")]
    LengthMismatch { states: usize, actions: usize },
    #[error("experience must contain at least one action")]
    EmptyExperience,
    #[error("index {index} out of range for {what} of size {size}")]
    IndexOutOfRange { what: &'static str, index: usize, size: usize },
    #[error("table needs {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("table entries must be finite")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("the environment's state space cannot be enumerated")]
    UnboundedStateSpace,
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// How the option-value discount is raised for intermediate states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscountExponent {
    /// Steps remaining from the updated state to termination.
    #[default]
    Remaining,
    /// Length of the whole execution, for every intermediate state.
    Total,
}

/// Learning rate, discount and exploration for one table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableParams {
    pub alpha: f64,
    pub gamma: f64,
    pub schedule: EpsilonSchedule,
}

impl TableParams {
    pub fn new(alpha: f64, gamma: f64, schedule: EpsilonSchedule) -> Result<Self, LearnError> {
        for (name, v) in [("alpha", alpha), ("gamma", gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LearnError::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(TableParams { alpha, gamma, schedule })
    }
}

/// Per-state rewards precomputed over an enumerable state space.
#[derive(Debug, Clone)]
pub struct RewardModel {
    monitor: Monitor,
    leaf_rows: Vec<Vec<Robustness>>,
    predicate_rewards: Vec<Vec<f64>>,
}

impl RewardModel {
    pub fn new<E: Mdp>(spec: &Formula, predicates: &[Formula], env: &E) -> Result<Self, LearnError> {
        let states = env.states().ok_or(LearnError::UnboundedStateSpace)?;
        let monitor = Monitor::new(spec);
        let leaf_rows = states.iter().map(|s| monitor.leaf_row(s)).collect::<Result<Vec<_>, _>>()?;
        let predicate_rewards = predicates
            .iter()
            .map(|psi| {
                states
                    .iter()
                    .map(|s| state_robustness(psi, s).map(|r| to_f64(r)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RewardModel { monitor, leaf_rows, predicate_rewards })
    }

    pub fn num_predicates(&self) -> usize {
        self.predicate_rewards.len()
    }

    pub fn num_states(&self) -> usize {
        self.leaf_rows.len()
    }

    /// Robustness of predicate `j` at state `s`.
    pub fn predicate_reward(&self, j: usize, s: usize) -> f64 {
        self.predicate_rewards[j][s]
    }

    fn table(&self, states: &[usize]) -> Result<LeafTable, LearnError> {
        let mut table = LeafTable::with_capacity(self.monitor.leaves().len(), states.len());
        for &s in states {
            let row = self.leaf_rows.get(s).ok_or(LearnError::IndexOutOfRange { what: "states", index: s, size: self.leaf_rows.len() })?;
            table.push_row(row);
        }
        Ok(table)
    }

    /// Lumped reward of the whole trajectory.
    pub fn lumped(&self, states: &[usize]) -> Result<Robustness, LearnError> {
        Ok(self.monitor.clipped_robustness(&self.table(states)?)?)
    }

    /// Lumped reward of every suffix `states[i..]`.
    pub fn suffix_lumped(&self, states: &[usize]) -> Result<Vec<Robustness>, LearnError> {
        Ok(self.monitor.suffix_robustness(&self.table(states)?)?)
    }
}

pub fn to_f64(r: Robustness) -> f64 {
    r.to_f64().expect("ratio of 64-bit integers converts to f64")
}

/// Everything the learner updates during training.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningState {
    pub flat_q: Vec<QTable>,
    pub option_q: QTable,
    pub flat: Vec<TableParams>,
    pub option: TableParams,
    pub discount_exponent: DiscountExponent,
    pub primitive_steps: u64,
    pub option_choices: u64,
}

impl LearningState {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        num_options: usize,
        flat: Vec<TableParams>,
        option: TableParams,
        discount_exponent: DiscountExponent,
    ) -> Self {
        LearningState {
            flat_q: flat.iter().map(|_| QTable::new(num_states, num_actions, 0.0)).collect(),
            option_q: QTable::new(num_states, num_options, 0.0),
            flat,
            option,
            discount_exponent,
            primitive_steps: 0,
            option_choices: 0,
        }
    }

    fn ticks(&self, source: TickSource) -> u64 {
        match source {
            TickSource::PrimitiveSteps => self.primitive_steps,
            TickSource::OptionChoices => self.option_choices,
        }
    }

    pub fn flat_epsilon(&self, j: usize) -> f64 {
        let s = self.flat[j].schedule;
        s.value(self.ticks(s.tick_source))
    }

    pub fn option_epsilon(&self) -> f64 {
        let s = self.option.schedule;
        s.value(self.ticks(s.tick_source))
    }

    /// Picks an option epsilon-greedily among `candidates` and counts the choice.
    pub fn choose_option<R: Rng + ?Sized>(&mut self, s: usize, candidates: &[usize], rng: &mut R) -> Result<usize, LearnError> {
        let o = epsilon_greedy(&self.option_q, s, candidates, self.option_epsilon(), rng)?;
        self.option_choices += 1;
        Ok(o)
    }

    /// Learns from one option execution: every flat table takes a step update
    /// for each transition, and the option table takes an update from every
    /// intermediate state using the lumped reward of the remaining trajectory.
    /// Returns the lumped reward of the full trajectory.
    pub fn hstl_update(&mut self, model: &RewardModel, option: usize, states: &[usize], actions: &[usize]) -> Result<Robustness, LearnError> {
        let k = actions.len();
        if states.len() != k + 1 {
            return Err(LearnError::LengthMismatch { states: states.len(), actions: k });
        }
        if k == 0 {
            return Err(LearnError::EmptyExperience);
        }
        check_index("options", option, self.option_q.columns())?;
        check_index("predicates", self.flat_q.len().saturating_sub(1), model.num_predicates())?;
        for &s in states {
            check_index("states", s, self.option_q.states())?;
        }
        for &a in actions {
            check_index("actions", a, self.flat_q.first().map_or(0, QTable::columns))?;
        }
        let suffix = model.suffix_lumped(states)?;
        let end = states[k];
        for i in 0..k {
            let (s, a, next) = (states[i], actions[i], states[i + 1]);
            for (j, q) in self.flat_q.iter_mut().enumerate() {
                let p = self.flat[j];
                flat_q_update(q, s, a, next, model.predicate_reward(j, next), p.alpha, p.gamma);
            }
            let exponent = match self.discount_exponent {
                DiscountExponent::Remaining => k - i,
                DiscountExponent::Total => k,
            };
            let p = self.option;
            option_q_update(&mut self.option_q, s, option, end, to_f64(suffix[i]), exponent as u32, p.alpha, p.gamma);
        }
        self.primitive_steps += k as u64;
        Ok(suffix[0])
    }
}

fn check_index(what: &'static str, index: usize, size: usize) -> Result<(), LearnError> {
    if index < size {
        Ok(())
    } else {
        Err(LearnError::IndexOutOfRange { what, index, size })
    }
}

/// Epsilon-greedy constituent policies during training. The flat schedules
/// advance with every action taken inside the running option.
pub struct ExploringFlat<'a, R: Rng + ?Sized> {
    learning: &'a LearningState,
    rng: &'a mut R,
    taken: u64,
    actions: Vec<usize>,
}

impl<'a, R: Rng + ?Sized> ExploringFlat<'a, R> {
    pub fn new(learning: &'a LearningState, rng: &'a mut R) -> Self {
        let n = learning.flat_q.first().map_or(0, QTable::columns);
        ExploringFlat { learning, rng, taken: 0, actions: (0..n).collect() }
    }
}

impl<R: Rng + ?Sized> FlatController for ExploringFlat<'_, R> {
    fn action(&mut self, primitive: usize, state: usize) -> usize {
        let schedule = self.learning.flat[primitive].schedule;
        let ticks = match schedule.tick_source {
            TickSource::PrimitiveSteps => self.learning.primitive_steps + self.taken,
            TickSource::OptionChoices => self.learning.option_choices,
        };
        self.taken += 1;
        epsilon_greedy(&self.learning.flat_q[primitive], state, &self.actions, schedule.value(ticks), self.rng)
            .expect("at least one action")
    }
}

/// Constituent policies given as fixed state-to-action maps.
pub struct GreedyFlat<'a> {
    pub policies: &'a [Vec<usize>],
}

impl FlatController for GreedyFlat<'_> {
    fn action(&mut self, primitive: usize, state: usize) -> usize {
        self.policies[primitive][state]
    }
}
