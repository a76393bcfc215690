use std::collections::BTreeSet;

use super::{HarnessError, RunConfig};
use crate::env::{EnvError, GridWorld, Mdp};
use crate::learn::{to_f64, ExploringFlat, LearningState, RewardModel};
use crate::options::{build_combined_options, build_primitive_options, execute_option, OptionSet};
use crate::rng::{RngStreams, Stream};
use crate::stl::{expand_aliases, parse_stl, Formula, State};

/// Everything derived from a config before learning starts.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: RunConfig,
    pub env: GridWorld,
    pub spec: Formula,
    pub predicates: Vec<Formula>,
    pub options: OptionSet,
    pub model: RewardModel,
}

/// Per-episode training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub cumulative_reward: f64,
    /// Indexed like the option set.
    pub option_counts: Vec<usize>,
    pub steps: u64,
    /// Executions stopped by the step cap.
    pub capped: usize,
    pub eps_options: f64,
    pub eps_flat: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub learning: LearningState,
    pub logs: Vec<EpisodeLog>,
}

impl Experiment {
    pub fn new(config: RunConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let e = &config.environment;
        let env = GridWorld::new(e.width, e.height, e.intent_prob, e.slip_prob)?;
        let text = expand_aliases(&config.formula.text, &config.formula.aliases)?;
        let spec = parse_stl(&text, env.state_variables())?;
        let predicates = spec.extract_predicates();
        let primitives = build_primitive_options(&predicates, &env)?;
        let ids: BTreeSet<&str> = primitives.iter().map(|p| p.id.as_str()).collect();
        if let Some(unknown) = config.flat.overrides.keys().find(|k| !ids.contains(k.as_str())) {
            return Err(HarnessError::Config(format!("flat.overrides.{unknown} does not name a primitive option")));
        }
        let options = build_combined_options(primitives, &config.options.spec()?)?;
        let model = RewardModel::new(&spec, &predicates, &env)?;
        Ok(Experiment { config, env, spec, predicates, options, model })
    }

    pub fn primitive_ids(&self) -> Vec<String> {
        self.options.primitives().iter().map(|p| p.id.clone()).collect()
    }

    pub fn option_ids(&self) -> Vec<String> {
        self.options.options().iter().map(|o| o.id.clone()).collect()
    }

    pub fn initial_learning_state(&self) -> Result<LearningState, HarnessError> {
        let flat = self
            .options
            .primitives()
            .iter()
            .map(|p| self.config.flat.for_primitive(&p.id).params())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LearningState::new(
            self.env.num_states().expect("grid is finite"),
            self.env.num_actions(),
            self.options.len(),
            flat,
            self.config.option_policy.params()?,
            self.config.discount_exponent,
        ))
    }

    /// Runs the configured number of episodes from a fresh learning state.
    pub fn train(&self) -> Result<TrainOutput, HarnessError> {
        self.train_episodes(self.config.episodes)
    }

    pub fn train_episodes(&self, episodes: usize) -> Result<TrainOutput, HarnessError> {
        let streams = RngStreams::new(self.config.seed);
        let mut transitions = streams.stream(Stream::Transitions);
        let mut resets = streams.stream(Stream::Resets);
        let mut option_rng = streams.stream(Stream::OptionExploration);
        let mut flat_rng = streams.stream(Stream::FlatExploration);
        let mut learning = self.initial_learning_state()?;
        let mut logs = Vec::with_capacity(episodes);
        let index = |s: &State| self.env.state_index(s).ok_or_else(|| EnvError::OutOfBounds(s.clone()));

        for episode in 0..episodes {
            let mut state = self.env.reset(&mut resets);
            let mut log = EpisodeLog {
                episode,
                cumulative_reward: 0.0,
                option_counts: vec![0; self.options.len()],
                steps: 0,
                capped: 0,
                eps_options: 0.0,
                eps_flat: Vec::new(),
            };
            for _ in 0..self.config.option_choices_per_episode {
                let s = index(&state)?;
                let candidates = self.options.available(s);
                let option = learning.choose_option(s, &candidates, &mut option_rng)?;
                let exec = {
                    let mut flat = ExploringFlat::new(&learning, &mut flat_rng);
                    execute_option(&self.options, option, &state, &self.env, &mut flat, &mut transitions, self.config.step_cap)?
                };
                let reward = learning.hstl_update(&self.model, option, &exec.state_indices, &exec.actions)?;
                log.cumulative_reward += to_f64(reward);
                log.option_counts[option] += 1;
                log.steps += exec.steps() as u64;
                log.capped += usize::from(!exec.terminated_normally);
                state = exec.trajectory.into_states().pop().expect("non-empty trajectory");
            }
            log.eps_options = learning.option_epsilon();
            log.eps_flat = (0..learning.flat.len()).map(|j| learning.flat_epsilon(j)).collect();
            logs.push(log);
        }
        Ok(TrainOutput { learning, logs })
    }
}
