use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::learn::{DiscountExponent, EpsilonSchedule, TableParams, TickSource};
use crate::options::{OptionSetMode, OptionSetSpec};

/// Full description of a training run. Unknown keys are rejected so that a
/// misspelled hyperparameter fails loudly instead of silently defaulting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "defaults::episodes")]
    pub episodes: usize,
    #[serde(default = "defaults::choices")]
    pub option_choices_per_episode: usize,
    #[serde(default = "defaults::step_cap")]
    pub step_cap: usize,
    #[serde(default = "defaults::trailing_window")]
    pub trailing_window: usize,
    #[serde(default)]
    pub discount_exponent: DiscountExponent,
    pub formula: FormulaConfig,
    pub environment: EnvironmentConfig,
    pub options: OptionsConfig,
    #[serde(default = "defaults::flat")]
    pub flat: FlatConfig,
    #[serde(default = "defaults::option_policy")]
    pub option_policy: PolicyConfig,
}

mod defaults {
    use super::*;

    pub fn episodes() -> usize {
        1200
    }
    pub fn choices() -> usize {
        200
    }
    pub fn step_cap() -> usize {
        500
    }
    pub fn trailing_window() -> usize {
        200
    }
    pub fn flat() -> FlatConfig {
        FlatConfig {
            gamma: 0.9,
            alpha: 0.2,
            epsilon0: 0.8,
            decay: 1e-6,
            floor: 0.1,
            tick: TickSource::PrimitiveSteps,
            overrides: BTreeMap::new(),
        }
    }
    pub fn option_policy() -> PolicyConfig {
        PolicyConfig { gamma: 0.9, alpha: 0.5, epsilon0: 0.8, decay: 1e-4, floor: 0.1, tick: TickSource::OptionChoices }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaConfig {
    pub text: String,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub width: usize,
    pub height: usize,
    pub intent_prob: f64,
    pub slip_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    SubsetsInOrder,
    AllPermutations,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsConfig {
    pub mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sequence_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon0: f64,
    pub decay: f64,
    pub floor: f64,
    pub tick: TickSource,
}

/// Flat-policy parameters shared by every primitive, with optional
/// per-primitive replacements keyed by option id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon0: f64,
    pub decay: f64,
    pub floor: f64,
    pub tick: TickSource,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, PolicyOverride>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

impl PolicyConfig {
    pub fn params(&self) -> Result<TableParams, HarnessError> {
        let schedule = EpsilonSchedule::new(self.epsilon0, self.decay, self.floor, self.tick).map_err(|e| HarnessError::Config(e.to_string()))?;
        TableParams::new(self.alpha, self.gamma, schedule).map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn with(&self, o: &PolicyOverride) -> PolicyConfig {
        PolicyConfig {
            gamma: o.gamma.unwrap_or(self.gamma),
            alpha: o.alpha.unwrap_or(self.alpha),
            epsilon0: o.epsilon0.unwrap_or(self.epsilon0),
            decay: o.decay.unwrap_or(self.decay),
            floor: o.floor.unwrap_or(self.floor),
            tick: self.tick,
        }
    }
}

impl FlatConfig {
    pub fn shared(&self) -> PolicyConfig {
        PolicyConfig {
            gamma: self.gamma,
            alpha: self.alpha,
            epsilon0: self.epsilon0,
            decay: self.decay,
            floor: self.floor,
            tick: self.tick,
        }
    }

    pub fn for_primitive(&self, id: &str) -> PolicyConfig {
        let shared = self.shared();
        self.overrides.get(id).map_or(shared, |o| shared.with(o))
    }
}

impl OptionsConfig {
    pub fn spec(&self) -> Result<OptionSetSpec, HarnessError> {
        let mode = match (self.mode, &self.explicit) {
            (ModeName::SubsetsInOrder, None) => OptionSetMode::SubsetsInOrder,
            (ModeName::AllPermutations, None) => OptionSetMode::AllPermutations,
            (ModeName::Explicit, Some(ids)) => OptionSetMode::Explicit(ids.clone()),
            (ModeName::Explicit, None) => return Err(HarnessError::Config("options.mode = \"explicit\" needs options.explicit".into())),
            (_, Some(_)) => return Err(HarnessError::Config("options.explicit is only valid with mode = \"explicit\"".into())),
        };
        Ok(OptionSetSpec { mode, max_sequence_length: self.max_sequence_length })
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.episodes == 0 {
            return fail("episodes must be at least 1".into());
        }
        if self.option_choices_per_episode == 0 {
            return fail("option_choices_per_episode must be at least 1".into());
        }
        if self.step_cap == 0 {
            return fail("step_cap must be at least 1".into());
        }
        if self.trailing_window == 0 {
            return fail("trailing_window must be at least 1".into());
        }
        if self.options.max_sequence_length == Some(0) {
            return fail("options.max_sequence_length must be at least 1".into());
        }
        let env = &self.environment;
        if !(0.0..=1.0).contains(&env.intent_prob) || !(0.0..=1.0).contains(&env.slip_prob) {
            return fail("environment probabilities must lie in [0, 1]".into());
        }
        self.flat.shared().params()?;
        for (id, o) in &self.flat.overrides {
            self.flat.shared().with(o).params().map_err(|e| HarnessError::Config(format!("flat.overrides.{id}: {e}")))?;
        }
        self.option_policy.params()?;
        self.options.spec()?;
        Ok(())
    }
}
