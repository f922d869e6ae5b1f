//! JSON experiment configuration: schema, parsing and validation.
//!
//! Unknown keys are an error everywhere; a summary written next to the run
//! echoes the parsed config, which is enough to re-run it exactly.

use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::cost::OutputLengthPredictor;
use crate::env::{EnvError, PipelineSpec};
use crate::policies::{PolicyConfig, PolicyError, PolicyName};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Spec(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

/// Policy name plus its tunables, stored flat in the JSON
/// (`{"name": "seqbandits", "eta": 0.01, ...}`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyBlock {
    pub name: PolicyName,
    pub config: PolicyConfig,
}

impl Serialize for PolicyBlock {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let mut map = match serde_json::to_value(&self.config).map_err(S::Error::custom)? {
            serde_json::Value::Object(map) => map,
            _ => return Err(S::Error::custom("policy config is not an object")),
        };
        map.insert(
            "name".into(),
            serde_json::Value::String(self.name.as_str().into()),
        );
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PolicyBlock {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let mut map = serde_json::Map::deserialize(deserializer)?;
        let name_value = map
            .remove("name")
            .ok_or_else(|| D::Error::custom("policy block is missing `name`"))?;
        let name: PolicyName = serde_json::from_value(name_value)
            .map_err(|e| D::Error::custom(format!("policy `name`: {e}")))?;
        let config: PolicyConfig = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| D::Error::custom(format!("policy config: {e}")))?;
        Ok(Self { name, config })
    }
}

fn default_enumeration_cap() -> usize {
    10_000
}

/// Everything one experiment needs: the world, the policy, seeds, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: PipelineSpec,
    pub policy: PolicyBlock,
    /// Output-length predictor; omitted means a table matched to the
    /// environment's true per-arm token means.
    #[serde(default)]
    pub predictor: Option<OutputLengthPredictor>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_enumeration_cap")]
    pub enumeration_cap: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.spec.validate()?;
        let arm_counts = self.spec.arms_per_subtask();
        self.policy.config.validate(&arm_counts)?;
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid {
                field: "seeds".into(),
                reason: "at least one seed is required".into(),
            });
        }
        if self.policy.name == PolicyName::Fixed && self.policy.config.fixed_arms.is_none() {
            return Err(ConfigError::Invalid {
                field: "fixed_arms".into(),
                reason: "the fixed policy needs one pinned arm per subtask".into(),
            });
        }
        let combos: usize = arm_counts.iter().product();
        if combos > self.enumeration_cap {
            return Err(ConfigError::Invalid {
                field: "enumeration_cap".into(),
                reason: format!("{combos} super arms exceed the cap {}", self.enumeration_cap),
            });
        }
        match &self.predictor {
            Some(OutputLengthPredictor::Table { tokens }) => {
                check_per_arm_shape("predictor", tokens.len(), &arm_counts, |i| {
                    tokens[i].len()
                })?;
            }
            Some(OutputLengthPredictor::OracleLinear { coeffs }) => {
                check_per_arm_shape("predictor", coeffs.len(), &arm_counts, |i| {
                    coeffs[i].len()
                })?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Parses and validates a JSON config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}

fn check_per_arm_shape(
    field: &str,
    rows: usize,
    arm_counts: &[usize],
    row_len: impl Fn(usize) -> usize,
) -> Result<(), ConfigError> {
    if rows != arm_counts.len() {
        return Err(ConfigError::Invalid {
            field: field.into(),
            reason: format!("{rows} subtask rows for {} subtasks", arm_counts.len()),
        });
    }
    for (i, &count) in arm_counts.iter().enumerate() {
        if row_len(i) != count {
            return Err(ConfigError::Invalid {
                field: field.into(),
                reason: format!(
                    "subtask {i} row has {} entries, expected {count}",
                    row_len(i)
                ),
            });
        }
    }
    Ok(())
}
