use std::path::{Path, PathBuf};

use alloc_core::instances::GeneratorSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Everything needed to rerun an experiment. Unset fields fall back to the
/// command's defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanism: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dump_candidates: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Field-wise: values set in `self` win over `base`.
    pub fn over(self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            generator: self.generator.or(base.generator),
            instance: self.instance.or(base.instance),
            profile: self.profile.or(base.profile),
            mechanism: self.mechanism.or(base.mechanism),
            zero_policy: self.zero_policy.or(base.zero_policy),
            families: self.families.or(base.families),
            epsilon: self.epsilon.or(base.epsilon),
            seed: self.seed.or(base.seed),
            samples: self.samples.or(base.samples),
            repetitions: self.repetitions.or(base.repetitions),
            agent: self.agent.or(base.agent),
            out: self.out.or(base.out),
            dump_candidates: self.dump_candidates || base.dump_candidates,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let config = ExperimentConfig {
            generator: Some(GeneratorSpec::new("log-m-lb").param("k", 8).param("q", 4)),
            mechanism: Some("cps".into()),
            epsilon: Some("1/100".into()),
            seed: Some(3),
            dump_candidates: true,
            ..Default::default()
        };
        let text = serde_json::to_string(&config).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), config);
    }

    #[test]
    fn flags_override_file() {
        let file = ExperimentConfig { mechanism: Some("ps".into()), seed: Some(1), ..Default::default() };
        let flags = ExperimentConfig { seed: Some(9), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!(merged.mechanism.as_deref(), Some("ps"));
        assert_eq!(merged.seed, Some(9));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"mechanisms": "cps"}"#).is_err());
    }
}
