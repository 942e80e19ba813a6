//! JSON file formats for instances and strategies. All indices are 1-based here.

use serde::{Deserialize, Serialize};

use super::{
    format_rational, parse_rational, validate_instance, Instance, Labels, ModelError, RawInstance,
    Strategy, Valuation,
};

/// `{"n": 2, "m": 2, "valuations": [["2/3", "1/3"], ["1/3", "2/3"]], "labels": ...}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    pub valuations: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance) -> Self {
        InstanceFile {
            n: instance.n(),
            m: instance.m(),
            valuations: instance
                .true_valuations()
                .iter()
                .map(|v| v.values().iter().map(format_rational).collect())
                .collect(),
            labels: instance.labels().cloned(),
        }
    }

    pub fn to_raw(&self) -> Result<RawInstance, ModelError> {
        let valuations = self
            .valuations
            .iter()
            .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RawInstance { n: self.n, m: self.m, valuations, labels: self.labels.clone() })
    }
}

pub fn instance_from_json(text: &str) -> Result<Instance, ModelError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
    validate_instance(file.to_raw()?).map_err(ModelError::InvalidInstance)
}

pub fn instance_to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(instance)).expect("instance serializes")
}

/// `{"kind": "proportional", "report": [...]}` or `{"kind": "lexicographic", "order": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StrategyFile {
    Proportional { report: Vec<String> },
    Lexicographic { order: Vec<usize> },
}

impl StrategyFile {
    pub fn from_strategy(strategy: &Strategy) -> Self {
        match strategy {
            Strategy::Proportional(v) => StrategyFile::Proportional {
                report: v.values().iter().map(format_rational).collect(),
            },
            Strategy::Lexicographic(order) => {
                StrategyFile::Lexicographic { order: order.iter().map(|j| j + 1).collect() }
            }
        }
    }

    pub fn to_strategy(&self, m: usize) -> Result<Strategy, ModelError> {
        let strategy = match self {
            StrategyFile::Proportional { report } => {
                let values = report.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?;
                Strategy::Proportional(Valuation::new(values)?)
            }
            StrategyFile::Lexicographic { order } => {
                if order.contains(&0) {
                    return Err(ModelError::InvalidStrategy("item indices are 1-based".into()));
                }
                Strategy::Lexicographic(order.iter().map(|j| j - 1).collect())
            }
        };
        strategy.check(m)?;
        Ok(strategy)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProfileFile {
    Bare(Vec<StrategyFile>),
    Wrapped { strategies: Vec<StrategyFile> },
}

/// Parses a profile: either a JSON array of strategies or `{"strategies": [...]}`.
pub fn profile_from_json(text: &str, n: usize, m: usize) -> Result<Vec<Strategy>, ModelError> {
    let file: ProfileFile = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
    let entries = match file {
        ProfileFile::Bare(v) | ProfileFile::Wrapped { strategies: v } => v,
    };
    if entries.len() != n {
        return Err(ModelError::InvalidStrategy(format!(
            "profile has {} strategies for {n} agents",
            entries.len()
        )));
    }
    entries.iter().map(|s| s.to_strategy(m)).collect()
}

pub fn profile_to_json(profile: &[Strategy]) -> String {
    let files: Vec<StrategyFile> = profile.iter().map(StrategyFile::from_strategy).collect();
    serde_json::to_string_pretty(&files).expect("profile serializes")
}
