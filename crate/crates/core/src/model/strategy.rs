use std::fmt;

use super::{ModelError, Valuation};

/// A reported strategy.
///
/// `Proportional` splits the agent's unit consumption rate across remaining
/// items in proportion to the report. `Lexicographic` eats the first
/// unfinished item of `order` at full rate; the order may be a strict prefix
/// of the items, after which the zero policy takes over.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Strategy {
    Proportional(Valuation),
    Lexicographic(Vec<usize>),
}

impl Strategy {
    pub fn proportional(report: Valuation) -> Self {
        Strategy::Proportional(report)
    }

    /// Checked: distinct indices, all `< m`.
    pub fn lexicographic(order: Vec<usize>, m: usize) -> Result<Self, ModelError> {
        check_order(&order, m)?;
        Ok(Strategy::Lexicographic(order))
    }

    /// Validates the strategy against an item count.
    pub fn check(&self, m: usize) -> Result<(), ModelError> {
        match self {
            Strategy::Proportional(v) if v.len() != m => Err(ModelError::InvalidStrategy(format!(
                "report has {} entries, expected {m}",
                v.len()
            ))),
            Strategy::Proportional(_) => Ok(()),
            Strategy::Lexicographic(order) => check_order(order, m),
        }
    }

    /// The ordinal view of the strategy: its complete preference ranking.
    /// Proportional reports rank by decreasing value; lexicographic orders
    /// are followed by the unlisted items in index order. Ties go to the
    /// lowest index.
    pub fn ranking(&self, m: usize) -> Vec<usize> {
        match self {
            Strategy::Proportional(v) => v.ranking(),
            Strategy::Lexicographic(order) => {
                let mut listed = vec![false; m];
                let mut out = order.clone();
                for &j in order {
                    listed[j] = true;
                }
                out.extend((0..m).filter(|&j| !listed[j]));
                out
            }
        }
    }

    pub fn is_lexicographic(&self) -> bool {
        matches!(self, Strategy::Lexicographic(_))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Proportional(v) => {
                let parts: Vec<String> = v.values().iter().map(super::format_rational).collect();
                write!(f, "proportional({})", parts.join(", "))
            }
            Strategy::Lexicographic(order) => {
                let parts: Vec<String> = order.iter().map(|j| (j + 1).to_string()).collect();
                write!(f, "lexicographic({})", parts.join(", "))
            }
        }
    }
}

fn check_order(order: &[usize], m: usize) -> Result<(), ModelError> {
    let mut seen = vec![false; m];
    for &j in order {
        if j >= m {
            return Err(ModelError::InvalidStrategy(format!("item {} out of range 1..={m}", j + 1)));
        }
        if seen[j] {
            return Err(ModelError::InvalidStrategy(format!("item {} repeated", j + 1)));
        }
        seen[j] = true;
    }
    Ok(())
}

/// Who an agent eats when its strategy gives it nothing to eat among the
/// remaining items.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum ZeroPolicy {
    UniformOverRemaining,
    #[default]
    LowestIndexFirst,
    FixedOrder(Vec<usize>),
}

impl ZeroPolicy {
    /// Checked: `order` must be a permutation of `0..m`.
    pub fn fixed(order: Vec<usize>, m: usize) -> Result<Self, ModelError> {
        let policy = ZeroPolicy::FixedOrder(order);
        policy.check(m)?;
        Ok(policy)
    }

    pub fn check(&self, m: usize) -> Result<(), ModelError> {
        if let ZeroPolicy::FixedOrder(order) = self {
            let mut seen = vec![false; m];
            if order.len() != m {
                return Err(ModelError::InvalidPolicy(format!(
                    "fixed order has {} items, expected a permutation of {m}",
                    order.len()
                )));
            }
            for &j in order {
                if j >= m || seen[j] {
                    return Err(ModelError::InvalidPolicy(format!(
                        "fixed order is not a permutation of 1..={m}"
                    )));
                }
                seen[j] = true;
            }
        }
        Ok(())
    }

    /// Parses `uniform`, `lowest-index` or `fixed:3,1,2` (1-based).
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        match text.trim() {
            "uniform" => Ok(ZeroPolicy::UniformOverRemaining),
            "lowest-index" => Ok(ZeroPolicy::LowestIndexFirst),
            other => {
                let list = other
                    .strip_prefix("fixed:")
                    .ok_or_else(|| ModelError::InvalidPolicy(format!("unknown zero policy {other:?}")))?;
                let order = list
                    .split(',')
                    .map(|s| match s.trim().parse::<usize>() {
                        Ok(j) if j >= 1 => Ok(j - 1),
                        _ => Err(ModelError::InvalidPolicy(format!("bad item {s:?} in {other:?}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ZeroPolicy::FixedOrder(order))
            }
        }
    }
}

impl fmt::Display for ZeroPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZeroPolicy::UniformOverRemaining => write!(f, "uniform"),
            ZeroPolicy::LowestIndexFirst => write!(f, "lowest-index"),
            ZeroPolicy::FixedOrder(order) => {
                let parts: Vec<String> = order.iter().map(|j| (j + 1).to_string()).collect();
                write!(f, "fixed:{}", parts.join(","))
            }
        }
    }
}
