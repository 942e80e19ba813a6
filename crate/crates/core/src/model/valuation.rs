use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{format_rational, ModelError, Rational};

/// Non-negative item values summing to exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Valuation(Vec<Rational>);

impl Valuation {
    /// Checked constructor. Values are never normalized silently.
    pub fn new(values: Vec<Rational>) -> Result<Self, ModelError> {
        match check_unit_sum(&values) {
            Some(defect) => Err(ModelError::InvalidValuation(defect)),
            None => Ok(Valuation(values)),
        }
    }

    /// Exact normalization of non-negative weights. Fails if every weight is zero.
    pub fn from_weights(weights: &[Rational]) -> Result<Self, ModelError> {
        let total: Rational = weights.iter().sum();
        if total.is_zero() {
            return Err(ModelError::InvalidValuation(Defect::SumNotOne { sum: total }));
        }
        Valuation::new(weights.iter().map(|w| w / &total).collect())
    }

    /// Report 1 on `item`, 0 elsewhere.
    pub fn point_mass(item: usize, m: usize) -> Self {
        assert!(item < m, "item {item} out of range for m = {m}");
        let mut values = vec![Rational::zero(); m];
        values[item] = Rational::one();
        Valuation(values)
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    pub fn get(&self, item: usize) -> &Rational {
        &self.0[item]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Items ordered by decreasing value, ties broken by lowest index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut items: Vec<usize> = (0..self.0.len()).collect();
        items.sort_by(|&a, &b| self.0[b].cmp(&self.0[a]).then(a.cmp(&b)));
        items
    }

    /// Like [`ranking`](Self::ranking) but only over items with positive value.
    pub fn positive_ranking(&self) -> Vec<usize> {
        self.ranking().into_iter().filter(|&j| self.0[j].is_positive()).collect()
    }
}

fn check_unit_sum(values: &[Rational]) -> Option<Defect> {
    if let Some((item, value)) = values.iter().enumerate().find(|(_, v)| v.is_negative()) {
        return Some(Defect::NegativeEntry { item: item + 1, value: value.clone() });
    }
    let sum: Rational = values.iter().sum();
    if !sum.is_one() {
        return Some(Defect::SumNotOne { sum });
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<String>>,
}

/// Unchecked instance data, as read from a file or built by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInstance {
    pub n: usize,
    pub m: usize,
    pub valuations: Vec<Vec<Rational>>,
    pub labels: Option<Labels>,
}

/// `n` agents, `m` items, and the agents' true unit-sum valuations.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    m: usize,
    true_valuations: Vec<Valuation>,
    labels: Option<Labels>,
}

impl Instance {
    pub fn new(valuations: Vec<Valuation>) -> Result<Self, ModelError> {
        let raw = RawInstance {
            n: valuations.len(),
            m: valuations.first().map_or(0, |v| v.len()),
            valuations: valuations.into_iter().map(|v| v.0).collect(),
            labels: None,
        };
        validate_instance(raw).map_err(ModelError::InvalidInstance)
    }

    pub fn with_labels(mut self, labels: Labels) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn true_valuations(&self) -> &[Valuation] {
        &self.true_valuations
    }

    pub fn valuation(&self, agent: usize) -> &Valuation {
        &self.true_valuations[agent]
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            n: self.n,
            m: self.m,
            valuations: self.true_valuations.iter().map(|v| v.0.clone()).collect(),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Defect {
    /// `item` is 1-based.
    NegativeEntry { item: usize, value: Rational },
    SumNotOne { sum: Rational },
    LengthMismatch { expected: usize, found: usize },
    AgentCountMismatch { expected: usize, found: usize },
    NoAgents,
    NoItems,
    LabelCountMismatch { what: &'static str, expected: usize, found: usize },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::NegativeEntry { item, value } => {
                write!(f, "negative entry {} for item {item}", format_rational(value))
            }
            Defect::SumNotOne { sum } => write!(f, "values sum to {} instead of 1", format_rational(sum)),
            Defect::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} item values, found {found}")
            }
            Defect::AgentCountMismatch { expected, found } => {
                write!(f, "expected {expected} valuations, found {found}")
            }
            Defect::NoAgents => write!(f, "instance has no agents"),
            Defect::NoItems => write!(f, "instance has no items"),
            Defect::LabelCountMismatch { what, expected, found } => {
                write!(f, "expected {expected} {what} labels, found {found}")
            }
        }
    }
}

/// One defect, attributed to an agent (1-based) when it concerns a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub agent: Option<usize>,
    pub defect: Defect,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.agent {
            Some(a) => write!(f, "agent {a}: {}", self.defect),
            None => write!(f, "{}", self.defect),
        }
    }
}

/// Returns the instance iff every invariant holds, otherwise every violation found.
pub fn validate_instance(raw: RawInstance) -> Result<Instance, Vec<Violation>> {
    let mut violations = Vec::new();
    let mut global = |defect| violations.push(Violation { agent: None, defect });
    if raw.n == 0 {
        global(Defect::NoAgents);
    }
    if raw.m == 0 {
        global(Defect::NoItems);
    }
    if raw.valuations.len() != raw.n {
        global(Defect::AgentCountMismatch { expected: raw.n, found: raw.valuations.len() });
    }
    if let Some(labels) = &raw.labels {
        if let Some(a) = &labels.agents {
            if a.len() != raw.n {
                global(Defect::LabelCountMismatch { what: "agent", expected: raw.n, found: a.len() });
            }
        }
        if let Some(items) = &labels.items {
            if items.len() != raw.m {
                global(Defect::LabelCountMismatch { what: "item", expected: raw.m, found: items.len() });
            }
        }
    }

    for (i, row) in raw.valuations.iter().enumerate() {
        let agent = Some(i + 1);
        if row.len() != raw.m {
            violations.push(Violation {
                agent,
                defect: Defect::LengthMismatch { expected: raw.m, found: row.len() },
            });
        }
        for (j, v) in row.iter().enumerate() {
            if v.is_negative() {
                violations.push(Violation {
                    agent,
                    defect: Defect::NegativeEntry { item: j + 1, value: v.clone() },
                });
            }
        }
        let sum: Rational = row.iter().sum();
        if !sum.is_one() {
            violations.push(Violation { agent, defect: Defect::SumNotOne { sum } });
        }
    }

    if !violations.is_empty() {
        return Err(violations);
    }
    Ok(Instance {
        n: raw.n,
        m: raw.m,
        true_valuations: raw.valuations.into_iter().map(Valuation).collect(),
        labels: raw.labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio;

    fn row(values: &[(i64, i64)]) -> Vec<Rational> {
        values.iter().map(|&(p, q)| ratio(p, q)).collect()
    }

    #[test]
    fn example_one_table_is_valid() {
        let raw = RawInstance {
            n: 3,
            m: 3,
            valuations: vec![
                row(&[(3, 5), (3, 10), (1, 10)]),
                row(&[(1, 10), (7, 10), (1, 5)]),
                row(&[(1, 5), (1, 2), (3, 10)]),
            ],
            labels: None,
        };
        assert!(validate_instance(raw).is_ok());
    }

    #[test]
    fn single_agent_single_item_is_valid() {
        let raw = RawInstance { n: 1, m: 1, valuations: vec![row(&[(1, 1)])], labels: None };
        let inst = validate_instance(raw).unwrap();
        assert_eq!((inst.n(), inst.m()), (1, 1));
    }

    #[test]
    fn reports_bad_sum() {
        let raw = RawInstance { n: 1, m: 2, valuations: vec![row(&[(1, 2), (1, 3)])], labels: None };
        let errs = validate_instance(raw).unwrap_err();
        assert_eq!(errs, vec![Violation { agent: Some(1), defect: Defect::SumNotOne { sum: ratio(5, 6) } }]);
    }

    #[test]
    fn collects_every_violation() {
        let raw = RawInstance {
            n: 3,
            m: 2,
            valuations: vec![
                row(&[(3, 2), (-1, 2)]),
                row(&[(1, 1)]),
                row(&[(1, 2), (1, 2)]),
            ],
            labels: Some(Labels { agents: Some(vec!["A".into()]), items: None }),
        };
        let errs = validate_instance(raw).unwrap_err();
        assert!(errs.contains(&Violation {
            agent: Some(1),
            defect: Defect::NegativeEntry { item: 2, value: ratio(-1, 2) }
        }));
        assert!(errs.contains(&Violation {
            agent: Some(2),
            defect: Defect::LengthMismatch { expected: 2, found: 1 }
        }));
        assert!(errs.iter().any(|v| matches!(v.defect, Defect::LabelCountMismatch { .. })));
        assert_eq!(errs.len(), 3);
    }

    #[test]
    fn valuation_constructor_is_checked() {
        assert!(Valuation::new(row(&[(1, 2), (1, 2)])).is_ok());
        assert!(Valuation::new(row(&[(1, 2), (1, 3)])).is_err());
        let w = Valuation::from_weights(&row(&[(2, 1), (6, 1)])).unwrap();
        assert_eq!(w.values(), &row(&[(1, 4), (3, 4)])[..]);
        assert!(Valuation::from_weights(&row(&[(0, 1)])).is_err());
    }

    #[test]
    fn ranking_breaks_ties_by_index() {
        let v = Valuation::new(row(&[(1, 4), (1, 2), (1, 4), (0, 1)])).unwrap();
        assert_eq!(v.ranking(), vec![1, 0, 2, 3]);
        assert_eq!(v.positive_ranking(), vec![1, 0, 2]);
    }
}
