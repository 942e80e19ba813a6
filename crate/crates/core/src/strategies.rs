//! Constructors for the deviation families used in equilibrium analysis.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::{ModelError, Rational, Strategy, Valuation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("item {item} out of range 1..={m}")]
    ItemOutOfRange { item: usize, m: usize },
    #[error("item {0} appears more than once")]
    Duplicate(usize),
    #[error("empty item set")]
    Empty,
    #[error("epsilon must lie strictly between 0 and 1/2")]
    EpsilonOutOfRange,
    #[error("grid resolution must be positive")]
    ZeroResolution,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_items(items: &[usize], m: usize) -> Result<(), StrategyError> {
    let mut seen = vec![false; m];
    for &j in items {
        if j >= m {
            return Err(StrategyError::ItemOutOfRange { item: j + 1, m });
        }
        if seen[j] {
            return Err(StrategyError::Duplicate(j + 1));
        }
        seen[j] = true;
    }
    Ok(())
}

/// Report 1 on `item`, 0 elsewhere.
pub fn single_minded(item: usize, m: usize) -> Result<Strategy, StrategyError> {
    check_items(&[item], m)?;
    Ok(Strategy::Proportional(Valuation::point_mass(item, m)))
}

/// Proportional approximation of the sequential strategy over `sequence`.
///
/// `x_1` gets `1 - (eps + eps^2 + ... + eps^(k-1))` and `x_l` gets
/// `eps^(l-1)` for `l >= 2`, so the report sums to exactly one. Items off the
/// sequence get zero.
pub fn epsilon_strategy(sequence: &[usize], eps: &Rational, m: usize) -> Result<Strategy, StrategyError> {
    if sequence.is_empty() {
        return Err(StrategyError::Empty);
    }
    check_items(sequence, m)?;
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    if *eps <= Rational::zero() || *eps >= half {
        return Err(StrategyError::EpsilonOutOfRange);
    }
    let mut values = vec![Rational::zero(); m];
    let mut power = Rational::one();
    let mut tail = Rational::zero();
    for &item in &sequence[1..] {
        power *= eps;
        values[item] = power.clone();
        tail += &power;
    }
    values[sequence[0]] = Rational::one() - tail;
    Ok(Strategy::Proportional(Valuation::new(values)?))
}

/// Eat the items of `sequence` one at a time, in order.
pub fn sequential(sequence: &[usize], m: usize) -> Result<Strategy, StrategyError> {
    check_items(sequence, m)?;
    Ok(Strategy::Lexicographic(sequence.to_vec()))
}

/// Report `1/|set|` on each item of `set`.
pub fn uniform(set: &[usize], m: usize) -> Result<Strategy, StrategyError> {
    if set.is_empty() {
        return Err(StrategyError::Empty);
    }
    check_items(set, m)?;
    let share = Rational::new(BigInt::one(), BigInt::from(set.len()));
    let mut values = vec![Rational::zero(); m];
    for &j in set {
        values[j] = share.clone();
    }
    Ok(Strategy::Proportional(Valuation::new(values)?))
}

pub fn truthful(valuation: &Valuation) -> Strategy {
    Strategy::Proportional(valuation.clone())
}

/// Sequential bidding over every item, by decreasing true value.
pub fn sequential_by_value(valuation: &Valuation) -> Strategy {
    Strategy::Lexicographic(valuation.ranking())
}

/// The Probabilistic Serial reading of a strategy: proportional reports
/// become a lexicographic order over their positive items (decreasing
/// value, ties to the lowest index). Lexicographic strategies pass through.
pub fn ordinal(strategy: &Strategy) -> Strategy {
    match strategy {
        Strategy::Proportional(v) => Strategy::Lexicographic(v.positive_ranking()),
        lex => lex.clone(),
    }
}

/// A finite family of candidate deviations.
///
/// `SequentialGreedy` and `UniformGreedy` are resolved against the deviating
/// agent's true valuation: the prefixes of its positive items ranked by
/// decreasing value (ties to the lowest index), and the top-`k` sets for each
/// `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyFamily {
    Truthful,
    SingleMinded,
    Sequential(Vec<Vec<usize>>),
    SequentialGreedy,
    Uniform(Vec<Vec<usize>>),
    UniformGreedy,
    GridProportional(u32),
}

impl StrategyFamily {
    /// Position in the canonical enumeration order.
    fn rank(&self) -> u8 {
        match self {
            StrategyFamily::Truthful => 0,
            StrategyFamily::SingleMinded => 1,
            StrategyFamily::Sequential(_) | StrategyFamily::SequentialGreedy => 2,
            StrategyFamily::Uniform(_) | StrategyFamily::UniformGreedy => 3,
            StrategyFamily::GridProportional(_) => 4,
        }
    }

    /// Number of candidates, computed without enumerating them.
    pub fn size(&self, truth: &Valuation) -> u128 {
        let m = truth.len();
        let positive = truth.positive_ranking().len() as u128;
        match self {
            StrategyFamily::Truthful => 1,
            StrategyFamily::SingleMinded => m as u128,
            StrategyFamily::Sequential(orders) => orders.len() as u128,
            StrategyFamily::Uniform(sets) => sets.len() as u128,
            StrategyFamily::SequentialGreedy | StrategyFamily::UniformGreedy => positive,
            StrategyFamily::GridProportional(d) => binomial(*d as u128 + m as u128 - 1, m as u128 - 1),
        }
    }

    /// Candidates of this family in canonical order.
    pub fn expand(&self, truth: &Valuation) -> Result<Vec<Strategy>, StrategyError> {
        let m = truth.len();
        match self {
            StrategyFamily::Truthful => Ok(vec![truthful(truth)]),
            StrategyFamily::SingleMinded => (0..m).map(|j| single_minded(j, m)).collect(),
            StrategyFamily::Sequential(orders) => {
                let mut orders = orders.clone();
                orders.sort();
                orders.iter().map(|x| sequential(x, m)).collect()
            }
            StrategyFamily::SequentialGreedy => {
                let order = truth.positive_ranking();
                let mut prefixes: Vec<Vec<usize>> = (1..=order.len()).map(|k| order[..k].to_vec()).collect();
                prefixes.sort();
                prefixes.iter().map(|x| sequential(x, m)).collect()
            }
            StrategyFamily::Uniform(sets) => {
                let mut sets: Vec<Vec<usize>> = sets
                    .iter()
                    .map(|s| {
                        let mut s = s.clone();
                        s.sort_unstable();
                        s
                    })
                    .collect();
                sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
                sets.iter().map(|x| uniform(x, m)).collect()
            }
            StrategyFamily::UniformGreedy => {
                let order = truth.positive_ranking();
                let mut sets: Vec<Vec<usize>> = (1..=order.len())
                    .map(|k| {
                        let mut s = order[..k].to_vec();
                        s.sort_unstable();
                        s
                    })
                    .collect();
                sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
                sets.iter().map(|x| uniform(x, m)).collect()
            }
            StrategyFamily::GridProportional(d) => grid_reports(*d, m),
        }
    }

    /// Parses a comma-separated family list:
    /// `truthful`, `single-minded`, `sequential-greedy`, `uniform-greedy`,
    /// `grid:<d>`, `sequential:<a>-<b>-...` and `uniform:<a>-<b>-...`
    /// (1-based items).
    pub fn parse_list(text: &str) -> Result<Vec<StrategyFamily>, String> {
        let mut out: Vec<StrategyFamily> = Vec::new();
        let mut explicit_seq = Vec::new();
        let mut explicit_uni = Vec::new();
        for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let items = |body: &str| -> Result<Vec<usize>, String> {
                body.split('-')
                    .map(|s| match s.parse::<usize>() {
                        Ok(j) if j >= 1 => Ok(j - 1),
                        _ => Err(format!("bad item {s:?} in family {token:?}")),
                    })
                    .collect()
            };
            match token {
                "truthful" => out.push(StrategyFamily::Truthful),
                "single-minded" => out.push(StrategyFamily::SingleMinded),
                "sequential-greedy" => out.push(StrategyFamily::SequentialGreedy),
                "uniform-greedy" => out.push(StrategyFamily::UniformGreedy),
                t if t.starts_with("grid:") => {
                    let d: u32 = t[5..].parse().map_err(|_| format!("bad grid resolution in {t:?}"))?;
                    if d == 0 {
                        return Err("grid resolution must be positive".into());
                    }
                    out.push(StrategyFamily::GridProportional(d));
                }
                t if t.starts_with("sequential:") => explicit_seq.push(items(&t[11..])?),
                t if t.starts_with("uniform:") => explicit_uni.push(items(&t[8..])?),
                t => return Err(format!("unknown strategy family {t:?}")),
            }
        }
        if !explicit_seq.is_empty() {
            out.push(StrategyFamily::Sequential(explicit_seq));
        }
        if !explicit_uni.is_empty() {
            out.push(StrategyFamily::Uniform(explicit_uni));
        }
        if out.is_empty() {
            return Err("no strategy families given".into());
        }
        Ok(out)
    }
}

impl fmt::Display for StrategyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |sets: &[Vec<usize>]| -> String {
            sets.iter()
                .map(|s| s.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join("-"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            StrategyFamily::Truthful => write!(f, "truthful"),
            StrategyFamily::SingleMinded => write!(f, "single-minded"),
            StrategyFamily::Sequential(orders) => write!(f, "sequential[{}]", list(orders)),
            StrategyFamily::SequentialGreedy => write!(f, "sequential-greedy"),
            StrategyFamily::Uniform(sets) => write!(f, "uniform[{}]", list(sets)),
            StrategyFamily::UniformGreedy => write!(f, "uniform-greedy"),
            StrategyFamily::GridProportional(d) => write!(f, "grid:{d}"),
        }
    }
}

/// Expands several families into one candidate list in canonical order
/// (truthful, single-minded, sequential, uniform, grid), dropping repeats.
pub fn expand_families(families: &[StrategyFamily], truth: &Valuation) -> Result<Vec<Strategy>, StrategyError> {
    let mut ordered: Vec<&StrategyFamily> = families.iter().collect();
    ordered.sort_by_key(|f| f.rank());
    let mut out: Vec<Strategy> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for family in ordered {
        for s in family.expand(truth)? {
            if seen.insert(s.clone()) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

pub fn families_size(families: &[StrategyFamily], truth: &Valuation) -> u128 {
    families.iter().map(|f| f.size(truth)).sum()
}

/// Default grid resolution for exhaustive search: 12 for two items, 6 for three.
pub fn default_grid_resolution(m: usize) -> Option<u32> {
    match m {
        1 | 2 => Some(12),
        3 => Some(6),
        _ => None,
    }
}

/// Every unit-sum report whose entries are multiples of `1/d`, in
/// lexicographic order of the numerators.
pub fn grid_reports(d: u32, m: usize) -> Result<Vec<Strategy>, StrategyError> {
    if d == 0 {
        return Err(StrategyError::ZeroResolution);
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; m];
    fill_grid(d, 0, &mut current, &mut out);
    let den = BigInt::from(d);
    out.into_iter()
        .map(|nums| {
            let values = nums.iter().map(|&k| Rational::new(BigInt::from(k), den.clone())).collect();
            Ok(Strategy::Proportional(Valuation::new(values)?))
        })
        .collect()
}

fn fill_grid(left: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = left;
        out.push(current.clone());
        return;
    }
    for k in 0..=left {
        current[pos] = k;
        fill_grid(left - k, pos + 1, current, out);
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}
