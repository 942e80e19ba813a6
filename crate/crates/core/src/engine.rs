//! Event-driven simulation of simultaneous consumption.
//!
//! Each agent eats at total rate 1. Between depletion events the set of
//! remaining items is fixed, so every agent's rates are constant and the
//! process is integrated in closed form: the next event is the smallest
//! `remaining quantity / total rate` over remaining items. All items that hit
//! zero at that instant deplete together. Cardinal Probabilistic Serial is a
//! run over proportional reports; Probabilistic Serial is a run over
//! lexicographic orders.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{display_decimal, format_rational, ModelError, Rational, Strategy, Valuation, ZeroPolicy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("no remaining items")]
    EmptyRemaining,
    #[error("profile has {found} strategies for {expected} agents")]
    ProfileSize { expected: usize, found: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("lottery column for item {item} sums to {sum}")]
    BadLottery { item: usize, sum: String },
}

pub type RateMatrix = Vec<Vec<Rational>>;

/// Per-agent consumption rates for the given remaining set (`remaining[j]`
/// is true while item `j` is not yet fully consumed).
pub fn compute_rates(
    profile: &[Strategy],
    remaining: &[bool],
    policy: &ZeroPolicy,
) -> Result<RateMatrix, EngineError> {
    let m = remaining.len();
    if !remaining.iter().any(|&r| r) {
        return Err(EngineError::EmptyRemaining);
    }
    Ok(profile.iter().map(|s| agent_rates(s, remaining, policy, m)).collect())
}

fn agent_rates(strategy: &Strategy, remaining: &[bool], policy: &ZeroPolicy, m: usize) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); m];
    match strategy {
        Strategy::Proportional(report) => {
            let mass: Rational = (0..m).filter(|&j| remaining[j]).map(|j| report.get(j)).sum();
            if mass.is_positive() {
                for j in (0..m).filter(|&j| remaining[j]) {
                    row[j] = report.get(j) / &mass;
                }
                return row;
            }
        }
        Strategy::Lexicographic(order) => {
            if let Some(&j) = order.iter().find(|&&j| remaining[j]) {
                row[j] = Rational::one();
                return row;
            }
        }
    }
    apply_zero_policy(&mut row, remaining, policy);
    row
}

fn apply_zero_policy(row: &mut [Rational], remaining: &[bool], policy: &ZeroPolicy) {
    match policy {
        ZeroPolicy::UniformOverRemaining => {
            let count = remaining.iter().filter(|&&r| r).count() as i64;
            let share = Rational::new(BigInt::one(), BigInt::from(count));
            for (j, slot) in row.iter_mut().enumerate() {
                if remaining[j] {
                    *slot = share.clone();
                }
            }
        }
        ZeroPolicy::LowestIndexFirst => {
            let j = remaining.iter().position(|&r| r).expect("nonempty remaining set");
            row[j] = Rational::one();
        }
        ZeroPolicy::FixedOrder(order) => {
            let &j = order.iter().find(|&&j| remaining[j]).expect("fixed order covers every item");
            row[j] = Rational::one();
        }
    }
}

/// A maximal interval with a constant remaining set.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: Rational,
    pub end: Rational,
    pub rates: RateMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepletionEvent {
    pub time: Rational,
    pub item: usize,
}

/// The full consumption history of one run. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    n: usize,
    m: usize,
    segments: Vec<Segment>,
    depletion_events: Vec<DepletionEvent>,
    shares: RateMatrix,
    horizon: Rational,
}

/// Runs the consumption process for `n` agents and `m` items.
pub fn run(n: usize, m: usize, profile: &[Strategy], policy: &ZeroPolicy) -> Result<Trace, EngineError> {
    if profile.len() != n {
        return Err(EngineError::ProfileSize { expected: n, found: profile.len() });
    }
    if m == 0 {
        return Err(EngineError::EmptyRemaining);
    }
    for s in profile {
        s.check(m)?;
    }
    policy.check(m)?;

    let mut quantity = vec![Rational::one(); m];
    let mut remaining = vec![true; m];
    let mut shares = vec![vec![Rational::zero(); m]; n];
    let mut segments = Vec::new();
    let mut events = Vec::with_capacity(m);
    let mut now = Rational::zero();

    while remaining.iter().any(|&r| r) {
        let rates = compute_rates(profile, &remaining, policy)?;
        let totals: Vec<Rational> = (0..m).map(|j| rates.iter().map(|row| &row[j]).sum()).collect();

        // every row sums to one, so at least one remaining item has positive total rate
        let step = (0..m)
            .filter(|&j| remaining[j] && totals[j].is_positive())
            .map(|j| &quantity[j] / &totals[j])
            .min()
            .expect("some remaining item is being consumed");

        for (share_row, rate_row) in shares.iter_mut().zip(&rates) {
            for j in (0..m).filter(|&j| rate_row[j].is_positive()) {
                share_row[j] += &rate_row[j] * &step;
            }
        }
        let end = &now + &step;
        for j in 0..m {
            if remaining[j] && totals[j].is_positive() {
                quantity[j] -= &totals[j] * &step;
                if quantity[j].is_zero() {
                    remaining[j] = false;
                    events.push(DepletionEvent { time: end.clone(), item: j });
                }
            }
        }
        segments.push(Segment { start: now, end: end.clone(), rates });
        now = end;
    }

    let horizon = Rational::new(BigInt::from(m), BigInt::from(n));
    debug_assert_eq!(now, horizon);
    Ok(Trace { n, m, segments, depletion_events: events, shares, horizon })
}

impl Trace {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Ordered by time; simultaneous depletions are listed by item index.
    pub fn depletion_events(&self) -> &[DepletionEvent] {
        &self.depletion_events
    }

    /// `shares()[i][j]`: how much of item `j` agent `i` consumed.
    pub fn shares(&self) -> &RateMatrix {
        &self.shares
    }

    /// `m / n`, the instant every item is gone.
    pub fn horizon(&self) -> &Rational {
        &self.horizon
    }

    pub fn consumption_time(&self, item: usize) -> &Rational {
        &self
            .depletion_events
            .iter()
            .find(|e| e.item == item)
            .expect("every item depletes exactly once")
            .time
    }

    /// Consumption time of every item, indexed by item.
    pub fn consumption_times(&self) -> Vec<Rational> {
        let mut times = vec![Rational::zero(); self.m];
        for e in &self.depletion_events {
            times[e.item] = e.time.clone();
        }
        times
    }

    /// Remaining set at time `t`: items whose consumption time is after `t`.
    pub fn remaining_at(&self, t: &Rational) -> Vec<bool> {
        let mut rem = vec![true; self.m];
        for e in self.depletion_events.iter().filter(|e| &e.time <= t) {
            rem[e.item] = false;
        }
        rem
    }

    /// `payoff_i = sum_j shares[i][j] * v_i(j)` under the given true valuations.
    ///
    /// Panics if the valuations do not match the trace dimensions.
    pub fn expected_payoffs(&self, true_valuations: &[Valuation]) -> Vec<Rational> {
        assert_eq!(true_valuations.len(), self.n, "one valuation per agent");
        self.shares
            .iter()
            .zip(true_valuations)
            .map(|(row, v)| {
                assert_eq!(v.len(), self.m, "valuation length must equal item count");
                row.iter().zip(v.values()).map(|(g, x)| g * x).sum()
            })
            .collect()
    }

    pub fn lottery(&self) -> Lottery {
        Lottery { marginals: self.shares.clone() }
    }

    pub fn to_json(&self) -> TraceJson {
        TraceJson::from_trace(self)
    }
}

pub fn consumption_time(trace: &Trace, item: usize) -> Rational {
    trace.consumption_time(item).clone()
}

pub fn expected_payoffs(trace: &Trace, true_valuations: &[Valuation]) -> Vec<Rational> {
    trace.expected_payoffs(true_valuations)
}

/// Marginal assignment probabilities: item `j` goes to agent `i` with
/// probability `marginals[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lottery {
    marginals: RateMatrix,
}

impl Lottery {
    /// Checked: entries non-negative, every column sums to one.
    pub fn new(marginals: RateMatrix) -> Result<Self, EngineError> {
        let m = marginals.first().map_or(0, |r| r.len());
        for j in 0..m {
            let col: Rational = marginals.iter().map(|r| &r[j]).sum();
            if !col.is_one() || marginals.iter().any(|r| r[j].is_negative()) {
                return Err(EngineError::BadLottery { item: j + 1, sum: format_rational(&col) });
            }
        }
        Ok(Lottery { marginals })
    }

    pub fn marginals(&self) -> &RateMatrix {
        &self.marginals
    }
}

/// Draws an integral assignment `item -> agent`, each item independently by
/// its marginal column.
///
/// Stream: ChaCha8 seeded with `seed`; item `j` consumes the `j`-th `u64`,
/// read as the exact point `u / 2^64` and located in the column's cumulative
/// distribution.
pub fn sample_allocation(lottery: &Lottery, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale: BigInt = BigInt::one() << 64u32;
    let m = lottery.marginals.first().map_or(0, |r| r.len());
    (0..m)
        .map(|j| {
            let point = Rational::new(BigInt::from(rng.next_u64()), scale.clone());
            let mut cumulative = Rational::zero();
            for (i, row) in lottery.marginals.iter().enumerate() {
                cumulative += &row[j];
                if cumulative > point {
                    return i;
                }
            }
            unreachable!("column sums to one and the point is below one")
        })
        .collect()
}

/// Serialized trace: exact rational strings plus display-only decimals.
#[derive(Debug, Clone, Serialize)]
pub struct TraceJson {
    pub n: usize,
    pub m: usize,
    pub horizon: String,
    pub depletion_events: Vec<EventJson>,
    pub segments: Vec<SegmentJson>,
    pub shares: Vec<Vec<String>>,
    pub shares_decimal: Vec<Vec<String>>,
    pub decimal_note: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventJson {
    pub time: String,
    pub time_decimal: String,
    pub item: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentJson {
    pub start: String,
    pub end: String,
    pub rates: Vec<Vec<String>>,
}

impl TraceJson {
    fn from_trace(trace: &Trace) -> Self {
        let exact = |m: &RateMatrix| -> Vec<Vec<String>> {
            m.iter().map(|r| r.iter().map(format_rational).collect()).collect()
        };
        TraceJson {
            n: trace.n,
            m: trace.m,
            horizon: format_rational(&trace.horizon),
            depletion_events: trace
                .depletion_events
                .iter()
                .map(|e| EventJson {
                    time: format_rational(&e.time),
                    time_decimal: display_decimal(&e.time),
                    item: e.item + 1,
                })
                .collect(),
            segments: trace
                .segments
                .iter()
                .map(|s| SegmentJson {
                    start: format_rational(&s.start),
                    end: format_rational(&s.end),
                    rates: exact(&s.rates),
                })
                .collect(),
            shares: exact(&trace.shares),
            shares_decimal: trace.shares.iter().map(|r| r.iter().map(display_decimal).collect()).collect(),
            decimal_note: "decimal fields are approximate and for display only",
        }
    }
}
