//! Non-eating mechanisms and the welfare benchmark.
//!
//! Random Priority draws one agent order; each agent in turn takes its
//! `floor(m/n)` favorite available items (the final agent also takes the
//! `m mod n` leftovers). Repeated Random Priority makes `m` independent
//! uniform draws; each drawn agent takes one favorite available item.
//! Preferences come from each report's ranking, ties to the lowest index.
//!
//! Sampling uses ChaCha8 seeded with the caller's seed; sample `s` runs on
//! stream `s`, so samples are independent of evaluation order and thread count.

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{to_f64, Instance, Rational, Strategy};
use crate::Error;

/// Largest agent count for exact Random Priority enumeration.
pub const EXACT_RP_MAX_AGENTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    /// Closed-form eating run.
    Exact,
    /// Average over every agent order.
    ExactEnumeration { orders: u64 },
    MonteCarlo { samples: u64, seed: u64 },
}

impl Method {
    pub fn tag(&self) -> String {
        match self {
            Method::Exact => "exact".into(),
            Method::ExactEnumeration { .. } => "exact-enumeration".into(),
            Method::MonteCarlo { samples, seed } => format!("monte-carlo(samples={samples},seed={seed})"),
        }
    }
}

/// Outcome of evaluating a mechanism on a profile.
///
/// Exact methods leave `standard_error` empty. Monte Carlo results report the
/// exact sample mean together with its standard error.
#[derive(Debug, Clone)]
pub struct MechanismResult {
    pub mechanism: String,
    pub welfare: Rational,
    pub payoffs: Vec<Rational>,
    pub method: Method,
    pub standard_error: Option<f64>,
    pub trace: Option<crate::engine::Trace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

/// Welfare of giving each item to an agent with the highest true value
/// (ties to the lowest agent index), and that assignment.
pub fn opt(instance: &Instance) -> (Rational, Vec<usize>) {
    let mut welfare = Rational::zero();
    let mut assignment = Vec::with_capacity(instance.m());
    for j in 0..instance.m() {
        let mut best = 0;
        for i in 1..instance.n() {
            if instance.valuation(i).get(j) > instance.valuation(best).get(j) {
                best = i;
            }
        }
        welfare += instance.valuation(best).get(j);
        assignment.push(best);
    }
    (welfare, assignment)
}

fn check_reports(instance: &Instance, reports: &[Strategy]) -> Result<Vec<Vec<usize>>, Error> {
    if reports.len() != instance.n() {
        return Err(crate::engine::EngineError::ProfileSize { expected: instance.n(), found: reports.len() }.into());
    }
    let m = instance.m();
    reports
        .iter()
        .map(|r| {
            r.check(m)?;
            Ok(r.ranking(m))
        })
        .collect()
}

/// Realized bundle values for one agent order.
fn serve_in_order(instance: &Instance, rankings: &[Vec<usize>], order: &[usize]) -> Vec<Rational> {
    let (n, m) = (instance.n(), instance.m());
    let quota = m / n;
    let mut available = vec![true; m];
    let mut values = vec![Rational::zero(); n];
    for (pos, &agent) in order.iter().enumerate() {
        let take = if pos + 1 == n { quota + m % n } else { quota };
        let truth = instance.valuation(agent);
        let picks: Vec<usize> = rankings[agent].iter().copied().filter(|&j| available[j]).take(take).collect();
        for j in picks {
            available[j] = false;
            values[agent] += truth.get(j);
        }
    }
    values
}

fn serve_repeated(instance: &Instance, rankings: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let (n, m) = (instance.n(), instance.m());
    let mut available = vec![true; m];
    let mut values = vec![Rational::zero(); n];
    for _ in 0..m {
        let agent = rng.random_range(0..n);
        let j = *rankings[agent].iter().find(|&&j| available[j]).expect("an item remains each round");
        available[j] = false;
        values[agent] += instance.valuation(agent).get(j);
    }
    values
}

fn sample_rng(seed: u64, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    rng
}

/// Averages per-sample payoff vectors; returns mean payoffs, mean welfare and
/// the standard error of the welfare mean.
fn summarize(samples: Vec<Vec<Rational>>) -> (Vec<Rational>, Rational, f64) {
    let count = samples.len();
    let n = samples.first().map_or(0, |s| s.len());
    let denom = Rational::from_integer(BigInt::from(count));
    let mut payoffs = vec![Rational::zero(); n];
    let mut welfare_sum = Rational::zero();
    let mut welfare_sq = Rational::zero();
    for s in &samples {
        let w: Rational = s.iter().sum();
        for (acc, v) in payoffs.iter_mut().zip(s) {
            *acc += v;
        }
        welfare_sq += &w * &w;
        welfare_sum += w;
    }
    let mean = &welfare_sum / &denom;
    for p in payoffs.iter_mut() {
        *p = &*p / &denom;
    }
    let se = if count > 1 {
        let var = (welfare_sq - &welfare_sum * &mean) / Rational::from_integer(BigInt::from(count - 1));
        (to_f64(&var).max(0.0) / count as f64).sqrt()
    } else {
        0.0
    };
    (payoffs, mean, se)
}

pub fn random_priority(instance: &Instance, reports: &[Strategy], mode: RpMode) -> Result<MechanismResult, Error> {
    let rankings = check_reports(instance, reports)?;
    let n = instance.n();
    match mode {
        RpMode::Exact => {
            if n > EXACT_RP_MAX_AGENTS {
                return Err(Error::ExactTooLarge { n, max: EXACT_RP_MAX_AGENTS });
            }
            let orders: Vec<Vec<usize>> = (0..n).permutations(n).collect();
            let count = orders.len() as u64;
            let per_order: Vec<Vec<Rational>> =
                orders.par_iter().map(|o| serve_in_order(instance, &rankings, o)).collect();
            let denom = Rational::from_integer(BigInt::from(count));
            let mut payoffs = vec![Rational::zero(); n];
            for s in &per_order {
                for (acc, v) in payoffs.iter_mut().zip(s) {
                    *acc += v;
                }
            }
            for p in payoffs.iter_mut() {
                *p = &*p / &denom;
            }
            Ok(MechanismResult {
                mechanism: "rp".into(),
                welfare: payoffs.iter().sum(),
                payoffs,
                method: Method::ExactEnumeration { orders: count },
                standard_error: None,
                trace: None,
            })
        }
        RpMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::NoSamples);
            }
            let per_sample: Vec<Vec<Rational>> = (0..samples)
                .into_par_iter()
                .map(|s| {
                    let mut order: Vec<usize> = (0..n).collect();
                    order.shuffle(&mut sample_rng(seed, s));
                    serve_in_order(instance, &rankings, &order)
                })
                .collect();
            let (payoffs, welfare, se) = summarize(per_sample);
            Ok(MechanismResult {
                mechanism: "rp".into(),
                welfare,
                payoffs,
                method: Method::MonteCarlo { samples, seed },
                standard_error: Some(se),
                trace: None,
            })
        }
    }
}

pub fn repeated_random_priority(
    instance: &Instance,
    reports: &[Strategy],
    samples: u64,
    seed: u64,
) -> Result<MechanismResult, Error> {
    let rankings = check_reports(instance, reports)?;
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let per_sample: Vec<Vec<Rational>> = (0..samples)
        .into_par_iter()
        .map(|s| serve_repeated(instance, &rankings, &mut sample_rng(seed, s)))
        .collect();
    let (payoffs, welfare, se) = summarize(per_sample);
    Ok(MechanismResult {
        mechanism: "rrp".into(),
        welfare,
        payoffs,
        method: Method::MonteCarlo { samples, seed },
        standard_error: Some(se),
        trace: None,
    })
}
