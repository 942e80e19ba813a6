//! Allocation mechanisms behind one trait, looked up by name at runtime.

use crate::engine;
use crate::lottery::{self, MechanismResult, Method, RpMode};
use crate::model::{Instance, Strategy, ZeroPolicy};
use crate::strategies;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub samples: u64,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { samples: 10_000, seed: 0 }
    }
}

/// Knobs shared by every mechanism. Eating mechanisms read `policy`;
/// lottery mechanisms read `sampling` (`None` means exact where supported).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    pub policy: ZeroPolicy,
    pub sampling: Option<Sampling>,
}

pub trait Mechanism: Send + Sync {
    /// Registry key, e.g. `"cps"`.
    fn name(&self) -> &'static str;

    fn summary(&self) -> &'static str;

    /// Whether results carry exact payoffs under these settings.
    fn is_exact(&self, settings: &Settings) -> bool;

    /// Expected payoffs under the instance's true valuations when agents play `profile`.
    fn evaluate(&self, instance: &Instance, profile: &[Strategy], settings: &Settings) -> Result<MechanismResult, Error>;
}

fn eating_result(name: &str, instance: &Instance, trace: engine::Trace) -> MechanismResult {
    let payoffs = trace.expected_payoffs(instance.true_valuations());
    MechanismResult {
        mechanism: name.to_string(),
        welfare: payoffs.iter().sum(),
        payoffs,
        method: Method::Exact,
        standard_error: None,
        trace: Some(trace),
    }
}

/// Cardinal Probabilistic Serial: proportional eating on the reports as given.
pub struct CardinalProbabilisticSerial;

impl Mechanism for CardinalProbabilisticSerial {
    fn name(&self) -> &'static str {
        "cps"
    }

    fn summary(&self) -> &'static str {
        "cardinal probabilistic serial: eat remaining items in proportion to reported value"
    }

    fn is_exact(&self, _: &Settings) -> bool {
        true
    }

    fn evaluate(&self, instance: &Instance, profile: &[Strategy], settings: &Settings) -> Result<MechanismResult, Error> {
        let trace = engine::run(instance.n(), instance.m(), profile, &settings.policy)?;
        Ok(eating_result(self.name(), instance, trace))
    }
}

/// Probabilistic Serial: every agent eats its favorite remaining item.
/// Proportional reports are read ordinally (see [`strategies::ordinal`]).
pub struct ProbabilisticSerial;

impl Mechanism for ProbabilisticSerial {
    fn name(&self) -> &'static str {
        "ps"
    }

    fn summary(&self) -> &'static str {
        "probabilistic serial: eat the favorite remaining item at full rate"
    }

    fn is_exact(&self, _: &Settings) -> bool {
        true
    }

    fn evaluate(&self, instance: &Instance, profile: &[Strategy], settings: &Settings) -> Result<MechanismResult, Error> {
        let ordinal: Vec<Strategy> = profile.iter().map(strategies::ordinal).collect();
        let trace = engine::run(instance.n(), instance.m(), &ordinal, &settings.policy)?;
        Ok(eating_result(self.name(), instance, trace))
    }
}

pub struct RandomPriority;

impl Mechanism for RandomPriority {
    fn name(&self) -> &'static str {
        "rp"
    }

    fn summary(&self) -> &'static str {
        "random priority: one random order, each agent takes floor(m/n) favorites"
    }

    fn is_exact(&self, settings: &Settings) -> bool {
        settings.sampling.is_none()
    }

    fn evaluate(&self, instance: &Instance, profile: &[Strategy], settings: &Settings) -> Result<MechanismResult, Error> {
        let mode = match settings.sampling {
            None => RpMode::Exact,
            Some(Sampling { samples, seed }) => RpMode::MonteCarlo { samples, seed },
        };
        lottery::random_priority(instance, profile, mode)
    }
}

pub struct RepeatedRandomPriority;

impl Mechanism for RepeatedRandomPriority {
    fn name(&self) -> &'static str {
        "rrp"
    }

    fn summary(&self) -> &'static str {
        "repeated random priority: m uniform draws, each takes one favorite"
    }

    fn is_exact(&self, _: &Settings) -> bool {
        false
    }

    fn evaluate(&self, instance: &Instance, profile: &[Strategy], settings: &Settings) -> Result<MechanismResult, Error> {
        let Sampling { samples, seed } = settings.sampling.unwrap_or_default();
        lottery::repeated_random_priority(instance, profile, samples, seed)
    }
}

/// Name-keyed collection of mechanisms, in registration order.
pub struct MechanismRegistry {
    entries: Vec<Box<dyn Mechanism>>,
}

impl MechanismRegistry {
    pub fn empty() -> Self {
        MechanismRegistry { entries: Vec::new() }
    }

    /// `cps`, `ps`, `rp`, `rrp`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(CardinalProbabilisticSerial));
        r.register(Box::new(ProbabilisticSerial));
        r.register(Box::new(RandomPriority));
        r.register(Box::new(RepeatedRandomPriority));
        r
    }

    /// Adds a mechanism, replacing any existing one with the same name.
    pub fn register(&mut self, mechanism: Box<dyn Mechanism>) {
        self.entries.retain(|m| m.name() != mechanism.name());
        self.entries.push(mechanism);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Mechanism, Error> {
        self.entries
            .iter()
            .find(|m| m.name() == name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownMechanism(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|m| m.name()).collect()
    }
}

impl Default for MechanismRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
