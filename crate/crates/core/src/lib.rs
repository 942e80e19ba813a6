//! Exact simulation of eating allocation mechanisms.
//!
//! * [`model`]: rationals, valuations, instances, strategies and JSON files.
//! * [`engine`]: the event-driven eating loop producing a [`engine::Trace`].
//! * [`strategies`]: strategy constructors and finite deviation families.
//! * [`lottery`]: Random Priority variants and the welfare optimum.
//! * [`mechanism`]: the [`mechanism::Mechanism`] trait and its registry.
//! * [`equilibrium`]: best responses, family-relative certificates, ratios.
//! * [`instances`]: named constructions and random instances.

pub mod engine;
pub mod equilibrium;
pub mod instances;
pub mod lottery;
pub mod mechanism;
pub mod model;
pub mod strategies;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
    #[error(transparent)]
    Strategy(#[from] strategies::StrategyError),
    #[error("exact enumeration supports at most {max} agents, got {n}")]
    ExactTooLarge { n: usize, max: usize },
    #[error("sample count must be positive")]
    NoSamples,
    #[error("unknown mechanism {0:?}")]
    UnknownMechanism(String),
    #[error("search needs {required} engine runs but the budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("agent {agent} out of range for n = {n}")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("no strategy families given")]
    NoFamilies,
    #[error("generator error: {0}")]
    Generator(String),
}
