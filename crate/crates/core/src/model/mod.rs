//! Domain vocabulary: exact numbers, valuations, instances, strategies.
//!
//! Indices are 0-based inside the crate. Every external format (JSON files,
//! CLI text) is 1-based; the conversion happens in [`io`] only.

pub mod io;
mod rational;
mod strategy;
mod valuation;

pub use rational::{
    display_decimal, format_rational, int, parse_rational, ratio, serde_str, to_decimal, to_f64,
    Rational,
};
pub use strategy::{Strategy, ZeroPolicy};
pub use valuation::{validate_instance, Defect, Instance, Labels, RawInstance, Valuation, Violation};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("malformed rational {0:?}")]
    MalformedRational(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("invalid valuation: {0}")]
    InvalidValuation(Defect),
    #[error("invalid instance: {}", join_violations(.0))]
    InvalidInstance(Vec<Violation>),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid zero policy: {0}")]
    InvalidPolicy(String),
    #[error("malformed file: {0}")]
    Format(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
