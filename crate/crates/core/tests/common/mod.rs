#![allow(dead_code)]

use alloc_core::instances::{random_instance, random_profile};
use alloc_core::model::{Instance, Rational, Strategy, ZeroPolicy};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WEIGHT_CAP: u64 = 6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One fuzz draw: an instance with `1..=max_n` agents and `1..=max_m` items
/// and a mixed proportional/lexicographic profile.
pub fn draw(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> (Instance, Vec<Strategy>) {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let instance = random_instance(rng, n, m, WEIGHT_CAP);
    let profile = random_profile(rng, n, m, WEIGHT_CAP);
    (instance, profile)
}

pub fn both_policies() -> [ZeroPolicy; 2] {
    [ZeroPolicy::UniformOverRemaining, ZeroPolicy::LowestIndexFirst]
}

pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn z(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Rounds to two decimals, half away from zero, as hundredths.
pub fn hundredths(x: &Rational) -> i64 {
    let scaled = x * z(100);
    let floor = scaled.floor();
    let frac = &scaled - &floor;
    let mut out = floor.to_integer();
    if frac >= q(1, 2) {
        out += 1;
    }
    out.try_into().unwrap()
}
