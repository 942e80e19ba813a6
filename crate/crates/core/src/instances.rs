//! Named instance constructions and a seeded random generator.
//!
//! Parameters arrive as strings (`"1/4096"`, `"8"`) keyed by name so that the
//! command line and config files can pass them through untouched. Every
//! generator validates its domain and returns a unit-sum instance; some also
//! attach the profile the construction is about.

use std::collections::BTreeMap;

use num_integer::Roots;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine;
use crate::model::{int, parse_rational, ratio, Instance, Labels, Rational, Strategy, Valuation, ZeroPolicy};
use crate::strategies::truthful;
use crate::Error;

pub const GENERATORS: [&str; 11] = [
    "example1",
    "example2",
    "sqrt-n-lb",
    "log-m-lb",
    "stability-lb",
    "rp-lb",
    "ps-beats-cps",
    "cps-beats-ps",
    "tightness",
    "counterexample-safety",
    "random",
];

#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(name: &str) -> Self {
        GeneratorSpec { name: name.to_string(), ..Default::default() }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn integer(&self, key: &str, default: Option<u64>) -> Result<u64, Error> {
        match self.params.get(key) {
            Some(text) => text
                .trim()
                .parse()
                .map_err(|_| domain(&self.name, format!("{key} must be a non-negative integer, got {text:?}"))),
            None => default.ok_or_else(|| domain(&self.name, format!("missing parameter {key}"))),
        }
    }

    fn rational(&self, key: &str, default: Rational) -> Result<Rational, Error> {
        match self.params.get(key) {
            Some(text) => parse_rational(text).map_err(|e| domain(&self.name, format!("{key}: {e}"))),
            None => Ok(default),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), Error> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(domain(&self.name, format!("unknown parameter {k}"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    pub bad_profile: Option<Vec<Strategy>>,
}

fn domain(name: &str, message: String) -> Error {
    Error::Generator(format!("{name}: {message}"))
}

fn row(values: Vec<Rational>) -> Result<Valuation, Error> {
    Ok(Valuation::new(values)?)
}

fn truthful_profile(instance: &Instance) -> Vec<Strategy> {
    instance.true_valuations().iter().map(truthful).collect()
}

fn square_root(name: &str, n: u64) -> Result<u64, Error> {
    let r = n.sqrt();
    if r * r != n || r < 2 {
        return Err(domain(name, format!("n must be a perfect square >= 4, got {n}")));
    }
    Ok(r)
}

fn check_epsilon(name: &str, eps: &Rational, upper: Rational) -> Result<(), Error> {
    if !(eps > &Rational::zero() && eps < &upper) {
        return Err(domain(name, format!("eps must lie in (0, {upper}), got {eps}")));
    }
    Ok(())
}

/// Dispatches on `spec.name`.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated, Error> {
    match spec.name.as_str() {
        "example1" => {
            spec.check_keys(&[])?;
            Ok(with_truthful(example1()))
        }
        "example2" => {
            spec.check_keys(&[])?;
            Ok(with_truthful(example2()))
        }
        "sqrt-n-lb" => sqrt_n_lb(spec),
        "log-m-lb" => log_m_lb(spec),
        "stability-lb" => stability_lb(spec),
        "rp-lb" => rp_lb(spec),
        "ps-beats-cps" => ps_beats_cps(spec),
        "cps-beats-ps" => cps_beats_ps(spec),
        "tightness" => tightness(spec),
        "counterexample-safety" => counterexample_safety(spec),
        "random" => random(spec),
        other => Err(Error::Generator(format!(
            "unknown generator {other:?}; expected one of {}",
            GENERATORS.join(", ")
        ))),
    }
}

fn with_truthful(instance: Instance) -> Generated {
    let bad_profile = Some(truthful_profile(&instance));
    Generated { instance, bad_profile }
}

fn agent_labels(names: &[&str]) -> Labels {
    Labels { agents: Some(names.iter().map(|s| s.to_string()).collect()), items: None }
}

/// Three agents, three items; A = (6, 3, 1)/10, B = (1, 7, 2)/10, C = (2, 5, 3)/10.
pub fn example1() -> Instance {
    let r = |a, b, c| Valuation::new(vec![ratio(a, 10), ratio(b, 10), ratio(c, 10)]).unwrap();
    Instance::new(vec![r(6, 3, 1), r(1, 7, 2), r(2, 5, 3)])
        .unwrap()
        .with_labels(agent_labels(&["A", "B", "C"]))
}

/// A = (2/3, 1/3), B = (1/3, 2/3).
pub fn example2() -> Instance {
    Instance::new(vec![
        Valuation::new(vec![ratio(2, 3), ratio(1, 3)]).unwrap(),
        Valuation::new(vec![ratio(1, 3), ratio(2, 3)]).unwrap(),
    ])
    .unwrap()
    .with_labels(agent_labels(&["A", "B"]))
}

/// `n` agents and items, `n` a square. Agent `i` lies in block `i / sqrt(n)`
/// and the reported valuation favours the item with that block's index:
/// `1/n + eps` there, `1/n - eps/(n-1)` elsewhere. The attached profile is
/// that report for everyone. The true valuations keep the report except for
/// one designated agent per block, the one with the smallest share of the
/// block's item under the report, whose truth is single-minded on that item.
fn sqrt_n_lb(spec: &GeneratorSpec) -> Result<Generated, Error> {
    spec.check_keys(&["n", "eps"])?;
    let n = spec.integer("n", Some(16))?;
    let r = square_root(&spec.name, n)?;
    let nn = n as i64;
    let eps = spec.rational("eps", ratio(1, nn * nn * nn))?;
    check_epsilon(&spec.name, &eps, ratio(1, nn))?;
    let (n, r) = (n as usize, r as usize);
    let high = ratio(1, nn) + &eps;
    let low = ratio(1, nn) - &eps / int(nn - 1);
    let reports: Vec<Valuation> = (0..n)
        .map(|i| row((0..n).map(|j| if j == i / r { high.clone() } else { low.clone() }).collect()))
        .collect::<Result<_, _>>()?;
    let profile: Vec<Strategy> = reports.iter().cloned().map(Strategy::Proportional).collect();
    let trace = engine::run(n, n, &profile, &ZeroPolicy::default())?;
    let shares = trace.shares();
    let mut truth = reports;
    for block in 0..r {
        let members = block * r..(block + 1) * r;
        let designated = members.min_by(|&a, &b| shares[a][block].cmp(&shares[b][block]).then(a.cmp(&b))).unwrap();
        truth[designated] = Valuation::point_mass(block, n);
    }
    Ok(Generated { instance: Instance::new(truth)?, bad_profile: Some(profile) })
}

/// `k` agents single-minded on item 1, then for `z = 1..=q` one agent valuing
/// items `2^z ..= 2^(z+1) - 1` (1-based) at `1/2^z` each. `m = 2^(q+1) - 1`.
fn log_m_lb(spec: &GeneratorSpec) -> Result<Generated, Error> {
    spec.check_keys(&["k", "q"])?;
    let k = spec.integer("k", Some(8))? as usize;
    let q = spec.integer("q", Some(4))? as u32;
    if k < 1 || q < 1 {
        return Err(domain(&spec.name, "k and q must be at least 1".into()));
    }
    if q > 16 {
        return Err(domain(&spec.name, format!("q = {q} gives too many items")));
    }
    let m = (1usize << (q + 1)) - 1;
    let mut rows = vec![Valuation::point_mass(0, m); k];
    for z in 1..=q {
        let (lo, hi) = ((1usize << z) - 1, (1usize << (z + 1)) - 1);
        let value = ratio(1, 1i64 << z);
        rows.push(row((0..m).map(|j| if (lo..hi).contains(&j) { value.clone() } else { Rational::zero() }).collect())?);
    }
    Ok(with_truthful(Instance::new(rows)?))
}

/// `n` agents and items, `n` a square with root `r`. Agent `i <= r` values
/// only item `i`; every later agent values items `1..=r` at `1/r` each.
fn stability_lb(spec: &GeneratorSpec) -> Result<Generated, Error> {
    spec.check_keys(&["n"])?;
    let n = spec.integer("n", Some(16))?;
    let r = square_root(&spec.name, n)? as usize;
    let n = n as usize;
    let share = ratio(1, r as i64);
    let rows = (0..n)
        .map(|i| {
            if i < r {
                Ok(Valuation::point_mass(i, n))
            } else {
                row((0..n).map(|j| if j < r { share.clone() } else { Rational::zero() }).collect())
            }
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Generated { instance: Instance::new(rows)?, bad_profile: None })
}

/// `n` agents, `m = n^2` items. Agent `i` values item `i` at `1 - eps` and the
/// other items among the first `n` at `eps/(n-1)`; the rest are worthless.
fn rp_lb(spec: &GeneratorSpec) -> Result<Generated, Error> {
    spec.check_keys(&["n", "eps"])?;
    let n = spec.integer("n", Some(4))?;
    if !(2..=64).contains(&n) {
        return Err(domain(&spec.name, format!("n must lie in 2..=64, got {n}")));
    }
    let nn = n as i64;
    let eps = spec.rational("eps", ratio(1, 100))?;
    check_epsilon(&spec.name, &eps, Rational::one())?;
    let (n, m) = (n as usize, (n * n) as usize);
    let side = &eps / int(nn - 1);
    let rows = (0..n)
        .map(|i| {
            row((0..m)
                .map(|j| match j {
                    _ if j == i => Rational::one() - &eps,
                    _ if j < n => side.clone(),
                    _ => Rational::zero(),
                })
                .collect())
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(with_truthful(Instance::new(rows)?))
}

/// `m = n`, `n` a square. Agent `i` values item `i` at `1/sqrt(n)` and each
/// other item at `(1 - 1/sqrt(n))/(n-1)`.
fn ps_beats_cps(spec: &GeneratorSpec) -> Result<Generated, Error> {
    spec.check_keys(&["n"])?;
    let n = spec.integer("n", Some(16))?;
    let r = square_root(&spec.name, n)? as i64;
    let n = n as usize;
    let own = ratio(1, r);
    let other = (Rational::one() - &own) / int(n as i64 - 1);
    let rows = (0..n)
        .map(|i| row((0..n).map(|j| if i == j { own.clone() } else { other.clone() }).collect()))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(with_truthful(Instance::new(rows)?))
}

/// `m = n`, `n` a square with root `r`. Agents `1..=r` are single-minded on
/// their own index; the others value items `1..=r` at `1/n + eps` and the
/// rest at `1/n - eps/(r-1)`.
fn cps_beats_ps(spec: &GeneratorSpec) -> Result<Generated, Error> {
    spec.check_keys(&["n", "eps"])?;
    let n = spec.integer("n", Some(16))?;
    let r = square_root(&spec.name, n)? as usize;
    let nn = n as i64;
    let eps = spec.rational("eps", ratio(1, nn * nn))?;
    // keeps the off-block value positive
    check_epsilon(&spec.name, &eps, ratio(r as i64 - 1, nn))?;
    let n = n as usize;
    let high = ratio(1, nn) + &eps;
    let low = ratio(1, nn) - &eps / int(r as i64 - 1);
    let rows = (0..n)
        .map(|i| {
            if i < r {
                Ok(Valuation::point_mass(i, n))
            } else {
                row((0..n).map(|j| if j < r { high.clone() } else { low.clone() }).collect())
            }
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(with_truthful(Instance::new(rows)?))
}

/// `k = ceil((2^x - 1)/x^2)`.
pub fn tightness_k(x: u32) -> u64 {
    let top = (1u64 << x) - 1;
    let bottom = u64::from(x * x);
    top.div_ceil(bottom)
}

/// `sum_{z=0}^{x-1} k * (1/2^z) * (2^(z+1) k / n)` with `n = (x k)^2`.
pub fn tightness_bound(x: u32) -> Rational {
    assert!((2..=62).contains(&x), "x must lie in 2..=62");
    let k = Rational::from_integer(tightness_k(x).into());
    let n = (int(x as i64) * &k).pow(2);
    (0..x)
        .map(|z| {
            let size = Rational::from_integer(num_bigint::BigInt::from(1u64) << z);
            &k / &size * (Rational::from_integer(2.into()) * &size * &k / &n)
        })
        .sum()
}

/// `x` groups of `k = ceil((2^x - 1)/x^2)` agents; each agent of group `z`
/// owns `2^z` private items valued `1/2^z`. `m = (2^x - 1) k`.
fn tightness(spec: &GeneratorSpec) -> Result<Generated, Error> {
    spec.check_keys(&["x"])?;
    let x = spec.integer("x", Some(3))?;
    if !(2..=8).contains(&x) {
        return Err(domain(&spec.name, format!("x must lie in 2..=8, got {x}")));
    }
    let x = x as u32;
    let k = tightness_k(x) as usize;
    let m = ((1usize << x) - 1) * k;
    let mut rows = Vec::with_capacity(x as usize * k);
    let mut next = 0;
    for z in 0..x {
        let size = 1usize << z;
        let value = ratio(1, size as i64);
        for _ in 0..k {
            let owned = next..next + size;
            rows.push(row((0..m).map(|j| if owned.contains(&j) { value.clone() } else { Rational::zero() }).collect())?);
            next += size;
        }
    }
    Ok(Generated { instance: Instance::new(rows)?, bad_profile: None })
}

/// `m = n`. Agent 1 values item 1 at `1 - (n-1) eps` and every other item at
/// `eps`; everyone else is single-minded on item 1.
fn counterexample_safety(spec: &GeneratorSpec) -> Result<Generated, Error> {
    spec.check_keys(&["n", "eps"])?;
    let n = spec.integer("n", Some(4))?;
    if !(2..=64).contains(&n) {
        return Err(domain(&spec.name, format!("n must lie in 2..=64, got {n}")));
    }
    let nn = n as i64;
    let eps = spec.rational("eps", ratio(1, 100))?;
    check_epsilon(&spec.name, &eps, ratio(1, nn))?;
    let n = n as usize;
    let mut first = vec![eps.clone(); n];
    first[0] = Rational::one() - &eps * int(nn - 1);
    let mut rows = vec![row(first)?];
    rows.extend((1..n).map(|_| Valuation::point_mass(0, n)));
    Ok(with_truthful(Instance::new(rows)?))
}

/// Integer weights drawn uniformly from `0..=w`, normalized exactly. A row
/// of all zeros is redrawn.
fn random(spec: &GeneratorSpec) -> Result<Generated, Error> {
    spec.check_keys(&["n", "m", "w"])?;
    let n = spec.integer("n", Some(4))? as usize;
    let m = spec.integer("m", Some(4))? as usize;
    let w = spec.integer("w", Some(10))?;
    if n == 0 || m == 0 || w == 0 {
        return Err(domain(&spec.name, "n, m and w must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = (0..n).map(|_| random_valuation(&mut rng, m, w)).collect();
    Ok(Generated { instance: Instance::new(rows)?, bad_profile: None })
}

/// One valuation with exact integer-weight normalization.
pub fn random_valuation<R: Rng>(rng: &mut R, m: usize, w: u64) -> Valuation {
    loop {
        let weights: Vec<Rational> = (0..m).map(|_| int(rng.random_range(0..=w) as i64)).collect();
        if weights.iter().any(|x| !x.is_zero()) {
            return Valuation::from_weights(&weights).unwrap();
        }
    }
}

/// Proportional with probability one half, otherwise a lexicographic order
/// over a random nonempty subset of the items.
pub fn random_strategy<R: Rng>(rng: &mut R, m: usize, w: u64) -> Strategy {
    if rng.random_bool(0.5) {
        Strategy::Proportional(random_valuation(rng, m, w))
    } else {
        let mut items: Vec<usize> = (0..m).collect();
        items.shuffle(rng);
        items.truncate(rng.random_range(1..=m));
        Strategy::Lexicographic(items)
    }
}

pub fn random_profile<R: Rng>(rng: &mut R, n: usize, m: usize, w: u64) -> Vec<Strategy> {
    (0..n).map(|_| random_strategy(rng, m, w)).collect()
}

pub fn random_instance<R: Rng>(rng: &mut R, n: usize, m: usize, w: u64) -> Instance {
    Instance::new((0..n).map(|_| random_valuation(rng, m, w)).collect()).unwrap()
}
