mod common;

use alloc_core::engine::{self, sample_allocation, Trace};
use alloc_core::instances::{example1, random_instance};
use alloc_core::lottery::{random_priority, RpMode};
use alloc_core::mechanism::{MechanismRegistry, Settings};
use alloc_core::model::{to_f64, Instance, Rational, Strategy, Valuation, ZeroPolicy};
use alloc_core::strategies::{single_minded, truthful};
use common::{both_policies, draw, q, rng, z, WEIGHT_CAP};
use num_traits::{One, Zero};
use rand::Rng;

fn run(instance: &Instance, profile: &[Strategy], policy: &ZeroPolicy) -> Trace {
    engine::run(instance.n(), instance.m(), profile, policy).unwrap()
}

fn full_support_profile(r: &mut rand_chacha::ChaCha8Rng, n: usize, m: usize) -> Vec<Strategy> {
    (0..n)
        .map(|_| {
            let w: Vec<Rational> = (0..m).map(|_| z(r.random_range(1..=WEIGHT_CAP as i64))).collect();
            Strategy::Proportional(Valuation::from_weights(&w).unwrap())
        })
        .collect()
}

#[test]
fn segments_partition_the_horizon_and_rows_sum_to_one() {
    for seed in 0..300 {
        let mut r = rng(seed);
        let (inst, profile) = draw(&mut r, 6, 6);
        for policy in both_policies() {
            let trace = run(&inst, &profile, &policy);
            let segs = trace.segments();
            assert!(segs[0].start.is_zero());
            assert_eq!(segs.last().unwrap().end, q(inst.m() as i64, inst.n() as i64));
            for w in segs.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
            for s in segs {
                assert!(s.start < s.end, "seed {seed}: empty segment");
                for row in &s.rates {
                    assert!(row.iter().sum::<Rational>().is_one(), "seed {seed}");
                    assert!(row.iter().all(|x| *x >= Rational::zero()));
                }
            }
            let events = trace.depletion_events();
            assert_eq!(events.len(), inst.m());
            let mut seen = vec![false; inst.m()];
            for e in events {
                assert!(!seen[e.item]);
                seen[e.item] = true;
            }
            assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
        }
    }
}

#[test]
fn remaining_set_only_shrinks() {
    for seed in 0..200 {
        let mut r = rng(1000 + seed);
        let (inst, profile) = draw(&mut r, 6, 6);
        let trace = run(&inst, &profile, &ZeroPolicy::UniformOverRemaining);
        let horizon = trace.horizon().clone();
        let mut ts: Vec<Rational> = (0..12).map(|_| &horizon * q(r.random_range(0..=1000), 1000)).collect();
        ts.sort();
        for w in ts.windows(2) {
            let (early, late) = (trace.remaining_at(&w[0]), trace.remaining_at(&w[1]));
            assert!(late.iter().zip(&early).all(|(&l, &e)| !l || e), "seed {seed}");
        }
    }
}

#[test]
fn total_rate_per_item_is_non_decreasing_for_full_support_reports() {
    for seed in 0..300 {
        let mut r = rng(2000 + seed);
        let n = r.random_range(1..=6);
        let m = r.random_range(1..=6);
        let profile = full_support_profile(&mut r, n, m);
        let trace = engine::run(n, m, &profile, &ZeroPolicy::default()).unwrap();
        for j in 0..m {
            let t_j = trace.consumption_time(j).clone();
            let rates: Vec<Rational> = trace
                .segments()
                .iter()
                .filter(|s| s.end <= t_j)
                .map(|s| s.rates.iter().map(|row| row[j].clone()).sum())
                .collect();
            assert!(rates.windows(2).all(|w| w[0] <= w[1]), "seed {seed}, item {j}: {rates:?}");
        }
    }
}

/// Probabilistic Serial written out directly: each agent eats the first
/// remaining item of its ranking at rate one.
fn ps_oracle(rankings: &[Vec<usize>], m: usize) -> Vec<Vec<Rational>> {
    let n = rankings.len();
    let mut left = vec![Rational::one(); m];
    let mut alive = vec![true; m];
    let mut shares = vec![vec![Rational::zero(); m]; n];
    while alive.iter().any(|&a| a) {
        let target: Vec<usize> = rankings.iter().map(|r| *r.iter().find(|&&j| alive[j]).unwrap()).collect();
        let mut eaters = vec![0i64; m];
        for &j in &target {
            eaters[j] += 1;
        }
        let dt = (0..m).filter(|&j| eaters[j] > 0).map(|j| &left[j] / z(eaters[j])).min().unwrap();
        for (i, &j) in target.iter().enumerate() {
            shares[i][j] += &dt;
        }
        for j in 0..m {
            if eaters[j] > 0 {
                left[j] -= &dt * z(eaters[j]);
                if left[j].is_zero() {
                    alive[j] = false;
                }
            }
        }
    }
    shares
}

#[test]
fn ps_is_the_engine_on_lexicographic_orders() {
    let reg = MechanismRegistry::builtin();
    let ps = reg.get("ps").unwrap();
    for seed in 0..300 {
        let mut r = rng(3000 + seed);
        let n = r.random_range(1..=6);
        let m = r.random_range(1..=6);
        let inst = random_instance(&mut r, n, m, WEIGHT_CAP);
        let profile: Vec<Strategy> = inst.true_valuations().iter().map(truthful).collect();
        let result = ps.evaluate(&inst, &profile, &Settings::default()).unwrap();
        // zero-valued items come last, in index order, as under the default policy
        let rankings: Vec<Vec<usize>> = inst.true_valuations().iter().map(|v| v.ranking()).collect();
        let oracle = ps_oracle(&rankings, m);
        assert_eq!(result.trace.unwrap().shares(), &oracle, "seed {seed}");
    }
}

#[test]
fn sampling_matches_marginals() {
    let inst = example1();
    let trace = run(&inst, &inst.true_valuations().iter().map(truthful).collect::<Vec<_>>(), &ZeroPolicy::default());
    let lottery = trace.lottery();
    let samples = 100_000u64;
    let hits = (0..samples).filter(|&s| sample_allocation(&lottery, s)[0] == 0).count() as f64;
    let p = to_f64(&trace.shares()[0][0]);
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    let freq = hits / samples as f64;
    assert!((freq - p).abs() <= 3.0 * se, "frequency {freq} vs {p} (se {se})");
    assert_eq!(sample_allocation(&lottery, 7), sample_allocation(&lottery, 7));
}

#[test]
fn rp_monte_carlo_agrees_with_enumeration() {
    for seed in 0..5 {
        let mut r = rng(4000 + seed);
        let inst = random_instance(&mut r, 4, 7, WEIGHT_CAP);
        let profile: Vec<Strategy> = inst.true_valuations().iter().map(truthful).collect();
        let exact = random_priority(&inst, &profile, RpMode::Exact).unwrap();
        let mc = random_priority(&inst, &profile, RpMode::MonteCarlo { samples: 20_000, seed }).unwrap();
        let se = mc.standard_error.unwrap().max(1e-12);
        let diff = (to_f64(&exact.welfare) - to_f64(&mc.welfare)).abs();
        assert!(diff <= 4.0 * se, "seed {seed}: exact {} vs {} (se {se})", to_f64(&exact.welfare), to_f64(&mc.welfare));
    }
}

/// If `t_j(v) <= 1`, switching agent `i` to a single-minded bid on `j`
/// should keep `t_j` above a quarter of its value. The claim is made for
/// equilibria; on random profiles the violations are only counted.
#[test]
fn quarter_bound_on_random_profiles_is_reported() {
    let (mut eligible, mut violations) = (0, 0);
    for seed in 0..500 {
        let mut r = rng(5000 + seed);
        let (inst, profile) = draw(&mut r, 6, 6);
        let base = run(&inst, &profile, &ZeroPolicy::default());
        let agent = r.random_range(0..inst.n());
        for j in 0..inst.m() {
            let t = base.consumption_time(j);
            if *t > Rational::one() {
                continue;
            }
            eligible += 1;
            let mut bid = profile.clone();
            bid[agent] = single_minded(j, inst.m()).unwrap();
            let single = run(&inst, &bid, &ZeroPolicy::default());
            if *single.consumption_time(j) < t * q(1, 4) {
                violations += 1;
            }
        }
    }
    println!("quarter bound off equilibrium: {violations} violations in {eligible} (agent, item) pairs");
    assert!(eligible > 0);
}

#[test]
fn identity_instance_gives_identity_shares() {
    for n in 1..=6 {
        let inst = Instance::new((0..n).map(|i| Valuation::point_mass(i, n)).collect()).unwrap();
        let profile: Vec<Strategy> = inst.true_valuations().iter().map(truthful).collect();
        let trace = run(&inst, &profile, &ZeroPolicy::default());
        for i in 0..n {
            for j in 0..n {
                assert_eq!(trace.shares()[i][j], if i == j { z(1) } else { z(0) });
            }
        }
        assert!(trace.consumption_times().iter().all(|t| t.is_one()));
    }
}
