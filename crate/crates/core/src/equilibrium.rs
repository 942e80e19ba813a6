//! Best-response search over finite deviation families, family-relative
//! epsilon-Nash certification, and welfare ratios.
//!
//! A certificate only speaks for the families it names: the continuum of
//! reports is never searched.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::lottery::opt;
use crate::mechanism::{Mechanism, Settings};
use crate::model::{display_decimal, format_rational, Instance, Rational, Strategy, Valuation};
use crate::model::io::StrategyFile;
use crate::strategies::{expand_families, families_size, StrategyFamily};
use crate::Error;

/// Default cap on engine runs for one search.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// What to search and how much work is allowed.
#[derive(Debug, Clone)]
pub struct Search {
    pub families: Vec<StrategyFamily>,
    pub budget: u64,
    /// Keep every candidate's payoff in the report.
    pub keep_candidates: bool,
}

impl Search {
    pub fn new(families: Vec<StrategyFamily>) -> Self {
        Search { families, budget: DEFAULT_BUDGET, keep_candidates: false }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn keep_candidates(mut self, keep: bool) -> Self {
        self.keep_candidates = keep;
        self
    }

    fn describe(&self) -> Vec<String> {
        self.families.iter().map(|f| f.to_string()).collect()
    }

    fn cost(&self, truth: &Valuation) -> u128 {
        families_size(&self.families, truth)
    }
}

#[derive(Debug, Clone)]
pub struct DeviationReport {
    pub agent: usize,
    pub baseline: Strategy,
    pub baseline_payoff: Rational,
    pub best_strategy: Strategy,
    pub best_payoff: Rational,
    /// `best_payoff - baseline_payoff`; non-negative whenever the baseline
    /// strategy belongs to one of the searched families.
    pub gain: Rational,
    pub families: Vec<String>,
    pub evaluated: u64,
    pub candidates: Option<Vec<(Strategy, Rational)>>,
}

fn payoff_of(
    instance: &Instance,
    profile: &[Strategy],
    agent: usize,
    mechanism: &dyn Mechanism,
    settings: &Settings,
) -> Result<Rational, Error> {
    let result = mechanism.evaluate(instance, profile, settings)?;
    Ok(result.payoffs[agent].clone())
}

/// Evaluates every candidate deviation of `agent` against the rest of
/// `profile`. Ties go to the earliest candidate in canonical order.
pub fn best_response(
    instance: &Instance,
    profile: &[Strategy],
    agent: usize,
    search: &Search,
    mechanism: &dyn Mechanism,
    settings: &Settings,
) -> Result<DeviationReport, Error> {
    if agent >= instance.n() {
        return Err(Error::AgentOutOfRange { agent: agent + 1, n: instance.n() });
    }
    if search.families.is_empty() {
        return Err(Error::NoFamilies);
    }
    let truth = instance.valuation(agent);
    let required = search.cost(truth);
    if required > search.budget as u128 {
        return Err(Error::BudgetExceeded { required, budget: search.budget });
    }
    let candidates = expand_families(&search.families, truth)?;
    let baseline_payoff = payoff_of(instance, profile, agent, mechanism, settings)?;

    let payoffs: Vec<Rational> = candidates
        .par_iter()
        .map(|candidate| {
            let mut deviated = profile.to_vec();
            deviated[agent] = candidate.clone();
            payoff_of(instance, &deviated, agent, mechanism, settings)
        })
        .collect::<Result<_, _>>()?;

    let mut best = 0;
    for (k, p) in payoffs.iter().enumerate().skip(1) {
        if *p > payoffs[best] {
            best = k;
        }
    }
    let best_payoff = payoffs[best].clone();
    Ok(DeviationReport {
        agent,
        baseline: profile[agent].clone(),
        gain: &best_payoff - &baseline_payoff,
        baseline_payoff,
        best_strategy: candidates[best].clone(),
        best_payoff,
        families: search.describe(),
        evaluated: candidates.len() as u64,
        candidates: search.keep_candidates.then(|| candidates.into_iter().zip(payoffs).collect()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// No agent gains more than epsilon within the searched families.
    Certified,
    Refuted { agent: usize, deviation: Strategy, gain: Rational },
}

#[derive(Debug, Clone)]
pub struct EquilibriumCertificate {
    pub profile: Vec<Strategy>,
    pub epsilon: Rational,
    pub mechanism: String,
    pub families: Vec<String>,
    pub budget: u64,
    pub reports: Vec<DeviationReport>,
    pub verdict: Verdict,
}

impl EquilibriumCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

/// Runs [`best_response`] for every agent. The witness of a refutation is
/// the lowest-index agent whose gain exceeds `epsilon`.
pub fn verify_ne(
    instance: &Instance,
    profile: &[Strategy],
    epsilon: &Rational,
    search: &Search,
    mechanism: &dyn Mechanism,
    settings: &Settings,
) -> Result<EquilibriumCertificate, Error> {
    let required: u128 = instance.true_valuations().iter().map(|v| search.cost(v)).sum();
    if required > search.budget as u128 {
        return Err(Error::BudgetExceeded { required, budget: search.budget });
    }
    let reports = (0..instance.n())
        .map(|agent| best_response(instance, profile, agent, search, mechanism, settings))
        .collect::<Result<Vec<_>, _>>()?;
    let verdict = reports
        .iter()
        .find(|r| r.gain > *epsilon)
        .map(|r| Verdict::Refuted { agent: r.agent, deviation: r.best_strategy.clone(), gain: r.gain.clone() })
        .unwrap_or(Verdict::Certified);
    Ok(EquilibriumCertificate {
        profile: profile.to_vec(),
        epsilon: epsilon.clone(),
        mechanism: mechanism.name().to_string(),
        families: search.describe(),
        budget: search.budget,
        reports,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub welfare: Rational,
    pub opt: Rational,
    /// `opt / welfare`; `None` when the welfare is zero (unbounded ratio).
    pub ratio: Option<Rational>,
}

pub fn ratio_report(
    instance: &Instance,
    profile: &[Strategy],
    mechanism: &dyn Mechanism,
    settings: &Settings,
) -> Result<RatioReport, Error> {
    let welfare = mechanism.evaluate(instance, profile, settings)?.welfare;
    let (opt, _) = opt(instance);
    let ratio = (!welfare.is_zero()).then(|| &opt / &welfare);
    Ok(RatioReport { welfare, opt, ratio })
}

/// `(1/4) * sum_l (t_{x_l} - t_{x_{l-1}}) * v(x_l)` with the items of
/// `sequence` ordered by increasing consumption time and `t_{x_0} = 0`.
///
/// `None` if some item of the sequence is consumed after time 1.
pub fn sequence_payoff_floor(times: &[Rational], truth: &Valuation, sequence: &[usize]) -> Option<Rational> {
    let mut items = sequence.to_vec();
    items.sort_by(|&a, &b| times[a].cmp(&times[b]).then(a.cmp(&b)));
    if items.iter().any(|&j| times[j] > Rational::one()) {
        return None;
    }
    let mut prev = Rational::zero();
    let mut acc = Rational::zero();
    for j in items {
        acc += (&times[j] - &prev) * truth.get(j);
        prev = times[j].clone();
    }
    Some(acc / Rational::from_integer(4.into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateJson {
    pub strategy: StrategyFile,
    pub payoff: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationJson {
    pub agent: usize,
    pub baseline: StrategyFile,
    pub baseline_payoff: String,
    pub best: StrategyFile,
    pub best_payoff: String,
    pub gain: String,
    pub gain_decimal: String,
    pub families: Vec<String>,
    pub evaluated: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<CandidateJson>>,
}

impl DeviationJson {
    pub fn from_report(r: &DeviationReport) -> Self {
        DeviationJson {
            agent: r.agent + 1,
            baseline: StrategyFile::from_strategy(&r.baseline),
            baseline_payoff: format_rational(&r.baseline_payoff),
            best: StrategyFile::from_strategy(&r.best_strategy),
            best_payoff: format_rational(&r.best_payoff),
            gain: format_rational(&r.gain),
            gain_decimal: display_decimal(&r.gain),
            families: r.families.clone(),
            evaluated: r.evaluated,
            candidates: r.candidates.as_ref().map(|c| {
                c.iter()
                    .map(|(s, p)| CandidateJson { strategy: StrategyFile::from_strategy(s), payoff: format_rational(p) })
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessJson {
    pub agent: usize,
    pub deviation: StrategyFile,
    pub gain: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateJson {
    pub mechanism: String,
    pub epsilon: String,
    pub families: Vec<String>,
    pub budget: u64,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
    pub profile: Vec<StrategyFile>,
    pub reports: Vec<DeviationJson>,
}

impl CertificateJson {
    pub fn from_certificate(c: &EquilibriumCertificate) -> Self {
        let (verdict, witness) = match &c.verdict {
            Verdict::Certified => ("certified", None),
            Verdict::Refuted { agent, deviation, gain } => (
                "refuted",
                Some(WitnessJson {
                    agent: agent + 1,
                    deviation: StrategyFile::from_strategy(deviation),
                    gain: format_rational(gain),
                }),
            ),
        };
        CertificateJson {
            mechanism: c.mechanism.clone(),
            epsilon: format_rational(&c.epsilon),
            families: c.families.clone(),
            budget: c.budget,
            verdict,
            witness,
            profile: c.profile.iter().map(StrategyFile::from_strategy).collect(),
            reports: c.reports.iter().map(DeviationJson::from_report).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::MechanismRegistry;
    use crate::model::{int, ratio};
    use crate::strategies::{single_minded, truthful};

    fn example2() -> Instance {
        Instance::new(vec![
            Valuation::new(vec![ratio(2, 3), ratio(1, 3)]).unwrap(),
            Valuation::new(vec![ratio(1, 3), ratio(2, 3)]).unwrap(),
        ])
        .unwrap()
    }

    fn truthful_profile(i: &Instance) -> Vec<Strategy> {
        i.true_valuations().iter().map(truthful).collect()
    }

    #[test]
    fn example2_best_response_is_single_minded() {
        let inst = example2();
        let reg = MechanismRegistry::builtin();
        let search = Search::new(vec![StrategyFamily::Truthful, StrategyFamily::SingleMinded]);
        let r = best_response(&inst, &truthful_profile(&inst), 0, &search, reg.get("cps").unwrap(), &Settings::default())
            .unwrap();
        assert_eq!(r.best_strategy, single_minded(0, 2).unwrap());
        assert_eq!(r.best_payoff, ratio(7, 12));
        assert_eq!(r.baseline_payoff, ratio(5, 9));
        assert_eq!(r.gain, ratio(1, 36));
    }

    #[test]
    fn example2_grid_optimum_at_least_single_minded() {
        let inst = example2();
        let reg = MechanismRegistry::builtin();
        let search = Search::new(vec![StrategyFamily::GridProportional(12)]).keep_candidates(true);
        let r = best_response(&inst, &truthful_profile(&inst), 0, &search, reg.get("cps").unwrap(), &Settings::default())
            .unwrap();
        assert_eq!(r.evaluated, 13);
        assert!(r.best_payoff >= ratio(7, 12));
        // brute-force argmax over the dumped candidates agrees
        let cands = r.candidates.unwrap();
        let max = cands.iter().map(|(_, p)| p.clone()).max().unwrap();
        assert_eq!(max, r.best_payoff);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = example2();
        let reg = MechanismRegistry::builtin();
        let search = Search::new(vec![StrategyFamily::GridProportional(12)]).with_budget(5);
        let err = best_response(&inst, &truthful_profile(&inst), 0, &search, reg.get("cps").unwrap(), &Settings::default())
            .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { required: 13, budget: 5 }));
        let search = Search::new(vec![StrategyFamily::SingleMinded]).with_budget(3);
        let err = verify_ne(&inst, &truthful_profile(&inst), &int(0), &search, reg.get("cps").unwrap(), &Settings::default())
            .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { required: 4, budget: 3 }));
    }

    #[test]
    fn example2_truthful_is_refuted() {
        let inst = example2();
        let reg = MechanismRegistry::builtin();
        let search = Search::new(vec![StrategyFamily::Truthful, StrategyFamily::SingleMinded]);
        let cert = verify_ne(&inst, &truthful_profile(&inst), &int(0), &search, reg.get("cps").unwrap(), &Settings::default())
            .unwrap();
        assert_eq!(
            cert.verdict,
            Verdict::Refuted { agent: 0, deviation: single_minded(0, 2).unwrap(), gain: ratio(1, 36) }
        );
        let json = serde_json::to_value(CertificateJson::from_certificate(&cert)).unwrap();
        assert_eq!(json["verdict"], "refuted");
        assert_eq!(json["witness"]["agent"], 1);
        assert_eq!(json["witness"]["gain"], "1/36");
    }

    #[test]
    fn ratio_of_example2() {
        let inst = example2();
        let reg = MechanismRegistry::builtin();
        let r = ratio_report(&inst, &truthful_profile(&inst), reg.get("cps").unwrap(), &Settings::default()).unwrap();
        assert_eq!(r.welfare, ratio(10, 9));
        assert_eq!(r.opt, ratio(4, 3));
        assert_eq!(r.ratio, Some(ratio(6, 5)));
    }

    #[test]
    fn zero_welfare_is_flagged() {
        // each agent eats only the item the other one wants
        let inst = Instance::new(vec![Valuation::point_mass(0, 2), Valuation::point_mass(1, 2)]).unwrap();
        let profile = vec![single_minded(1, 2).unwrap(), single_minded(0, 2).unwrap()];
        let reg = MechanismRegistry::builtin();
        let r = ratio_report(&inst, &profile, reg.get("cps").unwrap(), &Settings::default()).unwrap();
        assert_eq!(r.welfare, int(0));
        assert_eq!(r.opt, int(2));
        assert_eq!(r.ratio, None);
    }

    #[test]
    fn sequence_floor() {
        let times = vec![ratio(1, 2), int(1), ratio(3, 2)];
        let truth = Valuation::new(vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)]).unwrap();
        // (1/2 * 1/2 + 1/2 * 1/4) / 4
        assert_eq!(sequence_payoff_floor(&times, &truth, &[1, 0]), Some(ratio(3, 32)));
        assert_eq!(sequence_payoff_floor(&times, &truth, &[2]), None);
    }
}
