//! Bayesian dual-criterion design for a single-arm binary endpoint.
//!
//! Responders `r` out of `n` update a Beta prior on the response rate. A
//! result is significant when `P(ORR >= NV | data) >= sig_prob` and relevant
//! when the posterior median reaches the decision value. Larger response
//! rates are better.

use crate::decision::{Decision, OperatingCharacteristics, Outcome};
use crate::distributions::{
    beta_cdf_unchecked, beta_median, beta_sf, binomial_cdf, binomial_tail, BetaParams, Probability,
};
use crate::error::{invalid, Error, Result};

/// Default upper end of the sample size grid search.
pub const DEFAULT_N_MAX: u64 = 1000;

/// Beta prior with the given mean and second shape `b`.
pub fn prior_from_mean(mean: f64, b: f64) -> Result<BetaParams> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(invalid(format!("prior mean must lie in (0, 1), got {mean}")));
    }
    BetaParams::new(b * mean / (1.0 - mean), b)
}

/// The decision criteria of a binary dual-criterion design, without a sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryCriteria {
    pub prior: BetaParams,
    pub null_orr: f64,
    pub sig_prob: f64,
    pub decision_orr: f64,
}

impl BinaryCriteria {
    pub fn new(prior: BetaParams, null_orr: f64, sig_prob: f64, decision_orr: f64) -> Result<Self> {
        if !(null_orr > 0.0 && null_orr < 1.0) {
            return Err(invalid(format!("null response rate must lie in (0, 1), got {null_orr}")));
        }
        if !(decision_orr > 0.0 && decision_orr < 1.0) {
            return Err(invalid(format!("decision response rate must lie in (0, 1), got {decision_orr}")));
        }
        if decision_orr <= null_orr {
            return Err(invalid(format!(
                "decision value {decision_orr} must exceed the null value {null_orr}"
            )));
        }
        if !(0.5..1.0).contains(&sig_prob) {
            return Err(invalid(format!("significance probability must lie in [0.5, 1), got {sig_prob}")));
        }
        Ok(Self { prior, null_orr, sig_prob, decision_orr })
    }

    pub fn with_n(self, n: u64) -> Result<DualCriterionBinaryDesign> {
        DualCriterionBinaryDesign::new(self, n)
    }

    fn posterior(&self, n: u64, r: u64) -> BetaParams {
        self.prior.update(r, n)
    }

    fn prob_positive(&self, posterior: BetaParams) -> f64 {
        beta_sf(posterior, self.null_orr).expect("null value in (0, 1)").get()
    }

    fn is_significant(&self, posterior: BetaParams) -> bool {
        self.prob_positive(posterior) >= self.sig_prob
    }

    /// `median >= DV` written as `P(ORR <= DV) <= 1/2`, which avoids a quantile solve.
    fn is_relevant(&self, posterior: BetaParams) -> bool {
        beta_cdf_unchecked(posterior.a(), posterior.b(), self.decision_orr) <= 0.5
    }

    /// Smallest `r <= n` satisfying a criterion that is monotone in `r`.
    fn first_r(&self, n: u64, holds: impl Fn(BetaParams) -> bool) -> Option<u64> {
        if !holds(self.posterior(n, n)) {
            return None;
        }
        let (mut lo, mut hi) = (0u64, n);
        if holds(self.posterior(n, 0)) {
            return Some(0);
        }
        // invariant: fails at lo, holds at hi
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if holds(self.posterior(n, mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    pub fn clinical_boundary(&self, n: u64) -> Option<u64> {
        self.first_r(n, |post| self.is_relevant(post))
    }

    pub fn statistical_boundary(&self, n: u64) -> Option<u64> {
        self.first_r(n, |post| self.is_significant(post))
    }

    /// Whether reaching the decision value implies significance at sample size `n`.
    pub fn relevance_implies_significance(&self, n: u64) -> bool {
        match self.clinical_boundary(n) {
            None => true,
            Some(r) => self.is_significant(self.posterior(n, r)),
        }
    }
}

/// Binary dual-criterion design with a fixed sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCriterionBinaryDesign {
    pub criteria: BinaryCriteria,
    pub n: u64,
}

impl DualCriterionBinaryDesign {
    pub fn new(criteria: BinaryCriteria, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        Ok(Self { criteria, n })
    }

    fn check_r(&self, r: u64) -> Result<()> {
        if r > self.n {
            Err(invalid(format!("{r} responders exceed the sample size {}", self.n)))
        } else {
            Ok(())
        }
    }

    /// Responder boundaries derived from the two criteria.
    pub fn boundaries(&self) -> ResponderBoundaries {
        let clinical = clinical_boundary(self);
        let statistical = statistical_boundary(self);
        let go_from = min_responders(self);
        // NO-GO needs both criteria to fail, i.e. r below both boundaries.
        let first_pass = match (clinical, statistical) {
            (Some(c), Some(s)) => c.min(s),
            (Some(c), None) => c,
            (None, Some(s)) => s,
            (None, None) => self.n + 1,
        };
        let nogo_up_to = first_pass.checked_sub(1);
        ResponderBoundaries { go_from, nogo_up_to, clinical, statistical }
    }
}

/// Posterior metrics at the final analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummary {
    pub posterior: BetaParams,
    /// `P(ORR >= NV | data)`.
    pub prob_positive: Probability,
    pub median: f64,
}

/// Responder zones: GO for `r >= go_from`, NO-GO for `r <= nogo_up_to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponderBoundaries {
    pub go_from: Option<u64>,
    pub nogo_up_to: Option<u64>,
    /// Smallest `r` reaching the decision value.
    pub clinical: Option<u64>,
    /// Smallest `r` that is significant.
    pub statistical: Option<u64>,
}

impl ResponderBoundaries {
    /// Responder counts that are neither GO nor NO-GO.
    pub fn inconclusive(&self, n: u64) -> std::ops::Range<u64> {
        let start = self.nogo_up_to.map_or(0, |r| r + 1);
        let end = self.go_from.unwrap_or(n + 1);
        start..end.max(start)
    }
}

pub fn posterior_summary(design: &DualCriterionBinaryDesign, r: u64) -> Result<PosteriorSummary> {
    design.check_r(r)?;
    let posterior = design.criteria.posterior(design.n, r);
    Ok(PosteriorSummary {
        posterior,
        prob_positive: Probability::clamped(design.criteria.prob_positive(posterior)),
        median: beta_median(posterior),
    })
}

/// Smallest number of responders meeting both criteria.
pub fn min_responders(design: &DualCriterionBinaryDesign) -> Option<u64> {
    let c = &design.criteria;
    let n = design.n;
    c.first_r(n, |post| c.is_relevant(post) && c.is_significant(post))
}

/// Smallest number of responders whose posterior median reaches the decision value.
pub fn clinical_boundary(design: &DualCriterionBinaryDesign) -> Option<u64> {
    design.criteria.clinical_boundary(design.n)
}

/// Smallest number of responders that is significant.
pub fn statistical_boundary(design: &DualCriterionBinaryDesign) -> Option<u64> {
    design.criteria.statistical_boundary(design.n)
}

/// Smallest `n` such that for every `n'` in `n..=n_max` reaching the
/// decision value implies significance.
pub fn min_sample_size_grid(criteria: &BinaryCriteria, n_max: u64) -> Result<u64> {
    if n_max == 0 {
        return Err(invalid("n_max must be at least 1"));
    }
    let last_failure = (1..=n_max).rev().find(|&n| !criteria.relevance_implies_significance(n));
    match last_failure {
        None => Ok(1),
        Some(n) if n == n_max => Err(Error::Infeasible(format!(
            "no conclusive sample size up to n_max = {n_max}"
        ))),
        Some(n) => Ok(n + 1),
    }
}

/// One point of the sample size grid: the smallest relevant responder count
/// at `n` and its posterior metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub n: u64,
    pub clinical_boundary: Option<u64>,
    pub prob_positive: Option<f64>,
    pub median: Option<f64>,
    pub implies_significance: bool,
}

/// Posterior probability of a positive effect at the clinical boundary, for every `n` up to `n_max`.
pub fn grid_search_trace(criteria: &BinaryCriteria, n_max: u64) -> Vec<GridPoint> {
    (1..=n_max)
        .map(|n| {
            let boundary = criteria.clinical_boundary(n);
            let post = boundary.map(|r| criteria.posterior(n, r));
            let prob_positive = post.map(|p| criteria.prob_positive(p));
            GridPoint {
                n,
                clinical_boundary: boundary,
                prob_positive,
                median: post.map(beta_median),
                implies_significance: prob_positive.is_none_or(|p| p >= criteria.sig_prob),
            }
        })
        .collect()
}

/// Exact operating characteristics at `true_orr`.
pub fn oc_binary(design: &DualCriterionBinaryDesign, true_orr: f64) -> Result<OperatingCharacteristics> {
    if !(true_orr > 0.0 && true_orr < 1.0) {
        return Err(invalid(format!("true response rate must lie in (0, 1), got {true_orr}")));
    }
    Ok(oc_from_boundaries(design.n, &design.boundaries(), true_orr))
}

pub(crate) fn oc_from_boundaries(
    n: u64,
    bounds: &ResponderBoundaries,
    true_orr: f64,
) -> OperatingCharacteristics {
    let p_go = bounds
        .go_from
        .map_or(0.0, |r| binomial_tail(n, true_orr, r).expect("r <= n").get());
    let p_nogo = bounds
        .nogo_up_to
        .map_or(0.0, |r| binomial_cdf(n, true_orr, r).expect("valid n").get());
    OperatingCharacteristics::from_go_nogo(true_orr, p_go, p_nogo)
}

pub fn decide_binary(design: &DualCriterionBinaryDesign, r: u64) -> Result<Decision> {
    design.check_r(r)?;
    let c = &design.criteria;
    let post = c.posterior(design.n, r);
    Ok(Decision::from_criteria(c.is_significant(post), c.is_relevant(post)))
}

/// A decision rule on the number of responders, for simulation.
pub trait ResponderRule: Sync {
    fn sample_size(&self) -> u64;
    fn classify(&self, responders: u64) -> Outcome;
}

impl ResponderRule for DualCriterionBinaryDesign {
    fn sample_size(&self) -> u64 {
        self.n
    }

    fn classify(&self, responders: u64) -> Outcome {
        decide_binary(self, responders).expect("responders <= n").tag.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::DecisionTag;
    use crate::distributions::beta_quantile;
    use proptest::prelude::*;

    fn criteria() -> BinaryCriteria {
        BinaryCriteria::new(BetaParams::new(0.0811, 1.0).unwrap(), 0.075, 0.95, 0.175).unwrap()
    }

    fn design(n: u64) -> DualCriterionBinaryDesign {
        criteria().with_n(n).unwrap()
    }

    /// Posterior median by direct bisection on the CDF, independent of the library quantile.
    fn median_oracle(a: f64, b: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if beta_cdf_unchecked(a, b, mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn posterior_summaries_golden() {
        let cases = [(25, 5, 0.187, 0.967), (25, 4, 0.148, 0.895), (36, 7, 0.185, 0.985)];
        for (n, r, median, prob) in cases {
            let s = posterior_summary(&design(n), r).unwrap();
            assert!((s.median - median).abs() < 5e-4, "n={n} r={r} median {}", s.median);
            assert!((s.prob_positive.get() - prob).abs() < 5e-4, "n={n} r={r} prob {}", s.prob_positive);
            assert_eq!(s.posterior.a(), 0.0811 + r as f64);
            assert_eq!(s.posterior.b(), 1.0 + (n - r) as f64);
        }
        assert!(posterior_summary(&design(25), 26).is_err());
    }

    #[test]
    fn prior_from_mean_golden() {
        assert!((prior_from_mean(0.075, 1.0).unwrap().a() - 0.0811).abs() < 1e-4);
        assert_eq!(prior_from_mean(0.5, 1.0).unwrap().a(), 1.0);
        assert!((prior_from_mean(0.2, 2.0).unwrap().a() - 0.5).abs() < 1e-15);
        assert!(prior_from_mean(0.0, 1.0).is_err());
        assert!(prior_from_mean(1.0, 1.0).is_err());
    }

    #[test]
    fn responder_boundaries_golden() {
        assert_eq!(min_responders(&design(25)), Some(5));
        assert_eq!(min_responders(&design(36)), Some(7));

        // n = 22: smallest r whose median reaches 0.175, found via the oracle median.
        let oracle = (0..=22u64)
            .find(|&r| median_oracle(0.0811 + r as f64, 1.0 + (22 - r) as f64) >= 0.175)
            .unwrap();
        assert_eq!(oracle, 5);
        assert_eq!(min_responders(&design(22)), Some(oracle));

        assert_eq!(clinical_boundary(&design(36)), Some(7));
        assert_eq!(statistical_boundary(&design(36)), Some(6));
        assert_eq!(clinical_boundary(&design(25)), Some(5));
        assert_eq!(statistical_boundary(&design(25)), Some(5));
        assert_eq!(design(25).boundaries().inconclusive(25), 5..5);
        assert_eq!(design(36).boundaries().inconclusive(36), 6..7);
    }

    #[test]
    fn single_patient_boundary() {
        // One responder gives Beta(1.0811, 1), median 0.5^(1/1.0811) ≈ 0.527.
        let oracle_r1 = median_oracle(1.0811, 1.0);
        assert!((oracle_r1 - 0.5f64.powf(1.0 / 1.0811)).abs() < 1e-12);
        assert!(median_oracle(0.0811, 2.0) < 0.175);
        assert_eq!(clinical_boundary(&design(1)), Some(1));
    }

    #[test]
    fn grid_search_golden() {
        assert_eq!(min_sample_size_grid(&criteria(), 100).unwrap(), 22);
        assert_eq!(min_sample_size_grid(&criteria(), DEFAULT_N_MAX).unwrap(), 22);
        let weak = BinaryCriteria { sig_prob: 0.5, ..criteria() };
        assert_eq!(min_sample_size_grid(&weak, 100).unwrap(), 1);
        assert!(min_sample_size_grid(&criteria(), 0).is_err());
        assert!(matches!(min_sample_size_grid(&criteria(), 21), Err(Error::Infeasible(_))));
    }

    /// Full scan: at each n, every relevant r must also be significant.
    fn grid_oracle(c: &BinaryCriteria, n_max: u64) -> Option<u64> {
        let ok = |n: u64| {
            (0..=n).all(|r| {
                let (a, b) = (c.prior.a() + r as f64, c.prior.b() + (n - r) as f64);
                let relevant = median_oracle(a, b) >= c.decision_orr;
                let significant = 1.0 - beta_cdf_unchecked(a, b, c.null_orr) >= c.sig_prob;
                !relevant || significant
            })
        };
        let mut answer = None;
        for n in (1..=n_max).rev() {
            if ok(n) {
                answer = Some(n);
            } else {
                break;
            }
        }
        answer
    }

    #[test]
    fn grid_search_matches_exhaustive_scan() {
        let strict = BinaryCriteria { sig_prob: 0.975, ..criteria() };
        let oracle = grid_oracle(&strict, 200).expect("feasible");
        assert_eq!(min_sample_size_grid(&strict, 200).unwrap(), oracle);
        assert_eq!(grid_oracle(&criteria(), 100), Some(22));
    }

    #[test]
    fn oc_golden() {
        let oc = oc_binary(&design(25), 0.075).unwrap();
        assert!((oc.p_go.get() - 0.036).abs() < 1e-3);
        assert!((oc.p_nogo.get() - 0.964).abs() < 1e-3);
        assert!(oc.p_inconclusive.get() < 1e-12);

        let oc = oc_binary(&design(36), 0.175).unwrap();
        assert!((oc.p_go.get() - 0.446).abs() < 1e-3);
        assert!((oc.p_nogo.get() - 0.380).abs() < 1e-3);
        assert!((oc.p_inconclusive.get() - 0.174).abs() < 1e-3);

        assert!((oc_binary(&design(25), 0.275).unwrap().p_go.get() - 0.858).abs() < 1e-3);
        assert!(oc_binary(&design(25), 0.0).is_err());
    }

    #[test]
    fn decisions_golden() {
        assert_eq!(decide_binary(&design(25), 5).unwrap().tag, DecisionTag::Go);
        assert_eq!(decide_binary(&design(25), 4).unwrap().tag, DecisionTag::NoGo);
        assert_eq!(decide_binary(&design(36), 6).unwrap().tag, DecisionTag::InconclusiveSigNotRelevant);
        assert!(decide_binary(&design(36), 37).is_err());
    }

    #[test]
    fn relevance_predicate_agrees_with_median() {
        for n in [1u64, 10, 25, 36, 100] {
            for r in 0..=n {
                let s = posterior_summary(&design(n), r).unwrap();
                let via_median = beta_quantile(s.posterior, 0.5).unwrap() >= 0.175;
                assert_eq!(criteria().is_relevant(s.posterior), via_median, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn criteria_validation() {
        let prior = BetaParams::new(0.0811, 1.0).unwrap();
        assert!(BinaryCriteria::new(prior, 0.175, 0.95, 0.075).is_err());
        assert!(BinaryCriteria::new(prior, 0.075, 1.0, 0.175).is_err());
        assert!(BinaryCriteria::new(prior, 0.075, 0.4, 0.175).is_err());
        assert!(criteria().with_n(0).is_err());
    }

    #[test]
    fn no_relevant_but_not_significant_outcome_at_or_above_minimum() {
        let n_min = min_sample_size_grid(&criteria(), 200).unwrap();
        for n in n_min..=200 {
            let d = design(n);
            for r in 0..=n {
                assert_ne!(decide_binary(&d, r).unwrap().tag, DecisionTag::InconclusiveRelevantNotSig);
            }
        }
    }

    proptest! {
        #[test]
        fn posterior_metrics_increase_in_r(n in 1u64..80) {
            let d = design(n);
            let mut prev: Option<PosteriorSummary> = None;
            for r in 0..=n {
                let s = posterior_summary(&d, r).unwrap();
                if let Some(p) = prev {
                    prop_assert!(s.median > p.median);
                    prop_assert!(s.prob_positive.get() >= p.prob_positive.get());
                }
                prev = Some(s);
            }
        }

        #[test]
        fn oc_sums_to_one_and_go_is_monotone(n in 1u64..120, p in 0.01f64..0.9, dp in 0.0f64..0.09) {
            let d = design(n);
            let a = oc_binary(&d, p).unwrap();
            let b = oc_binary(&d, p + dp).unwrap();
            prop_assert!((a.total() - 1.0).abs() < 1e-9);
            prop_assert!(b.p_go.get() >= a.p_go.get() - 1e-12);
        }
    }
}
