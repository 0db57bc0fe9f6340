//! Time-to-event designs on the hazard ratio scale.
//!
//! The log hazard ratio estimate from `n` events is taken as
//! `Normal(log θ, σ²/n)` with `σ = 2` under 1:1 randomization. A smaller
//! hazard ratio is a benefit. Inputs and outputs are hazard ratios; all
//! arithmetic happens on the log scale.

use crate::decision::{Decision, OperatingCharacteristics, Outcome};
use crate::distributions::{normal_cdf_unchecked, z_upper};
use crate::error::{invalid, Error, Result};

/// Per-event standard deviation of the log hazard ratio under equal randomization.
pub const DEFAULT_SIGMA: f64 = 2.0;

/// Default two-sided confidence level of a precision design.
pub const DEFAULT_LEVEL: f64 = 0.95;

fn check_alpha(alpha: f64, name: &str) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 0.5), got {alpha}")))
    }
}

fn check_hr(hr: f64, name: &str) -> Result<()> {
    if hr.is_finite() && hr > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be a positive hazard ratio, got {hr}")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("sigma must be positive, got {sigma}")))
    }
}

fn ceil_count(x: f64, what: &str) -> Result<u64> {
    if !x.is_finite() || x >= u64::MAX as f64 {
        return Err(Error::Infeasible(format!("{what} is not finite")));
    }
    Ok((x.ceil() as u64).max(1))
}

/// Frequentist dual-criterion design for a hazard ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCriterionTteDesign {
    pub alpha: f64,
    pub null_hr: f64,
    pub decision_hr: f64,
    pub sigma: f64,
    pub n_events: u64,
}

impl DualCriterionTteDesign {
    pub fn new(alpha: f64, null_hr: f64, decision_hr: f64, sigma: f64, n_events: u64) -> Result<Self> {
        check_alpha(alpha, "alpha")?;
        check_hr(null_hr, "null hazard ratio")?;
        check_hr(decision_hr, "decision hazard ratio")?;
        check_sigma(sigma)?;
        if decision_hr >= null_hr {
            return Err(invalid(format!(
                "decision value {decision_hr} must be below the null value {null_hr}"
            )));
        }
        if n_events == 0 {
            return Err(invalid("number of events must be at least 1"));
        }
        Ok(Self { alpha, null_hr, decision_hr, sigma, n_events })
    }

    /// Design with the minimum number of events for the given criteria.
    pub fn minimal(alpha: f64, null_hr: f64, decision_hr: f64, sigma: f64) -> Result<Self> {
        let n = min_events_dual(alpha, null_hr, decision_hr, sigma)?;
        Self::new(alpha, null_hr, decision_hr, sigma, n)
    }

    pub fn min_events(&self) -> u64 {
        min_events_dual(self.alpha, self.null_hr, self.decision_hr, self.sigma)
            .expect("validated at construction")
    }

    /// Below the minimum, an estimate can reach the decision value without
    /// being significant (case 4).
    pub fn is_conclusive(&self) -> bool {
        self.n_events >= self.min_events()
    }

    /// Warning text when the design admits relevant-but-not-significant outcomes.
    pub fn warning(&self) -> Option<String> {
        (!self.is_conclusive()).then(|| {
            format!(
                "{} events is below the minimum of {}; relevant but non-significant outcomes are possible",
                self.n_events,
                self.min_events()
            )
        })
    }

    /// Largest estimate that is significant at `n_events`.
    pub fn raw_significance_threshold(&self) -> f64 {
        significance_threshold_at(self.alpha, self.null_hr, self.sigma, self.n_events as f64)
    }

    /// Significance threshold used by decisions and operating characteristics.
    ///
    /// At exactly the minimum number of events the threshold is the decision
    /// value: the raw threshold exceeds it only by the slack of rounding the
    /// minimum up, and the design has no case-3 band.
    pub fn significance_threshold(&self) -> f64 {
        if self.n_events == self.min_events() {
            self.decision_hr
        } else {
            self.raw_significance_threshold()
        }
    }

    /// GO iff the estimate is at or below this value.
    pub fn go_threshold(&self) -> f64 {
        self.decision_hr.min(self.significance_threshold())
    }

    /// NO-GO iff the estimate is strictly above this value.
    pub fn nogo_threshold(&self) -> f64 {
        self.decision_hr.max(self.significance_threshold())
    }

    pub fn log_sd(&self) -> f64 {
        self.sigma / (self.n_events as f64).sqrt()
    }
}

/// Standard design: type-I error at the null, power at an alternative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardTteDesign {
    pub alpha: f64,
    pub beta: f64,
    pub null_hr: f64,
    pub alt_hr: f64,
}

impl StandardTteDesign {
    pub fn new(alpha: f64, beta: f64, null_hr: f64, alt_hr: f64) -> Result<Self> {
        check_alpha(alpha, "alpha")?;
        check_alpha(beta, "beta")?;
        check_hr(null_hr, "null hazard ratio")?;
        check_hr(alt_hr, "alternative hazard ratio")?;
        if alt_hr >= null_hr {
            return Err(invalid(format!(
                "alternative {alt_hr} must be below the null value {null_hr}"
            )));
        }
        Ok(Self { alpha, beta, null_hr, alt_hr })
    }
}

/// Precision design: the interval `(HR / factor, HR × factor)` at `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionTteDesign {
    pub factor: f64,
    pub level: f64,
    pub sigma: f64,
}

impl PrecisionTteDesign {
    pub fn new(factor: f64, level: f64, sigma: f64) -> Result<Self> {
        if !(factor > 1.0) {
            return Err(invalid(format!("precision factor must exceed 1, got {factor}")));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(invalid(format!("confidence level must lie in (0, 1), got {level}")));
        }
        check_sigma(sigma)?;
        Ok(Self { factor, level, sigma })
    }
}

/// Unrounded `σ² z_α² / (log NV − log DV)²`.
pub fn min_events_dual_exact(alpha: f64, null_hr: f64, decision_hr: f64, sigma: f64) -> Result<f64> {
    check_alpha(alpha, "alpha")?;
    check_hr(null_hr, "null hazard ratio")?;
    check_hr(decision_hr, "decision hazard ratio")?;
    check_sigma(sigma)?;
    if decision_hr >= null_hr {
        return Err(Error::Infeasible(format!(
            "decision value {decision_hr} is not below the null value {null_hr}; no finite number of events exists"
        )));
    }
    let z = z_upper(alpha)?;
    let gap = null_hr.ln() - decision_hr.ln();
    Ok((sigma * z / gap).powi(2))
}

/// Smallest number of events at which reaching the decision value implies significance.
pub fn min_events_dual(alpha: f64, null_hr: f64, decision_hr: f64, sigma: f64) -> Result<u64> {
    ceil_count(min_events_dual_exact(alpha, null_hr, decision_hr, sigma)?, "minimum number of events")
}

pub(crate) fn significance_threshold_at(alpha: f64, null_hr: f64, sigma: f64, events: f64) -> f64 {
    let z = z_upper(alpha).expect("alpha validated by caller");
    null_hr * (-z * sigma / events.sqrt()).exp()
}

/// Largest hazard ratio estimate with one-sided p-value at most `alpha`.
pub fn significance_threshold(alpha: f64, null_hr: f64, sigma: f64, n_events: u64) -> Result<f64> {
    check_alpha(alpha, "alpha")?;
    check_hr(null_hr, "null hazard ratio")?;
    check_sigma(sigma)?;
    if n_events == 0 {
        return Err(invalid("number of events must be at least 1"));
    }
    Ok(significance_threshold_at(alpha, null_hr, sigma, n_events as f64))
}

/// Number of events for a standard design.
pub fn standard_design_events(design: &StandardTteDesign, sigma: f64) -> Result<u64> {
    check_sigma(sigma)?;
    let z_sum = z_upper(design.alpha)? + z_upper(design.beta)?;
    let gap = design.null_hr.ln() - design.alt_hr.ln();
    ceil_count((sigma * z_sum / gap).powi(2), "number of events")
}

/// Number of events for a precision design, rounded to the nearest integer.
pub fn precision_events(design: &PrecisionTteDesign) -> Result<u64> {
    let z = z_upper((1.0 - design.level) / 2.0)?;
    let n = (z * design.sigma / design.factor.ln()).powi(2);
    if !n.is_finite() {
        return Err(Error::Infeasible("number of events is not finite".into()));
    }
    Ok((n.round() as u64).max(1))
}

/// Multiplicative half-width `f` of the two-sided interval `(HR/f, HR×f)` at `n_events`.
pub fn implied_interval_factor(level: f64, sigma: f64, n_events: u64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    check_sigma(sigma)?;
    let z = z_upper((1.0 - level) / 2.0)?;
    Ok((z * sigma / (n_events.max(1) as f64).sqrt()).exp())
}

fn prob_estimate_at_most(threshold: f64, true_hr: f64, log_sd: f64) -> f64 {
    normal_cdf_unchecked((threshold.ln() - true_hr.ln()) / log_sd)
}

fn oc_from_thresholds(go: f64, nogo: f64, log_sd: f64, true_hr: f64) -> OperatingCharacteristics {
    let p_go = prob_estimate_at_most(go, true_hr, log_sd);
    let p_nogo = 1.0 - prob_estimate_at_most(nogo, true_hr, log_sd);
    OperatingCharacteristics::from_go_nogo(true_hr, p_go, p_nogo)
}

/// Operating characteristics of a dual-criterion design at `true_hr`.
pub fn oc_dual_tte(design: &DualCriterionTteDesign, true_hr: f64) -> Result<OperatingCharacteristics> {
    check_hr(true_hr, "true hazard ratio")?;
    Ok(oc_from_thresholds(design.go_threshold(), design.nogo_threshold(), design.log_sd(), true_hr))
}

/// Like [`oc_dual_tte`] but for a real-valued amount of information, e.g.
/// the unrounded minimum number of events. Uses the raw significance threshold.
pub fn oc_dual_tte_continuous(
    alpha: f64,
    null_hr: f64,
    decision_hr: f64,
    sigma: f64,
    events: f64,
    true_hr: f64,
) -> Result<OperatingCharacteristics> {
    check_alpha(alpha, "alpha")?;
    check_hr(null_hr, "null hazard ratio")?;
    check_hr(decision_hr, "decision hazard ratio")?;
    check_hr(true_hr, "true hazard ratio")?;
    check_sigma(sigma)?;
    if !(events > 0.0) {
        return Err(invalid("information must be positive"));
    }
    let t_sig = significance_threshold_at(alpha, null_hr, sigma, events);
    Ok(oc_from_thresholds(
        decision_hr.min(t_sig),
        decision_hr.max(t_sig),
        sigma / events.sqrt(),
        true_hr,
    ))
}

/// Operating characteristics of a standard design run with `n_events`.
pub fn oc_standard_tte(
    design: &StandardTteDesign,
    sigma: f64,
    n_events: u64,
    true_hr: f64,
) -> Result<OperatingCharacteristics> {
    check_hr(true_hr, "true hazard ratio")?;
    let t_sig = significance_threshold(design.alpha, design.null_hr, sigma, n_events)?;
    let log_sd = sigma / (n_events as f64).sqrt();
    Ok(oc_from_thresholds(t_sig, t_sig, log_sd, true_hr))
}

/// Applies both criteria to an observed hazard ratio estimate. Both
/// comparisons are inclusive.
pub fn decide_tte(design: &DualCriterionTteDesign, estimated_hr: f64) -> Result<Decision> {
    check_hr(estimated_hr, "estimated hazard ratio")?;
    let significant = estimated_hr <= design.significance_threshold();
    let relevant = estimated_hr <= design.decision_hr;
    Ok(Decision::from_criteria(significant, relevant))
}

/// One-sided p-value of an estimate against the null value.
pub fn one_sided_p_value(null_hr: f64, sigma: f64, n_events: u64, estimated_hr: f64) -> Result<f64> {
    check_hr(null_hr, "null hazard ratio")?;
    check_hr(estimated_hr, "estimated hazard ratio")?;
    check_sigma(sigma)?;
    let z = (estimated_hr.ln() - null_hr.ln()) / (sigma / (n_events.max(1) as f64).sqrt());
    Ok(normal_cdf_unchecked(z))
}

/// Classifies an estimate for simulation; standard designs have no
/// inconclusive region.
pub trait EstimateRule: Sync {
    fn log_sd(&self) -> f64;
    fn classify(&self, estimated_hr: f64) -> Outcome;
}

impl EstimateRule for DualCriterionTteDesign {
    fn log_sd(&self) -> f64 {
        DualCriterionTteDesign::log_sd(self)
    }

    fn classify(&self, estimated_hr: f64) -> Outcome {
        decide_tte(self, estimated_hr).expect("positive estimate").tag.into()
    }
}

/// A standard design at a fixed number of events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardTteRun {
    pub design: StandardTteDesign,
    pub sigma: f64,
    pub n_events: u64,
}

impl StandardTteRun {
    pub fn new(design: StandardTteDesign, sigma: f64, n_events: u64) -> Result<Self> {
        check_sigma(sigma)?;
        if n_events == 0 {
            return Err(invalid("number of events must be at least 1"));
        }
        Ok(Self { design, sigma, n_events })
    }

    pub fn threshold(&self) -> f64 {
        significance_threshold_at(self.design.alpha, self.design.null_hr, self.sigma, self.n_events as f64)
    }

    pub fn oc(&self, true_hr: f64) -> Result<OperatingCharacteristics> {
        oc_standard_tte(&self.design, self.sigma, self.n_events, true_hr)
    }
}

impl EstimateRule for StandardTteRun {
    fn log_sd(&self) -> f64 {
        self.sigma / (self.n_events as f64).sqrt()
    }

    fn classify(&self, estimated_hr: f64) -> Outcome {
        if estimated_hr <= self.threshold() {
            Outcome::Go
        } else {
            Outcome::NoGo
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::DecisionTag;
    use proptest::prelude::*;

    fn design1() -> DualCriterionTteDesign {
        DualCriterionTteDesign::new(0.1, 1.0, 0.7, 2.0, 70).unwrap()
    }

    fn design2() -> DualCriterionTteDesign {
        DualCriterionTteDesign::new(0.1, 1.0, 0.7, 2.0, 52).unwrap()
    }

    #[test]
    fn minimum_events_golden() {
        assert_eq!(min_events_dual(0.1, 1.0, 0.7, 2.0).unwrap(), 52);
        assert_eq!(min_events_dual(0.025, 1.0, 0.8, 2.0).unwrap(), 309);
        // Diverges as the decision value approaches the null value.
        let huge = min_events_dual(0.025, 1.0, 0.99999, 2.0).unwrap();
        assert!(huge > 100_000_000_000);
        assert!(min_events_dual(0.025, 1.0, 1.0, 2.0).is_err());
        assert!(min_events_dual(0.025, 1.0, 1.2, 2.0).is_err());
    }

    #[test]
    fn significance_threshold_golden() {
        assert!((significance_threshold(0.025, 1.0, 2.0, 508).unwrap() - 0.84).abs() < 5e-3);
        assert!((significance_threshold(0.1, 1.0, 2.0, 70).unwrap() - 0.736).abs() < 5e-4);
        assert!((significance_threshold(0.1, 1.0, 2.0, 55).unwrap() - 0.708).abs() < 5e-4);
        assert!(significance_threshold(0.1, 1.0, 2.0, 0).is_err());
    }

    #[test]
    fn standard_and_precision_sizes() {
        let s = |a, b, alt| standard_design_events(&StandardTteDesign::new(a, b, 1.0, alt).unwrap(), 2.0).unwrap();
        assert_eq!(s(0.025, 0.1, 0.75), 508);
        assert_eq!(s(0.1, 0.1, 0.5), 55);
        assert_eq!(s(0.2, 0.1, 0.5), 38);
        assert_eq!(s(0.1, 0.2, 0.5), 38);
        assert!(StandardTteDesign::new(0.1, 0.1, 1.0, 1.0).is_err());

        let p = |f| precision_events(&PrecisionTteDesign::new(f, 0.95, 2.0).unwrap()).unwrap();
        assert_eq!(p(1.2), 462);
        assert_eq!(p(1.25), 309);
        assert_eq!(p(1e12), 1);
        assert!(PrecisionTteDesign::new(1.0, 0.95, 2.0).is_err());
        assert!(PrecisionTteDesign::new(0.8, 0.95, 2.0).is_err());
    }

    #[test]
    fn dual_oc_golden() {
        let oc = oc_dual_tte(&design1(), 0.5).unwrap();
        assert!((oc.p_go.get() - 0.920).abs() < 1e-3);
        assert!((oc.p_nogo.get() - 0.053).abs() < 1e-3);
        assert!((oc.p_inconclusive.get() - 0.027).abs() < 1e-3);

        let oc = oc_dual_tte(&design2(), 0.7).unwrap();
        assert!((oc.p_go.get() - 0.5).abs() < 1e-3);
        assert!((oc.p_nogo.get() - 0.5).abs() < 1e-3);
        assert!(oc.p_inconclusive.get().abs() < 1e-3);

        assert!((oc_dual_tte(&design1(), 1.0).unwrap().p_go.get() - 0.068).abs() < 1e-3);
    }

    #[test]
    fn standard_oc_golden() {
        let d4 = StandardTteDesign::new(0.1, 0.2, 1.0, 0.5).unwrap();
        assert!((oc_standard_tte(&d4, 2.0, 38, 0.7).unwrap().p_go.get() - 0.428).abs() < 1e-3);
        let d5 = StandardTteDesign::new(0.2, 0.1, 1.0, 0.5).unwrap();
        let oc = oc_standard_tte(&d5, 2.0, 38, 1.0).unwrap();
        assert!((oc.p_go.get() - 0.200).abs() < 1e-3);
        assert_eq!(oc.p_inconclusive.get(), 0.0);
        let t = significance_threshold(0.2, 1.0, 2.0, 38).unwrap();
        assert!((oc_standard_tte(&d5, 2.0, 38, t).unwrap().p_go.get() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decisions() {
        assert_eq!(decide_tte(&design1(), 0.65).unwrap().tag, DecisionTag::Go);
        assert_eq!(decide_tte(&design1(), 0.72).unwrap().tag, DecisionTag::InconclusiveSigNotRelevant);
        assert_eq!(decide_tte(&design1(), 0.9).unwrap().tag, DecisionTag::NoGo);
        let small = DualCriterionTteDesign::new(0.1, 1.0, 0.7, 2.0, 30).unwrap();
        // exp(-1.2816 * 2 / sqrt(30)) ≈ 0.626
        assert!((small.significance_threshold() - 0.626).abs() < 1e-3);
        assert_eq!(decide_tte(&small, 0.69).unwrap().tag, DecisionTag::InconclusiveRelevantNotSig);
        assert!(small.warning().is_some());
        assert!(design1().warning().is_none());
        // Inclusive at both boundaries.
        let t = design1().significance_threshold();
        assert_eq!(decide_tte(&design1(), t).unwrap().tag, DecisionTag::InconclusiveSigNotRelevant);
        assert_eq!(decide_tte(&design1(), 0.7).unwrap().tag, DecisionTag::Go);
        assert!(decide_tte(&design1(), 0.0).is_err());
    }

    #[test]
    fn minimal_design_has_no_inconclusive_band() {
        let d = design2();
        assert_eq!(d.significance_threshold(), 0.7);
        assert!(d.raw_significance_threshold() > 0.7);
        for hr in [0.4, 0.6, 0.7, 0.70087, 0.9, 1.3] {
            assert_eq!(oc_dual_tte(&d, hr).unwrap().p_inconclusive.get(), 0.0);
        }
    }

    #[test]
    fn implied_interval_matches_precision_design() {
        let f = implied_interval_factor(0.95, 2.0, 462).unwrap();
        assert!((f - 1.2).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn power_at_decision_value_is_half(alpha in 0.01f64..0.3, dv in 0.3f64..0.95, extra in 0u64..500) {
            let n = min_events_dual(alpha, 1.0, dv, 2.0).unwrap() + extra;
            let d = DualCriterionTteDesign::new(alpha, 1.0, dv, 2.0, n).unwrap();
            prop_assert!((oc_dual_tte(&d, dv).unwrap().p_go.get() - 0.5).abs() < 1e-12);
        }

        #[test]
        fn oc_monotone_in_true_hr(alpha in 0.01f64..0.3, dv in 0.3f64..0.95, n in 1u64..600,
                                   hr in 0.2f64..1.5, dhr in 0.0f64..0.3) {
            let d = DualCriterionTteDesign::new(alpha, 1.0, dv, 2.0, n).unwrap();
            let a = oc_dual_tte(&d, hr).unwrap();
            let b = oc_dual_tte(&d, hr + dhr).unwrap();
            prop_assert!(b.p_go.get() <= a.p_go.get() + 1e-15);
            prop_assert!(b.p_nogo.get() >= a.p_nogo.get() - 1e-15);
            prop_assert!((a.total() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn more_events_sharpen_around_decision_value(alpha in 0.01f64..0.3, dv in 0.3f64..0.9,
                                                     extra in 1u64..300, offset in 0.01f64..0.5) {
            let n = min_events_dual(alpha, 1.0, dv, 2.0).unwrap();
            let small = DualCriterionTteDesign::new(alpha, 1.0, dv, 2.0, n).unwrap();
            let large = DualCriterionTteDesign::new(alpha, 1.0, dv, 2.0, n + extra).unwrap();
            let better = dv * (1.0 - offset);
            let worse = dv * (1.0 + offset);
            // Strict unless the small design is already saturated.
            let (gain, before) = (oc_dual_tte(&large, better).unwrap().p_go.get(), oc_dual_tte(&small, better).unwrap().p_go.get());
            prop_assert!(gain > before || (gain >= before && before > 1.0 - 1e-12));
            let (loss, before) = (oc_dual_tte(&large, worse).unwrap().p_go.get(), oc_dual_tte(&small, worse).unwrap().p_go.get());
            prop_assert!(loss < before || (loss <= before && before < 1e-12));
        }
    }
}
