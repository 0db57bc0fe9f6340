//! Single-stage three-outcome designs for a binary endpoint.
//!
//! GO when `R >= r_go`, NO-GO when `R <= r_nogo`, inconclusive in between.
//! A design is feasible for `(p0, p1, α, β, η, π)` when
//!
//! * `P(R >= r_go | p0) <= α` and `P(R >= r_go | p1) >= π`,
//! * `P(R <= r_nogo | p1) <= β` and `P(R <= r_nogo | p0) >= η`.

use crate::binary::ResponderRule;
use crate::decision::{OperatingCharacteristics, Outcome};
use crate::distributions::{binomial_cdf, binomial_tail};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeOutcomeConstraints {
    pub p0: f64,
    pub p1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub pi: f64,
}

impl ThreeOutcomeConstraints {
    pub fn new(p0: f64, p1: f64, alpha: f64, beta: f64, eta: f64, pi: f64) -> Result<Self> {
        for (name, v) in [("p0", p0), ("p1", p1), ("alpha", alpha), ("beta", beta), ("eta", eta), ("pi", pi)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if p0 >= p1 {
            return Err(invalid(format!("p0 = {p0} must be below p1 = {p1}")));
        }
        Ok(Self { p0, p1, alpha, beta, eta, pi })
    }
}

/// Per-constraint probabilities of a candidate design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub go_under_p0: f64,
    pub go_under_p1: f64,
    pub nogo_under_p0: f64,
    pub nogo_under_p1: f64,
}

impl ConstraintCheck {
    pub fn satisfies(&self, c: &ThreeOutcomeConstraints) -> bool {
        self.go_under_p0 <= c.alpha
            && self.nogo_under_p1 <= c.beta
            && self.nogo_under_p0 >= c.eta
            && self.go_under_p1 >= c.pi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeOutcomeDesign {
    pub n: u64,
    pub r_go: u64,
    pub r_nogo: u64,
    pub constraints: ThreeOutcomeConstraints,
}

impl ThreeOutcomeDesign {
    pub fn new(n: u64, r_nogo: u64, r_go: u64, constraints: ThreeOutcomeConstraints) -> Result<Self> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        if !(r_nogo < r_go && r_go <= n) {
            return Err(invalid(format!(
                "boundaries must satisfy r_nogo < r_go <= n, got r_nogo = {r_nogo}, r_go = {r_go}, n = {n}"
            )));
        }
        Ok(Self { n, r_go, r_nogo, constraints })
    }

    pub fn check(&self) -> ConstraintCheck {
        let c = &self.constraints;
        let tail = |p| binomial_tail(self.n, p, self.r_go).expect("r_go <= n").get();
        let head = |p| binomial_cdf(self.n, p, self.r_nogo).expect("n >= 1").get();
        ConstraintCheck {
            go_under_p0: tail(c.p0),
            go_under_p1: tail(c.p1),
            nogo_under_p0: head(c.p0),
            nogo_under_p1: head(c.p1),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.check().satisfies(&self.constraints)
    }
}

/// GO / NO-GO / inconclusive probabilities by exact binomial sums.
pub fn three_outcome_oc(design: &ThreeOutcomeDesign, true_orr: f64) -> Result<OperatingCharacteristics> {
    if !(true_orr > 0.0 && true_orr < 1.0) {
        return Err(invalid(format!("true response rate must lie in (0, 1), got {true_orr}")));
    }
    let p_go = binomial_tail(design.n, true_orr, design.r_go)?.get();
    let p_nogo = binomial_cdf(design.n, true_orr, design.r_nogo)?.get();
    Ok(OperatingCharacteristics::from_go_nogo(true_orr, p_go, p_nogo))
}

/// All feasible `(r_nogo, r_go)` pairs at sample size `n` that leave at least
/// one inconclusive responder count, ordered by `r_go` ascending then
/// `r_nogo` descending.
pub fn feasible_boundaries(constraints: &ThreeOutcomeConstraints, n: u64) -> Vec<(u64, u64)> {
    let c = constraints;
    let tail = |p: f64, r: u64| binomial_tail(n, p, r).expect("r <= n + 1").get();
    let head = |p: f64, r: u64| binomial_cdf(n, p, r).expect("n >= 1").get();

    let go_ok: Vec<bool> = (0..=n).map(|r| tail(c.p0, r) <= c.alpha && tail(c.p1, r) >= c.pi).collect();
    let nogo_ok: Vec<bool> = (0..=n).map(|r| head(c.p1, r) <= c.beta && head(c.p0, r) >= c.eta).collect();

    let mut pairs = Vec::new();
    for r_go in 2..=n {
        if !go_ok[r_go as usize] {
            continue;
        }
        for r_nogo in (0..=r_go - 2).rev() {
            if nogo_ok[r_nogo as usize] {
                pairs.push((r_nogo, r_go));
            }
        }
    }
    pairs
}

/// Result of the minimal sample size search.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeOutcomeSearch {
    pub design: ThreeOutcomeDesign,
    /// Every feasible `(r_nogo, r_go)` pair at the chosen `n`, the winner first.
    pub feasible_pairs: Vec<(u64, u64)>,
}

/// Smallest `n` with a feasible design. Among feasible pairs at that `n` the
/// smallest `r_go` wins, then the largest `r_nogo`.
pub fn find_three_outcome_design(constraints: &ThreeOutcomeConstraints, n_max: u64) -> Result<ThreeOutcomeSearch> {
    for n in 1..=n_max {
        let pairs = feasible_boundaries(constraints, n);
        if let Some(&(r_nogo, r_go)) = pairs.first() {
            let design = ThreeOutcomeDesign::new(n, r_nogo, r_go, *constraints)?;
            debug_assert!(design.is_feasible());
            return Ok(ThreeOutcomeSearch { design, feasible_pairs: pairs });
        }
    }
    Err(Error::Infeasible(format!("no feasible three-outcome design with n <= {n_max}")))
}

impl ResponderRule for ThreeOutcomeDesign {
    fn sample_size(&self) -> u64 {
        self.n
    }

    fn classify(&self, responders: u64) -> Outcome {
        if responders >= self.r_go {
            Outcome::Go
        } else if responders <= self.r_nogo {
            Outcome::NoGo
        } else {
            Outcome::Inconclusive
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example() -> ThreeOutcomeConstraints {
        ThreeOutcomeConstraints::new(0.075, 0.275, 0.05, 0.1, 0.8, 0.9).unwrap()
    }

    /// Direct pmf summation with the coefficient multiplied out.
    fn pmf(n: u64, p: f64, k: u64) -> f64 {
        let mut c = 1.0;
        for i in 0..k {
            c *= (n - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    #[test]
    fn oc_golden() {
        let d = ThreeOutcomeDesign::new(27, 3, 5, example()).unwrap();
        let oc = three_outcome_oc(&d, 0.075).unwrap();
        assert!((oc.p_go.get() - 0.048).abs() < 1e-3);
        assert!((oc.p_nogo.get() - 0.860).abs() < 1e-3);
        assert!((oc.p_inconclusive.get() - 0.092).abs() < 1e-3);
        let oc = three_outcome_oc(&d, 0.275).unwrap();
        assert!((oc.p_go.get() - 0.901).abs() < 1e-3);
        assert!((oc.p_nogo.get() - 0.038).abs() < 1e-3);
        assert!((oc.p_inconclusive.get() - 0.062).abs() < 1e-3);
        let direct: f64 = (0..=3).map(|k| pmf(27, 0.175, k)).sum();
        assert!((three_outcome_oc(&d, 0.175).unwrap().p_nogo.get() - direct).abs() < 1e-12);
    }

    #[test]
    fn search_golden() {
        let found = find_three_outcome_design(&example(), 100).unwrap();
        assert_eq!((found.design.n, found.design.r_nogo, found.design.r_go), (27, 3, 5));
        assert_eq!(found.feasible_pairs, vec![(3, 5)]);

        // Re-check all four constraints with independent pmf sums.
        let c = example();
        let go = |p| (5..=27).map(|k| pmf(27, p, k)).sum::<f64>();
        let nogo = |p| (0..=3).map(|k| pmf(27, p, k)).sum::<f64>();
        assert!(go(c.p0) <= c.alpha && go(c.p1) >= c.pi);
        assert!(nogo(c.p1) <= c.beta && nogo(c.p0) >= c.eta);

        assert!(find_three_outcome_design(&example(), 26).is_err());
        assert!(ThreeOutcomeConstraints::new(0.2, 0.2, 0.05, 0.1, 0.8, 0.9).is_err());
    }

    #[test]
    fn boundary_validation() {
        assert!(ThreeOutcomeDesign::new(27, 5, 5, example()).is_err());
        assert!(ThreeOutcomeDesign::new(27, 3, 28, example()).is_err());
        assert!(!ThreeOutcomeDesign::new(27, 3, 6, example()).unwrap().is_feasible());
    }

    proptest! {
        #[test]
        fn oc_partitions(n in 1u64..80, a in 0u64..80, b in 0u64..80, p in 0.001f64..0.999) {
            let (lo, hi) = (a.min(b) % n, a.max(b) % n + 1);
            prop_assume!(lo < hi);
            let d = ThreeOutcomeDesign::new(n, lo, hi, example()).unwrap();
            prop_assert!((three_outcome_oc(&d, p).unwrap().total() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn tighter_constraints_never_shrink_n(da in 0.0f64..0.03, db in 0.0f64..0.05,
                                               de in 0.0f64..0.1, dp in 0.0f64..0.05) {
            let base = example();
            let tight = ThreeOutcomeConstraints::new(
                base.p0, base.p1, base.alpha - da, base.beta - db, base.eta + de, base.pi + dp,
            ).unwrap();
            let n_base = find_three_outcome_design(&base, 200).unwrap().design.n;
            if let Ok(found) = find_three_outcome_design(&tight, 200) {
                prop_assert!(found.design.n >= n_base);
                prop_assert!(found.design.is_feasible());
            }
        }
    }
}
