//! Decision outcomes shared by all design types.

use std::fmt;

use crate::distributions::Probability;

/// The four outcomes of crossing a statistical and a clinical criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionTag {
    /// Significant and relevant.
    Go,
    /// Neither significant nor relevant.
    NoGo,
    /// Significant, but the estimate misses the decision value (case 3).
    InconclusiveSigNotRelevant,
    /// The estimate reaches the decision value, but it is not significant (case 4).
    InconclusiveRelevantNotSig,
}

impl DecisionTag {
    pub fn label(self) -> &'static str {
        match self {
            DecisionTag::Go => "GO",
            DecisionTag::NoGo => "NO-GO",
            DecisionTag::InconclusiveSigNotRelevant => "INCONCLUSIVE (case 3)",
            DecisionTag::InconclusiveRelevantNotSig => "INCONCLUSIVE (case 4)",
        }
    }

    /// Number of the cell in the two-by-two outcome table.
    pub fn case_number(self) -> u8 {
        match self {
            DecisionTag::NoGo => 1,
            DecisionTag::Go => 2,
            DecisionTag::InconclusiveSigNotRelevant => 3,
            DecisionTag::InconclusiveRelevantNotSig => 4,
        }
    }

    pub fn is_inconclusive(self) -> bool {
        matches!(
            self,
            DecisionTag::InconclusiveSigNotRelevant | DecisionTag::InconclusiveRelevantNotSig
        )
    }
}

impl fmt::Display for DecisionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub tag: DecisionTag,
    pub significant: bool,
    pub relevant: bool,
}

impl Decision {
    pub fn from_criteria(significant: bool, relevant: bool) -> Self {
        let tag = match (significant, relevant) {
            (true, true) => DecisionTag::Go,
            (false, false) => DecisionTag::NoGo,
            (true, false) => DecisionTag::InconclusiveSigNotRelevant,
            (false, true) => DecisionTag::InconclusiveRelevantNotSig,
        };
        Self { tag, significant, relevant }
    }
}

/// Three-way outcome used when tallying operating characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Go,
    NoGo,
    Inconclusive,
}

impl From<DecisionTag> for Outcome {
    fn from(tag: DecisionTag) -> Self {
        match tag {
            DecisionTag::Go => Outcome::Go,
            DecisionTag::NoGo => Outcome::NoGo,
            _ => Outcome::Inconclusive,
        }
    }
}

/// GO / NO-GO / inconclusive probabilities at one true effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingCharacteristics {
    pub true_effect: f64,
    pub p_go: Probability,
    pub p_nogo: Probability,
    pub p_inconclusive: Probability,
}

impl OperatingCharacteristics {
    /// Builds a row from the GO and NO-GO probabilities; inconclusive is the remainder.
    pub(crate) fn from_go_nogo(true_effect: f64, p_go: f64, p_nogo: f64) -> Self {
        let p_inconclusive = (1.0 - p_go - p_nogo).max(0.0);
        Self {
            true_effect,
            p_go: Probability::clamped(p_go),
            p_nogo: Probability::clamped(p_nogo),
            p_inconclusive: Probability::clamped(p_inconclusive),
        }
    }

    pub fn total(&self) -> f64 {
        self.p_go.get() + self.p_nogo.get() + self.p_inconclusive.get()
    }

    pub fn get(&self, outcome: Outcome) -> Probability {
        match outcome {
            Outcome::Go => self.p_go,
            Outcome::NoGo => self.p_nogo,
            Outcome::Inconclusive => self.p_inconclusive,
        }
    }
}

/// Rounds half away from zero to `digits` decimals, as tables are printed.
pub fn round_half_away(x: f64, digits: u32) -> f64 {
    let scale = 10f64.powi(digits as i32);
    // f64::round already rounds half away from zero.
    (x * scale).round() / scale
}
