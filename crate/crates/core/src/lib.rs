//! Design engine for phase II dual-criterion trials.
//!
//! A dual-criterion design declares success (GO) only when the result is
//! statistically significant *and* the effect estimate reaches a clinically
//! motivated decision value. This crate sizes such designs, derives their
//! decision boundaries and computes GO / NO-GO / inconclusive operating
//! characteristics, for
//!
//! * time-to-event endpoints analysed on the log hazard ratio scale with a
//!   normal approximation ([`tte`]), next to standard and precision designs;
//! * single-arm binary endpoints analysed with a conjugate Beta-binomial
//!   model ([`binary`]), next to single-stage three-outcome designs
//!   ([`three_outcome`]).
//!
//! [`oracle`] re-derives every operating characteristic by seeded Monte
//! Carlo simulation, and [`cli`] drives the `dualcrit` binary.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binary;
pub mod cli;
pub mod decision;
pub mod distributions;
pub mod error;
pub mod oracle;
pub mod three_outcome;
pub mod tte;

pub use decision::{Decision, DecisionTag, OperatingCharacteristics};
pub use error::{Error, Result};
