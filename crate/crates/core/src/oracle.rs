//! Monte Carlo re-derivation of operating characteristics.
//!
//! Every replicate owns a fixed window of a ChaCha8 keystream selected by
//! `(seed, scenario)` and positioned by the replicate index, so counts are
//! identical for any chunking or thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::binary::ResponderRule;
use crate::decision::{OperatingCharacteristics, Outcome};
use crate::distributions::{normal_quantile_unchecked, Probability};
use crate::error::{invalid, Result};
use crate::tte::EstimateRule;

pub const DEFAULT_REPLICATES: u64 = 100_000;
pub const MIN_REPLICATES: u64 = 1_000;

const CHUNK: u64 = 4_096;
/// 32-bit words consumed per uniform draw.
const WORDS_PER_DRAW: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub n_replicates: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(n_replicates: u64, seed: u64) -> Result<Self> {
        if n_replicates < MIN_REPLICATES {
            return Err(invalid(format!(
                "at least {MIN_REPLICATES} replicates are required, got {n_replicates}"
            )));
        }
        Ok(Self { n_replicates, seed })
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { n_replicates: DEFAULT_REPLICATES, seed: 42 }
    }
}

/// Exact category counts from a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutcomeCounts {
    pub go: u64,
    pub nogo: u64,
    pub inconclusive: u64,
}

impl OutcomeCounts {
    fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Go => self.go += 1,
            Outcome::NoGo => self.nogo += 1,
            Outcome::Inconclusive => self.inconclusive += 1,
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            go: self.go + other.go,
            nogo: self.nogo + other.nogo,
            inconclusive: self.inconclusive + other.inconclusive,
        }
    }

    pub fn total(&self) -> u64 {
        self.go + self.nogo + self.inconclusive
    }

    pub fn get(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::Go => self.go,
            Outcome::NoGo => self.nogo,
            Outcome::Inconclusive => self.inconclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedOc {
    pub counts: OutcomeCounts,
    pub oc: OperatingCharacteristics,
    pub n_replicates: u64,
}

impl SimulatedOc {
    fn from_counts(true_effect: f64, counts: OutcomeCounts) -> Self {
        let n = counts.total() as f64;
        let frac = |c: u64| Probability::clamped(c as f64 / n);
        Self {
            counts,
            oc: OperatingCharacteristics {
                true_effect,
                p_go: frac(counts.go),
                p_nogo: frac(counts.nogo),
                p_inconclusive: frac(counts.inconclusive),
            },
            n_replicates: counts.total(),
        }
    }

    /// Standard error of the simulated proportion for `outcome`.
    pub fn standard_error(&self, outcome: Outcome) -> f64 {
        let p = self.oc.get(outcome).get();
        (p * (1.0 - p) / self.n_replicates as f64).sqrt()
    }
}

/// Monte Carlo standard error of a proportion `p` at `n_replicates`.
pub fn binomial_se(p: f64, n_replicates: u64) -> f64 {
    (p * (1.0 - p) / n_replicates as f64).sqrt()
}

/// Agreement of one cell: `|analytic - simulated| <= k · SE(analytic)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCheck {
    pub outcome: Outcome,
    pub analytic: f64,
    pub simulated: f64,
    pub se: f64,
    pub pass: bool,
}

pub fn compare_cells(analytic: &OperatingCharacteristics, sim: &SimulatedOc, k: f64) -> [CellCheck; 3] {
    [Outcome::Go, Outcome::NoGo, Outcome::Inconclusive].map(|outcome| {
        let a = analytic.get(outcome).get();
        let s = sim.oc.get(outcome).get();
        let se = binomial_se(a, sim.n_replicates);
        CellCheck { outcome, analytic: a, simulated: s, se, pass: (a - s).abs() <= k * se }
    })
}

#[inline]
fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

/// Runs `n_replicates` replicates, each drawing `draws_per_replicate` uniforms.
fn run<F>(cfg: &SimulationConfig, scenario: u64, draws_per_replicate: u64, replicate: F) -> OutcomeCounts
where
    F: Fn(&mut ChaCha8Rng) -> Outcome + Sync,
{
    let chunks = cfg.n_replicates.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(cfg.n_replicates);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(scenario);
            rng.set_word_pos(u128::from(start) * u128::from(draws_per_replicate * WORDS_PER_DRAW));
            let mut counts = OutcomeCounts::default();
            for _ in start..end {
                counts.record(replicate(&mut rng));
            }
            counts
        })
        .reduce(OutcomeCounts::default, OutcomeCounts::merge)
}

/// Simulates `log θ̂ ~ Normal(log θ, σ²/n)` and applies the design's rule.
pub fn simulate_tte_oc<R: EstimateRule>(
    rule: &R,
    true_hr: f64,
    cfg: &SimulationConfig,
    scenario: u64,
) -> Result<SimulatedOc> {
    if !(true_hr.is_finite() && true_hr > 0.0) {
        return Err(invalid(format!("true hazard ratio must be positive, got {true_hr}")));
    }
    let log_true = true_hr.ln();
    let sd = rule.log_sd();
    let counts = run(cfg, scenario, 1, |rng| {
        let z = normal_quantile_unchecked(uniform_open(rng));
        rule.classify((log_true + sd * z).exp())
    });
    Ok(SimulatedOc::from_counts(true_hr, counts))
}

/// Simulates `R ~ Binomial(n, p)` as a sum of Bernoulli draws and applies the design's rule.
pub fn simulate_binary_oc<R: ResponderRule>(
    rule: &R,
    true_orr: f64,
    cfg: &SimulationConfig,
    scenario: u64,
) -> Result<SimulatedOc> {
    if !(true_orr > 0.0 && true_orr < 1.0) {
        return Err(invalid(format!("true response rate must lie in (0, 1), got {true_orr}")));
    }
    let n = rule.sample_size();
    let table: Vec<Outcome> = (0..=n).map(|r| rule.classify(r)).collect();
    let counts = run(cfg, scenario, n, |rng| {
        let responders = (0..n).filter(|_| uniform_open(rng) < true_orr).count();
        table[responders]
    });
    Ok(SimulatedOc::from_counts(true_orr, counts))
}
