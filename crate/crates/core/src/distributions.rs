//! Probability primitives used by every design: the standard normal,
//! the binomial and the beta distribution.
//!
//! All functions are pure. Quantiles are found by bracketed bisection
//! against the corresponding CDF so that only the CDFs need validating.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{invalid, Result};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(invalid(format!("probability {value} outside [0, 1]")))
        }
    }

    /// Clamps rounding overshoot into `[0, 1]`. Only for values that are
    /// probabilities by construction.
    pub(crate) fn clamped(value: f64) -> Self {
        Self(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Shape parameters of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    a: f64,
    b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
            return Err(invalid(format!("beta shapes must be positive, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    /// Conjugate update with `successes` out of `trials` Bernoulli observations.
    pub fn update(&self, successes: u64, trials: u64) -> Self {
        debug_assert!(successes <= trials);
        Self {
            a: self.a + successes as f64,
            b: self.b + (trials - successes) as f64,
        }
    }
}

// ---------------------------------------------------------------------------
// Standard normal
// ---------------------------------------------------------------------------

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Switch point between the power series and the Mills-ratio continued fraction.
const NORMAL_SERIES_LIMIT: f64 = 3.0;

pub(crate) fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Upper tail `1 - Φ(x)` for `x >= 0`.
fn normal_upper_tail(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x > 40.0 {
        return 0.0;
    }
    if x <= NORMAL_SERIES_LIMIT {
        // Φ(x) - 1/2 = φ(x) · Σ x^(2k+1) / (2k+1)!!
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 1.0;
        while term.abs() > 1e-17 * sum.abs() {
            term *= x2 / (2.0 * k + 1.0);
            sum += term;
            k += 1.0;
        }
        0.5 - std_normal_pdf(x) * sum
    } else {
        // Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + ...)))), modified Lentz.
        const TINY: f64 = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..2000 {
            let a = k as f64;
            d = x + a * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = x + a / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        std_normal_pdf(x) / f
    }
}

/// Standard normal CDF Φ(x).
pub fn std_normal_cdf(x: f64) -> Result<Probability> {
    if !x.is_finite() {
        return Err(invalid(format!("normal CDF argument must be finite, got {x}")));
    }
    Ok(Probability::clamped(normal_cdf_unchecked(x)))
}

pub(crate) fn normal_cdf_unchecked(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 - normal_upper_tail(x)
    } else {
        normal_upper_tail(-x)
    }
}

/// Inverse of [`std_normal_cdf`] for `0 < p < 1`, by bisection.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("normal quantile needs 0 < p < 1, got {p}")));
    }
    Ok(normal_quantile_unchecked(p))
}

pub(crate) fn normal_quantile_unchecked(p: f64) -> f64 {
    // Φ(±38.5) is beyond the smallest positive double.
    let (mut lo, mut hi) = (-38.5_f64, 38.5_f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_unchecked(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper quantile `z_α`, i.e. the `100(1-α)%` quantile.
pub fn z_upper(alpha: f64) -> Result<f64> {
    std_normal_quantile(1.0 - alpha)
}

// ---------------------------------------------------------------------------
// Gamma / beta functions
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, with reflection below 1/2).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

// ---------------------------------------------------------------------------
// Binomial
// ---------------------------------------------------------------------------

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial pmf `P(R = k)`, evaluated in log space.
pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let ln_pmf = ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p();
    ln_pmf.exp()
}

fn check_binomial(n: u64, p: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("binomial size must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("binomial probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Upper tail `P(R >= r)` for `R ~ Binomial(n, p)`, `0 <= r <= n + 1`.
pub fn binomial_tail(n: u64, p: f64, r: u64) -> Result<Probability> {
    check_binomial(n, p)?;
    if r > n + 1 {
        return Err(invalid(format!("tail index {r} exceeds n + 1 = {}", n + 1)));
    }
    if r == 0 {
        return Ok(Probability(1.0));
    }
    let tail: f64 = (r..=n).map(|k| binomial_pmf(n, p, k)).sum();
    Ok(Probability::clamped(tail))
}

/// Lower tail `P(R <= r)`.
pub fn binomial_cdf(n: u64, p: f64, r: u64) -> Result<Probability> {
    check_binomial(n, p)?;
    if r >= n {
        return Ok(Probability(1.0));
    }
    let head: f64 = (0..=r).map(|k| binomial_pmf(n, p, k)).sum();
    Ok(Probability::clamped(head))
}

// ---------------------------------------------------------------------------
// Beta
// ---------------------------------------------------------------------------

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 10_000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

pub(crate) fn beta_cdf_unchecked(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    // The fraction converges quickly only below the mean-like switch point.
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_continued_fraction(a, b, x) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b).clamp(0.0, 1.0)
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_cdf(shape: BetaParams, x: f64) -> Result<Probability> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("beta CDF argument {x} outside [0, 1]")));
    }
    Ok(Probability(beta_cdf_unchecked(shape.a, shape.b, x)))
}

/// Upper tail `P(X >= x)`, computed without cancellation when it is small.
pub fn beta_sf(shape: BetaParams, x: f64) -> Result<Probability> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("beta CDF argument {x} outside [0, 1]")));
    }
    if x <= 0.0 {
        return Ok(Probability(1.0));
    }
    if x >= 1.0 {
        return Ok(Probability(0.0));
    }
    Ok(Probability(beta_cdf_unchecked(shape.b, shape.a, 1.0 - x)))
}

/// Beta density; infinite at an endpoint where the matching shape is below one.
pub fn beta_pdf(shape: BetaParams, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("beta density argument {x} outside [0, 1]")));
    }
    let (a, b) = (shape.a, shape.b);
    if (x == 0.0 && a < 1.0) || (x == 1.0 && b < 1.0) {
        return Ok(f64::INFINITY);
    }
    if (x == 0.0 && a > 1.0) || (x == 1.0 && b > 1.0) {
        return Ok(0.0);
    }
    let ln_density = (a - 1.0) * if x == 0.0 { 0.0 } else { x.ln() }
        + (b - 1.0) * if x == 1.0 { 0.0 } else { (-x).ln_1p() }
        - ln_beta(a, b);
    Ok(ln_density.exp())
}

/// Inverse of [`beta_cdf`] for `0 < p < 1`, by bisection on `[0, 1]`.
pub fn beta_quantile(shape: BetaParams, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("beta quantile needs 0 < p < 1, got {p}")));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // Small shapes put most of the mass within 1e-12 of an endpoint, so the
    // stopping rule is on the CDF residual and on float resolution, not on width.
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let cdf = beta_cdf_unchecked(shape.a, shape.b, mid);
        if (cdf - p).abs() < 1e-15 {
            return Ok(mid);
        }
        if cdf < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let err_lo = (beta_cdf_unchecked(shape.a, shape.b, lo) - p).abs();
    let err_hi = (beta_cdf_unchecked(shape.a, shape.b, hi) - p).abs();
    Ok(if err_lo <= err_hi { lo } else { hi })
}

pub fn beta_median(shape: BetaParams) -> f64 {
    beta_quantile(shape, 0.5).expect("0.5 is an interior probability")
}
