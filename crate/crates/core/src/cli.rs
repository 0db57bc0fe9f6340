//! Command-line front end for the `dualcrit` binary.
//!
//! Designs are described by flat `key = value` config files (one key per
//! line, `#` starts a comment). `--set key=value` overrides a file value.
//! Every command renders a [`ResultTable`]; `--csv` writes the same data at
//! full precision.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::binary::{
    self, grid_search_trace, min_sample_size_grid, posterior_summary, BinaryCriteria,
    DualCriterionBinaryDesign, ResponderBoundaries, ResponderRule,
};
use crate::decision::{round_half_away, OperatingCharacteristics, Outcome};
use crate::distributions::{beta_cdf, beta_pdf, BetaParams};
use crate::error::Error;
use crate::oracle::{
    compare_cells, simulate_binary_oc, simulate_tte_oc, SimulatedOc, SimulationConfig,
    DEFAULT_REPLICATES,
};
use crate::three_outcome::{
    find_three_outcome_design, three_outcome_oc, ThreeOutcomeConstraints, ThreeOutcomeDesign,
};
use crate::tte::{
    self, implied_interval_factor, min_events_dual, one_sided_p_value, precision_events,
    standard_design_events, DualCriterionTteDesign, PrecisionTteDesign, StandardTteDesign,
    StandardTteRun,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

/// Agreement band for `verify`, in Monte Carlo standard errors.
pub const VERIFY_SE_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Design(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Design(Error::Infeasible(_)) => EXIT_INFEASIBLE,
            _ => EXIT_CONFIG,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Tte,
    Binary,
}

impl Endpoint {
    fn as_str(self) -> &'static str {
        match self {
            Endpoint::Tte => "tte",
            Endpoint::Binary => "binary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    Dual,
    Standard,
    Precision,
    ThreeOutcome,
}

impl DesignKind {
    fn as_str(self) -> &'static str {
        match self {
            DesignKind::Dual => "dual",
            DesignKind::Standard => "standard",
            DesignKind::Precision => "precision",
            DesignKind::ThreeOutcome => "three_outcome",
        }
    }
}

/// Parsed contents of a design config file.
///
/// Response rates are proportions (`0.075`, not `7.5`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DesignConfig {
    pub endpoint: Option<Endpoint>,
    pub design_kind: Option<DesignKind>,
    pub label: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub null_value: Option<f64>,
    pub decision_value: Option<f64>,
    pub alt_value: Option<f64>,
    pub sigma: Option<f64>,
    pub n: Option<u64>,
    pub factor: Option<f64>,
    pub level: Option<f64>,
    pub prior_a: Option<f64>,
    pub prior_b: Option<f64>,
    pub prior_mean: Option<f64>,
    pub sig_prob: Option<f64>,
    pub n_max: Option<u64>,
    pub p0: Option<f64>,
    pub p1: Option<f64>,
    pub eta: Option<f64>,
    pub pi: Option<f64>,
    pub r_go: Option<u64>,
    pub r_nogo: Option<u64>,
    pub grid: Option<Vec<f64>>,
}

/// Config keys in the order `--dump-config` writes them.
pub const CONFIG_KEYS: [&str; 24] = [
    "endpoint", "design_kind", "label", "alpha", "beta", "null_value", "decision_value",
    "alt_value", "sigma", "n", "factor", "level", "prior_a", "prior_b", "prior_mean", "sig_prob",
    "n_max", "p0", "p1", "eta", "pi", "r_go", "r_nogo", "grid",
];

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    let x: f64 = value
        .parse()
        .map_err(|_| config_err(format!("`{key}`: `{value}` is not a number")))?;
    if !x.is_finite() {
        return Err(config_err(format!("`{key}`: `{value}` is not finite")));
    }
    Ok(x)
}

fn parse_u64(key: &str, value: &str) -> Result<u64, CliError> {
    value
        .parse()
        .map_err(|_| config_err(format!("`{key}`: `{value}` is not a non-negative integer")))
}

/// Strips floating noise from grid arithmetic, e.g. `0.1 * 3`.
fn tidy(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// `a, b, c` or `start:stop:step` (stop inclusive).
fn parse_grid(value: &str) -> Result<Vec<f64>, CliError> {
    let value = value.trim();
    if value.is_empty() {
        return Err(config_err("`grid` is empty"));
    }
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').map(str::trim).collect();
        let [start, stop, step] = parts[..] else {
            return Err(config_err(format!("`grid`: range `{value}` must be start:stop:step")));
        };
        let (start, stop, step) = (
            parse_f64("grid", start)?,
            parse_f64("grid", stop)?,
            parse_f64("grid", step)?,
        );
        if !(step > 0.0) || stop < start {
            return Err(config_err(format!("`grid`: range `{value}` is empty")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as u64;
        if count > 1_000_000 {
            return Err(config_err("`grid`: more than a million points"));
        }
        return Ok((0..=count).map(|i| tidy(start + i as f64 * step)).collect());
    }
    value.split(',').map(|v| parse_f64("grid", v.trim())).collect()
}

impl DesignConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(config_err(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            cfg.set(key, value.trim())
                .map_err(|e| config_err(format!("line {}: {}", lineno + 1, strip_prefix(&e))))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::parse(&text).map_err(|e| config_err(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| config_err(format!("override `{assignment}` must be key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let f = |v: &str| parse_f64(key, v).map(Some);
        let u = |v: &str| parse_u64(key, v).map(Some);
        match key {
            "endpoint" => {
                self.endpoint = Some(match value {
                    "tte" => Endpoint::Tte,
                    "binary" => Endpoint::Binary,
                    _ => return Err(config_err(format!("unknown endpoint `{value}` (tte, binary)"))),
                })
            }
            "design_kind" => {
                self.design_kind = Some(match value {
                    "dual" => DesignKind::Dual,
                    "standard" => DesignKind::Standard,
                    "precision" => DesignKind::Precision,
                    "three_outcome" => DesignKind::ThreeOutcome,
                    _ => {
                        return Err(config_err(format!(
                            "unknown design_kind `{value}` (dual, standard, precision, three_outcome)"
                        )))
                    }
                })
            }
            "label" => self.label = Some(value.to_string()),
            "alpha" => self.alpha = f(value)?,
            "beta" => self.beta = f(value)?,
            "null_value" => self.null_value = f(value)?,
            "decision_value" => self.decision_value = f(value)?,
            "alt_value" => self.alt_value = f(value)?,
            "sigma" => self.sigma = f(value)?,
            "n" => self.n = u(value)?,
            "factor" => self.factor = f(value)?,
            "level" => self.level = f(value)?,
            "prior_a" => self.prior_a = f(value)?,
            "prior_b" => self.prior_b = f(value)?,
            "prior_mean" => self.prior_mean = f(value)?,
            "sig_prob" => self.sig_prob = f(value)?,
            "n_max" => self.n_max = u(value)?,
            "p0" => self.p0 = f(value)?,
            "p1" => self.p1 = f(value)?,
            "eta" => self.eta = f(value)?,
            "pi" => self.pi = f(value)?,
            "r_go" => self.r_go = u(value)?,
            "r_nogo" => self.r_nogo = u(value)?,
            "grid" => self.grid = Some(parse_grid(value)?),
            _ => return Err(config_err(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<String> {
        let f = |x: Option<f64>| x.map(|v| v.to_string());
        let u = |x: Option<u64>| x.map(|v| v.to_string());
        match key {
            "endpoint" => self.endpoint.map(|e| e.as_str().to_string()),
            "design_kind" => self.design_kind.map(|k| k.as_str().to_string()),
            "label" => self.label.clone(),
            "alpha" => f(self.alpha),
            "beta" => f(self.beta),
            "null_value" => f(self.null_value),
            "decision_value" => f(self.decision_value),
            "alt_value" => f(self.alt_value),
            "sigma" => f(self.sigma),
            "n" => u(self.n),
            "factor" => f(self.factor),
            "level" => f(self.level),
            "prior_a" => f(self.prior_a),
            "prior_b" => f(self.prior_b),
            "prior_mean" => f(self.prior_mean),
            "sig_prob" => f(self.sig_prob),
            "n_max" => u(self.n_max),
            "p0" => f(self.p0),
            "p1" => f(self.p1),
            "eta" => f(self.eta),
            "pi" => f(self.pi),
            "r_go" => u(self.r_go),
            "r_nogo" => u(self.r_nogo),
            "grid" => self
                .grid
                .as_ref()
                .map(|g| g.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")),
            _ => None,
        }
    }

    /// Canonical text form; parses back to an identical config.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            if let Some(v) = self.get(key) {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }

    fn require<T>(&self, value: Option<T>, key: &str) -> Result<T, CliError> {
        value.ok_or_else(|| {
            config_err(format!(
                "missing key `{key}` for {} {} design",
                self.endpoint.map_or("?", Endpoint::as_str),
                self.design_kind.map_or("?", DesignKind::as_str)
            ))
        })
    }

    pub fn grid(&self) -> Result<&[f64], CliError> {
        match &self.grid {
            Some(g) if !g.is_empty() => Ok(g),
            _ => Err(config_err("a nonempty `grid` of true effects is required")),
        }
    }
}

fn strip_prefix(e: &CliError) -> String {
    match e {
        CliError::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Designs
// ---------------------------------------------------------------------------

/// A fully specified design built from a config.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    TteDual(DualCriterionTteDesign),
    TteStandard(StandardTteRun),
    TtePrecision(PrecisionTteDesign),
    BinaryDual(DualCriterionBinaryDesign),
    ThreeOutcome(ThreeOutcomeDesign),
}

fn binary_criteria(cfg: &DesignConfig) -> Result<BinaryCriteria, CliError> {
    let prior_b = cfg.prior_b.unwrap_or(1.0);
    let prior = match (cfg.prior_a, cfg.prior_mean) {
        (Some(a), None) => BetaParams::new(a, prior_b)?,
        (None, Some(mean)) => binary::prior_from_mean(mean, prior_b)?,
        (Some(_), Some(_)) => return Err(config_err("give either `prior_a` or `prior_mean`, not both")),
        (None, None) => return Err(config_err("missing key `prior_a` (or `prior_mean`) for binary dual design")),
    };
    Ok(BinaryCriteria::new(
        prior,
        cfg.require(cfg.null_value, "null_value")?,
        cfg.require(cfg.sig_prob, "sig_prob")?,
        cfg.require(cfg.decision_value, "decision_value")?,
    )?)
}

fn three_outcome_constraints(cfg: &DesignConfig) -> Result<ThreeOutcomeConstraints, CliError> {
    Ok(ThreeOutcomeConstraints::new(
        cfg.require(cfg.p0, "p0")?,
        cfg.require(cfg.p1, "p1")?,
        cfg.require(cfg.alpha, "alpha")?,
        cfg.require(cfg.beta, "beta")?,
        cfg.require(cfg.eta, "eta")?,
        cfg.require(cfg.pi, "pi")?,
    )?)
}

impl Design {
    pub fn from_config(cfg: &DesignConfig) -> Result<Self, CliError> {
        let endpoint = cfg.endpoint.ok_or_else(|| config_err("missing key `endpoint`"))?;
        let kind = cfg.design_kind.ok_or_else(|| config_err("missing key `design_kind`"))?;
        let sigma = cfg.sigma.unwrap_or(tte::DEFAULT_SIGMA);
        let null_hr = cfg.null_value.unwrap_or(1.0);
        match (endpoint, kind) {
            (Endpoint::Tte, DesignKind::Dual) => {
                let alpha = cfg.require(cfg.alpha, "alpha")?;
                let dv = cfg.require(cfg.decision_value, "decision_value")?;
                let n = match cfg.n {
                    Some(n) => n,
                    None => min_events_dual(alpha, null_hr, dv, sigma)?,
                };
                Ok(Design::TteDual(DualCriterionTteDesign::new(alpha, null_hr, dv, sigma, n)?))
            }
            (Endpoint::Tte, DesignKind::Standard) => {
                let design = StandardTteDesign::new(
                    cfg.require(cfg.alpha, "alpha")?,
                    cfg.require(cfg.beta, "beta")?,
                    null_hr,
                    cfg.require(cfg.alt_value, "alt_value")?,
                )?;
                let n = match cfg.n {
                    Some(n) => n,
                    None => standard_design_events(&design, sigma)?,
                };
                Ok(Design::TteStandard(StandardTteRun::new(design, sigma, n)?))
            }
            (Endpoint::Tte, DesignKind::Precision) => Ok(Design::TtePrecision(PrecisionTteDesign::new(
                cfg.require(cfg.factor, "factor")?,
                cfg.level.unwrap_or(tte::DEFAULT_LEVEL),
                sigma,
            )?)),
            (Endpoint::Binary, DesignKind::Dual) => {
                let criteria = binary_criteria(cfg)?;
                let n = match cfg.n {
                    Some(n) => n,
                    None => min_sample_size_grid(&criteria, cfg.n_max.unwrap_or(binary::DEFAULT_N_MAX))?,
                };
                Ok(Design::BinaryDual(criteria.with_n(n)?))
            }
            (Endpoint::Binary, DesignKind::ThreeOutcome) => {
                let constraints = three_outcome_constraints(cfg)?;
                match (cfg.n, cfg.r_nogo, cfg.r_go) {
                    (Some(n), Some(r_nogo), Some(r_go)) => {
                        Ok(Design::ThreeOutcome(ThreeOutcomeDesign::new(n, r_nogo, r_go, constraints)?))
                    }
                    (None, None, None) => {
                        let n_max = cfg.n_max.unwrap_or(binary::DEFAULT_N_MAX);
                        Ok(Design::ThreeOutcome(find_three_outcome_design(&constraints, n_max)?.design))
                    }
                    _ => Err(config_err("give all of `n`, `r_nogo`, `r_go` or none of them")),
                }
            }
            (e, k) => Err(config_err(format!(
                "design_kind `{}` is not available for endpoint `{}`",
                k.as_str(),
                e.as_str()
            ))),
        }
    }

    pub fn endpoint(&self) -> Endpoint {
        match self {
            Design::TteDual(_) | Design::TteStandard(_) | Design::TtePrecision(_) => Endpoint::Tte,
            Design::BinaryDual(_) | Design::ThreeOutcome(_) => Endpoint::Binary,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Design::TteDual(d) => format!(
                "dual-criterion design: alpha={}, DV={}, n={}",
                fmt_num(d.alpha),
                fmt_num(d.decision_hr),
                d.n_events
            ),
            Design::TteStandard(run) => format!(
                "standard design: alpha={}, beta={} (alt={}), n={}",
                fmt_num(run.design.alpha),
                fmt_num(run.design.beta),
                fmt_num(run.design.alt_hr),
                run.n_events
            ),
            Design::TtePrecision(d) => format!(
                "precision design: {}%-interval = (HR/{f}, HR*{f})",
                fmt_num(100.0 * d.level),
                f = fmt_num(d.factor)
            ),
            Design::BinaryDual(d) => format!(
                "dual-criterion design: alpha={}, DV={}, n={}",
                fmt_num(1.0 - d.criteria.sig_prob),
                fmt_num(d.criteria.decision_orr),
                d.n
            ),
            Design::ThreeOutcome(d) => format!("three-outcome design: n={}", d.n),
        }
    }

    fn no_rule(&self) -> CliError {
        config_err("a precision design has no decision rule; use `size`")
    }

    pub fn oc(&self, true_effect: f64) -> Result<OperatingCharacteristics, CliError> {
        Ok(match self {
            Design::TteDual(d) => tte::oc_dual_tte(d, true_effect)?,
            Design::TteStandard(run) => run.oc(true_effect)?,
            Design::TtePrecision(_) => return Err(self.no_rule()),
            Design::BinaryDual(d) => binary::oc_binary(d, true_effect)?,
            Design::ThreeOutcome(d) => three_outcome_oc(d, true_effect)?,
        })
    }

    /// Whether any outcome can be inconclusive.
    pub fn has_inconclusive_zone(&self) -> bool {
        match self {
            Design::TteDual(d) => d.go_threshold() != d.nogo_threshold(),
            Design::TteStandard(_) | Design::TtePrecision(_) => false,
            Design::BinaryDual(d) => !d.boundaries().inconclusive(d.n).is_empty(),
            Design::ThreeOutcome(d) => d.r_go > d.r_nogo + 1,
        }
    }

    fn oc_headers(&self) -> Result<Vec<String>, CliError> {
        let responder_headers = |b: &ResponderBoundaries, n: u64| {
            let go = b.go_from.map_or("GO: never".to_string(), |r| format!("GO: r >= {r}"));
            let nogo = b.nogo_up_to.map_or("NO-GO: never".to_string(), |r| format!("NO-GO: r <= {r}"));
            let zone = b.inconclusive(n);
            let inconclusive = match zone.end - zone.start {
                0 => "inconclusive".to_string(),
                1 => format!("inconclusive: r = {}", zone.start),
                _ => format!("inconclusive: r = {}..{}", zone.start, zone.end - 1),
            };
            vec!["true ORR (%)".to_string(), go, nogo, inconclusive]
        };
        Ok(match self {
            Design::TteDual(d) => vec![
                "true HR".into(),
                format!("GO: est <= {:.3}", round_half_away(d.go_threshold(), 3)),
                format!("NO-GO: est > {:.3}", round_half_away(d.nogo_threshold(), 3)),
                "inconclusive".into(),
            ],
            Design::TteStandard(run) => {
                let t = round_half_away(run.threshold(), 3);
                vec![
                    "true HR".into(),
                    format!("GO: est <= {t:.3}"),
                    format!("NO-GO: est > {t:.3}"),
                    "inconclusive".into(),
                ]
            }
            Design::TtePrecision(_) => return Err(self.no_rule()),
            Design::BinaryDual(d) => responder_headers(&d.boundaries(), d.n),
            Design::ThreeOutcome(d) => responder_headers(
                &ResponderBoundaries {
                    go_from: Some(d.r_go),
                    nogo_up_to: Some(d.r_nogo),
                    clinical: None,
                    statistical: None,
                },
                d.n,
            ),
        })
    }

    fn effect_label(&self, true_effect: f64) -> String {
        match self.endpoint() {
            Endpoint::Tte => fmt_effect(true_effect),
            Endpoint::Binary => fmt_effect(100.0 * true_effect),
        }
    }
}

/// Formats a parameter without floating noise.
pub fn fmt_num(x: f64) -> String {
    let t = (x * 1e10).round() / 1e10;
    format!("{t}")
}

/// Like [`fmt_num`] but always with at least one decimal.
fn fmt_effect(x: f64) -> String {
    let t = (x * 1e10).round() / 1e10;
    if t.fract() == 0.0 {
        format!("{t:.1}")
    } else {
        format!("{t}")
    }
}

// ---------------------------------------------------------------------------
// Tables and CSV
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    /// Rendered as `---`.
    Missing,
}

impl Cell {
    fn render(&self, precision: usize) -> String {
        match self {
            Cell::Num(x) => format!("{:.*}", precision, round_half_away(*x, precision as u32)),
            Cell::Text(s) => s.clone(),
            Cell::Missing => "---".to_string(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A captioned table. Without headers it renders as `label = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub caption: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub precision: usize,
}

impl ResultTable {
    fn key_value(caption: String) -> Self {
        Self { caption, headers: Vec::new(), rows: Vec::new(), precision: 3 }
    }

    fn push(&mut self, key: impl Into<String>, value: Cell) {
        self.rows.push(vec![Cell::Text(key.into()), value]);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.caption.is_empty() {
            out.push_str(&self.caption);
            out.push('\n');
        }
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|c| c.render(self.precision)).collect())
            .collect();
        if self.headers.is_empty() {
            for row in &rendered {
                let _ = writeln!(out, "{}", row.join(" = "));
            }
            return out;
        }
        let ncol = self.headers.len();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &rendered {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut line = |cells: &[String]| {
            let mut s = String::new();
            for (i, cell) in cells.iter().enumerate().take(ncol) {
                if i > 0 {
                    s.push_str("  ");
                }
                let _ = write!(s, "{:<width$}", cell, width = widths[i]);
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(&self.headers);
        for row in &rendered {
            line(row);
        }
        out
    }
}

pub const OC_CSV_HEADER: &str = "true_effect,p_go,p_nogo,p_inconclusive";

fn oc_csv_row(oc: &OperatingCharacteristics) -> String {
    format!(
        "{},{},{},{}",
        oc.true_effect,
        oc.p_go.get(),
        oc.p_nogo.get(),
        oc.p_inconclusive.get()
    )
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.into(), source })
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Text and optional CSV produced by a command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub tables: Vec<ResultTable>,
    pub csv: Option<String>,
    pub warnings: Vec<String>,
}

impl CommandOutput {
    pub fn render(&self) -> String {
        self.tables.iter().map(ResultTable::render).collect::<Vec<_>>().join("\n")
    }
}

fn threshold_cell(x: f64) -> Cell {
    Cell::Num(x)
}

/// Sample size and implied thresholds.
pub fn cmd_size(cfg: &DesignConfig) -> Result<CommandOutput, CliError> {
    let design = Design::from_config(cfg)?;
    let mut table = ResultTable::key_value(cfg.label.clone().unwrap_or_else(|| design.describe()));
    let mut warnings = Vec::new();
    let mut csv = None;
    match &design {
        Design::TteDual(d) => {
            let minimal = DualCriterionTteDesign::minimal(d.alpha, d.null_hr, d.decision_hr, d.sigma)?;
            table.push("n_min", Cell::Text(minimal.n_events.to_string()));
            table.push("estimate threshold at n_min", threshold_cell(minimal.significance_threshold()));
            if d.n_events != minimal.n_events {
                table.push("n", Cell::Text(d.n_events.to_string()));
                table.push("estimate threshold at n", threshold_cell(d.significance_threshold()));
            }
            table.push(
                "implied 95% interval factor at n",
                threshold_cell(implied_interval_factor(tte::DEFAULT_LEVEL, d.sigma, d.n_events)?),
            );
            warnings.extend(d.warning());
        }
        Design::TteStandard(run) => {
            let n = standard_design_events(&run.design, run.sigma)?;
            table.push("n", Cell::Text(n.to_string()));
            table.push(
                "estimate threshold at n",
                threshold_cell(tte::significance_threshold(run.design.alpha, run.design.null_hr, run.sigma, n)?),
            );
            if run.n_events != n {
                table.push("n (configured)", Cell::Text(run.n_events.to_string()));
                table.push("estimate threshold at configured n", threshold_cell(run.threshold()));
            }
            table.push(
                "implied 95% interval factor at n",
                threshold_cell(implied_interval_factor(tte::DEFAULT_LEVEL, run.sigma, n)?),
            );
        }
        Design::TtePrecision(d) => {
            table.push("n", Cell::Text(precision_events(d)?.to_string()));
        }
        Design::BinaryDual(d) => {
            let n_max = cfg.n_max.unwrap_or(binary::DEFAULT_N_MAX);
            let n_min = min_sample_size_grid(&d.criteria, n_max)?;
            table.push("n_min", Cell::Text(n_min.to_string()));
            let b = d.boundaries();
            table.push("n", Cell::Text(d.n.to_string()));
            let opt = |x: Option<u64>| Cell::Text(x.map_or("none".into(), |r| r.to_string()));
            table.push("minimum responders for GO", opt(b.go_from));
            table.push("clinical boundary", opt(b.clinical));
            table.push("statistical boundary", opt(b.statistical));
            if d.n < n_min {
                warnings.push(format!(
                    "n = {} is below n_min = {n_min}; relevant but non-significant outcomes are possible",
                    d.n
                ));
            }
            let mut text = String::from("n,clinical_boundary,prob_positive,median,implies_significance\n");
            for p in grid_search_trace(&d.criteria, n_max) {
                let opt_f = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    p.n,
                    p.clinical_boundary.map_or(String::new(), |r| r.to_string()),
                    opt_f(p.prob_positive),
                    opt_f(p.median),
                    p.implies_significance
                );
            }
            csv = Some(text);
        }
        Design::ThreeOutcome(d) => {
            table.push("n", Cell::Text(d.n.to_string()));
            table.push("r_nogo", Cell::Text(d.r_nogo.to_string()));
            table.push("r_go", Cell::Text(d.r_go.to_string()));
            let check = d.check();
            table.push("P(GO | p0)", Cell::Num(check.go_under_p0));
            table.push("P(NO-GO | p1)", Cell::Num(check.nogo_under_p1));
            table.push("P(NO-GO | p0)", Cell::Num(check.nogo_under_p0));
            table.push("P(GO | p1)", Cell::Num(check.go_under_p1));
            table.push("feasible", Cell::Text(if d.is_feasible() { "yes" } else { "no" }.into()));
            if cfg.n.is_none() {
                let n_max = cfg.n_max.unwrap_or(binary::DEFAULT_N_MAX);
                let found = find_three_outcome_design(&d.constraints, n_max)?;
                let pairs: Vec<String> =
                    found.feasible_pairs.iter().map(|(lo, hi)| format!("({lo}, {hi})")).collect();
                table.push("feasible (r_nogo, r_go) at n", Cell::Text(pairs.join(" ")));
            }
        }
    }
    Ok(CommandOutput { tables: vec![table], csv, warnings })
}

fn oc_table(design: &Design, caption: String, grid: &[f64]) -> Result<(ResultTable, Vec<OperatingCharacteristics>), CliError> {
    let headers = design.oc_headers()?;
    let zone = design.has_inconclusive_zone();
    let mut rows = Vec::with_capacity(grid.len());
    let mut ocs = Vec::with_capacity(grid.len());
    for &effect in grid {
        let oc = design.oc(effect)?;
        rows.push(vec![
            Cell::Text(design.effect_label(effect)),
            Cell::Num(oc.p_go.get()),
            Cell::Num(oc.p_nogo.get()),
            if zone { Cell::Num(oc.p_inconclusive.get()) } else { Cell::Missing },
        ]);
        ocs.push(oc);
    }
    Ok((ResultTable { caption, headers, rows, precision: 3 }, ocs))
}

/// Operating characteristics over the config's grid of true effects.
pub fn cmd_oc(cfg: &DesignConfig) -> Result<CommandOutput, CliError> {
    let design = Design::from_config(cfg)?;
    let caption = cfg.label.clone().unwrap_or_else(|| design.describe());
    let (table, ocs) = oc_table(&design, caption, cfg.grid()?)?;
    let mut csv = String::from(OC_CSV_HEADER);
    csv.push('\n');
    for oc in &ocs {
        csv.push_str(&oc_csv_row(oc));
        csv.push('\n');
    }
    let warnings = match &design {
        Design::TteDual(d) => d.warning().into_iter().collect(),
        _ => Vec::new(),
    };
    Ok(CommandOutput { tables: vec![table], csv: Some(csv), warnings })
}

/// Observed data for `decide`: a hazard ratio estimate or a responder count.
pub fn cmd_decide(cfg: &DesignConfig, observed: &str) -> Result<CommandOutput, CliError> {
    let design = Design::from_config(cfg)?;
    let mut table = ResultTable::key_value(String::new());
    let mut csv = None;
    match &design {
        Design::TteDual(d) => {
            let est = parse_f64("observed", observed)?;
            let decision = tte::decide_tte(d, est)?;
            let p = one_sided_p_value(d.null_hr, d.sigma, d.n_events, est)?;
            table.caption = format!(
                "{}: estimated_hr={}, p_value={:.3}",
                decision.tag,
                fmt_num(est),
                round_half_away(p, 3)
            );
            table.push("design", Cell::Text(design.describe()));
            table.push("case", Cell::Text(decision.tag.case_number().to_string()));
            table.push("one-sided p-value", Cell::Num(p));
            table.push("significance threshold", Cell::Num(d.significance_threshold()));
            table.push("decision value", Cell::Num(d.decision_hr));
            table.push("significant", yes_no(decision.significant));
            table.push("relevant", yes_no(decision.relevant));
        }
        Design::BinaryDual(d) => {
            let r = parse_u64("observed", observed)?;
            let decision = binary::decide_binary(d, r)?;
            let s = posterior_summary(d, r)?;
            table.caption = format!(
                "{}: prob_positive={:.3}, median={:.3}",
                decision.tag,
                round_half_away(s.prob_positive.get(), 3),
                round_half_away(s.median, 3)
            );
            table.push("design", Cell::Text(design.describe()));
            table.push("case", Cell::Text(decision.tag.case_number().to_string()));
            table.push(
                "posterior",
                Cell::Text(format!("Beta({}, {})", fmt_num(s.posterior.a()), fmt_num(s.posterior.b()))),
            );
            table.push("significant", yes_no(decision.significant));
            table.push("relevant", yes_no(decision.relevant));
            let mut text = String::from("x,density,cdf\n");
            for i in 1..1000 {
                let x = i as f64 / 1000.0;
                let _ = writeln!(text, "{x},{},{}", beta_pdf(s.posterior, x)?, beta_cdf(s.posterior, x)?.get());
            }
            csv = Some(text);
        }
        Design::TteStandard(run) => {
            let est = parse_f64("observed", observed)?;
            let p = one_sided_p_value(run.design.null_hr, run.sigma, run.n_events, est)?;
            let go = est <= run.threshold();
            table.caption = format!(
                "{}: estimated_hr={}, p_value={:.3}",
                if go { "GO" } else { "NO-GO" },
                fmt_num(est),
                round_half_away(p, 3)
            );
            table.push("design", Cell::Text(design.describe()));
            table.push("significance threshold", Cell::Num(run.threshold()));
        }
        Design::ThreeOutcome(d) => {
            let r = parse_u64("observed", observed)?;
            if r > d.n {
                return Err(Error::InvalidArgument(format!("{r} responders exceed n = {}", d.n)).into());
            }
            let label = match d.classify(r) {
                Outcome::Go => "GO",
                Outcome::NoGo => "NO-GO",
                Outcome::Inconclusive => "INCONCLUSIVE",
            };
            table.caption = format!("{label}: r={r}, n={}", d.n);
            table.push("design", Cell::Text(design.describe()));
        }
        Design::TtePrecision(_) => return Err(design.no_rule()),
    }
    Ok(CommandOutput { tables: vec![table], csv, warnings: Vec::new() })
}

fn yes_no(b: bool) -> Cell {
    Cell::Text(if b { "yes" } else { "no" }.into())
}

/// Stacked OC tables for designs sharing an endpoint and a grid.
pub fn cmd_compare(cfgs: &[DesignConfig]) -> Result<CommandOutput, CliError> {
    if cfgs.len() < 2 {
        return Err(config_err("compare needs at least two configs"));
    }
    let designs: Vec<Design> = cfgs.iter().map(Design::from_config).collect::<Result<_, _>>()?;
    let endpoint = designs[0].endpoint();
    if designs.iter().any(|d| d.endpoint() != endpoint) {
        return Err(config_err("compare needs configs with the same endpoint"));
    }
    let grid = cfgs[0].grid()?;
    for cfg in &cfgs[1..] {
        if cfg.grid()? != grid {
            return Err(config_err("compare needs configs with the same grid"));
        }
    }
    let mut tables = Vec::new();
    let mut csv = format!("design,{OC_CSV_HEADER}\n");
    for (i, (cfg, design)) in cfgs.iter().zip(&designs).enumerate() {
        let caption = format!("{}. {}", i + 1, cfg.label.clone().unwrap_or_else(|| design.describe()));
        let (table, ocs) = oc_table(design, caption, grid)?;
        for oc in &ocs {
            let _ = writeln!(csv, "{},{}", i + 1, oc_csv_row(oc));
        }
        tables.push(table);
    }
    Ok(CommandOutput { tables, csv: Some(csv), warnings: Vec::new() })
}

/// Go boundary shifted by a fixed offset; a negative control for `verify`.
struct ShiftedBoundaries {
    n: u64,
    go_from: Option<u64>,
    nogo_up_to: Option<u64>,
}

impl ResponderRule for ShiftedBoundaries {
    fn sample_size(&self) -> u64 {
        self.n
    }

    fn classify(&self, r: u64) -> Outcome {
        if self.go_from.is_some_and(|g| r >= g) {
            Outcome::Go
        } else if self.nogo_up_to.is_some_and(|b| r <= b) {
            Outcome::NoGo
        } else {
            Outcome::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutput {
    pub output: CommandOutput,
    pub all_pass: bool,
}

/// Analytic operating characteristics against simulation, cell by cell.
pub fn cmd_verify(
    cfg: &DesignConfig,
    sim: &SimulationConfig,
    corrupt_go_boundary: i64,
) -> Result<VerifyOutput, CliError> {
    let design = Design::from_config(cfg)?;
    let grid = cfg.grid()?;
    let shifted = |n: u64, b: ResponderBoundaries| -> Result<ShiftedBoundaries, CliError> {
        let go_from = b
            .go_from
            .map(|g| {
                g.checked_add_signed(corrupt_go_boundary)
                    .filter(|&g| g <= n + 1)
                    .ok_or_else(|| config_err("corrupted GO boundary is out of range"))
            })
            .transpose()?;
        Ok(ShiftedBoundaries { n, go_from, nogo_up_to: b.nogo_up_to })
    };
    let mut table = ResultTable {
        caption: format!(
            "verification of {}: seed={}, replicates={}",
            cfg.label.clone().unwrap_or_else(|| design.describe()),
            sim.seed,
            sim.n_replicates
        ),
        headers: ["true effect", "outcome", "analytic", "simulated", "3*SE", "result"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
        precision: 4,
    };
    let mut all_pass = true;
    for (scenario, &effect) in grid.iter().enumerate() {
        let scenario = scenario as u64;
        let analytic = design.oc(effect)?;
        let simulated: SimulatedOc = match (&design, corrupt_go_boundary) {
            (Design::TteDual(d), 0) => simulate_tte_oc(d, effect, sim, scenario)?,
            (Design::TteStandard(run), 0) => simulate_tte_oc(run, effect, sim, scenario)?,
            (Design::BinaryDual(d), 0) => simulate_binary_oc(d, effect, sim, scenario)?,
            (Design::ThreeOutcome(d), 0) => simulate_binary_oc(d, effect, sim, scenario)?,
            (Design::BinaryDual(d), _) => simulate_binary_oc(&shifted(d.n, d.boundaries())?, effect, sim, scenario)?,
            (Design::ThreeOutcome(d), _) => {
                let b = ResponderBoundaries {
                    go_from: Some(d.r_go),
                    nogo_up_to: Some(d.r_nogo),
                    clinical: None,
                    statistical: None,
                };
                simulate_binary_oc(&shifted(d.n, b)?, effect, sim, scenario)?
            }
            (Design::TtePrecision(_), _) => return Err(design.no_rule()),
            _ => return Err(config_err("--corrupt-go-boundary applies to binary designs only")),
        };
        for cell in compare_cells(&analytic, &simulated, VERIFY_SE_MULTIPLIER) {
            all_pass &= cell.pass;
            let outcome = match cell.outcome {
                Outcome::Go => "GO",
                Outcome::NoGo => "NO-GO",
                Outcome::Inconclusive => "inconclusive",
            };
            table.rows.push(vec![
                Cell::Text(design.effect_label(effect)),
                outcome.into(),
                Cell::Num(cell.analytic),
                Cell::Num(cell.simulated),
                Cell::Num(VERIFY_SE_MULTIPLIER * cell.se),
                if cell.pass { "PASS" } else { "FAIL" }.into(),
            ]);
        }
    }
    Ok(VerifyOutput { output: CommandOutput { tables: vec![table], csv: None, warnings: Vec::new() }, all_pass })
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "dualcrit", version, about = "Dual-criterion phase II trial designs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum sample size and implied estimate thresholds.
    Size(ConfigArgs),
    /// GO / NO-GO / inconclusive probabilities over the true-effect grid.
    Oc(ConfigArgs),
    /// Decision for an observed estimate (tte) or responder count (binary).
    Decide(DecideArgs),
    /// Operating characteristics of several designs side by side.
    Compare(CompareArgs),
    /// Checks analytic operating characteristics against simulation.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Design config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config value, e.g. `--set n=70`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Write full-precision CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print the effective config and exit.
    #[arg(long)]
    pub dump_config: bool,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    #[command(flatten)]
    pub base: ConfigArgs,
    /// Estimated hazard ratio (tte) or number of responders (binary).
    #[arg(long, allow_hyphen_values = true)]
    pub observed: String,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Design config files, at least two.
    #[arg(long = "config", required = true, num_args = 1..)]
    pub configs: Vec<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub base: ConfigArgs,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub reps: u64,
    /// Shift the simulated GO boundary by this many responders (negative control).
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub corrupt_go_boundary: i64,
}

/// What the process should print and return.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Invocation {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
}

fn load_config(args: &ConfigArgs) -> Result<DesignConfig, CliError> {
    let mut cfg = DesignConfig::load(&args.config)?;
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

fn finish(out: CommandOutput, csv_path: Option<&Path>) -> Result<Invocation, CliError> {
    if let (Some(path), Some(csv)) = (csv_path, &out.csv) {
        write_file(path, csv)?;
    } else if let (Some(_), None) = (csv_path, &out.csv) {
        return Err(config_err("this command has no CSV output"));
    }
    let stderr = out.warnings.iter().map(|w| format!("warning: {w}\n")).collect();
    Ok(Invocation { stdout: out.render(), stderr, exit_code: EXIT_OK })
}

fn dispatch(cli: Cli) -> Result<Invocation, CliError> {
    let dump = |args: &ConfigArgs| -> Result<Option<Invocation>, CliError> {
        if args.dump_config {
            let cfg = load_config(args)?;
            Ok(Some(Invocation { stdout: cfg.to_config_string(), ..Default::default() }))
        } else {
            Ok(None)
        }
    };
    match cli.command {
        Command::Size(args) => {
            if let Some(inv) = dump(&args)? {
                return Ok(inv);
            }
            finish(cmd_size(&load_config(&args)?)?, args.csv.as_deref())
        }
        Command::Oc(args) => {
            if let Some(inv) = dump(&args)? {
                return Ok(inv);
            }
            finish(cmd_oc(&load_config(&args)?)?, args.csv.as_deref())
        }
        Command::Decide(args) => {
            if let Some(inv) = dump(&args.base)? {
                return Ok(inv);
            }
            finish(cmd_decide(&load_config(&args.base)?, &args.observed)?, args.base.csv.as_deref())
        }
        Command::Compare(args) => {
            let cfgs: Vec<DesignConfig> =
                args.configs.iter().map(|p| DesignConfig::load(p)).collect::<Result<_, _>>()?;
            finish(cmd_compare(&cfgs)?, args.csv.as_deref())
        }
        Command::Verify(args) => {
            if let Some(inv) = dump(&args.base)? {
                return Ok(inv);
            }
            let sim = SimulationConfig::new(args.reps, args.seed)?;
            let verified = cmd_verify(&load_config(&args.base)?, &sim, args.corrupt_go_boundary)?;
            let mut inv = finish(verified.output, None)?;
            if !verified.all_pass {
                inv.stderr.push_str("verification failed: some cells differ by more than 3 standard errors\n");
                inv.exit_code = EXIT_VERIFY_FAILED;
            }
            Ok(inv)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Invocation { stderr: text, exit_code: EXIT_CONFIG, ..Default::default() }
            } else {
                Invocation { stdout: text, ..Default::default() }
            };
        }
    };
    match dispatch(cli) {
        Ok(inv) => inv,
        Err(e) => Invocation { stderr: format!("error: {e}\n"), exit_code: e.exit_code(), ..Default::default() },
    }
}
