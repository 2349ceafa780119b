//! Parameter-sweep harness behind the `turbokey` CLI.
//!
//! A sweep is described by a flat key-value config file with dotted section
//! keys. The swept axis is always the total mean transmittance eta_bar
//! (every other quantity is held fixed or supplied as an overlay value
//! list), and one output row is produced per (eta_bar, overlay value,
//! receiver) triple, sorted by the swept axis. Unknown keys are rejected
//! with a line-anchored diagnostic.
//!
//! ```text
//! mode = ber                    # ber | skr | skr_optimized | validate
//! receiver = both               # kennedy | homodyne | both
//! channel.eta_bar = 0.1:1.0:10  # grid: comma list or lo:hi:count
//! channel.n_branches = 4
//! channel.sigma0_sq = 0.1
//! channel.rho = 0.0
//! beta_sq = 2.0                 # or "optimize" in skr_optimized mode
//! output.path = sweep.csv
//! ```
//!
//! Monte Carlo cross-check columns appear when `mc.trials` is set (mandatory
//! in `validate` mode); each row draws from its own RNG substream, so output
//! bytes depend only on the config and seed, never on the worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::TurbulenceParams;
use crate::detection::{homodyne_ber, kennedy_ber, Receiver, SignalAmplitude};
use crate::montecarlo::{mc_ber, mc_skr, McConfig};
use crate::qkd::{optimize_beta, skr_homodyne, skr_kennedy, AttackModel};
use crate::Result;

/// What the sweep evaluates per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Closed-form BER (plus optional Monte Carlo columns).
    Ber,
    /// Closed-form SKR at fixed amplitude.
    Skr,
    /// SKR with the amplitude optimized per grid point.
    SkrOptimized,
    /// BER with mandatory Monte Carlo cross-check columns.
    Validate,
}

impl Mode {
    fn is_skr(self) -> bool {
        matches!(self, Mode::Skr | Mode::SkrOptimized)
    }
}

/// Which receivers to evaluate per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverChoice {
    Kennedy,
    Homodyne,
    Both,
}

impl ReceiverChoice {
    fn receivers(self) -> &'static [Receiver] {
        match self {
            ReceiverChoice::Kennedy => &[Receiver::Kennedy],
            ReceiverChoice::Homodyne => &[Receiver::Homodyne],
            ReceiverChoice::Both => &[Receiver::Kennedy, Receiver::Homodyne],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// The non-swept quantity varied across overlay rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlayAxis {
    BetaSq,
    Sigma0Sq,
    Rho,
    NBranches,
}

/// Fixed transmit amplitude, or a search range for the optimizer.
#[derive(Debug, Clone, Copy)]
pub enum BetaSpec {
    Fixed(f64),
    Optimize { min: f64, max: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
}

/// A fully validated sweep description.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub mode: Mode,
    pub receiver: ReceiverChoice,
    pub attack: Option<AttackModel>,
    pub eta_bar_grid: Vec<f64>,
    pub n_branches: usize,
    pub sigma0_sq: f64,
    pub rho: f64,
    pub overlay: Option<(OverlayAxis, Vec<f64>)>,
    pub beta_sq: BetaSpec,
    pub mc: Option<McSettings>,
    pub output_path: PathBuf,
    pub output_format: OutputFormat,
}

/// A config problem, anchored to the offending line when one exists.
#[derive(Debug, thiserror::Error)]
#[error("{location}: {message}")]
pub struct ConfigError {
    location: String,
    message: String,
}

impl ConfigError {
    fn at(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Self {
            location: format!("{}:{line}", path.display()),
            message: message.into(),
        }
    }

    fn file(path: &Path, message: impl Into<String>) -> Self {
        Self {
            location: path.display().to_string(),
            message: message.into(),
        }
    }
}

struct RawConfig<'p> {
    path: &'p Path,
    entries: BTreeMap<String, (String, usize)>,
}

impl<'p> RawConfig<'p> {
    fn parse(path: &'p Path, text: &str) -> std::result::Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::at(
                    path,
                    line_no,
                    format!("expected 'key = value', got '{raw_line}'"),
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::at(path, line_no, "empty key or value"));
            }
            if let Some((_, first_line)) = entries.get(&key) {
                return Err(ConfigError::at(
                    path,
                    line_no,
                    format!("duplicate key '{key}' (first set on line {first_line})"),
                ));
            }
            entries.insert(key, (value, line_no));
        }
        Ok(Self { path, entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> std::result::Result<(String, usize), ConfigError> {
        self.take(key)
            .ok_or_else(|| ConfigError::file(self.path, format!("missing required key '{key}'")))
    }

    fn err_at(&self, line: usize, message: impl Into<String>) -> ConfigError {
        ConfigError::at(self.path, line, message)
    }

    fn finish(self) -> std::result::Result<(), ConfigError> {
        if let Some((key, (_, line))) = self
            .entries
            .iter()
            .min_by_key(|(_, (_, line))| *line)
            .map(|(k, v)| (k.clone(), v.clone()))
        {
            return Err(ConfigError::at(
                self.path,
                line,
                format!("unknown key '{key}'"),
            ));
        }
        Ok(())
    }
}

fn parse_f64(raw: &RawConfig, value: &str, line: usize) -> std::result::Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| raw.err_at(line, format!("expected a number, got '{value}'")))
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(raw.err_at(line, format!("number '{value}' is not finite")))
            }
        })
}

/// Grid syntax: either a comma list `0.1,0.2,0.5` or an inclusive linear
/// space `lo:hi:count`.
fn parse_grid(raw: &RawConfig, value: &str, line: usize) -> std::result::Result<Vec<f64>, ConfigError> {
    let grid: Vec<f64> = if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err(raw.err_at(line, format!("grid '{value}' must be lo:hi:count")));
        }
        let lo = parse_f64(raw, parts[0], line)?;
        let hi = parse_f64(raw, parts[1], line)?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| raw.err_at(line, format!("grid count '{}' is not an integer", parts[2])))?;
        if count < 2 || hi <= lo {
            return Err(raw.err_at(line, "grid needs hi > lo and count >= 2"));
        }
        (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect()
    } else {
        value
            .split(',')
            .map(|part| parse_f64(raw, part.trim(), line))
            .collect::<std::result::Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(raw.err_at(line, "grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(raw.err_at(line, "grid values must be strictly increasing"));
    }
    Ok(grid)
}

impl SweepConfig {
    pub fn from_file(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::file(path, format!("cannot read config: {e}")))?;
        Self::from_str_anchored(path, &text)
    }

    fn from_str_anchored(path: &Path, text: &str) -> std::result::Result<Self, ConfigError> {
        let mut raw = RawConfig::parse(path, text)?;

        let (mode_str, mode_line) = raw.require("mode")?;
        let mode = match mode_str.as_str() {
            "ber" => Mode::Ber,
            "skr" => Mode::Skr,
            "skr_optimized" => Mode::SkrOptimized,
            "validate" => Mode::Validate,
            other => return Err(raw.err_at(mode_line, format!("unknown mode '{other}'"))),
        };

        let (receiver_str, receiver_line) = raw.require("receiver")?;
        let receiver = match receiver_str.as_str() {
            "kennedy" => ReceiverChoice::Kennedy,
            "homodyne" => ReceiverChoice::Homodyne,
            "both" => ReceiverChoice::Both,
            other => return Err(raw.err_at(receiver_line, format!("unknown receiver '{other}'"))),
        };

        let attack = match raw.take("attack") {
            Some((value, line)) => {
                if !mode.is_skr() {
                    return Err(raw.err_at(line, "'attack' is only meaningful in skr modes"));
                }
                Some(match value.as_str() {
                    "individual" => AttackModel::IndividualHelstrom,
                    "collective" => AttackModel::CollectiveHolevo,
                    other => return Err(raw.err_at(line, format!("unknown attack '{other}'"))),
                })
            }
            None if mode.is_skr() => {
                return Err(ConfigError::file(path, "skr modes require 'attack'"));
            }
            None => None,
        };

        let overlay = match (raw.take("overlay.axis"), raw.take("overlay.values")) {
            (Some((axis_str, axis_line)), Some((values_str, values_line))) => {
                let axis = match axis_str.as_str() {
                    "beta_sq" => OverlayAxis::BetaSq,
                    "sigma0_sq" => OverlayAxis::Sigma0Sq,
                    "rho" => OverlayAxis::Rho,
                    "n_branches" => OverlayAxis::NBranches,
                    other => {
                        return Err(raw.err_at(axis_line, format!("unknown overlay axis '{other}'")))
                    }
                };
                let values = parse_grid(&raw, &values_str, values_line)?;
                if axis == OverlayAxis::NBranches
                    && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0)
                {
                    return Err(raw.err_at(
                        values_line,
                        "n_branches overlay values must be positive integers",
                    ));
                }
                if axis == OverlayAxis::BetaSq && mode == Mode::SkrOptimized {
                    return Err(raw.err_at(
                        axis_line,
                        "beta_sq overlay conflicts with amplitude optimization",
                    ));
                }
                Some((axis, values))
            }
            (None, None) => None,
            (Some((_, line)), None) | (None, Some((_, line))) => {
                return Err(raw.err_at(line, "overlay.axis and overlay.values must appear together"));
            }
        };
        let overlaid = |axis: OverlayAxis| matches!(&overlay, Some((a, _)) if *a == axis);

        let (eta_value, eta_line) = raw.require("channel.eta_bar")?;
        let eta_bar_grid = parse_grid(&raw, &eta_value, eta_line)?;
        if eta_bar_grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(raw.err_at(eta_line, "eta_bar grid values must lie in (0, 1]"));
        }

        let n_branches = if overlaid(OverlayAxis::NBranches) {
            forbid(&mut raw, "channel.n_branches", "n_branches overlay")?;
            0
        } else {
            let (value, line) = raw.require("channel.n_branches")?;
            let n: usize = value
                .parse()
                .map_err(|_| raw.err_at(line, format!("expected a positive integer, got '{value}'")))?;
            if n == 0 {
                return Err(raw.err_at(line, "n_branches must be at least 1"));
            }
            n
        };

        let sigma0_sq = if overlaid(OverlayAxis::Sigma0Sq) {
            forbid(&mut raw, "channel.sigma0_sq", "sigma0_sq overlay")?;
            f64::NAN
        } else {
            let (value, line) = raw.require("channel.sigma0_sq")?;
            let v = parse_f64(&raw, &value, line)?;
            if v < 0.0 {
                return Err(raw.err_at(line, "sigma0_sq must be nonnegative"));
            }
            v
        };

        let rho = if overlaid(OverlayAxis::Rho) {
            forbid(&mut raw, "channel.rho", "rho overlay")?;
            f64::NAN
        } else {
            let (value, line) = raw.require("channel.rho")?;
            parse_f64(&raw, &value, line)?
        };

        let beta_sq = if mode == Mode::SkrOptimized {
            let (value, line) = raw.require("beta_sq")?;
            if value != "optimize" {
                return Err(raw.err_at(line, "skr_optimized mode requires beta_sq = optimize"));
            }
            let (min_v, min_line) = raw.require("beta_sq.min")?;
            let min = parse_f64(&raw, &min_v, min_line)?;
            let (max_v, max_line) = raw.require("beta_sq.max")?;
            let max = parse_f64(&raw, &max_v, max_line)?;
            if !(min >= 0.0 && max > min) {
                return Err(raw.err_at(max_line, "need 0 <= beta_sq.min < beta_sq.max"));
            }
            BetaSpec::Optimize { min, max }
        } else if overlaid(OverlayAxis::BetaSq) {
            forbid(&mut raw, "beta_sq", "beta_sq overlay")?;
            BetaSpec::Fixed(f64::NAN)
        } else {
            let (value, line) = raw.require("beta_sq")?;
            if value == "optimize" {
                return Err(raw.err_at(line, "beta_sq = optimize is only valid in skr_optimized mode"));
            }
            let v = parse_f64(&raw, &value, line)?;
            if v < 0.0 {
                return Err(raw.err_at(line, "beta_sq must be nonnegative"));
            }
            BetaSpec::Fixed(v)
        };

        let mc = match raw.take("mc.trials") {
            Some((value, line)) => {
                let trials: u64 = value
                    .parse()
                    .map_err(|_| raw.err_at(line, format!("expected a trial count, got '{value}'")))?;
                if trials == 0 {
                    return Err(raw.err_at(line, "mc.trials must be at least 1"));
                }
                let seed = match raw.take("mc.seed") {
                    Some((value, line)) => value
                        .parse()
                        .map_err(|_| raw.err_at(line, format!("expected a seed, got '{value}'")))?,
                    None => 0,
                };
                Some(McSettings { trials, seed })
            }
            None => {
                if let Some((_, line)) = raw.take("mc.seed") {
                    return Err(raw.err_at(line, "mc.seed without mc.trials"));
                }
                None
            }
        };
        if mode == Mode::Validate && mc.is_none() {
            return Err(ConfigError::file(path, "validate mode requires mc.trials"));
        }

        let (output_path, _) = raw.require("output.path")?;
        let output_format = match raw.take("output.format") {
            Some((value, line)) => match value.as_str() {
                "csv" => OutputFormat::Csv,
                "json" => OutputFormat::Json,
                other => return Err(raw.err_at(line, format!("unknown output format '{other}'"))),
            },
            None => OutputFormat::Csv,
        };

        raw.finish()?;

        Ok(Self {
            mode,
            receiver,
            attack,
            eta_bar_grid,
            n_branches,
            sigma0_sq,
            rho,
            overlay,
            beta_sq,
            mc,
            output_path: PathBuf::from(output_path),
            output_format,
        })
    }

    /// Apply the CLI overrides.
    pub fn override_output(&mut self, path: Option<PathBuf>, format: Option<OutputFormat>) {
        if let Some(path) = path {
            self.output_path = path;
        }
        if let Some(format) = format {
            self.output_format = format;
        }
    }

    pub fn override_seed(&mut self, seed: Option<u64>) {
        if let (Some(seed), Some(mc)) = (seed, self.mc.as_mut()) {
            mc.seed = seed;
        }
    }
}

fn forbid(
    raw: &mut RawConfig,
    key: &str,
    because: &str,
) -> std::result::Result<(), ConfigError> {
    if let Some((_, line)) = raw.take(key) {
        return Err(raw.err_at(line, format!("'{key}' conflicts with the {because}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Row evaluation
// ---------------------------------------------------------------------------

/// Everything pinned for one output row.
#[derive(Debug, Clone, Copy)]
struct RowSpec {
    eta_bar: f64,
    n_branches: usize,
    sigma0_sq: f64,
    rho: f64,
    beta: BetaSpec,
    receiver: Receiver,
    attack: Option<AttackModel>,
    mc_stream: u64,
}

#[derive(Debug, Clone, Default)]
struct RowValues {
    beta_sq: Option<f64>,
    ber: Option<f64>,
    skr: Option<f64>,
    i_ae: Option<f64>,
    kept_fraction: Option<f64>,
    beta_sq_opt: Option<f64>,
    mc_value: Option<f64>,
    mc_stderr: Option<f64>,
    error: Option<String>,
}

fn evaluate_row(mode: Mode, spec: &RowSpec, mc: Option<&McSettings>) -> RowValues {
    match try_evaluate_row(mode, spec, mc) {
        Ok(values) => values,
        Err(e) => RowValues {
            error: Some(e.to_string()),
            ..RowValues::default()
        },
    }
}

fn try_evaluate_row(mode: Mode, spec: &RowSpec, mc: Option<&McSettings>) -> Result<RowValues> {
    let params = TurbulenceParams::from_total_transmittance(
        spec.n_branches,
        spec.eta_bar,
        spec.sigma0_sq,
        spec.rho,
    )?;
    let mut values = RowValues::default();

    let beta_sq = match (mode, spec.beta) {
        (Mode::SkrOptimized, BetaSpec::Optimize { min, max }) => {
            let attack = spec.attack.expect("skr mode carries an attack");
            let (beta_sq_opt, _) = optimize_beta(&params, attack, spec.receiver, (min, max))?;
            values.beta_sq_opt = Some(beta_sq_opt);
            beta_sq_opt
        }
        (_, BetaSpec::Fixed(b2)) => b2,
        (_, BetaSpec::Optimize { .. }) => unreachable!("optimize outside skr_optimized"),
    };
    values.beta_sq = Some(beta_sq);
    let beta = SignalAmplitude::from_mean_photons(beta_sq)?;

    match mode {
        Mode::Ber | Mode::Validate => {
            let result = match spec.receiver {
                Receiver::Kennedy => kennedy_ber(&beta, &params)?,
                Receiver::Homodyne => homodyne_ber(&beta, &params)?,
            };
            values.ber = Some(result.ber);
            if let Some(mc) = mc {
                let cfg = McConfig::new(mc.trials, mc.seed).with_stream(spec.mc_stream);
                let est = mc_ber(spec.receiver, &beta, &params, &cfg)?;
                values.mc_value = Some(est.value);
                values.mc_stderr = Some(est.stderr);
            }
        }
        Mode::Skr | Mode::SkrOptimized => {
            let attack = spec.attack.expect("skr mode carries an attack");
            let result = match spec.receiver {
                Receiver::Kennedy => skr_kennedy(&beta, &params, attack)?,
                Receiver::Homodyne => skr_homodyne(&beta, &params, attack)?,
            };
            values.skr = Some(result.skr);
            values.i_ae = Some(result.i_ae);
            values.kept_fraction = Some(result.kept_fraction);
            if let Some(mc) = mc {
                let cfg = McConfig::new(mc.trials, mc.seed).with_stream(spec.mc_stream);
                let est = mc_skr(spec.receiver, &beta, &params, attack, &cfg)?;
                values.mc_value = Some(est.value);
                values.mc_stderr = Some(est.stderr);
            }
        }
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

fn receiver_name(receiver: Receiver) -> &'static str {
    match receiver {
        Receiver::Kennedy => "kennedy",
        Receiver::Homodyne => "homodyne",
    }
}

fn attack_name(attack: AttackModel) -> &'static str {
    match attack {
        AttackModel::IndividualHelstrom => "individual",
        AttackModel::CollectiveHolevo => "collective",
    }
}

fn push_opt(line: &mut String, value: Option<f64>) {
    if let Some(v) = value {
        let _ = write!(line, "{v}");
    }
}

#[derive(Serialize)]
struct JsonRow {
    eta_bar: f64,
    beta_sq: Option<f64>,
    n_branches: usize,
    sigma0_sq: f64,
    rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    attack: Option<&'static str>,
    receiver: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    ber: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    i_ae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kept_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_sq_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Outcome of a sweep run.
#[derive(Debug)]
pub struct RunSummary {
    pub rows: usize,
    pub numerical_failures: usize,
    pub output_path: PathBuf,
}

/// Evaluate every grid point and write the output file.
///
/// Rows evaluate on the ambient rayon pool; assembly restores grid order, so
/// the output bytes are a pure function of the config (and seed). Numerical
/// failures are recorded in the row's error column and counted in the
/// summary instead of aborting the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<RunSummary> {
    let mut specs = Vec::new();
    let overlay_values: &[f64] = match &config.overlay {
        Some((_, values)) => values,
        None => &[f64::NAN], // single placeholder row per eta_bar
    };
    for &eta_bar in &config.eta_bar_grid {
        for &overlay_value in overlay_values {
            for &receiver in config.receiver.receivers() {
                let mut spec = RowSpec {
                    eta_bar,
                    n_branches: config.n_branches,
                    sigma0_sq: config.sigma0_sq,
                    rho: config.rho,
                    beta: config.beta_sq,
                    receiver,
                    attack: config.attack,
                    mc_stream: specs.len() as u64,
                };
                if let Some((axis, _)) = &config.overlay {
                    match axis {
                        OverlayAxis::BetaSq => spec.beta = BetaSpec::Fixed(overlay_value),
                        OverlayAxis::Sigma0Sq => spec.sigma0_sq = overlay_value,
                        OverlayAxis::Rho => spec.rho = overlay_value,
                        OverlayAxis::NBranches => spec.n_branches = overlay_value as usize,
                    }
                }
                specs.push(spec);
            }
        }
    }

    let rows: Vec<(RowSpec, RowValues)> = specs
        .into_par_iter()
        .map(|spec| {
            let values = evaluate_row(config.mode, &spec, config.mc.as_ref());
            (spec, values)
        })
        .collect();

    let failures = rows.iter().filter(|(_, v)| v.error.is_some()).count();
    let body = match config.output_format {
        OutputFormat::Csv => render_csv(config, &rows),
        OutputFormat::Json => render_json(config, &rows),
    };
    fs::write(&config.output_path, body).map_err(|e| {
        crate::Error::InvalidParameter(format!(
            "cannot write output file {}: {e}",
            config.output_path.display()
        ))
    })?;
    Ok(RunSummary {
        rows: rows.len(),
        numerical_failures: failures,
        output_path: config.output_path.clone(),
    })
}

fn render_csv(config: &SweepConfig, rows: &[(RowSpec, RowValues)]) -> String {
    let mut out = String::new();
    if config.mode.is_skr() {
        out.push_str(
            "# eta_bar,beta_sq,n_branches,sigma0_sq,rho,attack,receiver,skr,i_ae,kept_fraction,beta_sq_opt,mc_skr,mc_stderr,error\n",
        );
    } else {
        out.push_str("# eta_bar,beta_sq,n_branches,sigma0_sq,rho,receiver,ber,mc_ber,mc_stderr,error\n");
    }
    for (spec, values) in rows {
        let _ = write!(out, "{},", spec.eta_bar);
        push_opt(&mut out, values.beta_sq);
        let _ = write!(
            out,
            ",{},{},{},",
            spec.n_branches, spec.sigma0_sq, spec.rho
        );
        if config.mode.is_skr() {
            let attack = spec.attack.expect("skr mode carries an attack");
            let _ = write!(out, "{},{},", attack_name(attack), receiver_name(spec.receiver));
            push_opt(&mut out, values.skr);
            out.push(',');
            push_opt(&mut out, values.i_ae);
            out.push(',');
            push_opt(&mut out, values.kept_fraction);
            out.push(',');
            push_opt(&mut out, values.beta_sq_opt);
            out.push(',');
        } else {
            let _ = write!(out, "{},", receiver_name(spec.receiver));
            push_opt(&mut out, values.ber);
            out.push(',');
        }
        push_opt(&mut out, values.mc_value);
        out.push(',');
        push_opt(&mut out, values.mc_stderr);
        out.push(',');
        if let Some(error) = &values.error {
            out.push_str(&error.replace([',', '\n'], ";"));
        }
        out.push('\n');
    }
    out
}

fn render_json(config: &SweepConfig, rows: &[(RowSpec, RowValues)]) -> String {
    let json_rows: Vec<JsonRow> = rows
        .iter()
        .map(|(spec, values)| JsonRow {
            eta_bar: spec.eta_bar,
            beta_sq: values.beta_sq,
            n_branches: spec.n_branches,
            sigma0_sq: spec.sigma0_sq,
            rho: spec.rho,
            attack: if config.mode.is_skr() {
                spec.attack.map(attack_name)
            } else {
                None
            },
            receiver: receiver_name(spec.receiver),
            ber: values.ber,
            skr: values.skr,
            i_ae: values.i_ae,
            kept_fraction: values.kept_fraction,
            beta_sq_opt: values.beta_sq_opt,
            mc_value: values.mc_value,
            mc_stderr: values.mc_stderr,
            error: values.error.clone(),
        })
        .collect();
    let mut body = serde_json::to_string_pretty(&json_rows).expect("row serialization");
    body.push('\n');
    body
}
