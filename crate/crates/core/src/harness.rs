//! Configuration-driven experiment runner: loads and validates experiment
//! configs, runs the closed-form and coupled-mode pipelines side by side,
//! and writes plot-ready CSV data plus a structured comparison report.
//!
//! Output files are deterministic: identical configs produce byte-identical
//! data files. The report carries a timestamp, but only in its metadata
//! section.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{self, RadianceClass};
use crate::coupling::paper_preset;
use crate::error::Error;
use crate::model::{self, Fidelity, MomentState, SystemSpec, ValidatedSpec};
use crate::numeric::{self, DecayFit, ObservableSeries};
use crate::states;

/// Environment variable overriding the output directory.
pub const OUTPUT_DIR_ENV: &str = "OUTPUT_DIR";

/// Errors of the experiment layer, carrying the CLI exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(#[from] Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Numeric(_) => 2,
            HarnessError::Io(_) => 3,
        }
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

// ---------------------------------------------------------------------------
// config file schema

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SpecField {
    Preset(String),
    Inline(InlineSpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InlineSpec {
    n_system: usize,
    n_bath: usize,
    g: Vec<f64>,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    omega: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    j_coupling: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    fidelity: Option<String>,
}

fn default_delta() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateField {
    class: String,
    #[serde(default)]
    r: Option<f64>,
    #[serde(default)]
    occupations: Option<Vec<u32>>,
    #[serde(default)]
    dark_pair: Option<[usize; 2]>,
    #[serde(default)]
    mean_re: Option<Vec<f64>>,
    #[serde(default)]
    mean_im: Option<Vec<f64>>,
    #[serde(default)]
    corr_re: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    corr_im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridField {
    t_max: f64,
    samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    spec: SpecField,
    state: StateField,
    grid: GridField,
    #[serde(default)]
    fidelity: Option<String>,
    #[serde(default)]
    nbar: Option<f64>,
    #[serde(default)]
    correlations: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    normalize_peak: Option<bool>,
    #[serde(default)]
    outputs: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// resolved configuration

/// The state class an experiment starts from. Guide indices are zero-based
/// here; the config file uses one-based indices.
#[derive(Debug, Clone, PartialEq)]
pub enum StateClass {
    Bright {
        quanta: f64,
    },
    Normal {
        occupations: Vec<u32>,
    },
    Dark {
        quanta: f64,
        pair: (usize, usize),
    },
    Custom {
        mean: DVector<Complex64>,
        corr: DMatrix<Complex64>,
    },
}

impl StateClass {
    fn label(&self) -> String {
        match self {
            StateClass::Bright { quanta } => format!("bright r={quanta}"),
            StateClass::Normal { occupations } => format!("normal occupations={occupations:?}"),
            StateClass::Dark { quanta, pair } => {
                format!("dark r={quanta} pair=({},{})", pair.0 + 1, pair.1 + 1)
            }
            StateClass::Custom { .. } => "custom moments".to_string(),
        }
    }
}

/// A fully resolved, validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: ValidatedSpec,
    pub state: StateClass,
    pub nbar: f64,
    pub t_max: f64,
    pub samples: usize,
    /// Zero-based correlation pairs.
    pub correlations: Vec<(usize, usize)>,
    pub normalize_peak: bool,
    pub outputs: PathBuf,
    /// Hash of the canonical config content; stamped into every output.
    pub config_hash: String,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub fidelity: Option<Fidelity>,
    pub nbar: Option<f64>,
}

fn parse_fidelity(label: &str, field: &str) -> HarnessResult<Fidelity> {
    match label {
        "full" => Ok(Fidelity::Full),
        "ideal" => Ok(Fidelity::Ideal),
        other => Err(config_err(format!(
            "{field} must be \"full\" or \"ideal\", got \"{other}\""
        ))),
    }
}

fn build_spec(raw: &RawConfig, overrides: &Overrides) -> HarnessResult<ValidatedSpec> {
    let mut spec = match &raw.spec {
        SpecField::Preset(token) => {
            if token == "paper-preset" {
                paper_preset()
            } else {
                return Err(config_err(format!(
                    "spec must be \"paper-preset\" or an inline table, got \"{token}\""
                )));
            }
        }
        SpecField::Inline(inline) => {
            if inline.g.len() != inline.n_system {
                return Err(config_err(format!(
                    "spec.g must have n_system = {} entries, got {}",
                    inline.n_system,
                    inline.g.len()
                )));
            }
            let mut spec =
                SystemSpec::new(inline.g.clone(), inline.n_bath).with_delta(inline.delta);
            if let Some(rows) = &inline.omega {
                spec = spec.with_omega(matrix_from_rows(rows, "spec.omega")?);
            }
            if let Some(rows) = &inline.j_coupling {
                spec = spec.with_j_coupling(matrix_from_rows(rows, "spec.j_coupling")?);
            }
            if let Some(label) = &inline.fidelity {
                spec = spec.with_fidelity(parse_fidelity(label, "spec.fidelity")?);
            }
            spec
        }
    };
    if let Some(label) = &raw.fidelity {
        spec = spec.with_fidelity(parse_fidelity(label, "fidelity")?);
    }
    if let Some(fidelity) = overrides.fidelity {
        spec = spec.with_fidelity(fidelity);
    }
    model::validate(spec).map_err(|e| config_err(e.to_string()))
}

fn matrix_from_rows(rows: &[Vec<f64>], field: &str) -> HarnessResult<DMatrix<f64>> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, 0));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(config_err(format!("{field} rows have unequal lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn build_state_class(raw: &StateField, spec: &ValidatedSpec) -> HarnessResult<StateClass> {
    let n = spec.n_system;
    match raw.class.as_str() {
        "bright" => {
            let quanta = raw
                .r
                .ok_or_else(|| config_err("state.r is required for class \"bright\""))?;
            Ok(StateClass::Bright { quanta })
        }
        "normal" => {
            let occupations = raw
                .occupations
                .clone()
                .ok_or_else(|| config_err("state.occupations is required for class \"normal\""))?;
            if occupations.len() != n {
                return Err(config_err(format!(
                    "state.occupations must have {n} entries, got {}",
                    occupations.len()
                )));
            }
            Ok(StateClass::Normal { occupations })
        }
        "dark" => {
            let quanta = raw
                .r
                .ok_or_else(|| config_err("state.r is required for class \"dark\""))?;
            let pair = raw.dark_pair.unwrap_or([1, 3]);
            let (i, j) = (pair[0], pair[1]);
            if i == 0 || j == 0 || i > n || j > n || i == j {
                return Err(config_err(format!(
                    "state.dark_pair must hold two distinct one-based guide indices in 1..={n}"
                )));
            }
            Ok(StateClass::Dark {
                quanta,
                pair: (i - 1, j - 1),
            })
        }
        "custom" => {
            let corr_re = raw
                .corr_re
                .as_ref()
                .ok_or_else(|| config_err("state.corr_re is required for class \"custom\""))?;
            if corr_re.len() != n || corr_re.iter().any(|r| r.len() != n) {
                return Err(config_err(format!(
                    "state.corr_re must be a {n}x{n} system-block matrix"
                )));
            }
            let zeros = vec![vec![0.0; n]; n];
            let corr_im = raw.corr_im.clone().unwrap_or(zeros);
            if corr_im.len() != n || corr_im.iter().any(|r| r.len() != n) {
                return Err(config_err(format!(
                    "state.corr_im must be a {n}x{n} system-block matrix"
                )));
            }
            let mean_re = raw.mean_re.clone().unwrap_or_else(|| vec![0.0; n]);
            let mean_im = raw.mean_im.clone().unwrap_or_else(|| vec![0.0; n]);
            if mean_re.len() != n || mean_im.len() != n {
                return Err(config_err(format!(
                    "state.mean_re / state.mean_im must have {n} entries"
                )));
            }
            let mean = DVector::from_fn(n, |i, _| Complex64::new(mean_re[i], mean_im[i]));
            let corr = DMatrix::from_fn(n, n, |i, j| Complex64::new(corr_re[i][j], corr_im[i][j]));
            Ok(StateClass::Custom { mean, corr })
        }
        other => Err(config_err(format!(
            "state.class must be bright, normal, dark or custom, got \"{other}\""
        ))),
    }
}

/// Build the initial moment state for a class, bath seeded at `nbar`.
pub fn prepare_state(
    spec: &ValidatedSpec,
    class: &StateClass,
    nbar: f64,
) -> crate::error::Result<MomentState> {
    let state = match class {
        StateClass::Bright { quanta } => states::bright_state(spec, *quanta)?,
        StateClass::Normal { occupations } => states::fock_state(spec, occupations)?,
        StateClass::Dark { quanta, pair } => states::dark_state(spec, *quanta, pair.0, pair.1)?,
        StateClass::Custom { mean, corr } => {
            let state = MomentState::from_system_block(spec, mean.clone(), corr.clone())?;
            state.check_positive(1e-10)?;
            state
        }
    };
    if nbar > 0.0 {
        state.with_thermal_bath(spec.n_system, nbar)
    } else {
        Ok(state)
    }
}

fn resolve(raw: RawConfig, overrides: &Overrides, source: &str) -> HarnessResult<ExperimentConfig> {
    let spec = build_spec(&raw, overrides)?;
    let state = build_state_class(&raw.state, &spec)?;

    if !raw.grid.t_max.is_finite() || raw.grid.t_max <= 0.0 {
        return Err(config_err("grid.t_max must be positive"));
    }
    if raw.grid.samples < 2 {
        return Err(config_err("grid.samples must be at least 2"));
    }

    let nbar = overrides.nbar.or(raw.nbar).unwrap_or(0.0);
    if !nbar.is_finite() || nbar < 0.0 {
        return Err(config_err("nbar must be finite and nonnegative"));
    }

    let n = spec.n_system;
    let mut correlations = Vec::new();
    for pair in raw.correlations.unwrap_or_default() {
        let (i, j) = (pair[0], pair[1]);
        if i == 0 || j == 0 || i > n || j > n {
            return Err(config_err(format!(
                "correlations entries must hold one-based guide indices in 1..={n}"
            )));
        }
        correlations.push((i - 1, j - 1));
    }
    if nbar > 0.0 && !correlations.is_empty() {
        return Err(config_err(
            "correlations are not supported together with nbar > 0",
        ));
    }

    let outputs = overrides
        .out
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .or(raw.outputs)
        .unwrap_or_else(|| PathBuf::from("out"));

    let mut hasher = Sha256::new();
    hasher.update(source.as_bytes());
    hasher.update(format!("|fidelity={:?}|nbar={nbar}|", spec.fidelity));
    let config_hash = hex_prefix(&hasher.finalize());

    Ok(ExperimentConfig {
        spec,
        state,
        nbar,
        t_max: raw.grid.t_max,
        samples: raw.grid.samples,
        correlations,
        normalize_peak: raw.normalize_peak.unwrap_or(false),
        outputs,
        config_hash,
    })
}

fn hex_prefix(digest: &[u8]) -> String {
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Parse and validate a config file; unknown keys are rejected and parse
/// errors carry the offending line and column.
pub fn load_config(path: &Path) -> HarnessResult<ExperimentConfig> {
    load_config_with(path, &Overrides::default())
}

pub fn load_config_with(path: &Path, overrides: &Overrides) -> HarnessResult<ExperimentConfig> {
    let source = fs::read_to_string(path)?;
    let raw: RawConfig = toml::from_str(&source).map_err(|e| config_err(e.to_string()))?;
    resolve(raw, overrides, &source)
}

// ---------------------------------------------------------------------------
// comparison report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
    /// Timestamp metadata; the only nondeterministic field of a run.
    pub generated_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveSummary {
    pub n_system: usize,
    pub n_bath: usize,
    pub g_total: f64,
    pub gamma: f64,
    pub n_gamma: f64,
    pub nbar: f64,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    /// Max absolute analytic-vs-numeric deviation over the grid, normalized
    /// by the initial system quanta (or 1 for an initially empty system).
    pub max_abs: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationDeviation {
    /// One-based guide pair.
    pub pair: [usize; 2],
    pub max_abs: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFitSummary {
    pub rate: f64,
    pub n_gamma: f64,
    pub relative_error: f64,
    pub floor: f64,
    pub decaying: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    /// Set when the propagated total quanta never move by more than 1e-9:
    /// the light is trapped in the system guides.
    pub trapped: bool,
    pub horizon_exceeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub provenance: Provenance,
    pub summary: CollectiveSummary,
    pub classification_class: String,
    pub classification_correlated_part: f64,
    pub deviation_m_total: DeviationStats,
    pub deviation_intensity: DeviationStats,
    pub deviation_correlations: Vec<CorrelationDeviation>,
    pub decay_fit: DecayFitSummary,
    pub flags: Flags,
}

impl ComparisonReport {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_toml(text: &str) -> HarnessResult<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }
}

fn class_label(class: RadianceClass) -> &'static str {
    match class {
        RadianceClass::Super => "super",
        RadianceClass::Normal => "normal",
        RadianceClass::Sub => "sub",
    }
}

fn deviation_stats(analytic: &[f64], numeric: &[f64], normalizer: f64) -> DeviationStats {
    let mut max_abs = 0.0f64;
    let mut sq = 0.0f64;
    for (&a, &b) in analytic.iter().zip(numeric.iter()) {
        let d = (a - b).abs() / normalizer;
        max_abs = max_abs.max(d);
        sq += d * d;
    }
    DeviationStats {
        max_abs,
        rms: (sq / analytic.len().max(1) as f64).sqrt(),
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

// ---------------------------------------------------------------------------
// experiment runner

/// Everything a finished run produced.
#[derive(Debug)]
pub struct RunArtifacts {
    pub report: ComparisonReport,
    pub series_path: PathBuf,
    pub report_path: PathBuf,
}

struct Curves {
    times: Vec<f64>,
    m_analytic: Vec<f64>,
    i_analytic: Vec<f64>,
    corr_analytic: Vec<Vec<f64>>,
    series: ObservableSeries,
}

fn analytic_correlation_curve(
    config: &ExperimentConfig,
    state0: &MomentState,
    pair: (usize, usize),
    times: &[f64],
) -> crate::error::Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| analytic::correlation_t(state0, &config.spec, pair.0, pair.1, t).map(|c| c.re))
        .collect()
}

fn compute_curves(config: &ExperimentConfig) -> HarnessResult<Curves> {
    let spec = &config.spec;
    let state0 = prepare_state(spec, &config.state, config.nbar)?;
    let times = numeric::uniform_grid(config.t_max, config.samples)?;

    let mut m_analytic = Vec::with_capacity(times.len());
    let mut i_analytic = Vec::with_capacity(times.len());
    for &t in &times {
        if config.nbar > 0.0 {
            m_analytic.push(analytic::thermal_total_quanta_t(
                &state0,
                spec,
                config.nbar,
                t,
            )?);
            i_analytic.push(analytic::thermal_intensity_t(
                &state0,
                spec,
                config.nbar,
                t,
            )?);
        } else {
            m_analytic.push(analytic::total_quanta_t(&state0, spec, t)?);
            i_analytic.push(analytic::intensity_t(&state0, spec, t)?);
        }
    }

    let mut corr_analytic = Vec::new();
    for &pair in &config.correlations {
        corr_analytic.push(analytic_correlation_curve(config, &state0, pair, &times)?);
    }

    let series = numeric::run_series(spec, &state0, &times, &config.correlations)?;

    Ok(Curves {
        times,
        m_analytic,
        i_analytic,
        corr_analytic,
        series,
    })
}

// 17 significant digits: enough to reproduce any f64 exactly
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_series_csv(path: &Path, config: &ExperimentConfig, curves: &Curves) -> HarnessResult<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# wgsr time series v1");
    let _ = writeln!(out, "# units: time in 1/Delta, rates in Delta");
    let _ = writeln!(out, "# config = {}", config.config_hash);
    let _ = writeln!(out, "# state = {}", config.state.label());
    let _ = writeln!(
        out,
        "# fidelity = {}",
        match config.spec.fidelity {
            Fidelity::Full => "full",
            Fidelity::Ideal => "ideal",
        }
    );
    let _ = writeln!(out, "# nbar = {}", config.nbar);

    let peak_scale = if config.normalize_peak {
        let peak = curves
            .i_analytic
            .iter()
            .chain(curves.series.intensity.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        if peak > 0.0 {
            let _ = writeln!(out, "# peak_normalization = {}", fmt_float(peak));
            peak
        } else {
            1.0
        }
    } else {
        1.0
    };

    let mut header = String::from("t,m_analytic,m_numeric,i_analytic,i_numeric");
    for &(i, j) in &config.correlations {
        let _ = write!(
            header,
            ",c_{}_{}_analytic,c_{}_{}_numeric",
            i + 1,
            j + 1,
            i + 1,
            j + 1
        );
    }
    let _ = writeln!(out, "{header}");

    for (idx, &t) in curves.times.iter().enumerate() {
        let mut line = String::new();
        let _ = write!(
            line,
            "{},{},{},{},{}",
            fmt_float(t),
            fmt_float(curves.m_analytic[idx]),
            fmt_float(curves.series.m_total[idx]),
            fmt_float(curves.i_analytic[idx] / peak_scale),
            fmt_float(curves.series.intensity[idx] / peak_scale),
        );
        for (p, _) in config.correlations.iter().enumerate() {
            let _ = write!(
                line,
                ",{},{}",
                fmt_float(curves.corr_analytic[p][idx]),
                fmt_float(curves.series.correlations[p].1[idx].re),
            );
        }
        let _ = writeln!(out, "{line}");
    }

    fs::write(path, out)?;
    Ok(())
}

fn build_report(config: &ExperimentConfig, curves: &Curves) -> HarnessResult<ComparisonReport> {
    let spec = &config.spec;
    let state0 = prepare_state(spec, &config.state, config.nbar)?;
    let radiance = analytic::classify_radiance(&state0, spec)?;
    let q = model::collective_quantities(spec);
    let n_gamma = spec.n_system as f64 * q.gamma;

    let m0 = curves.m_analytic.first().copied().unwrap_or(0.0);
    let normalizer = if m0 > 0.0 { m0 } else { 1.0 };

    let deviation_m_total = deviation_stats(&curves.m_analytic, &curves.series.m_total, normalizer);
    let deviation_intensity =
        deviation_stats(&curves.i_analytic, &curves.series.intensity, normalizer);

    let mut deviation_correlations = Vec::new();
    for (p, &(i, j)) in config.correlations.iter().enumerate() {
        let numeric_re: Vec<f64> = curves.series.correlations[p]
            .1
            .iter()
            .map(|c| c.re)
            .collect();
        let stats = deviation_stats(&curves.corr_analytic[p], &numeric_re, normalizer);
        deviation_correlations.push(CorrelationDeviation {
            pair: [i + 1, j + 1],
            max_abs: stats.max_abs,
            rms: stats.rms,
        });
    }

    let fit: DecayFit = numeric::fit_decay_rate(&curves.series)?;
    let relative_error = if n_gamma > 0.0 && fit.decaying {
        (fit.rate - n_gamma).abs() / n_gamma
    } else {
        f64::NAN
    };

    let m_first = curves.series.m_total.first().copied().unwrap_or(0.0);
    let trapped = curves
        .series
        .m_total
        .iter()
        .all(|&m| (m - m_first).abs() <= 1e-9);

    Ok(ComparisonReport {
        provenance: Provenance {
            config_hash: config.config_hash.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            generated_unix: unix_now(),
        },
        summary: CollectiveSummary {
            n_system: spec.n_system,
            n_bath: spec.n_bath,
            g_total: q.g_total,
            gamma: q.gamma,
            n_gamma,
            nbar: config.nbar,
            state: config.state.label(),
        },
        classification_class: class_label(radiance.class).to_string(),
        classification_correlated_part: radiance.correlated_part,
        deviation_m_total,
        deviation_intensity,
        deviation_correlations,
        decay_fit: DecayFitSummary {
            rate: fit.rate,
            n_gamma,
            relative_error,
            floor: fit.floor,
            decaying: fit.decaying,
        },
        flags: Flags {
            trapped,
            horizon_exceeded: curves.series.horizon_exceeded,
        },
    })
}

/// Run an experiment end to end: closed forms, coupled-mode propagation,
/// CSV series and TOML report.
pub fn run(config: &ExperimentConfig) -> HarnessResult<RunArtifacts> {
    let curves = compute_curves(config)?;
    let report = build_report(config, &curves)?;

    fs::create_dir_all(&config.outputs)?;
    let series_path = config.outputs.join("series.csv");
    let report_path = config.outputs.join("report.toml");
    write_series_csv(&series_path, config, &curves)?;
    fs::write(&report_path, report.to_toml())?;

    Ok(RunArtifacts {
        report,
        series_path,
        report_path,
    })
}

// ---------------------------------------------------------------------------
// standard comparison bundle

/// Outputs of [`reproduce_fig3`].
#[derive(Debug)]
pub struct Fig3Bundle {
    pub intensity_path: PathBuf,
    pub correlations_path: PathBuf,
    pub report_paths: Vec<PathBuf>,
}

/// Produce the standard comparison bundle: the bright, normal and dark
/// two-photon states on the full reference preset, with one intensity
/// dataset (peak-normalized numeric curves plus closed-form overlays) and
/// one two-time-correlation dataset for the guide pairs (1,3) and (3,1).
///
/// The grid runs to three collective decay times, which covers the visible
/// decay while staying inside the bath reflection horizon.
pub fn reproduce_fig3(out_dir: &Path) -> HarnessResult<Fig3Bundle> {
    let spec = model::validate(paper_preset()).map_err(HarnessError::Numeric)?;
    let q = model::collective_quantities(&spec);
    let n_gamma = spec.n_system as f64 * q.gamma;
    let t_max = 3.0 / n_gamma;
    let samples = 600;

    let classes: Vec<(&str, StateClass)> = vec![
        ("bright", StateClass::Bright { quanta: 2.0 }),
        (
            "normal",
            StateClass::Normal {
                occupations: vec![2, 0, 0],
            },
        ),
        (
            "dark",
            StateClass::Dark {
                quanta: 2.0,
                pair: (0, 2),
            },
        ),
    ];
    let pairs = [(0usize, 2usize), (2usize, 0usize)];

    let mut hasher = Sha256::new();
    hasher.update(format!("fig3|t_max={t_max}|samples={samples}"));
    let hash = hex_prefix(&hasher.finalize());

    let mut all: Vec<(String, Curves, ComparisonReport)> = Vec::new();
    fs::create_dir_all(out_dir)?;
    let mut report_paths = Vec::new();
    for (label, class) in classes {
        let config = ExperimentConfig {
            spec: spec.clone(),
            state: class,
            nbar: 0.0,
            t_max,
            samples,
            correlations: pairs.to_vec(),
            normalize_peak: false,
            outputs: out_dir.to_path_buf(),
            config_hash: hash.clone(),
        };
        let curves = compute_curves(&config)?;
        let report = build_report(&config, &curves)?;
        let report_path = out_dir.join(format!("fig3_{label}_report.toml"));
        fs::write(&report_path, report.to_toml())?;
        report_paths.push(report_path);
        all.push((label.to_string(), curves, report));
    }

    // one common normalization so the curve ordering stays visible
    let peak = all
        .iter()
        .flat_map(|(_, curves, _)| {
            curves
                .i_analytic
                .iter()
                .chain(curves.series.intensity.iter())
        })
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let peak = if peak > 0.0 { peak } else { 1.0 };

    let times = all[0].1.times.clone();

    let mut intensity = String::new();
    let _ = writeln!(intensity, "# wgsr comparison bundle: intensity v1");
    let _ = writeln!(intensity, "# units: time in 1/Delta, rates in Delta");
    let _ = writeln!(intensity, "# config = {hash}");
    let _ = writeln!(intensity, "# peak_normalization = {}", fmt_float(peak));
    let mut header = String::from("t");
    for (label, _, _) in &all {
        let _ = write!(header, ",i_{label}_analytic,i_{label}_numeric");
    }
    let _ = writeln!(intensity, "{header}");
    for (idx, &t) in times.iter().enumerate() {
        let mut line = fmt_float(t);
        for (_, curves, _) in &all {
            let _ = write!(
                line,
                ",{},{}",
                fmt_float(curves.i_analytic[idx] / peak),
                fmt_float(curves.series.intensity[idx] / peak),
            );
        }
        let _ = writeln!(intensity, "{line}");
    }
    let intensity_path = out_dir.join("fig3_intensity.csv");
    fs::write(&intensity_path, intensity)?;

    let mut corr = String::new();
    let _ = writeln!(corr, "# wgsr comparison bundle: two-time correlations v1");
    let _ = writeln!(corr, "# units: time in 1/Delta, rates in Delta");
    let _ = writeln!(corr, "# config = {hash}");
    let mut header = String::from("t");
    for (label, _, _) in &all {
        for &(i, j) in &pairs {
            let _ = write!(
                header,
                ",c_{}_{}_{label}_analytic,c_{}_{}_{label}_numeric",
                i + 1,
                j + 1,
                i + 1,
                j + 1
            );
        }
    }
    let _ = writeln!(corr, "{header}");
    for (idx, &t) in times.iter().enumerate() {
        let mut line = fmt_float(t);
        for (_, curves, _) in &all {
            for (p, _) in pairs.iter().enumerate() {
                let _ = write!(
                    line,
                    ",{},{}",
                    fmt_float(curves.corr_analytic[p][idx]),
                    fmt_float(curves.series.correlations[p].1[idx].re),
                );
            }
        }
        let _ = writeln!(corr, "{line}");
    }
    let correlations_path = out_dir.join("fig3_correlations.csv");
    fs::write(&correlations_path, corr)?;

    Ok(Fig3Bundle {
        intensity_path,
        correlations_path,
        report_paths,
    })
}

/// Run the bath-size convergence search described by a config.
pub fn converge(config: &ExperimentConfig, tol: f64) -> HarnessResult<usize> {
    let state0 = prepare_state(&config.spec, &config.state, config.nbar)?;
    let times = numeric::uniform_grid(config.t_max, config.samples)?;
    let m_star = numeric::converge_bath_size(&config.spec, &state0, &times, tol)?;
    Ok(m_star)
}
