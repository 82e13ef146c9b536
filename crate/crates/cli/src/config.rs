//! Run configuration. A run is described by one flat JSON document tagged
//! with its subcommand; command-line flags override values read from a file.

use std::path::PathBuf;

use clap::ValueEnum;
use mellin_deconv::{log_spaced, EstimatorConfig, FrequencyGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SimulateMode {
    Adaptive,
    Oracle,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CutoffChoice {
    /// `k = scale · n^{1/(2s+2γ+1)}`
    Theory,
    /// Monte Carlo oracle cut-off at every `n`.
    Oracle,
}

fn default_x_min() -> f64 {
    EstimatorConfig::DEFAULT_X_MIN
}
fn default_x_max() -> f64 {
    EstimatorConfig::DEFAULT_X_MAX
}
fn default_x_points() -> usize {
    EstimatorConfig::DEFAULT_X_POINTS
}
fn default_t_max() -> f64 {
    FrequencyGrid::DEFAULT_K_MAX
}
fn default_t_step() -> f64 {
    FrequencyGrid::DEFAULT_STEP
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub error: String,
    pub mode: EstimateMode,
    /// Penalty constant; defaults to the value for the error's `γ`.
    #[serde(default)]
    pub chi: Option<f64>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default = "default_true")]
    pub clip_negative: bool,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_step")]
    pub t_step: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            input: None,
            output: None,
            error: "dirac".into(),
            mode: EstimateMode::Adaptive,
            chi: None,
            k: None,
            clip_negative: true,
            x_min: default_x_min(),
            x_max: default_x_max(),
            x_points: default_x_points(),
            t_max: default_t_max(),
            t_step: default_t_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub target: String,
    pub error: String,
    pub n: usize,
    pub reps: usize,
    pub mode: SimulateMode,
    #[serde(default)]
    pub chi: Option<f64>,
    #[serde(default)]
    pub k: Option<f64>,
    pub seed: u64,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_step")]
    pub t_step: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            target: "gamma5".into(),
            error: "dirac".into(),
            n: 1000,
            reps: 50,
            mode: SimulateMode::Adaptive,
            chi: None,
            k: None,
            seed: 0,
            output: None,
            x_min: default_x_min(),
            x_max: default_x_max(),
            x_points: default_x_points(),
            t_max: default_t_max(),
            t_step: default_t_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub error: String,
    pub chi_grid: Vec<f64>,
    pub histograms: usize,
    pub reps: usize,
    pub n: usize,
    pub span: f64,
    pub min_bins: usize,
    pub max_bins: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_step")]
    pub t_step: f64,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        let cal = mellin_deconv::CalibrationConfig::default();
        Self {
            error: "dirac".into(),
            chi_grid: vec![0.3, 1.2, 4.8],
            histograms: cal.histograms,
            reps: cal.reps,
            n: cal.n,
            span: cal.span,
            min_bins: cal.min_bins,
            max_bins: cal.max_bins,
            seed: cal.seed,
            output: None,
            x_min: default_x_min(),
            x_max: default_x_max(),
            x_points: default_x_points(),
            t_max: default_t_max(),
            t_step: default_t_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatecheckConfig {
    pub target: String,
    pub error: String,
    pub s: f64,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub cutoff: CutoffChoice,
    pub k_scale: f64,
    pub slope_tol: f64,
    /// Replace the Monte Carlo risks by the exact power law `n^{rate}`.
    #[serde(default)]
    pub synthetic: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_step")]
    pub t_step: f64,
}

impl Default for RatecheckConfig {
    fn default() -> Self {
        Self {
            target: "scaled_beta".into(),
            error: "dirac".into(),
            s: 4.0,
            n_list: vec![1000, 2000, 4000, 8000, 16000],
            reps: 200,
            seed: 0,
            cutoff: CutoffChoice::Theory,
            k_scale: 1.0,
            slope_tol: 0.15,
            synthetic: false,
            output: None,
            x_min: default_x_min(),
            x_max: default_x_max(),
            x_points: default_x_points(),
            t_max: default_t_max(),
            t_step: default_t_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Estimate(EstimateConfig),
    Simulate(SimulateConfig),
    Calibrate(CalibrateConfig),
    Ratecheck(RatecheckConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Estimate(_) => "estimate",
            RunConfig::Simulate(_) => "simulate",
            RunConfig::Calibrate(_) => "calibrate",
            RunConfig::Ratecheck(_) => "ratecheck",
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run configuration serializes")
    }
}

/// Evaluation points `x` and frequency grid `t` shared by every subcommand.
pub struct Grids {
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    pub t_max: f64,
    pub t_step: f64,
}

pub fn estimator_config(g: Grids) -> Result<EstimatorConfig, CliError> {
    let Grids {
        x_min,
        x_max,
        x_points,
        t_max,
        t_step,
    } = g;
    if !(x_min > 0.0 && x_min < x_max && x_max.is_finite()) || x_points < 2 {
        return Err(CliError::Config(format!(
            "invalid evaluation grid: x_min={x_min}, x_max={x_max}, x_points={x_points}"
        )));
    }
    let grid = FrequencyGrid::new(t_max, t_step)?;
    Ok(EstimatorConfig::new(1.0, grid, log_spaced(x_min, x_max, x_points))?)
}

macro_rules! grids {
    ($($config:ty),*) => {$(
        impl $config {
            pub fn grids(&self) -> Grids {
                Grids {
                    x_min: self.x_min,
                    x_max: self.x_max,
                    x_points: self.x_points,
                    t_max: self.t_max,
                    t_step: self.t_step,
                }
            }
        }
    )*};
}

grids!(EstimateConfig, SimulateConfig, CalibrateConfig, RatecheckConfig);
