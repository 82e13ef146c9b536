//! Density estimation for multiplicative measurement error models.
//!
//! Observations `Y = X·U` are the product of an unknown positive variable `X`
//! and independent noise `U` with known density. The density of `X` is
//! recovered by dividing the empirical Mellin transform of the observations by
//! the Mellin transform of the noise, truncating frequencies to `[-k, k]` and
//! inverting. The cut-off `k` is chosen from the data by a penalized contrast.
//!
//! Module layout:
//!
//! * [`mellin`]: frequency grids, empirical and analytic transforms, cut-off
//!   inversion and Parseval functionals.
//! * [`models`]: the target and error densities used in simulations.
//! * [`estimator`]: the spectral cut-off estimator and its risk.
//! * [`selection`]: penalized cut-off selection and penalty calibration.
//! * [`experiments`]: Monte Carlo risk, oracle and rate studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod experiments;
pub mod mellin;
pub mod models;
pub mod rng;
pub mod selection;
pub mod special;

pub use error::{Error, Result};
pub use estimator::{
    direct_variance_bound, estimate_direct, estimate_noisy, estimate_noisy_path, log_spaced, variance_bound,
    weighted_ise, CutoffEstimate, EstimatorConfig,
};
pub use experiments::{
    adaptivity, fit_loglog_slope, monte_carlo, oracle_risk, rate_study, theoretical_exponent, AdaptivityReport,
    CutoffRule, KCount, MCConfig, Mode, OracleRisk, RateStudy, RiskReport,
};
pub use mellin::{
    bias_tail, bias_tail_with, empirical_mellin, invert_cutoff, invert_cutoff_many, invert_cutoff_path, parseval_norm,
    sobolev_seminorm, BiasTail, FrequencyGrid, MellinValue, Sample,
};
pub use models::{
    cg_estimate, check_nonvanishing, make_error, make_target, noise_functional, sample_error, sample_noisy,
    sample_target, ErrorDensity, Histogram, Smoothness, TargetDensity,
};
pub use num_complex::Complex64;
pub use selection::{
    adaptive_estimate, calibrate_chi, default_chi, k_n, select_k, selection_from_norms, AdaptiveEstimate,
    CalibrationConfig, CalibrationResult, PenaltyConfig, SelectionResult, SelectionRow,
};
