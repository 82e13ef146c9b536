use std::path::{Path, PathBuf};

use mellin_deconv::{
    adaptive_estimate, calibrate_chi, default_chi, estimate_direct, estimate_noisy, fit_loglog_slope, make_error,
    make_target, monte_carlo, rate_study, theoretical_exponent, CalibrationConfig, CutoffRule, MCConfig, Mode,
    PenaltyConfig, SelectionResult,
};
use serde::Serialize;

use crate::config::{
    estimator_config, CalibrateConfig, CutoffChoice, EstimateConfig, EstimateMode, RatecheckConfig, RunConfig,
    SimulateConfig, SimulateMode,
};
use crate::error::CliError;
use crate::io::{csv, num, read_sample, sidecar_path, write_json, write_text};

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    match config {
        RunConfig::Estimate(c) => estimate(c),
        RunConfig::Simulate(c) => simulate(c),
        RunConfig::Calibrate(c) => calibrate(c),
        RunConfig::Ratecheck(c) => ratecheck(c),
    }
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("missing {what}")))
}

#[derive(Serialize)]
struct SelectionSidecar<'a> {
    error: &'a str,
    chi_threshold: f64,
    #[serde(flatten)]
    selection: &'a SelectionResult,
}

/// A cut-off for display, without the representation noise of `m·step`.
fn node(k: f64) -> f64 {
    (k * 1e6).round() / 1e6
}

fn estimate(c: &EstimateConfig) -> Result<(), CliError> {
    let input = required(&c.input, "input path")?;
    let output = required(&c.output, "output path")?;
    let g = make_error(&c.error)?;
    let mut cfg = estimator_config(c.grids())?;
    cfg.truncation_negative = c.clip_negative;
    let sample = read_sample(input)?;

    let est = match c.mode {
        EstimateMode::Adaptive => {
            let chi = c.chi.unwrap_or_else(|| default_chi(g.gamma()));
            let pc = PenaltyConfig::for_error(&g, chi)?;
            let ad = adaptive_estimate(&sample, &g, &pc, &cfg)?;
            let sidecar = SelectionSidecar {
                error: &c.error,
                chi_threshold: ad.chi_threshold,
                selection: &ad.selection,
            };
            write_json(&sidecar_path(output), &sidecar)?;
            println!(
                "k_hat = {} (K_n = {}, chi = {chi}, threshold 12 C_g / pi = {:.4})",
                ad.selection.k_hat, ad.selection.k_n, ad.chi_threshold
            );
            ad.estimate
        }
        EstimateMode::Fixed => {
            let k = c.k.ok_or_else(|| CliError::Config("fixed mode needs k".into()))?;
            if g.is_dirac() {
                estimate_direct(&sample, k, &cfg)?
            } else {
                estimate_noisy(&sample, &g, k, &cfg)?
            }
        }
    };
    let values = if cfg.truncation_negative {
        est.clipped_values()
    } else {
        est.values.clone()
    };
    let rows = est.x.iter().zip(&values).map(|(x, v)| vec![num(*x), num(*v)]);
    write_text(output, &csv(&["x", "f_hat"], rows))?;
    println!("n = {}, k = {}, wrote {}", est.n, node(est.k), output.display());
    Ok(())
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    target: &'a str,
    error: &'a str,
    n: usize,
    reps: usize,
    seed: u64,
    mode: Mode,
    mean_ise: f64,
    median_ise: f64,
    k_star: Option<usize>,
    k_histogram: &'a [mellin_deconv::KCount],
}

fn simulate(c: &SimulateConfig) -> Result<(), CliError> {
    let dir = required(&c.output, "output directory")?;
    if c.reps == 0 {
        return Err(CliError::Config("reps must be at least 1".into()));
    }
    if c.n == 0 {
        return Err(CliError::Config("n must be at least 1".into()));
    }
    let g = make_error(&c.error)?;
    make_target(&c.target)?;
    let mode = match c.mode {
        SimulateMode::Adaptive => Mode::Adaptive {
            chi: c.chi.unwrap_or_else(|| default_chi(g.gamma())),
        },
        SimulateMode::Oracle => Mode::OracleK,
        SimulateMode::Fixed => Mode::FixedK {
            k: c.k.ok_or_else(|| CliError::Config("fixed mode needs k".into()))?,
        },
    };
    let cfg = estimator_config(c.grids())?;
    let mc = MCConfig::new(&c.target, &c.error, c.n, c.reps, c.seed, mode);
    let report = monte_carlo(&mc, &cfg)?;

    let risk = report
        .ise
        .iter()
        .zip(&report.k)
        .enumerate()
        .map(|(r, (ise, k))| vec![r.to_string(), num(*k), num(*ise)]);
    write_text(&dir.join("risk.csv"), &csv(&["rep", "k", "ise"], risk))?;
    let curve = (0..report.x.len()).map(|i| {
        vec![
            num(report.x[i]),
            num(report.truth[i]),
            num(report.median_curve[i].max(0.0)),
        ]
    });
    write_text(&dir.join("curve.csv"), &csv(&["x", "truth", "median_estimate"], curve))?;
    let summary = SimulationSummary {
        target: &c.target,
        error: &c.error,
        n: c.n,
        reps: c.reps,
        seed: c.seed,
        mode,
        mean_ise: report.mean,
        median_ise: report.median,
        k_star: report.k_star,
        k_histogram: &report.k_histogram,
    };
    write_json(&dir.join("report.json"), &summary)?;
    println!(
        "{} x {}, n = {}, reps = {}: mean ISE {}, median ISE {}",
        c.target,
        c.error,
        c.n,
        c.reps,
        num(report.mean),
        num(report.median)
    );
    Ok(())
}

fn calibrate(c: &CalibrateConfig) -> Result<(), CliError> {
    let g = make_error(&c.error)?;
    let cfg = estimator_config(c.grids())?;
    let cal = CalibrationConfig {
        histograms: c.histograms,
        reps: c.reps,
        n: c.n,
        span: c.span,
        min_bins: c.min_bins,
        max_bins: c.max_bins,
        seed: c.seed,
        k_cap: PenaltyConfig::DEFAULT_K_CAP,
    };
    let result = calibrate_chi(&g, &c.chi_grid, &cal, &cfg)?;
    for (chi, ise) in result.chi_grid.iter().zip(&result.mean_ise) {
        println!("chi {chi:>10}  mean ISE {}", num(*ise));
    }
    println!("chi = {}", result.chi);
    if let Some(path) = &c.output {
        write_json(path, &result)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RateReport {
    target: String,
    error: String,
    s: f64,
    gamma: u32,
    n_list: Vec<usize>,
    k_list: Vec<f64>,
    mean_ise: Vec<f64>,
    slope: f64,
    theoretical_exponent: f64,
    slope_error: f64,
    slope_tol: f64,
    synthetic: bool,
    pass: bool,
}

fn ratecheck(c: &RatecheckConfig) -> Result<(), CliError> {
    let target = make_target(&c.target)?;
    let g = make_error(&c.error)?;
    if !(c.slope_tol.is_finite() && c.slope_tol > 0.0) {
        return Err(CliError::Config(format!(
            "slope_tol must be positive, got {}",
            c.slope_tol
        )));
    }
    let exponent = theoretical_exponent(c.s, g.gamma());
    let (k_list, mean_ise, slope) = if c.synthetic {
        if c.n_list.len() < 4 || c.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("n_list needs at least four increasing sizes".into()));
        }
        let ns: Vec<f64> = c.n_list.iter().map(|&n| n as f64).collect();
        let ise: Vec<f64> = ns.iter().map(|n| n.powf(exponent)).collect();
        let slope = fit_loglog_slope(&ns, &ise)?;
        (Vec::new(), ise, slope)
    } else {
        let cfg = estimator_config(c.grids())?;
        let rule = match c.cutoff {
            CutoffChoice::Theory => CutoffRule::Theory { scale: c.k_scale },
            CutoffChoice::Oracle => CutoffRule::Oracle,
        };
        let study = rate_study(&target, &g, c.s, &c.n_list, c.reps, c.seed, rule, &cfg)?;
        if study.super_smooth_warning {
            eprintln!(
                "warning: {} is super smooth; the slope check is not meaningful",
                c.target
            );
        }
        (study.k_list, study.mean_ise, study.slope)
    };
    let slope_error = (slope - exponent).abs();
    let pass = slope_error <= c.slope_tol;
    for (i, n) in c.n_list.iter().enumerate() {
        match k_list.get(i) {
            Some(k) => println!("n {n:>7}  k {:>7}  mean ISE {}", node(*k), num(mean_ise[i])),
            None => println!("n {n:>7}  mean ISE {}", num(mean_ise[i])),
        }
    }
    println!(
        "slope {slope:.6}, theory {exponent:.6}, |error| {slope_error:.3e}, tol {}: {}",
        c.slope_tol,
        if pass { "PASS" } else { "FAIL" }
    );
    if let Some(path) = &c.output {
        let report = RateReport {
            target: c.target.clone(),
            error: c.error.clone(),
            s: c.s,
            gamma: g.gamma(),
            n_list: c.n_list.clone(),
            k_list,
            mean_ise,
            slope,
            theoretical_exponent: exponent,
            slope_error,
            slope_tol: c.slope_tol,
            synthetic: c.synthetic,
            pass,
        };
        write_json(path, &report)?;
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "slope {slope:.4} is {slope_error:.4} away from {exponent:.4} (tolerance {})",
            c.slope_tol
        )))
    }
}
