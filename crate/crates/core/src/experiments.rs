//! Monte Carlo harness: risk reports, empirical oracle cut-offs and rate
//! studies.
//!
//! Replication `r` of a study seeded with `master_seed` draws its sample from
//! the stream `(master_seed, [r])` (rate studies add the sample size:
//! `(master_seed, [n, r])`). Replications run in parallel and are aggregated
//! in index order, so reports are identical for any number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{deconvolved_transform, estimate_direct, estimate_noisy, EstimatorConfig, RiskKernel};
use crate::mellin::{invert_cutoff_path, parseval_path_half, Sample};
use crate::models::{make_error, make_target, sample_noisy, ErrorDensity, Smoothness, TargetDensity};
use crate::rng::stream;
use crate::selection::{adaptive_estimate, k_n, selection_from_norms, PenaltyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    /// Penalized selection with constant `chi`.
    Adaptive { chi: f64 },
    /// The integer cut-off minimizing the Monte Carlo mean risk.
    OracleK,
    /// A fixed cut-off `k` (a grid node).
    FixedK { k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub target: String,
    pub error: String,
    pub n: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub mode: Mode,
    pub k_cap: usize,
}

impl MCConfig {
    pub fn new(target: &str, error: &str, n: usize, reps: usize, master_seed: u64, mode: Mode) -> Self {
        Self {
            target: target.to_string(),
            error: error.to_string(),
            n,
            reps,
            master_seed,
            mode,
            k_cap: PenaltyConfig::DEFAULT_K_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCount {
    pub k: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub target: String,
    pub error: String,
    pub n: usize,
    pub mode: Mode,
    /// Weighted ISE of each replication.
    pub ise: Vec<f64>,
    /// Cut-off used by each replication.
    pub k: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub x: Vec<f64>,
    pub truth: Vec<f64>,
    /// Pointwise median of the estimated curves.
    pub median_curve: Vec<f64>,
    pub k_histogram: Vec<KCount>,
    /// Cut-off chosen in oracle mode.
    pub k_star: Option<usize>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn rep_sample(target: &TargetDensity, error: &ErrorDensity, n: usize, seed: u64, path: &[u64]) -> Result<Sample> {
    sample_noisy(target, error, n, &mut stream(seed, path))
}

/// Risk of `f̂_k` and `‖f̂_k‖²_ω` for every integer `k` in `1..=k_top`, from
/// a single transform and a single sweep.
struct RepProfile {
    ise: Vec<f64>,
    norms: Vec<f64>,
}

fn rep_profile(
    sample: &Sample,
    error: &ErrorDensity,
    k_top: usize,
    cfg: &EstimatorConfig,
    kernel: &RiskKernel,
) -> Result<RepProfile> {
    let mv = deconvolved_transform(sample, error, k_top as f64, cfg)?;
    let step = mv.grid().step();
    let idx: Vec<usize> = (1..=k_top)
        .map(|k| mv.grid().index_of(k as f64))
        .collect::<Result<_>>()?;
    let curves = invert_cutoff_path(&mv, &idx, cfg.x_grid())?;
    Ok(RepProfile {
        ise: curves.iter().map(|c| kernel.ise(c)).collect(),
        norms: parseval_path_half(mv.half(), step, &idx),
    })
}

fn max_integer_cutoff(n: usize, error: &ErrorDensity, k_cap: usize, cfg: &EstimatorConfig) -> usize {
    let grid_cap = (cfg.grid().k_max() + 1e-9).floor() as usize;
    k_n(n, error.gamma(), k_cap).min(grid_cap).max(1)
}

/// Mean-risk minimizing integer cut-off over `1..=K_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRisk {
    pub k_star: usize,
    pub risk: f64,
    /// Mean weighted ISE for `k = 1..=K_n`.
    pub mean_ise_by_k: Vec<f64>,
}

fn oracle_from_table(table: &[Vec<f64>]) -> OracleRisk {
    let k_top = table[0].len();
    let reps = table.len() as f64;
    let mean_ise_by_k: Vec<f64> = (0..k_top)
        .map(|i| table.iter().map(|row| row[i]).sum::<f64>() / reps)
        .collect();
    let mut best = 0;
    for i in 1..k_top {
        if mean_ise_by_k[i] < mean_ise_by_k[best] {
            best = i;
        }
    }
    OracleRisk {
        k_star: best + 1,
        risk: mean_ise_by_k[best],
        mean_ise_by_k,
    }
}

fn validate_common(n: usize, reps: usize, cfg: &EstimatorConfig) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    if cfg.alpha() != 1.0 {
        return Err(Error::UnsupportedAlpha(cfg.alpha()));
    }
    Ok(())
}

/// Grid search of the integer cut-off minimizing the Monte Carlo mean
/// weighted ISE; replication `r` uses stream `(seed, [r])`.
pub fn oracle_risk(
    target: &TargetDensity,
    error: &ErrorDensity,
    n: usize,
    reps: usize,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<OracleRisk> {
    validate_common(n, reps, cfg)?;
    let k_top = max_integer_cutoff(n, error, PenaltyConfig::DEFAULT_K_CAP, cfg);
    let kernel = RiskKernel::new(cfg.x_grid(), target, 1.0);
    let table: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = rep_sample(target, error, n, seed, &[r as u64])?;
            Ok(rep_profile(&s, error, k_top, cfg, &kernel)?.ise)
        })
        .collect::<Result<_>>()?;
    Ok(oracle_from_table(&table))
}

/// Adaptive and empirical-oracle risks on the same replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivityReport {
    pub oracle: OracleRisk,
    pub chi: f64,
    pub adaptive_mean: f64,
    pub k_hat: Vec<usize>,
}

impl AdaptivityReport {
    pub fn ratio(&self) -> f64 {
        self.adaptive_mean / self.oracle.risk
    }
}

pub fn adaptivity(
    target: &TargetDensity,
    error: &ErrorDensity,
    n: usize,
    reps: usize,
    chi: f64,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<AdaptivityReport> {
    validate_common(n, reps, cfg)?;
    let pc = PenaltyConfig::for_error(error, chi)?;
    let k_top = max_integer_cutoff(n, error, pc.k_cap, cfg);
    let kernel = RiskKernel::new(cfg.x_grid(), target, 1.0);
    let profiles: Vec<RepProfile> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = rep_sample(target, error, n, seed, &[r as u64])?;
            rep_profile(&s, error, k_top, cfg, &kernel)
        })
        .collect::<Result<_>>()?;
    let k_hat: Vec<usize> = profiles
        .iter()
        .map(|p| selection_from_norms(&p.norms, &pc, n).k_hat)
        .collect();
    let adaptive: Vec<f64> = profiles.iter().zip(&k_hat).map(|(p, &k)| p.ise[k - 1]).collect();
    let table: Vec<Vec<f64>> = profiles.into_iter().map(|p| p.ise).collect();
    Ok(AdaptivityReport {
        oracle: oracle_from_table(&table),
        chi,
        adaptive_mean: mean(&adaptive),
        k_hat,
    })
}

struct RepOutcome {
    k: f64,
    ise: f64,
    curve: Vec<f64>,
}

fn fixed_outcome(
    sample: &Sample,
    error: &ErrorDensity,
    k: f64,
    cfg: &EstimatorConfig,
    kernel: &RiskKernel,
) -> Result<RepOutcome> {
    let est = if error.is_dirac() {
        estimate_direct(sample, k, cfg)?
    } else {
        estimate_noisy(sample, error, k, cfg)?
    };
    Ok(RepOutcome {
        k: est.k,
        ise: kernel.ise(&est.values),
        curve: est.values,
    })
}

/// Run `mc.reps` replications of the estimator in the requested mode.
pub fn monte_carlo(mc: &MCConfig, cfg: &EstimatorConfig) -> Result<RiskReport> {
    let target = make_target(&mc.target)?;
    let error = make_error(&mc.error)?;
    validate_common(mc.n, mc.reps, cfg)?;
    let kernel = RiskKernel::new(cfg.x_grid(), &target, 1.0);
    let sample_of = |r: usize| rep_sample(&target, &error, mc.n, mc.master_seed, &[r as u64]);

    let mut k_star = None;
    let outcomes: Vec<RepOutcome> = match mc.mode {
        Mode::FixedK { k } => {
            cfg.grid().index_of(k)?;
            (0..mc.reps)
                .into_par_iter()
                .map(|r| fixed_outcome(&sample_of(r)?, &error, k, cfg, &kernel))
                .collect::<Result<_>>()?
        }
        Mode::Adaptive { chi } => {
            let pc = PenaltyConfig::new(chi, error.gamma(), mc.k_cap)?;
            (0..mc.reps)
                .into_par_iter()
                .map(|r| {
                    let ad = adaptive_estimate(&sample_of(r)?, &error, &pc, cfg)?;
                    Ok(RepOutcome {
                        k: ad.estimate.k,
                        ise: kernel.ise(&ad.estimate.values),
                        curve: ad.estimate.values,
                    })
                })
                .collect::<Result<_>>()?
        }
        Mode::OracleK => {
            let k_top = max_integer_cutoff(mc.n, &error, mc.k_cap, cfg);
            let table: Vec<Vec<f64>> = (0..mc.reps)
                .into_par_iter()
                .map(|r| Ok(rep_profile(&sample_of(r)?, &error, k_top, cfg, &kernel)?.ise))
                .collect::<Result<_>>()?;
            let best = oracle_from_table(&table).k_star;
            k_star = Some(best);
            (0..mc.reps)
                .into_par_iter()
                .map(|r| fixed_outcome(&sample_of(r)?, &error, best as f64, cfg, &kernel))
                .collect::<Result<_>>()?
        }
    };

    let ise: Vec<f64> = outcomes.iter().map(|o| o.ise).collect();
    let ks: Vec<f64> = outcomes.iter().map(|o| o.k).collect();
    let x = cfg.x_grid().to_vec();
    let median_curve = (0..x.len())
        .map(|i| median(&outcomes.iter().map(|o| o.curve[i]).collect::<Vec<_>>()))
        .collect();
    let mut sorted_k = ks.clone();
    sorted_k.sort_by(f64::total_cmp);
    let mut k_histogram: Vec<KCount> = Vec::new();
    for k in sorted_k {
        match k_histogram.last_mut() {
            Some(last) if last.k == k => last.count += 1,
            _ => k_histogram.push(KCount { k, count: 1 }),
        }
    }
    Ok(RiskReport {
        target: mc.target.clone(),
        error: mc.error.clone(),
        n: mc.n,
        mode: mc.mode,
        mean: mean(&ise),
        median: median(&ise),
        ise,
        k: ks,
        truth: kernel.truth().to_vec(),
        x,
        median_curve,
        k_histogram,
        k_star,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(
            "slope fit needs at least two paired points".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter("slope fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = mean(&lx);
    let my = mean(&ly);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}

/// How a rate study picks the cut-off for each sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffRule {
    /// `scale · n^{1/(2s+2γ+1)}`, rounded to the nearest grid node.
    Theory { scale: f64 },
    /// The empirical oracle integer cut-off at each `n`.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub target: String,
    pub error: String,
    pub s: f64,
    pub gamma: u32,
    pub rule: CutoffRule,
    pub n_list: Vec<usize>,
    pub k_list: Vec<f64>,
    pub mean_ise: Vec<f64>,
    pub slope: f64,
    /// `−2s / (2s + 2γ + 1)`
    pub theoretical_exponent: f64,
    /// Set when the target is super smooth, where a polynomial rate is not
    /// the right benchmark.
    pub super_smooth_warning: bool,
}

impl RateStudy {
    pub fn slope_error(&self) -> f64 {
        (self.slope - self.theoretical_exponent).abs()
    }
}

pub fn theoretical_exponent(s: f64, gamma: u32) -> f64 {
    -2.0 * s / (2.0 * s + 2.0 * gamma as f64 + 1.0)
}

/// Mean weighted ISE along `n_list` and its fitted log-log slope.
/// Replication `r` at sample size `n` uses stream `(seed, [n, r])`.
#[allow(clippy::too_many_arguments)]
pub fn rate_study(
    target: &TargetDensity,
    error: &ErrorDensity,
    s: f64,
    n_list: &[usize],
    reps: usize,
    seed: u64,
    rule: CutoffRule,
    cfg: &EstimatorConfig,
) -> Result<RateStudy> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter(format!("smoothness must be positive, got {s}")));
    }
    if n_list.len() < 4 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "rate study needs at least four strictly increasing sample sizes".into(),
        ));
    }
    if let CutoffRule::Theory { scale } = rule {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cut-off scale must be positive, got {scale}"
            )));
        }
    }
    validate_common(n_list[0], reps, cfg)?;
    let super_smooth = matches!(target.smoothness(), Smoothness::SuperSmooth);
    if super_smooth {
        log::warn!(
            "rate study on super smooth target `{}`: the polynomial rate is only an upper bound",
            target.name()
        );
    }
    let gamma = error.gamma();
    let exponent = 1.0 / (2.0 * s + 2.0 * gamma as f64 + 1.0);
    let kernel = RiskKernel::new(cfg.x_grid(), target, 1.0);

    let mut k_list = Vec::with_capacity(n_list.len());
    let mut mean_ise = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sample_of = |r: usize| rep_sample(target, error, n, seed, &[n as u64, r as u64]);
        let (k, risk) = match rule {
            CutoffRule::Theory { scale } => {
                let k = cfg.grid().nearest_node(scale * (n as f64).powf(exponent));
                let ise: Vec<f64> = (0..reps)
                    .into_par_iter()
                    .map(|r| Ok(fixed_outcome(&sample_of(r)?, error, k, cfg, &kernel)?.ise))
                    .collect::<Result<_>>()?;
                (k, mean(&ise))
            }
            CutoffRule::Oracle => {
                let k_top = max_integer_cutoff(n, error, PenaltyConfig::DEFAULT_K_CAP, cfg);
                let table: Vec<Vec<f64>> = (0..reps)
                    .into_par_iter()
                    .map(|r| Ok(rep_profile(&sample_of(r)?, error, k_top, cfg, &kernel)?.ise))
                    .collect::<Result<_>>()?;
                let o = oracle_from_table(&table);
                (o.k_star as f64, o.risk)
            }
        };
        k_list.push(k);
        mean_ise.push(risk);
    }
    let ns: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    Ok(RateStudy {
        target: target.name().to_string(),
        error: error.name(),
        s,
        gamma,
        rule,
        n_list: n_list.to_vec(),
        k_list,
        slope: fit_loglog_slope(&ns, &mean_ise)?,
        mean_ise,
        theoretical_exponent: theoretical_exponent(s, gamma),
        super_smooth_warning: super_smooth,
    })
}
