//! Data-driven choice of the cut-off.
//!
//! `k̂ = argmin_{1 <= k <= K_n} −‖f̂_k‖²_ω + χ k^{2γ+1}/n` with
//! `K_n = ⌊n^{1/(2γ+1)}⌋`. The norms for every integer `k` come out of one
//! cumulative Parseval sweep over the frequency grid.

use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::estimator::{deconvolved_transform, CutoffEstimate, EstimatorConfig, RiskKernel};
use crate::mellin::{invert_cutoff_path, parseval_path_half, Sample};
use crate::models::{cg_estimate, sample_noisy, ErrorDensity, Histogram, TargetDensity};
use crate::rng::stream;

/// Penalty constants used for `γ = 0, 1, 2`; larger `γ` reuses the last one.
pub fn default_chi(gamma: u32) -> f64 {
    match gamma {
        0 => 1.2,
        1 => 0.8,
        _ => 0.01,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PenaltyConfig {
    pub chi: f64,
    pub gamma: u32,
    /// Upper bound on `K_n`; matters for direct observations where
    /// `K_n = n`.
    pub k_cap: usize,
}

impl PenaltyConfig {
    pub const DEFAULT_K_CAP: usize = 200;

    pub fn new(chi: f64, gamma: u32, k_cap: usize) -> Result<Self> {
        if !(chi.is_finite() && chi > 0.0) {
            return Err(Error::InvalidParameter(format!("chi must be positive, got {chi}")));
        }
        if k_cap == 0 {
            return Err(Error::InvalidParameter("k_cap must be at least 1".into()));
        }
        Ok(Self { chi, gamma, k_cap })
    }

    pub fn for_error(g: &ErrorDensity, chi: f64) -> Result<Self> {
        Self::new(chi, g.gamma(), Self::DEFAULT_K_CAP)
    }

    /// `χ k^{2γ+1} / n`
    pub fn penalty(&self, k: usize, n: usize) -> f64 {
        self.chi * (k as f64).powi(2 * self.gamma as i32 + 1) / n as f64
    }

    pub fn k_n(&self, n: usize) -> usize {
        k_n(n, self.gamma, self.k_cap)
    }
}

/// `min(max(1, ⌊n^{1/(2γ+1)}⌋), k_cap)`, with the root taken exactly.
pub fn k_n(n: usize, gamma: u32, k_cap: usize) -> usize {
    let p = 2 * gamma + 1;
    let pow_le = |k: u128| k.checked_pow(p).is_some_and(|v| v <= n as u128);
    let mut k = (n as f64).powf(1.0 / p as f64).floor() as u128;
    while k > 0 && !pow_le(k) {
        k -= 1;
    }
    while pow_le(k + 1) {
        k += 1;
    }
    (k.max(1) as usize).min(k_cap)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SelectionRow {
    pub k: usize,
    pub omega_norm_sq: f64,
    pub pen: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SelectionResult {
    pub k_hat: usize,
    pub k_n: usize,
    pub chi: f64,
    pub gamma: u32,
    pub n: usize,
    pub table: Vec<SelectionRow>,
}

/// Contrast table and minimizer from `‖f̂_k‖²_ω`, `k = 1..=norms.len()`.
/// Ties go to the smallest `k`.
pub fn selection_from_norms(norms: &[f64], pc: &PenaltyConfig, n: usize) -> SelectionResult {
    let table: Vec<SelectionRow> = norms
        .iter()
        .enumerate()
        .map(|(i, &omega_norm_sq)| {
            let k = i + 1;
            let pen = pc.penalty(k, n);
            SelectionRow {
                k,
                omega_norm_sq,
                pen,
                contrast: -omega_norm_sq + pen,
            }
        })
        .collect();
    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        if row.contrast < table[best].contrast {
            best = i;
        }
    }
    SelectionResult {
        k_hat: table[best].k,
        k_n: table.len(),
        chi: pc.chi,
        gamma: pc.gamma,
        n,
        table,
    }
}

/// Effective `K_n`, also limited by the frequency grid.
fn effective_k_n(n: usize, pc: &PenaltyConfig, cfg: &EstimatorConfig) -> usize {
    let grid_cap = (cfg.grid().k_max() + 1e-9).floor() as usize;
    pc.k_n(n).min(grid_cap).max(1)
}

/// Integer cut-offs `1..=k_n` as grid indices.
fn integer_indices(k_n: usize, step: f64) -> Result<Vec<usize>> {
    (1..=k_n)
        .map(|k| {
            let m = (k as f64 / step).round();
            if (m * step - k as f64).abs() > 1e-9 * k as f64 {
                Err(Error::NotGridNode { k: k as f64, step })
            } else {
                Ok(m as usize)
            }
        })
        .collect()
}

pub fn select_k(
    sample: &Sample,
    g: &ErrorDensity,
    pc: &PenaltyConfig,
    cfg: &EstimatorConfig,
) -> Result<SelectionResult> {
    Ok(adaptive_parts(sample, g, pc, cfg)?.1)
}

fn adaptive_parts(
    sample: &Sample,
    g: &ErrorDensity,
    pc: &PenaltyConfig,
    cfg: &EstimatorConfig,
) -> Result<(crate::mellin::MellinValue, SelectionResult, Vec<usize>)> {
    let kn = effective_k_n(sample.n(), pc, cfg);
    let mv = deconvolved_transform(sample, g, kn as f64, cfg)?;
    let idx = integer_indices(kn, mv.grid().step())?;
    let norms = parseval_path_half(mv.half(), mv.grid().step(), &idx);
    let sel = selection_from_norms(&norms, pc, sample.n());
    Ok((mv, sel, idx))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AdaptiveEstimate {
    pub estimate: CutoffEstimate,
    pub selection: SelectionResult,
    /// `12 Ĉ_g / π`, the penalty level above which the oracle inequality is
    /// guaranteed, with `Ĉ_g` from [`cg_estimate`] over `1..=K_n`.
    pub chi_threshold: f64,
}

/// Select `k̂` and return `f̂_{k̂}`.
pub fn adaptive_estimate(
    sample: &Sample,
    g: &ErrorDensity,
    pc: &PenaltyConfig,
    cfg: &EstimatorConfig,
) -> Result<AdaptiveEstimate> {
    let (mv, selection, idx) = adaptive_parts(sample, g, pc, cfg)?;
    let m = idx[selection.k_hat - 1];
    let values = invert_cutoff_path(&mv, &[m], cfg.x_grid())?.remove(0);
    let estimate = CutoffEstimate {
        k: selection.k_hat as f64,
        x: cfg.x_grid().to_vec(),
        values,
        omega_norm_sq: selection.table[selection.k_hat - 1].omega_norm_sq,
        n: sample.n(),
        error_name: g.name(),
    };
    let chi_threshold = 12.0 * cg_estimate(g, 1..=selection.k_n, cfg.grid())? / PI;
    Ok(AdaptiveEstimate {
        estimate,
        selection,
        chi_threshold,
    })
}

/// Settings for choosing `χ` on random histogram targets.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibrationConfig {
    /// Number of random histogram targets `R`.
    pub histograms: usize,
    /// Replications per histogram and `χ`.
    pub reps: usize,
    pub n: usize,
    /// Histograms live on `[0, span]`.
    pub span: f64,
    pub min_bins: usize,
    pub max_bins: usize,
    pub seed: u64,
    pub k_cap: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            histograms: 50,
            reps: 20,
            n: 1000,
            span: 5.0,
            min_bins: 3,
            max_bins: 10,
            seed: 0,
            k_cap: PenaltyConfig::DEFAULT_K_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CalibrationResult {
    pub chi: f64,
    pub chi_grid: Vec<f64>,
    /// Mean weighted ISE of the adaptive estimator for each grid value.
    pub mean_ise: Vec<f64>,
}

/// Pick the `χ` with the smallest mean weighted ISE of `f̂_{k̂}` over random
/// histogram targets. Ties go to the larger `χ`.
///
/// Histogram `h` is drawn from stream `(seed, [0, h])`, replication `r` of it
/// from `(seed, [1, h, r])`. The same samples are shared by all `χ` values.
pub fn calibrate_chi(
    g: &ErrorDensity,
    chi_grid: &[f64],
    cal: &CalibrationConfig,
    cfg: &EstimatorConfig,
) -> Result<CalibrationResult> {
    if chi_grid.is_empty() {
        return Err(Error::InvalidParameter("chi grid is empty".into()));
    }
    let penalties = chi_grid
        .iter()
        .map(|&chi| PenaltyConfig::new(chi, g.gamma(), cal.k_cap))
        .collect::<Result<Vec<_>>>()?;
    if cal.histograms == 0 || cal.reps == 0 || cal.n == 0 {
        return Err(Error::InvalidParameter(
            "calibration needs histograms, reps and n >= 1".into(),
        ));
    }
    if cal.min_bins < 1 || cal.min_bins > cal.max_bins || !(cal.span > 0.0) {
        return Err(Error::InvalidParameter("invalid histogram bin range or span".into()));
    }

    let targets: Vec<TargetDensity> = (0..cal.histograms)
        .map(|h| {
            let mut rng = stream(cal.seed, &[0, h as u64]);
            TargetDensity::Histogram(Histogram::random(&mut rng, cal.span, cal.min_bins..=cal.max_bins))
        })
        .collect();
    let tasks: Vec<(usize, usize)> = (0..cal.histograms)
        .flat_map(|h| (0..cal.reps).map(move |r| (h, r)))
        .collect();

    let per_task: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(h, r)| -> Result<Vec<f64>> {
            let target = &targets[h];
            let mut rng = stream(cal.seed, &[1, h as u64, r as u64]);
            let sample = sample_noisy(target, g, cal.n, &mut rng)?;
            let pc0 = &penalties[0];
            let (mv, _, idx) = adaptive_parts(&sample, g, pc0, cfg)?;
            let norms = parseval_path_half(mv.half(), mv.grid().step(), &idx);
            let kernel = RiskKernel::new(cfg.x_grid(), target, 1.0);
            let mut cache: BTreeMap<usize, f64> = BTreeMap::new();
            penalties
                .iter()
                .map(|pc| {
                    let k_hat = selection_from_norms(&norms, pc, cal.n).k_hat;
                    if let Some(&ise) = cache.get(&k_hat) {
                        return Ok(ise);
                    }
                    let values = invert_cutoff_path(&mv, &[idx[k_hat - 1]], cfg.x_grid())?.remove(0);
                    let ise = kernel.ise(&values);
                    cache.insert(k_hat, ise);
                    Ok(ise)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let count = per_task.len() as f64;
    let mean_ise: Vec<f64> = (0..chi_grid.len())
        .map(|c| per_task.iter().map(|row| row[c]).sum::<f64>() / count)
        .collect();
    let mut best = 0;
    for c in 1..chi_grid.len() {
        let better = mean_ise[c] < mean_ise[best] || (mean_ise[c] == mean_ise[best] && chi_grid[c] > chi_grid[best]);
        if better {
            best = c;
        }
    }
    Ok(CalibrationResult {
        chi: chi_grid[best],
        chi_grid: chi_grid.to_vec(),
        mean_ise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::estimate_noisy;
    use crate::mellin::FrequencyGrid;

    #[test]
    fn k_n_is_an_exact_integer_root() {
        assert_eq!(k_n(2000, 1, 200), 12);
        assert_eq!(k_n(1000, 1, 200), 10);
        assert_eq!(k_n(999, 1, 200), 9);
        assert_eq!(k_n(32, 2, 200), 2);
        assert_eq!(k_n(2000, 2, 200), 4);
        assert_eq!(k_n(2000, 0, 200), 200);
        assert_eq!(k_n(150, 0, 200), 150);
        assert_eq!(k_n(1, 3, 200), 1);
        assert_eq!(k_n(usize::MAX, 1, usize::MAX), 2_642_245);
    }

    #[test]
    fn penalty_plug_in() {
        let pc = PenaltyConfig::new(0.8, 1, 200).unwrap();
        assert!((pc.penalty(10, 2000) - 0.4).abs() < 1e-15);
        assert!(PenaltyConfig::new(0.0, 1, 200).is_err());
        assert!(PenaltyConfig::new(1.0, 1, 0).is_err());
        assert_eq!(default_chi(0), 1.2);
        assert_eq!(default_chi(1), 0.8);
        assert_eq!(default_chi(2), 0.01);
    }

    #[test]
    fn ties_go_to_the_smallest_cutoff() {
        let pc = PenaltyConfig::new(1.0, 0, 200).unwrap();
        // contrast −norm + k/n: with n = 1 and norms k − 5 every row equals 5
        let norms: Vec<f64> = (1..=6).map(|k| k as f64 - 5.0).collect();
        let sel = selection_from_norms(&norms, &pc, 1);
        assert_eq!(sel.k_hat, 1);
        for row in &sel.table {
            assert_eq!(row.contrast, -row.omega_norm_sq + row.pen);
        }
    }

    #[test]
    fn all_ones_sample_under_dirac() {
        // ‖f̂_k‖² = k/π, so with χ/n < 1/π the contrast decreases to K_n
        let cfg = EstimatorConfig::default();
        let s = Sample::new(vec![1.0; 1000]).unwrap();
        let pc = PenaltyConfig::for_error(&ErrorDensity::Dirac, 1.2).unwrap();
        let sel = select_k(&s, &ErrorDensity::Dirac, &pc, &cfg).unwrap();
        assert_eq!(sel.k_n, 200);
        assert_eq!(sel.k_hat, 200);
        for row in &sel.table {
            assert!((row.omega_norm_sq - row.k as f64 / PI).abs() < 1e-11);
        }
        // with χ/n > 1/π the first cut-off wins
        let pc = PenaltyConfig::new(400.0, 0, 200).unwrap();
        assert_eq!(select_k(&s, &ErrorDensity::Dirac, &pc, &cfg).unwrap().k_hat, 1);
    }

    #[test]
    fn adaptive_estimate_matches_fixed_cutoff_estimate() {
        let cfg = EstimatorConfig::default();
        let mut rng = stream(5, &[]);
        let g = ErrorDensity::BetaOneK(1);
        let s = sample_noisy(&TargetDensity::Gamma5, &g, 500, &mut rng).unwrap();
        let pc = PenaltyConfig::for_error(&g, 0.8).unwrap();
        let ad = adaptive_estimate(&s, &g, &pc, &cfg).unwrap();
        let fixed = estimate_noisy(&s, &g, ad.selection.k_hat as f64, &cfg).unwrap();
        assert_eq!(ad.estimate, fixed);
        assert_eq!(ad.selection.k_n, 7);
        // Ĉ_g = 8/3 at k = 1 for U[0,1]
        assert!((ad.chi_threshold - 32.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn grid_bound_limits_k_n() {
        let cfg = EstimatorConfig::new(1.0, FrequencyGrid::new(5.0, 0.01).unwrap(), vec![1.0]).unwrap();
        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let pc = PenaltyConfig::for_error(&ErrorDensity::Dirac, 1.2).unwrap();
        assert_eq!(select_k(&s, &ErrorDensity::Dirac, &pc, &cfg).unwrap().k_n, 3);
        let s = Sample::new(vec![1.5; 50]).unwrap();
        assert_eq!(select_k(&s, &ErrorDensity::Dirac, &pc, &cfg).unwrap().k_n, 5);
    }

    #[test]
    fn calibration_singleton_and_validation() {
        let cfg = EstimatorConfig::default();
        let cal = CalibrationConfig {
            histograms: 2,
            reps: 2,
            n: 200,
            ..Default::default()
        };
        let g = ErrorDensity::BetaOneK(1);
        let res = calibrate_chi(&g, &[0.7], &cal, &cfg).unwrap();
        assert_eq!(res.chi, 0.7);
        assert_eq!(res.mean_ise.len(), 1);
        assert!(calibrate_chi(&g, &[], &cal, &cfg).is_err());
        assert!(calibrate_chi(&g, &[-1.0], &cal, &cfg).is_err());
    }

    #[test]
    fn calibration_ties_prefer_larger_chi() {
        // a penalty too small to matter: every χ selects K_n, identical risks
        let cfg = EstimatorConfig::default();
        let cal = CalibrationConfig {
            histograms: 2,
            reps: 2,
            n: 300,
            ..Default::default()
        };
        let g = ErrorDensity::BetaOneK(1);
        let res = calibrate_chi(&g, &[1e-9, 2e-9], &cal, &cfg).unwrap();
        assert_eq!(res.mean_ise[0], res.mean_ise[1]);
        assert_eq!(res.chi, 2e-9);
    }
}
