//! Spectral cut-off density estimator.
//!
//! Direct observations: `f̂_k(x) = (2π)⁻¹ ∫_{-k}^{k} x^{-α-it} M̂_α(t) dt`.
//! Noisy observations (`α = 1`): the empirical transform is divided by
//! `M[g](1+it)` before inversion. The weighted norm
//! `‖f̂_k‖²_ω = (2π)⁻¹ ∫_{-k}^{k} |M[f̂_k]|²` is computed on the frequency side.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mellin::{empirical_mellin, invert_cutoff_path, parseval_path_half, FrequencyGrid, MellinValue, Sample};
use crate::models::{check_nonvanishing, noise_functional, ErrorDensity, TargetDensity};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    alpha: f64,
    grid: FrequencyGrid,
    x_grid: Vec<f64>,
    /// Clip negative estimates to zero in reported curves. Never applied
    /// inside norms or risks.
    pub truncation_negative: bool,
}

impl EstimatorConfig {
    pub const DEFAULT_X_MIN: f64 = 0.01;
    pub const DEFAULT_X_MAX: f64 = 10.0;
    pub const DEFAULT_X_POINTS: usize = 400;

    /// Validates the evaluation grid and that `step` resolves the phase
    /// `x^{-it}` at every point: `step <= 2π / (20·max|ln x|)`.
    pub fn new(alpha: f64, grid: FrequencyGrid, x_grid: Vec<f64>) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be nonnegative, got {alpha}"
            )));
        }
        if x_grid.is_empty() {
            return Err(Error::InvalidXGrid("no evaluation points".into()));
        }
        if x_grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidXGrid(
                "evaluation points must be finite and positive".into(),
            ));
        }
        if x_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidXGrid(
                "evaluation points must be strictly increasing".into(),
            ));
        }
        let max_abs_log_x = x_grid.iter().map(|x| x.ln().abs()).fold(0.0, f64::max);
        if max_abs_log_x > 0.0 {
            let max_step = 2.0 * PI / max_abs_log_x / 20.0;
            if grid.step() > max_step {
                return Err(Error::StepTooCoarse {
                    step: grid.step(),
                    max_abs_log_x,
                    max_step,
                });
            }
        }
        Ok(Self {
            alpha,
            grid,
            x_grid,
            truncation_negative: true,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.grid, self.x_grid.clone())
    }
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::new(
            1.0,
            FrequencyGrid::default(),
            log_spaced(Self::DEFAULT_X_MIN, Self::DEFAULT_X_MAX, Self::DEFAULT_X_POINTS),
        )
        .expect("default estimator configuration is valid")
    }
}

/// `count` points spaced evenly in `ln x` from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (count - 1) as f64;
    (0..count)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == count => hi,
            _ => (a + step * i as f64).exp(),
        })
        .collect()
}

/// One realization of `f̂_k` on the evaluation grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CutoffEstimate {
    pub k: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub omega_norm_sq: f64,
    pub n: usize,
    pub error_name: String,
}

impl CutoffEstimate {
    /// Values with negative parts set to zero, for display.
    pub fn clipped_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.max(0.0)).collect()
    }
}

/// `M̂(t) / M[g](1+it)` on `[-k_needed, k_needed]`. Dirac noise passes the
/// empirical transform through untouched.
pub(crate) fn deconvolved_transform(
    sample: &Sample,
    g: &ErrorDensity,
    k_needed: f64,
    cfg: &EstimatorConfig,
) -> Result<MellinValue> {
    if cfg.alpha() != 1.0 {
        return Err(Error::UnsupportedAlpha(cfg.alpha()));
    }
    let grid = cfg.grid().truncated(k_needed)?;
    let mv = empirical_mellin(sample, 1.0, &grid)?;
    if g.is_dirac() {
        return Ok(mv);
    }
    check_nonvanishing(g, k_needed, &grid)?;
    let mg = MellinValue::from_real_fn_with_derivative(1.0, grid, |t| g.mellin(t), |t| g.mellin_derivative(t))?;
    mv.divide_by(&mg)
}

fn estimates_from_transform(
    mv: &MellinValue,
    ks: &[f64],
    n: usize,
    error_name: &str,
    cfg: &EstimatorConfig,
) -> Result<Vec<CutoffEstimate>> {
    let idx: Vec<usize> = ks.iter().map(|&k| mv.grid().index_of(k)).collect::<Result<_>>()?;
    let curves = invert_cutoff_path(mv, &idx, cfg.x_grid())?;
    let norms = parseval_path_half(mv.half(), mv.grid().step(), &idx);
    Ok(curves
        .into_iter()
        .zip(norms)
        .zip(&idx)
        .map(|((values, omega_norm_sq), &m)| CutoffEstimate {
            k: mv.grid().node(m as isize),
            x: cfg.x_grid().to_vec(),
            values,
            omega_norm_sq,
            n,
            error_name: error_name.to_string(),
        })
        .collect())
}

fn check_cutoffs(ks: &[f64], grid: &FrequencyGrid) -> Result<f64> {
    let mut last = 0;
    for &k in ks {
        let m = grid.index_of(k)?;
        if m <= last {
            return Err(Error::InvalidParameter("cut-offs must be strictly increasing".into()));
        }
        last = m;
    }
    Ok(grid.node(last as isize))
}

/// Estimator from direct observations of `X` on the line `Re = cfg.alpha`.
pub fn estimate_direct(sample: &Sample, k: f64, cfg: &EstimatorConfig) -> Result<CutoffEstimate> {
    let grid = cfg.grid().truncated(k)?;
    let mv = empirical_mellin(sample, cfg.alpha(), &grid)?;
    Ok(estimates_from_transform(&mv, &[k], sample.n(), "dirac", cfg)?.remove(0))
}

/// Estimator from noisy observations `Y = X·U`.
pub fn estimate_noisy(sample: &Sample, g: &ErrorDensity, k: f64, cfg: &EstimatorConfig) -> Result<CutoffEstimate> {
    Ok(estimate_noisy_path(sample, g, &[k], cfg)?.remove(0))
}

/// [`estimate_noisy`] for several increasing cut-offs, sharing one transform
/// and one sweep over the frequency grid. Each entry equals the single-cut-off
/// result exactly.
pub fn estimate_noisy_path(
    sample: &Sample,
    g: &ErrorDensity,
    ks: &[f64],
    cfg: &EstimatorConfig,
) -> Result<Vec<CutoffEstimate>> {
    if ks.is_empty() {
        return Ok(Vec::new());
    }
    let k_top = check_cutoffs(ks, cfg.grid())?;
    let mv = deconvolved_transform(sample, g, k_top, cfg)?;
    estimates_from_transform(&mv, ks, sample.n(), &g.name(), cfg)
}

/// Trapezoid weights on a sorted grid, multiplied by `ω_α(x) = x^{2α-1}`.
#[derive(Debug, Clone)]
pub(crate) struct RiskKernel {
    weights: Vec<f64>,
    truth: Vec<f64>,
}

impl RiskKernel {
    pub(crate) fn new(x: &[f64], truth: &TargetDensity, alpha: f64) -> Self {
        let last = x.len().saturating_sub(1);
        let weights = (0..x.len())
            .map(|i| {
                let lo = x[i.saturating_sub(1)];
                let hi = x[(i + 1).min(last)];
                0.5 * (hi - lo) * x[i].powf(2.0 * alpha - 1.0)
            })
            .collect();
        Self {
            weights,
            truth: x.iter().map(|&v| truth.pdf(v)).collect(),
        }
    }

    pub(crate) fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub(crate) fn ise(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.truth)
            .zip(values)
            .map(|((w, f), v)| w * (f - v) * (f - v))
            .sum()
    }
}

/// `∫ (f − f̂)²(x) x^{2α−1} dx` by the trapezoid rule over the estimate's grid.
pub fn weighted_ise(est: &CutoffEstimate, truth: &TargetDensity, alpha: f64) -> f64 {
    RiskKernel::new(&est.x, truth, alpha).ise(&est.values)
}

/// Variance bound `(2πn)⁻¹ Δ_g(k)` for the estimator at cut-off `k`.
pub fn variance_bound(n: usize, k: f64, g: &ErrorDensity, grid: &FrequencyGrid) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    Ok(noise_functional(g, k, grid)? / (2.0 * PI * n as f64))
}

/// Variance bound `σ̂² k / (πn)` for direct observations on a general line,
/// with `σ̂² = n⁻¹ Σ X_j^{2(α−1)}`.
pub fn direct_variance_bound(sample: &Sample, alpha: f64, k: f64) -> f64 {
    let n = sample.n() as f64;
    let sigma2 = sample.points().iter().map(|x| x.powf(2.0 * (alpha - 1.0))).sum::<f64>() / n;
    sigma2 * k / (PI * n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> Sample {
        Sample::new(vec![1.0; n]).unwrap()
    }

    #[test]
    fn default_config() {
        let cfg = EstimatorConfig::default();
        assert_eq!(cfg.x_grid().len(), 400);
        assert_eq!(cfg.x_grid()[0], 0.01);
        assert_eq!(*cfg.x_grid().last().unwrap(), 10.0);
        assert_eq!(cfg.alpha(), 1.0);
        assert!(cfg.truncation_negative);
    }

    #[test]
    fn config_rejects_bad_grids() {
        let g = FrequencyGrid::default();
        assert!(matches!(
            EstimatorConfig::new(1.0, g, vec![1.0, 0.5]),
            Err(Error::InvalidXGrid(_))
        ));
        assert!(EstimatorConfig::new(1.0, g, vec![]).is_err());
        assert!(EstimatorConfig::new(1.0, g, vec![0.0, 1.0]).is_err());
        let coarse = FrequencyGrid::new(200.0, 0.1).unwrap();
        assert!(matches!(
            EstimatorConfig::new(1.0, coarse, log_spaced(0.01, 10.0, 50)),
            Err(Error::StepTooCoarse { .. })
        ));
        assert!(EstimatorConfig::new(1.0, coarse, vec![0.5, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn ones_give_two_over_pi() {
        let cfg = EstimatorConfig::new(1.0, FrequencyGrid::default(), vec![0.5, 1.0, 2.0]).unwrap();
        let est = estimate_direct(&ones(10), 2.0, &cfg).unwrap();
        assert!((est.values[1] - 2.0 / PI).abs() < 1e-13);
        assert!((est.omega_norm_sq - 2.0 / PI).abs() < 1e-13);
    }

    #[test]
    fn smallest_cutoff_is_first_order() {
        let cfg = EstimatorConfig::default();
        let s = Sample::new(vec![0.4, 1.3, 2.2]).unwrap();
        let k = cfg.grid().step();
        let est = estimate_direct(&s, k, &cfg).unwrap();
        for (x, v) in est.x.iter().zip(&est.values).step_by(37) {
            let first_order = k / PI / x;
            assert!((v - first_order).abs() < 1e-3 * first_order, "x={x}");
        }
    }

    #[test]
    fn noisy_uniform_on_ones() {
        // (2π)⁻¹ ∫_{-1}^{1} (1 + it) dt = 1/π
        let cfg = EstimatorConfig::new(1.0, FrequencyGrid::default(), vec![1.0]).unwrap();
        let est = estimate_noisy(&ones(5), &ErrorDensity::BetaOneK(1), 1.0, &cfg).unwrap();
        assert!((est.values[0] - 1.0 / PI).abs() < 1e-13);
        assert_eq!(est.error_name, "uniform01");
    }

    #[test]
    fn noisy_requires_unit_alpha() {
        let cfg = EstimatorConfig::default().with_alpha(0.5).unwrap();
        assert_eq!(
            estimate_noisy(&ones(3), &ErrorDensity::Dirac, 1.0, &cfg),
            Err(Error::UnsupportedAlpha(0.5))
        );
    }

    #[test]
    fn dirac_noisy_equals_direct() {
        let cfg = EstimatorConfig::default();
        let s = Sample::new(vec![0.2, 0.9, 1.7, 3.0, 4.4]).unwrap();
        for k in [0.5, 3.0, 12.34] {
            let a = estimate_direct(&s, k, &cfg).unwrap();
            let b = estimate_noisy(&s, &ErrorDensity::Dirac, k, &cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn path_entries_match_single_estimates() {
        let cfg = EstimatorConfig::default();
        let s = Sample::new(vec![0.2, 0.9, 1.7, 3.0, 4.4, 0.05]).unwrap();
        let g = ErrorDensity::UniformHalfThreeHalf;
        let ks = [1.0, 2.5, 7.0];
        let path = estimate_noisy_path(&s, &g, &ks, &cfg).unwrap();
        for (k, p) in ks.iter().zip(&path) {
            assert_eq!(&estimate_noisy(&s, &g, *k, &cfg).unwrap(), p);
        }
        assert!(estimate_noisy_path(&s, &g, &[2.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn ise_of_exact_and_zero_curves() {
        let cfg = EstimatorConfig::default();
        let truth = TargetDensity::Gamma5;
        let mut est = estimate_direct(&ones(2), 1.0, &cfg).unwrap();
        est.values = est.x.iter().map(|&x| truth.pdf(x)).collect();
        assert_eq!(weighted_ise(&est, &truth, 1.0), 0.0);
        est.values = vec![0.0; est.x.len()];
        // ‖f‖²_ω = Γ(10)/(576·2¹⁰), minus the part beyond x = 10
        let full = 362_880.0 / (576.0 * 1024.0);
        let ise = weighted_ise(&est, &truth, 1.0);
        assert!(ise < full && ise > 0.99 * full, "{ise}");
    }

    #[test]
    fn variance_bound_closed_forms() {
        let grid = FrequencyGrid::new(PI, PI / 1000.0).unwrap();
        let v = variance_bound(100, PI, &ErrorDensity::Dirac, &grid).unwrap();
        assert!((v - 0.01).abs() < 1e-15);
        let grid = FrequencyGrid::default();
        let v = variance_bound(1000, 3.0, &ErrorDensity::BetaOneK(1), &grid).unwrap();
        assert!((v - 24.0 / (2000.0 * PI)).abs() < 1e-12);
        let s = ones(4);
        assert!((direct_variance_bound(&s, 1.0, PI) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn clipping_is_presentation_only() {
        let est = CutoffEstimate {
            k: 1.0,
            x: vec![1.0, 2.0],
            values: vec![-0.5, 0.25],
            omega_norm_sq: 0.1,
            n: 1,
            error_name: "dirac".into(),
        };
        assert_eq!(est.clipped_values(), vec![0.0, 0.25]);
        assert_eq!(est.values[0], -0.5);
    }
}
