//! Target densities `f` and error densities `g` used in simulations.
//!
//! Every model carries its density, a sampler and the closed form of its
//! Mellin transform on the line `Re = 1`, i.e. `E[X^{it}]`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Open01};
use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::mellin::{FrequencyGrid, Sample};
use crate::special::ln_gamma;

/// Smallest admissible `|M[g](1+it)|` on a grid node.
pub const MELLIN_FLOOR: f64 = 1e-300;

/// Regularity of a target in the Mellin–Sobolev scale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Smoothness {
    /// `|M[f](t)|` decays polynomially; the value is a reference index `s`
    /// with `∫ |M[f](t)|² (1+t²)^s dt < ∞`.
    Sobolev(f64),
    /// Exponential decay; every Sobolev index is finite.
    SuperSmooth,
}

/// Piecewise constant density on `[0, edges.last()]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    edges: Vec<f64>,
    weights: Vec<f64>,
}

impl Histogram {
    pub fn new(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || weights.len() + 1 != edges.len() {
            return Err(Error::InvalidParameter(
                "histogram needs k+1 edges for k weights".into(),
            ));
        }
        if edges[0] != 0.0 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("histogram edges must increase from 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(
                "histogram weights must be a probability vector".into(),
            ));
        }
        Ok(Self { edges, weights })
    }

    /// Random partition of `[0, span]` into `B ~ U{bins}` cells with
    /// `Dirichlet(1, …, 1)` weights.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, span: f64, bins: RangeInclusive<usize>) -> Self {
        let b = rng.random_range(bins);
        let mut edges: Vec<f64> = (0..b - 1).map(|_| span * open01(rng)).collect();
        edges.sort_by(f64::total_cmp);
        edges.insert(0, 0.0);
        edges.push(span);
        let raw: Vec<f64> = (0..b).map(|_| -(-open01(rng)).ln_1p()).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        // absorb rounding so the weights sum to one exactly enough for `new`
        let drift = 1.0 - weights.iter().sum::<f64>();
        weights[b - 1] += drift;
        Self { edges, weights }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn pdf(&self, x: f64) -> f64 {
        if !(x >= 0.0) || x > *self.edges.last().unwrap() {
            return 0.0;
        }
        let i = self.edges.partition_point(|&e| e <= x).clamp(1, self.weights.len());
        self.weights[i - 1] / (self.edges[i] - self.edges[i - 1])
    }

    fn mellin(&self, t: f64) -> Complex64 {
        let s = Complex64::new(1.0, t);
        let pow = |a: f64| {
            if a == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (s * a.ln()).exp()
            }
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, w) in self.weights.iter().enumerate() {
            let (a, b) = (self.edges[i], self.edges[i + 1]);
            acc += (pow(b) - pow(a)) * (w / (b - a));
        }
        acc / s
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open01(rng);
        let mut cum = 0.0;
        let mut cell = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            cum += w;
            if u < cum {
                cell = i;
                break;
            }
        }
        let (a, b) = (self.edges[cell], self.edges[cell + 1]);
        a + (b - a) * open01(rng)
    }
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

/// `E[X^{it}]` for `X ~ Gamma(shape, rate)`: `Γ(shape+it) / (Γ(shape) rate^{it})`.
fn gamma_mellin(shape: f64, rate: f64, t: f64) -> Complex64 {
    let ln_norm = ln_gamma(Complex64::new(shape, 0.0)).re;
    (ln_gamma(Complex64::new(shape, t)) - ln_norm - Complex64::new(0.0, t * rate.ln())).exp()
}

fn gamma_pdf(shape: f64, rate: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_norm = ln_gamma(Complex64::new(shape, 0.0)).re;
    (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_norm).exp()
}

const MIX_WEIGHT: f64 = 0.4;
const MIX_A: (f64, f64) = (2.0, 3.2);
const MIX_B: (f64, f64) = (16.0, 6.8);

/// Density of the unobserved `X`.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetDensity {
    /// `x⁴e^{-x}/24`
    Gamma5,
    /// `0.4·Gamma(2, rate 3.2) + 0.6·Gamma(16, rate 6.8)`
    GammaMixture,
    /// `140·(x/2)³(1−x/2)⁴` on `[0, 2]`
    ScaledBeta,
    /// `2x e^{-x²}`
    Weibull2,
    /// `e^{-x}`
    Exponential,
    Histogram(Histogram),
}

impl TargetDensity {
    pub const NAMES: [&'static str; 5] = ["gamma5", "gamma_mixture", "scaled_beta", "weibull2", "exponential"];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gamma5 => "gamma5",
            Self::GammaMixture => "gamma_mixture",
            Self::ScaledBeta => "scaled_beta",
            Self::Weibull2 => "weibull2",
            Self::Exponential => "exponential",
            Self::Histogram(_) => "histogram",
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        match self {
            Self::Gamma5 => x.powi(4) * (-x).exp() / 24.0,
            Self::GammaMixture => {
                MIX_WEIGHT * gamma_pdf(MIX_A.0, MIX_A.1, x) + (1.0 - MIX_WEIGHT) * gamma_pdf(MIX_B.0, MIX_B.1, x)
            }
            Self::ScaledBeta => {
                if x >= 2.0 {
                    0.0
                } else {
                    let u = 0.5 * x;
                    140.0 * u.powi(3) * (1.0 - u).powi(4)
                }
            }
            Self::Weibull2 => 2.0 * x * (-x * x).exp(),
            Self::Exponential => (-x).exp(),
            Self::Histogram(h) => h.pdf(x),
        }
    }

    /// `M[f](1+it) = E[X^{it}]`.
    pub fn mellin(&self, t: f64) -> Complex64 {
        match self {
            Self::Gamma5 => gamma_mellin(5.0, 1.0, t),
            Self::GammaMixture => {
                gamma_mellin(MIX_A.0, MIX_A.1, t) * MIX_WEIGHT + gamma_mellin(MIX_B.0, MIX_B.1, t) * (1.0 - MIX_WEIGHT)
            }
            Self::ScaledBeta => {
                // 2^{it} B(4+it, 5) / B(4, 5) = 2^{it} ∏_{j=4}^{8} j/(j+it)
                let mut acc = Complex64::from_polar(1.0, t * std::f64::consts::LN_2);
                for j in 4..=8 {
                    let j = j as f64;
                    acc *= j / Complex64::new(j, t);
                }
                acc
            }
            Self::Weibull2 => ln_gamma(Complex64::new(1.0, 0.5 * t)).exp(),
            Self::Exponential => ln_gamma(Complex64::new(1.0, t)).exp(),
            Self::Histogram(h) => h.mellin(t),
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            // |M[f](t)| ~ 24·|t|⁻⁵, so (1+t²)^s |M|² is integrable for s < 9/2
            Self::ScaledBeta => Smoothness::Sobolev(4.0),
            Self::Histogram(_) => Smoothness::Sobolev(0.0),
            _ => Smoothness::SuperSmooth,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gamma5 => Gamma::new(5.0, 1.0).unwrap().sample(rng),
            Self::GammaMixture => {
                let (shape, rate) = if open01(rng) < MIX_WEIGHT { MIX_A } else { MIX_B };
                Gamma::new(shape, 1.0 / rate).unwrap().sample(rng)
            }
            Self::ScaledBeta => 2.0 * Beta::new(4.0, 5.0).unwrap().sample(rng),
            Self::Weibull2 => (-(-open01(rng)).ln_1p()).sqrt(),
            Self::Exponential => -(-open01(rng)).ln_1p(),
            Self::Histogram(h) => h.draw(rng),
        }
    }
}

impl fmt::Display for TargetDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Known density of the multiplicative noise `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorDensity {
    /// `U ≡ 1`: direct observations.
    Dirac,
    /// `U ~ U[0.5, 1.5]`
    UniformHalfThreeHalf,
    /// `g(x) = k(1−x)^{k−1}` on `(0, 1)`; `k = 1` is `U[0, 1]`.
    BetaOneK(u32),
}

impl ErrorDensity {
    pub fn name(&self) -> String {
        match self {
            Self::Dirac => "dirac".into(),
            Self::UniformHalfThreeHalf => "uniform_half_threehalf".into(),
            Self::BetaOneK(1) => "uniform01".into(),
            Self::BetaOneK(k) => format!("beta_1_{k}"),
        }
    }

    /// Decay index `γ` with `|M[g](1+it)| ~ |t|^{-γ}`.
    pub fn gamma(&self) -> u32 {
        match self {
            Self::Dirac => 0,
            Self::UniformHalfThreeHalf => 1,
            Self::BetaOneK(k) => *k,
        }
    }

    /// Threshold `τ₁` beyond which the polynomial decay holds. Informational.
    pub fn tau1(&self) -> f64 {
        1.0
    }

    pub fn support_upper(&self) -> Option<f64> {
        match self {
            Self::UniformHalfThreeHalf => Some(1.5),
            _ => Some(1.0),
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self, Self::Dirac)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(match self {
            Self::Dirac => return Err(Error::NoDensity(self.name())),
            Self::UniformHalfThreeHalf => {
                if (0.5..=1.5).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::BetaOneK(k) => {
                if x > 0.0 && x < 1.0 {
                    *k as f64 * (1.0 - x).powi(*k as i32 - 1)
                } else {
                    0.0
                }
            }
        })
    }

    /// `M[g](1+it) = E[U^{it}]`.
    pub fn mellin(&self, t: f64) -> Complex64 {
        match self {
            Self::Dirac => Complex64::new(1.0, 0.0),
            Self::UniformHalfThreeHalf => {
                let s = Complex64::new(1.0, t);
                ((s * 1.5f64.ln()).exp() - (s * 0.5f64.ln()).exp()) / s
            }
            Self::BetaOneK(k) => {
                let mut acc = Complex64::new(1.0, 0.0);
                for j in 1..=*k {
                    let j = j as f64;
                    acc *= j / Complex64::new(j, t);
                }
                acc
            }
        }
    }

    /// `d/dt M[g](1+it)`.
    pub fn mellin_derivative(&self, t: f64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        match self {
            Self::Dirac => Complex64::new(0.0, 0.0),
            Self::UniformHalfThreeHalf => {
                let s = Complex64::new(1.0, t);
                let (l1, l0) = (1.5f64.ln(), 0.5f64.ln());
                let (p1, p0) = ((s * l1).exp(), (s * l0).exp());
                i * ((p1 * l1 - p0 * l0) * s - (p1 - p0)) / (s * s)
            }
            Self::BetaOneK(k) => {
                let log_derivative: Complex64 = (1..=*k).map(|j| -i / Complex64::new(j as f64, t)).sum();
                self.mellin(t) * log_derivative
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Dirac => 1.0,
            Self::UniformHalfThreeHalf => 0.5 + open01(rng),
            // inverse cdf 1 − (1−u)^{1/k}, written to stay positive for tiny u
            Self::BetaOneK(k) => -((-open01(rng)).ln_1p() / *k as f64).exp_m1(),
        }
    }
}

impl fmt::Display for ErrorDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

pub fn make_target(name: &str) -> Result<TargetDensity> {
    Ok(match name {
        "gamma5" => TargetDensity::Gamma5,
        "gamma_mixture" => TargetDensity::GammaMixture,
        "scaled_beta" => TargetDensity::ScaledBeta,
        "weibull2" => TargetDensity::Weibull2,
        "exponential" => TargetDensity::Exponential,
        _ => return Err(Error::UnknownModel(name.to_string())),
    })
}

/// Parse an error density name: `dirac`, `uniform01`,
/// `uniform_half_threehalf`, `beta_1_<k>` or `beta_1_k(<k>)`.
pub fn make_error(name: &str) -> Result<ErrorDensity> {
    match name {
        "dirac" => return Ok(ErrorDensity::Dirac),
        "uniform01" => return Ok(ErrorDensity::BetaOneK(1)),
        "uniform_half_threehalf" => return Ok(ErrorDensity::UniformHalfThreeHalf),
        _ => {}
    }
    let k = name
        .strip_prefix("beta_1_k(")
        .and_then(|r| r.strip_suffix(')'))
        .or_else(|| name.strip_prefix("beta_1_"))
        .ok_or_else(|| Error::UnknownModel(name.to_string()))?;
    let k: i64 = k.trim().parse().map_err(|_| Error::UnknownModel(name.to_string()))?;
    if k < 1 || k > u32::MAX as i64 {
        return Err(Error::InvalidParameter(format!("beta_1_k needs k >= 1, got {k}")));
    }
    Ok(ErrorDensity::BetaOneK(k as u32))
}

fn simpson_weight(m: usize, last: usize) -> f64 {
    // composite Simpson on 0..=last (last even)
    if m == 0 || m == last {
        1.0 / 3.0
    } else if m % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// Composite Simpson on nodes `0..=k` with unit spacing; odd `k >= 3` closes
/// with the 3/8 rule, `k = 1` falls back to the trapezoid.
fn simpson_nodes(f: &[f64]) -> f64 {
    let k = f.len() - 1;
    match k {
        0 => 0.0,
        1 => 0.5 * (f[0] + f[1]),
        _ if k.is_multiple_of(2) => f.iter().enumerate().map(|(m, v)| simpson_weight(m, k) * v).sum(),
        _ => {
            let head = k - 3;
            let s: f64 = f[..=head]
                .iter()
                .enumerate()
                .map(|(m, v)| simpson_weight(m, head) * v)
                .sum();
            let s = if head == 0 { 0.0 } else { s };
            s + 3.0 / 8.0 * (f[head] + 3.0 * f[head + 1] + 3.0 * f[head + 2] + f[head + 3])
        }
    }
}

/// `Δ_g(k) = ∫_{-k}^{k} |M[g](1+it)|⁻² dt` by Simpson's rule on the grid nodes.
pub fn noise_functional(g: &ErrorDensity, k: f64, grid: &FrequencyGrid) -> Result<f64> {
    let last = grid.index_of(k)?;
    if g.is_dirac() {
        return Ok(2.0 * grid.node(last as isize));
    }
    let mut inv = Vec::with_capacity(last + 1);
    for m in 0..=last {
        let t = grid.node(m as isize);
        let modulus = g.mellin(t).norm();
        if !(modulus >= MELLIN_FLOOR) {
            return Err(Error::MellinVanishes {
                name: g.name(),
                t,
                modulus,
            });
        }
        inv.push(modulus.powi(-2));
    }
    Ok(2.0 * grid.step() * simpson_nodes(&inv))
}

/// Check that `M[g](1+it)` stays above [`MELLIN_FLOOR`] on `[-k, k]`.
pub fn check_nonvanishing(g: &ErrorDensity, k: f64, grid: &FrequencyGrid) -> Result<()> {
    noise_functional(g, k, grid).map(|_| ())
}

/// Numeric surrogate for `C_g`: `max_{k ∈ range} Δ_g(k) / k^{2γ+1}`.
pub fn cg_estimate(g: &ErrorDensity, k_range: RangeInclusive<usize>, grid: &FrequencyGrid) -> Result<f64> {
    if k_range.is_empty() || *k_range.start() == 0 {
        return Err(Error::InvalidParameter(
            "C_g needs a nonempty range of positive cut-offs".into(),
        ));
    }
    let p = 2 * g.gamma() as i32 + 1;
    let mut best = f64::NEG_INFINITY;
    for k in k_range {
        let kf = k as f64;
        best = best.max(noise_functional(g, kf, grid)? / kf.powi(p));
    }
    Ok(best)
}

pub fn sample_target<R: Rng + ?Sized>(target: &TargetDensity, n: usize, rng: &mut R) -> Result<Sample> {
    Sample::new((0..n).map(|_| target.draw(rng)).collect())
}

pub fn sample_error<R: Rng + ?Sized>(error: &ErrorDensity, n: usize, rng: &mut R) -> Result<Sample> {
    Sample::new((0..n).map(|_| error.draw(rng)).collect())
}

/// `n` draws of `Y = X·U`: all target draws first, then all error draws.
pub fn sample_noisy<R: Rng + ?Sized>(
    target: &TargetDensity,
    error: &ErrorDensity,
    n: usize,
    rng: &mut R,
) -> Result<Sample> {
    let xs = sample_target(target, n, rng)?;
    if error.is_dirac() {
        return Ok(xs);
    }
    let us = sample_error(error, n, rng)?;
    Sample::new(xs.points().iter().zip(us.points()).map(|(x, u)| x * u).collect())
}
