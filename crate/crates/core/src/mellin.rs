//! Mellin transforms on uniform symmetric frequency grids.
//!
//! For a function `h` on the positive half-line and `α >= 0`,
//! `M_α[h](t) = ∫ x^{α-1+it} h(x) dx`. All quadratures here are composite
//! trapezoid rules on the nodes `t_m = m·step`, `m = -M..=M`. Transforms of
//! real functions are conjugate symmetric, so only the half line `t >= 0` is
//! ever summed.
//!
//! The cut-off integrand does not vanish at `±k`, so the plain trapezoid sum
//! of an inversion is only `O(step²)` accurate. When a transform carries its
//! derivative `dv/dt`, inversions add the first Euler–Maclaurin end
//! correction `-(step²/12)·[F'(k) - F'(-k)]`, which restores `O(step⁴)`.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Phase recurrences are re-anchored to an exact `exp(i·t·ln x)` every this
/// many nodes. Values at a node therefore do not depend on how far the grid
/// extends.
const REANCHOR: usize = 64;

/// Width of the independent partial sums in [`empirical_mellin`].
const LANES: usize = 8;

/// Tolerance used to decide whether a cut-off coincides with a grid node.
const NODE_TOL: f64 = 1e-9;

/// Default relative tolerance for conjugate symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default share of the bias integral that the extrapolated tail beyond
/// `k_max` may reach before [`bias_tail`] warns.
pub const DEFAULT_TRUNCATION_FRACTION: f64 = 0.01;

/// Symmetric uniform grid `{m·step : m = -M..=M}` with `k_max = M·step`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrequencyGrid {
    step: f64,
    half_len: usize,
}

impl FrequencyGrid {
    pub const DEFAULT_STEP: f64 = 0.01;
    pub const DEFAULT_K_MAX: f64 = 200.0;

    /// Grid covering `[-k_max, k_max]`. `k_max` must be a multiple of `step`.
    pub fn new(k_max: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        if !(k_max.is_finite() && k_max > 0.0) {
            return Err(Error::InvalidGrid(format!("k_max must be positive, got {k_max}")));
        }
        let m = (k_max / step).round();
        if m < 1.0 || (m * step - k_max).abs() > NODE_TOL * k_max.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "k_max = {k_max} is not a positive multiple of step = {step}"
            )));
        }
        Ok(Self {
            step,
            half_len: m as usize,
        })
    }

    pub fn from_half_len(step: f64, half_len: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) || half_len == 0 {
            return Err(Error::InvalidGrid(format!(
                "need positive step and at least one positive node, got step {step}, {half_len} nodes"
            )));
        }
        Ok(Self { step, half_len })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of positive nodes `M`.
    pub fn half_len(&self) -> usize {
        self.half_len
    }

    pub fn len(&self) -> usize {
        2 * self.half_len + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k_max(&self) -> f64 {
        self.node(self.half_len as isize)
    }

    /// Node `m·step` for `m` in `-M..=M`.
    pub fn node(&self, m: isize) -> f64 {
        m as f64 * self.step
    }

    /// All nodes in increasing order.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.half_len as isize;
        (-m..=m).map(move |i| self.node(i))
    }

    /// Index `m >= 1` of the node equal to the cut-off `k`.
    pub fn index_of(&self, k: f64) -> Result<usize> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!("cut-off must be positive, got {k}")));
        }
        let m = (k / self.step).round();
        if (m * self.step - k).abs() > NODE_TOL * k.max(1.0) || m < 1.0 {
            return Err(Error::NotGridNode { k, step: self.step });
        }
        let m = m as usize;
        if m > self.half_len {
            return Err(Error::CutoffOutOfRange { k, k_max: self.k_max() });
        }
        Ok(m)
    }

    /// Nearest node to `k` that is at least one step, clamped to `k_max`.
    pub fn nearest_node(&self, k: f64) -> f64 {
        let m = (k / self.step).round().clamp(1.0, self.half_len as f64);
        self.node(m as isize)
    }

    /// The same grid restricted to `[-k, k]`.
    pub fn truncated(&self, k: f64) -> Result<Self> {
        let m = self.index_of(k)?;
        Ok(Self {
            step: self.step,
            half_len: m,
        })
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self::new(Self::DEFAULT_K_MAX, Self::DEFAULT_STEP).expect("default grid is valid")
    }
}

/// Observations on the positive half-line.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: Vec<f64>,
}

impl Sample {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = points.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidSamplePoint { index, value });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Every observation multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.points.iter().map(|y| y * c).collect())
    }

    pub fn into_points(self) -> Vec<f64> {
        self.points
    }
}

/// Values of a Mellin transform on the line `Re = α` at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct MellinValue {
    alpha: f64,
    grid: FrequencyGrid,
    /// Node `m` lives at position `M + m`.
    values: Vec<Complex64>,
    /// `dv/dt` at the same nodes, when known.
    derivative: Option<Vec<Complex64>>,
}

impl MellinValue {
    /// Wrap raw node values ordered from `-k_max` to `k_max`.
    pub fn new(alpha: f64, grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be nonnegative, got {alpha}"
            )));
        }
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values supplied for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            alpha,
            grid,
            values,
            derivative: None,
        })
    }

    /// Attach node values of `dv/dt`, enabling the end correction in
    /// inversions.
    pub fn with_derivative(mut self, derivative: Vec<Complex64>) -> Result<Self> {
        if derivative.len() != self.grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} derivative values supplied for a grid of {} nodes",
                derivative.len(),
                self.grid.len()
            )));
        }
        self.derivative = Some(derivative);
        Ok(self)
    }

    /// Evaluate `f` on every node.
    pub fn from_fn(alpha: f64, grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(alpha, grid, values)
    }

    /// Evaluate the transform of a real function on `t >= 0` and fill the
    /// negative half by conjugation.
    pub fn from_real_fn(alpha: f64, grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let half: Vec<Complex64> = (0..=grid.half_len()).map(|m| f(grid.node(m as isize))).collect();
        Self::new(alpha, grid, mirror(&half))
    }

    /// [`MellinValue::from_real_fn`] together with the derivative `df`.
    pub fn from_real_fn_with_derivative(
        alpha: f64,
        grid: FrequencyGrid,
        f: impl Fn(f64) -> Complex64,
        df: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let half: Vec<Complex64> = (0..=grid.half_len()).map(|m| df(grid.node(m as isize))).collect();
        Self::from_real_fn(alpha, grid, f)?.with_derivative(mirror_derivative(&half))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// All values ordered from `-k_max` to `k_max`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Values at nodes `0..=M`.
    pub fn half(&self) -> &[Complex64] {
        &self.values[self.grid.half_len()..]
    }

    /// `dv/dt` at nodes `0..=M`, if known.
    pub fn half_derivative(&self) -> Option<&[Complex64]> {
        self.derivative.as_deref().map(|d| &d[self.grid.half_len()..])
    }

    pub fn at(&self, m: isize) -> Complex64 {
        self.values[(self.grid.half_len() as isize + m) as usize]
    }

    /// Largest deviation `|v(-t) - conj v(t)| / (|v(t)| + 1)` together with its node.
    pub fn symmetry_defect(&self) -> (f64, f64) {
        let mut worst = (0.0, 0.0);
        for m in 0..=self.grid.half_len() as isize {
            let v = self.at(m);
            let d = (self.at(-m) - v.conj()).norm() / (v.norm() + 1.0);
            if d > worst.0 {
                worst = (d, self.grid.node(m));
            }
        }
        worst
    }

    pub fn check_conjugate_symmetry(&self, tol: f64) -> Result<()> {
        let (deviation, t) = self.symmetry_defect();
        if deviation > tol {
            return Err(Error::NotConjugateSymmetric { t, deviation });
        }
        Ok(())
    }

    /// Restriction to `[-k, k]`.
    pub fn truncated(&self, k: f64) -> Result<Self> {
        let grid = self.grid.truncated(k)?;
        let lo = self.grid.half_len() - grid.half_len();
        let values = self.values[lo..lo + grid.len()].to_vec();
        let derivative = self.derivative.as_ref().map(|d| d[lo..lo + grid.len()].to_vec());
        Ok(Self {
            alpha: self.alpha,
            grid,
            values,
            derivative,
        })
    }

    /// Pointwise quotient `self / other` on a common grid.
    pub fn divide_by(&self, other: &MellinValue) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("quotient of transforms on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a / b).collect();
        // quotient rule, only when both derivatives are known
        let derivative = match (&self.derivative, &other.derivative) {
            (Some(da), Some(db)) => Some(
                (0..self.values.len())
                    .map(|i| {
                        let (a, b) = (self.values[i], other.values[i]);
                        (da[i] * b - a * db[i]) / (b * b)
                    })
                    .collect(),
            ),
            _ => None,
        };
        Ok(Self {
            alpha: self.alpha,
            grid: self.grid,
            values,
            derivative,
        })
    }
}

fn mirror(half: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = half[1..].iter().rev().map(|v| v.conj()).collect();
    out.extend_from_slice(half);
    out
}

/// `v(-t) = conj v(t)` implies `v'(-t) = -conj v'(t)`.
fn mirror_derivative(half: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = half[1..].iter().rev().map(|v| -v.conj()).collect();
    out.extend_from_slice(half);
    out
}

/// Empirical Mellin transform `n⁻¹ Σ_j X_j^{α-1+it}` on every grid node,
/// with its derivative `n⁻¹ Σ_j i·ln X_j·X_j^{α-1+it}`.
///
/// Cost is `O(n·M)`. The phase `X_j^{it}` is advanced by one complex
/// multiplication per node and re-anchored every [`REANCHOR`] nodes.
pub fn empirical_mellin(sample: &Sample, alpha: f64, grid: &FrequencyGrid) -> Result<MellinValue> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be nonnegative, got {alpha}"
        )));
    }
    let n = sample.n();
    // pad to whole lanes with zero-weight points so the sums below run in
    // fixed-width chunks; the summation order is fixed, hence reproducible
    let padded = n.div_ceil(LANES) * LANES;
    let mut logs: Vec<f64> = sample.points().iter().map(|x| x.ln()).collect();
    let mut weights: Vec<f64> = if alpha == 1.0 {
        vec![1.0; n]
    } else {
        logs.iter().map(|l| ((alpha - 1.0) * l).exp()).collect()
    };
    logs.resize(padded, 0.0);
    weights.resize(padded, 0.0);
    let h = grid.step();
    let (rot_re, rot_im): (Vec<f64>, Vec<f64>) = logs.iter().map(|l| (h * l).sin_cos()).map(|(s, c)| (c, s)).unzip();
    let mut re = weights.clone();
    let mut im = vec![0.0; padded];
    let inv_n = 1.0 / n as f64;

    let mut half = Vec::with_capacity(grid.half_len() + 1);
    let mut dhalf = Vec::with_capacity(grid.half_len() + 1);
    half.push(Complex64::new(weights.iter().sum::<f64>() * inv_n, 0.0));
    let lw: f64 = logs.iter().zip(&weights).map(|(l, w)| l * w).sum();
    dhalf.push(Complex64::new(0.0, lw * inv_n));
    for m in 1..=grid.half_len() {
        if m % REANCHOR == 0 {
            let t = grid.node(m as isize);
            for ((r, i), (l, w)) in re.iter_mut().zip(im.iter_mut()).zip(logs.iter().zip(&weights)) {
                let (s, c) = (t * l).sin_cos();
                *r = w * c;
                *i = w * s;
            }
        }
        let sums = if m % REANCHOR == 0 {
            lane_sums::<false>(&mut re, &mut im, &rot_re, &rot_im, &logs)
        } else {
            lane_sums::<true>(&mut re, &mut im, &rot_re, &rot_im, &logs)
        };
        let [sr, si, lr, li] = sums.map(|lane| lane.iter().sum::<f64>());
        half.push(Complex64::new(sr * inv_n, si * inv_n));
        dhalf.push(Complex64::new(-li * inv_n, lr * inv_n));
    }
    MellinValue::new(alpha, *grid, mirror(&half))?.with_derivative(mirror_derivative(&dhalf))
}

/// Optionally advance every phase by one rotation, then return lane-wise
/// partial sums of `re`, `im`, `ln x·re` and `ln x·im`.
#[inline(always)]
fn lane_sums<const ROTATE: bool>(
    re: &mut [f64],
    im: &mut [f64],
    rot_re: &[f64],
    rot_im: &[f64],
    logs: &[f64],
) -> [[f64; LANES]; 4] {
    let mut sums = [[0.0f64; LANES]; 4];
    for (((r, i), (cr, ci)), l) in re
        .chunks_exact_mut(LANES)
        .zip(im.chunks_exact_mut(LANES))
        .zip(rot_re.chunks_exact(LANES).zip(rot_im.chunks_exact(LANES)))
        .zip(logs.chunks_exact(LANES))
    {
        for q in 0..LANES {
            if ROTATE {
                let next = r[q] * cr[q] - i[q] * ci[q];
                i[q] = r[q] * ci[q] + i[q] * cr[q];
                r[q] = next;
            }
            sums[0][q] += r[q];
            sums[1][q] += i[q];
            sums[2][q] += l[q] * r[q];
            sums[3][q] += l[q] * i[q];
        }
    }
    sums
}

/// Trapezoid inversion `(2π)⁻¹ ∫_{-k}^{k} x^{-α-it} v(t) dt` at one point for
/// every cut-off index in `ks` (ascending, each in `1..=half.len()-1`).
///
/// Uses `v(-t) = conj v(t)`: the integral is `step·x^{-α}/(2π)` times
/// `Re v_0 + 2 Σ_{0<m<K} Re(x^{-it_m} v_m) + Re(x^{-it_K} v_K)`, minus
/// `(step/6)·Re(x^{-it_K}(v'_K - i·ln x·v_K))` when `dhalf` holds `v'`.
fn inversion_path(
    half: &[Complex64],
    dhalf: Option<&[Complex64]>,
    alpha: f64,
    step: f64,
    ks: &[usize],
    x: f64,
) -> Vec<f64> {
    let l = x.ln();
    let scale = if alpha == 1.0 { 1.0 / x } else { (-alpha * l).exp() } * step / (2.0 * PI);
    let k_last = ks.last().copied().unwrap_or(0);
    let (s, c) = (-step * l).sin_cos();
    let rot = Complex64::new(c, s);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut acc = half[0].re;
    let mut out = Vec::with_capacity(ks.len());
    let mut next = ks.iter().peekable();
    for (m, v) in half.iter().enumerate().take(k_last + 1).skip(1) {
        phase = if m % REANCHOR == 0 {
            let (s, c) = (-(m as f64 * step) * l).sin_cos();
            Complex64::new(c, s)
        } else {
            phase * rot
        };
        let term = (phase * v).re;
        while next.peek().is_some_and(|&&k| k == m) {
            let end = match dhalf {
                Some(d) => step / 6.0 * (phase * (d[m] - Complex64::new(0.0, l) * v)).re,
                None => 0.0,
            };
            out.push(scale * (acc + term - end));
            next.next();
        }
        acc += 2.0 * term;
    }
    out
}

fn check_points(xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        Some(x) => Err(Error::InvalidXGrid(format!(
            "evaluation points must be positive, got {x}"
        ))),
        None => Ok(()),
    }
}

/// Spectral cut-off inverse at a single point.
pub fn invert_cutoff(mv: &MellinValue, k: f64, x: f64) -> Result<f64> {
    Ok(invert_cutoff_many(mv, k, &[x])?[0])
}

/// Spectral cut-off inverse on a set of points.
pub fn invert_cutoff_many(mv: &MellinValue, k: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let m = mv.grid().index_of(k)?;
    Ok(invert_cutoff_path(mv, &[m], xs)?.pop().expect("one cut-off requested"))
}

/// Inverses for several cut-off indices in one sweep over the grid.
/// Result is indexed `[cut-off][point]`.
pub fn invert_cutoff_path(mv: &MellinValue, ks: &[usize], xs: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_points(xs)?;
    if ks.is_empty() {
        return Ok(Vec::new());
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) || ks[0] == 0 || *ks.last().unwrap() > mv.grid().half_len() {
        return Err(Error::InvalidParameter(format!(
            "cut-off indices must be increasing within 1..={}",
            mv.grid().half_len()
        )));
    }
    mv.check_conjugate_symmetry(SYMMETRY_TOL)?;
    let per_x: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| inversion_path(mv.half(), mv.half_derivative(), mv.alpha(), mv.grid().step(), ks, x))
        .collect();
    Ok((0..ks.len()).map(|i| per_x.iter().map(|v| v[i]).collect()).collect())
}

/// `(2π)⁻¹ ∫_{-k}^{k} |v|²` for each cut-off index in `ks` (ascending).
pub(crate) fn parseval_path_half(half: &[Complex64], step: f64, ks: &[usize]) -> Vec<f64> {
    let c = step / PI;
    let mut acc = 0.5 * half[0].norm_sqr();
    let mut out = Vec::with_capacity(ks.len());
    let mut next = ks.iter().peekable();
    let k_last = ks.last().copied().unwrap_or(0);
    for (m, v) in half.iter().enumerate().take(k_last + 1).skip(1) {
        let a = v.norm_sqr();
        while next.peek().is_some_and(|&&k| k == m) {
            out.push(c * (acc + 0.5 * a));
            next.next();
        }
        acc += a;
    }
    out
}

/// Squared weighted norm of the cut-off inverse, `(2π)⁻¹ ∫_{-k}^{k} |v(t)|² dt`.
pub fn parseval_norm(mv: &MellinValue, k: f64) -> Result<f64> {
    let m = mv.grid().index_of(k)?;
    Ok(parseval_path_half(mv.half(), mv.grid().step(), &[m])[0])
}

/// Mellin–Sobolev seminorm `∫ |v(t)|² (1+t²)^s dt` over the whole grid.
pub fn sobolev_seminorm(mv: &MellinValue, s: f64) -> Result<f64> {
    if mv.alpha() != 1.0 {
        return Err(Error::UnsupportedAlpha(mv.alpha()));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothness must be nonnegative, got {s}"
        )));
    }
    let grid = mv.grid();
    let last = grid.half_len();
    let mut acc = 0.5 * mv.half()[0].norm_sqr();
    for (m, v) in mv.half().iter().enumerate().skip(1) {
        let t = grid.node(m as isize);
        let w = if m == last { 0.5 } else { 1.0 };
        acc += w * v.norm_sqr() * (1.0 + t * t).powf(s);
    }
    Ok(2.0 * grid.step() * acc)
}

/// Approximation bias `π⁻¹ ∫_k^{k_max} |M[f](t)|² dt` of the cut-off at `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasTail {
    pub value: f64,
    /// Rough size of the neglected `π⁻¹ ∫_{k_max}^∞ |M[f]|²`, assuming decay
    /// no slower than `|t|⁻¹`.
    pub tail_estimate: f64,
    pub truncation_dominated: bool,
}

pub fn bias_tail(mv_f: &MellinValue, k: f64) -> Result<BiasTail> {
    bias_tail_with(mv_f, k, DEFAULT_TRUNCATION_FRACTION)
}

/// [`bias_tail`] with an explicit warning threshold on the truncated tail.
pub fn bias_tail_with(mv_f: &MellinValue, k: f64, max_fraction: f64) -> Result<BiasTail> {
    let start = mv_f.grid().index_of(k)?;
    let half = mv_f.half();
    let last = half.len() - 1;
    let mut acc = 0.0;
    if start < last {
        acc += 0.5 * half[start].norm_sqr();
        acc += half[start + 1..last].iter().map(|v| v.norm_sqr()).sum::<f64>();
        acc += 0.5 * half[last].norm_sqr();
    }
    let value = mv_f.grid().step() * acc / PI;
    let tail_estimate = half[last].norm_sqr() * mv_f.grid().k_max() / PI;
    let truncation_dominated = tail_estimate > max_fraction * value && tail_estimate > 0.0;
    if truncation_dominated {
        log::warn!("bias tail at k = {k}: neglected tail beyond k_max ~ {tail_estimate:e} against {value:e}");
    }
    Ok(BiasTail {
        value,
        tail_estimate,
        truncation_dominated,
    })
}
