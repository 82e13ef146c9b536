//! Reference computations that share no code with the library's quadrature.

#![allow(dead_code)]

use std::f64::consts::PI;

use mellin_deconv::{Complex64, ErrorDensity, Sample, TargetDensity};

/// Composite Simpson on `[a, b]` with `2·half` intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, half: usize) -> f64 {
    let n = 2 * half;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// `∫ x^{it} pdf(x) dx` over `(0, ∞)` after substituting `x = e^u`, split at
/// the points where the density is not smooth.
pub fn mellin_quadrature(pdf: impl Fn(f64) -> f64, breaks: &[f64], t: f64) -> Complex64 {
    let mut pts = vec![-45.0];
    pts.extend(breaks.iter().map(|b| b.ln()));
    pts.push(6.0);
    let mut re = 0.0;
    let mut im = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let half = ((b - a) * 2000.0).ceil() as usize + 50;
        // stay off the jumps so each piece sees one-sided values
        let (a, b) = (a + 1e-13, b - 1e-13);
        re += simpson(|u| u.exp() * pdf(u.exp()) * (t * u).cos(), a, b, half);
        im += simpson(|u| u.exp() * pdf(u.exp()) * (t * u).sin(), a, b, half);
    }
    Complex64::new(re, im)
}

pub fn target_breaks(f: &TargetDensity) -> Vec<f64> {
    match f {
        TargetDensity::ScaledBeta => vec![2.0],
        TargetDensity::Histogram(h) => h.edges().iter().copied().filter(|&e| e > 0.0).collect(),
        _ => Vec::new(),
    }
}

pub fn error_breaks(g: &ErrorDensity) -> Vec<f64> {
    match g {
        ErrorDensity::UniformHalfThreeHalf => vec![0.5, 1.5],
        _ => vec![1.0],
    }
}

/// Cut-off estimator evaluated by plain trapezoid sums on a grid of step
/// `step`, computing every `Y_j^{it}` and `x^{-it}` directly.
pub fn brute_force_estimate(sample: &Sample, g: &ErrorDensity, k: f64, step: f64, xs: &[f64]) -> Vec<f64> {
    let m = (k / step).round() as usize;
    let n = sample.n() as f64;
    let logs: Vec<f64> = sample.points().iter().map(|y| y.ln()).collect();
    // v(t) for t ≥ 0; v(−t) is its conjugate
    let v: Vec<Complex64> = (0..=m)
        .map(|i| {
            let t = step * i as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for l in &logs {
                re += (t * l).cos();
                im += (t * l).sin();
            }
            let emp = Complex64::new(re / n, im / n);
            if g.is_dirac() {
                emp
            } else {
                emp / g.mellin(t)
            }
        })
        .collect();
    xs.iter()
        .map(|&x| {
            let lx = x.ln();
            let mut acc = 0.0;
            for (i, vi) in v.iter().enumerate() {
                let t = step * i as f64;
                let term = (Complex64::from_polar(1.0, -t * lx) * vi).re;
                // ±t pair up; t = 0 is interior, ±k are the trapezoid ends
                let w = if i == 0 || i == m { 1.0 } else { 2.0 };
                acc += w * term;
            }
            acc * step / (2.0 * PI * x)
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between a sample and the cdf obtained by
/// integrating `pdf` with Simpson's rule between consecutive order statistics.
pub fn ks_distance(sample: &[f64], pdf: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let piece = |a: f64, b: f64, half: usize| {
        let mut pts = vec![a];
        pts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
        pts.push(b);
        pts.windows(2).map(|w| simpson(&pdf, w[0], w[1], half)).sum::<f64>()
    };
    let mut cdf = 0.0;
    let mut prev = 0.0;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        cdf += piece(prev, x, if i == 0 { 2000 } else { 8 });
        prev = x;
        d = d.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
    }
    d
}

/// The twelve (target, error) pairs of the simulation study.
pub const STUDY_PAIRS: [(&str, &str); 12] = [
    ("gamma5", "dirac"),
    ("gamma_mixture", "dirac"),
    ("scaled_beta", "dirac"),
    ("gamma5", "uniform01"),
    ("gamma5", "uniform_half_threehalf"),
    ("gamma5", "beta_1_2"),
    ("weibull2", "uniform01"),
    ("weibull2", "uniform_half_threehalf"),
    ("weibull2", "beta_1_2"),
    ("scaled_beta", "uniform01"),
    ("scaled_beta", "uniform_half_threehalf"),
    ("scaled_beta", "beta_1_2"),
];
