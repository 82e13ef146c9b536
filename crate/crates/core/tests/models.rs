mod common;

use common::{error_breaks, ks_distance, mellin_quadrature, simpson, target_breaks};
use mellin_deconv::rng::stream;
use mellin_deconv::{
    cg_estimate, empirical_mellin, make_error, make_target, noise_functional, sample_error, sample_noisy,
    sample_target, sobolev_seminorm, Complex64, ErrorDensity, FrequencyGrid, Histogram, MellinValue, TargetDensity,
};

const TARGETS: [&str; 5] = ["gamma5", "gamma_mixture", "scaled_beta", "weibull2", "exponential"];
const ERRORS: [&str; 5] = [
    "uniform01",
    "uniform_half_threehalf",
    "beta_1_2",
    "beta_1_3",
    "beta_1_5",
];

fn histogram() -> TargetDensity {
    TargetDensity::Histogram(Histogram::new(vec![0.0, 0.7, 1.9, 3.1, 5.0], vec![0.1, 0.4, 0.35, 0.15]).unwrap())
}

#[test]
fn closed_form_transforms_match_quadrature() {
    let ts = [0.0, 0.5, 1.0, 2.0, 5.0];
    let mut targets: Vec<TargetDensity> = TARGETS.iter().map(|n| make_target(n).unwrap()).collect();
    targets.push(histogram());
    for f in &targets {
        for &t in &ts {
            let q = mellin_quadrature(|x| f.pdf(x), &target_breaks(f), t);
            let d = (f.mellin(t) - q).norm();
            assert!(d < 1e-7, "{} at t={t}: |Δ| = {d:e}", f.name());
        }
    }
    for name in ERRORS {
        let g = make_error(name).unwrap();
        for &t in &ts {
            let q = mellin_quadrature(|x| g.pdf(x).unwrap(), &error_breaks(&g), t);
            let d = (g.mellin(t) - q).norm();
            assert!(d < 1e-7, "{name} at t={t}: |Δ| = {d:e}");
        }
    }
}

#[test]
fn scaled_beta_is_normalized() {
    let f = make_target("scaled_beta").unwrap();
    let mass = simpson(|x| f.pdf(x), 0.0, 2.0, 2000);
    assert!((mass - 1.0).abs() < 1e-12, "{mass}");
    let q = mellin_quadrature(|x| f.pdf(x), &[2.0], 2.0);
    assert!((f.mellin(2.0) - q).norm() < 1e-8);
}

#[test]
fn samplers_pass_kolmogorov_smirnov() {
    let n = 100_000;
    // 1% critical value of the one-sample KS statistic
    let crit = 1.628 / (n as f64).sqrt();
    let mut targets: Vec<TargetDensity> = TARGETS.iter().map(|n| make_target(n).unwrap()).collect();
    targets.push(histogram());
    for (i, f) in targets.iter().enumerate() {
        let s = sample_target(f, n, &mut stream(11, &[i as u64])).unwrap();
        let d = ks_distance(s.points(), |x| f.pdf(x), &target_breaks(f));
        assert!(d < crit, "{}: D = {d} >= {crit}", f.name());
    }
    for (i, name) in ERRORS.iter().enumerate() {
        let g = make_error(name).unwrap();
        let s = sample_error(&g, n, &mut stream(12, &[i as u64])).unwrap();
        let d = ks_distance(s.points(), |x| g.pdf(x).unwrap(), &error_breaks(&g));
        assert!(d < crit, "{name}: D = {d} >= {crit}");
    }
}

#[test]
fn gamma5_sample_mean() {
    let n = 1_000_000;
    let s = sample_target(&TargetDensity::Gamma5, n, &mut stream(5, &[])).unwrap();
    let mean = s.points().iter().sum::<f64>() / n as f64;
    // Var = 5
    let se = (5.0 / n as f64).sqrt();
    assert!((mean - 5.0).abs() < 3.0 * se, "{mean}");
}

#[test]
fn noisy_samples() {
    let f = TargetDensity::Weibull2;
    let xs = sample_target(&f, 500, &mut stream(3, &[])).unwrap();
    let ys = sample_noisy(&f, &ErrorDensity::Dirac, 500, &mut stream(3, &[])).unwrap();
    assert_eq!(xs, ys);
    let ys = sample_noisy(&f, &ErrorDensity::BetaOneK(1), 500, &mut stream(3, &[])).unwrap();
    assert!(xs.points().iter().zip(ys.points()).all(|(x, y)| y <= x));
}

#[test]
fn error_decay_stays_in_band() {
    for name in ERRORS {
        let g = make_error(name).unwrap();
        let gamma = g.gamma() as i32;
        let scaled: Vec<f64> = (0..=900)
            .map(|i| {
                let t = 10.0 + 0.1 * i as f64;
                g.mellin(t).norm() * t.powi(gamma)
            })
            .collect();
        let hi = scaled.iter().cloned().fold(f64::MIN, f64::max);
        let lo = scaled.iter().cloned().fold(f64::MAX, f64::min);
        assert!(lo > 0.0 && hi / lo <= 4.0, "{name}: band [{lo}, {hi}]");
    }
}

#[test]
fn error_transform_examples() {
    let g = make_error("uniform01").unwrap();
    let v = g.mellin(1.0);
    assert!((v - Complex64::new(0.5, -0.5)).norm() < 1e-15);
    assert!((v.norm() - 0.5f64.sqrt()).abs() < 1e-15);
    let g = make_error("beta_1_2").unwrap();
    assert_eq!(g.gamma(), 2);
    for t in [0.3, 1.0, 4.0] {
        let want = 2.0 / (Complex64::new(1.0, t) * Complex64::new(2.0, t));
        assert!((g.mellin(t) - want).norm() < 1e-15);
    }
}

#[test]
fn noise_functional_closed_forms() {
    let grid = FrequencyGrid::default();
    let uni = make_error("uniform01").unwrap();
    assert!((noise_functional(&uni, 3.0, &grid).unwrap() - 24.0).abs() < 1e-10);
    assert_eq!(noise_functional(&ErrorDensity::Dirac, 5.0, &grid).unwrap(), 10.0);
    // ∫_{-k}^{k} (1+t²)(4+t²)/4 dt = (8k + 10k³/3 + 2k⁵/5) / 4
    let b2 = make_error("beta_1_2").unwrap();
    let k: f64 = 4.0;
    let exact = (8.0 * k + 10.0 * k.powi(3) / 3.0 + 2.0 * k.powi(5) / 5.0) / 4.0;
    let got = noise_functional(&b2, k, &grid).unwrap();
    assert!((got - exact).abs() < 1e-8 * exact, "{got} vs {exact}");
    // increasing in k
    let vals: Vec<f64> = (1..=20)
        .map(|k| noise_functional(&b2, k as f64 * 0.5, &grid).unwrap())
        .collect();
    assert!(vals.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn cg_surrogates() {
    let grid = FrequencyGrid::default();
    assert!((cg_estimate(&ErrorDensity::Dirac, 1..=50, &grid).unwrap() - 2.0).abs() < 1e-12);
    let uni = make_error("uniform01").unwrap();
    assert!((cg_estimate(&uni, 1..=50, &grid).unwrap() - 8.0 / 3.0).abs() < 1e-10);
    // Δ(k)/k⁵ for Beta(1,2) errors from the antiderivative, maximized over k
    let b2 = make_error("beta_1_2").unwrap();
    let want = (1..=50)
        .map(|k| {
            let k = k as f64;
            (8.0 * k + 10.0 * k.powi(3) / 3.0 + 2.0 * k.powi(5) / 5.0) / 4.0 / k.powi(5)
        })
        .fold(f64::MIN, f64::max);
    let got = cg_estimate(&b2, 1..=50, &grid).unwrap();
    assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
}

#[test]
fn vanishing_transform_is_reported() {
    // |M[g](1+it)| ≈ 80!·t⁻⁸⁰ falls below 1e-300 near t = 1e6
    let g = ErrorDensity::BetaOneK(80);
    let grid = FrequencyGrid::new(1e6, 1000.0).unwrap();
    let err = noise_functional(&g, 1e6, &grid).unwrap_err();
    assert!(matches!(err, mellin_deconv::Error::MellinVanishes { .. }), "{err:?}");
}

#[test]
fn sobolev_regularity_of_scaled_beta() {
    // |M[f](t)|² ~ c·t⁻¹⁰, so the s = 4 integrand tails off like t⁻² and the
    // s = 5 one grows like t⁰: doubling k_max halves the increment for s = 4
    // and doubles it for s = 5
    let f = TargetDensity::ScaledBeta;
    let semi = |k_max: f64, s: f64| {
        let grid = FrequencyGrid::new(k_max, 0.01).unwrap();
        let mv = MellinValue::from_fn(1.0, grid, |t| f.mellin(t)).unwrap();
        sobolev_seminorm(&mv, s).unwrap()
    };
    let growth = |s: f64| {
        let (a, b, c) = (semi(50.0, s), semi(100.0, s), semi(200.0, s));
        (c - b) / (b - a)
    };
    let (g4, g5) = (growth(4.0), growth(5.0));
    assert!((g4 - 0.5).abs() < 0.05, "s=4 increment ratio {g4}");
    assert!((g5 - 2.0).abs() < 0.1, "s=5 increment ratio {g5}");
}

#[test]
fn empirical_transform_matches_direct_sum() {
    let s = sample_target(&TargetDensity::Gamma5, 300, &mut stream(2, &[])).unwrap();
    let grid = FrequencyGrid::new(20.0, 0.01).unwrap();
    let mv = empirical_mellin(&s, 1.0, &grid).unwrap();
    for m in [-2000isize, -777, -1, 0, 1, 63, 64, 65, 1500, 2000] {
        let t = grid.node(m);
        let direct: Complex64 = s
            .points()
            .iter()
            .map(|y| Complex64::from_polar(1.0, t * y.ln()))
            .sum::<Complex64>()
            / 300.0;
        assert!((mv.at(m) - direct).norm() < 1e-12, "m={m}");
    }
}

#[test]
fn gamma5_omega_norm() {
    // ‖f‖²_ω = ∫ x·f(x)² dx = Γ(10) / (2¹⁰·24²)
    let f = TargetDensity::Gamma5;
    let direct = simpson(|x| x * f.pdf(x).powi(2), 0.0, 80.0, 40_000);
    let exact = 362_880.0 / (1024.0 * 576.0);
    assert!((direct - exact).abs() < 1e-12, "{direct}");
    let grid = FrequencyGrid::default();
    let mv = MellinValue::from_fn(1.0, grid, |t| f.mellin(t)).unwrap();
    let parseval = mellin_deconv::parseval_norm(&mv, 200.0).unwrap();
    assert!((parseval - exact).abs() < 1e-10, "{parseval}");
}

#[test]
fn error_transform_derivatives() {
    for name in ERRORS {
        let g = make_error(name).unwrap();
        for t in [0.0, 0.7, 3.0, 11.0] {
            let h = 1e-5;
            let fd = (g.mellin(t + h) - g.mellin(t - h)) / (2.0 * h);
            let d = g.mellin_derivative(t);
            assert!(
                (d - fd).norm() < 1e-8 * (1.0 + d.norm()),
                "{name} at t={t}: {d} vs {fd}"
            );
        }
    }
}
