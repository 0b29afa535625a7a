use threshold_kw::dynamics::{
    ma_coefficients, simulate_ar1, simulate_dgsv, simulate_ma, stationary_moments_ar1, Ar1Params,
    DgsvParams, MaParams,
};
use threshold_kw::rng::derive_seed;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn autocov(xs: &[f64], lag: usize) -> f64 {
    let m = mean(xs);
    let n = xs.len() - lag;
    (0..n).map(|i| (xs[i] - m) * (xs[i + lag] - m)).sum::<f64>() / n as f64
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let m = mean(samples);
    let var = samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    (m, (var / samples.len() as f64).sqrt())
}

#[test]
fn ar1_long_run_moments() {
    for (mu, alpha, sigma) in [(0.01, 0.5, 0.05), (0.005, 0.2, 0.05), (-0.003, -0.6, 0.02)] {
        let p = Ar1Params { mu, alpha, sigma };
        let t = 1_000_000;
        let path = simulate_ar1(&p, t, 7).unwrap();
        let (m_true, v_true) = stationary_moments_ar1(&p).unwrap();
        assert!((m_true - mu / (1.0 - alpha)).abs() < 1e-15);
        assert!((v_true - sigma * sigma / (1.0 - alpha * alpha)).abs() < 1e-15);

        let n = t as f64;
        let se_mean = (v_true * (1.0 + alpha) / (1.0 - alpha) / n).sqrt();
        let m = mean(&path.h);
        assert!((m - m_true).abs() < 4.0 * se_mean, "mean {m} vs {m_true}");

        let v = autocov(&path.h, 0);
        let se_var = v_true * (2.0 * (1.0 + alpha * alpha) / (1.0 - alpha * alpha) / n).sqrt();
        assert!((v - v_true).abs() < 4.0 * se_var, "var {v} vs {v_true}");

        let r1 = autocov(&path.h, 1) / v;
        let se_r1 = ((1.0 - alpha * alpha) / n).sqrt();
        assert!((r1 - alpha).abs() < 4.0 * se_r1, "lag-1 {r1} vs {alpha}");
    }
}

#[test]
fn ma_autocovariance_matches_coefficients() {
    let p = MaParams {
        mu: 0.001,
        b0: 0.4,
        b: 0.7,
        lags: 40,
    };
    let beta = ma_coefficients(p.b0, p.b, p.lags).unwrap();
    for lag in [0usize, 1, 5, 20] {
        let expected: f64 = (0..beta.len() - lag).map(|j| beta[j] * beta[j + lag]).sum();
        let estimates: Vec<f64> = (0..40)
            .map(|i| {
                let path = simulate_ma(&p, 50_000, derive_seed(11, i)).unwrap();
                autocov(&path.h, lag)
            })
            .collect();
        let (m, se) = mean_and_se(&estimates);
        assert!(
            (m - expected).abs() < 4.0 * se + 1e-3 * expected.abs(),
            "lag {lag}: {m} ± {se} vs {expected}"
        );
    }
    let path = simulate_ma(&p, 200_000, 3).unwrap();
    let se_mean = beta.iter().sum::<f64>() / (path.len() as f64).sqrt();
    assert!((mean(&path.h) - p.mu).abs() < 4.0 * se_mean);
}

#[test]
fn dgsv_volatility_prediction_is_the_past_sum() {
    let p = DgsvParams {
        mu: 0.01,
        alpha: 0.5,
        sigma: 0.05,
        rho: -0.2,
        b0: 0.4,
        b: 0.7,
        lags: 30,
    };
    let path = simulate_dgsv(&p, 500, 5).unwrap();
    let beta = ma_coefficients(p.b0, p.b, p.lags).unwrap();
    // Beyond the pre-sample, ν at index i is Σ_{j≥1} β_j ε_{i-j}.
    for i in p.lags..path.len() {
        let direct: f64 = (1..p.lags).map(|j| beta[j] * path.eps[i - j]).sum();
        assert!((path.nu[i] - direct).abs() < 1e-12, "i={i}");
    }
    // The stock noise has unit variance in distribution: ρ ε + √(1-ρ²) η.
    let big = simulate_dgsv(&p, 400_000, 9).unwrap();
    let z: Vec<f64> = big
        .eps
        .iter()
        .zip(&big.eta)
        .map(|(e, n)| p.rho * e + (1.0 - p.rho * p.rho).sqrt() * n)
        .collect();
    let v = autocov(&z, 0);
    assert!((v - 1.0).abs() < 4.0 * (2.0 / z.len() as f64).sqrt());
    let c = z.iter().zip(&big.eps).map(|(a, b)| a * b).sum::<f64>() / z.len() as f64;
    assert!((c - p.rho).abs() < 4.0 / (z.len() as f64).sqrt());
}
