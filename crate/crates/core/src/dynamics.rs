//! Simulators for the log-return processes.
//!
//! * AR(1): `H_t = μ + α H_{t-1} + σ ε_t`
//! * MA(∞): `H_t = μ + Σ_j β_j ε_{t-j}` with `β_j = b₀ (1+j)^{-b}`
//! * DGSV:  `H_t = μ + α H_{t-1} + σ e^{Y_t} (ρ ε_t + √(1-ρ²) η_t)`,
//!   `Y_t = Σ_j β_j ε_{t-j}`
//!
//! Infinite sums are truncated after `lags` terms. A pre-sample of shocks is
//! drawn so the first emitted observation already sees the full truncated
//! history, and autoregressive recursions start from the stationary mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, STREAM_EPS, STREAM_ETA, STREAM_PRESAMPLE};

pub const DEFAULT_LAGS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Params {
    pub mu: f64,
    pub alpha: f64,
    pub sigma: f64,
}

impl Ar1Params {
    pub fn new(mu: f64, alpha: f64, sigma: f64) -> Result<Self> {
        let p = Ar1Params { mu, alpha, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("mu", self.mu)?;
        check_unit("alpha", self.alpha)?;
        // σ = 0 is allowed: it gives the noiseless recursion.
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(
                "sigma",
                format!("must be >= 0, got {}", self.sigma),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaParams {
    pub mu: f64,
    pub b0: f64,
    pub b: f64,
    #[serde(default = "default_lags")]
    pub lags: usize,
}

impl MaParams {
    pub fn validate(&self) -> Result<()> {
        check_finite("mu", self.mu)?;
        check_coefficients(self.b0, self.b, self.lags, false)
    }

    /// `b₀ > 0` and `0.5 < b < 1`.
    pub fn is_long_memory(&self) -> bool {
        self.b0 > 0.0 && self.b > 0.5 && self.b < 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgsvParams {
    pub mu: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub rho: f64,
    pub b0: f64,
    pub b: f64,
    #[serde(default = "default_lags")]
    pub lags: usize,
}

impl DgsvParams {
    pub fn validate(&self) -> Result<()> {
        Ar1Params {
            mu: self.mu,
            alpha: self.alpha,
            sigma: self.sigma,
        }
        .validate()?;
        check_unit("rho", self.rho)?;
        // b₀ = 0 switches the stochastic volatility off.
        check_coefficients(self.b0, self.b, self.lags, true)
    }

    pub fn drift(&self) -> Ar1Params {
        Ar1Params {
            mu: self.mu,
            alpha: self.alpha,
            sigma: self.sigma,
        }
    }
}

fn default_lags() -> usize {
    DEFAULT_LAGS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum DynamicsSpec {
    Ar1(Ar1Params),
    Ma(MaParams),
    Dgsv(DgsvParams),
}

impl DynamicsSpec {
    pub fn simulate(&self, t_len: usize, seed: u64) -> Result<ReturnPath> {
        match self {
            DynamicsSpec::Ar1(p) => simulate_ar1(p, t_len, seed),
            DynamicsSpec::Ma(p) => simulate_ma(p, t_len, seed),
            DynamicsSpec::Dgsv(p) => simulate_dgsv(p, t_len, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DynamicsSpec::Ar1(p) => p.validate(),
            DynamicsSpec::Ma(p) => p.validate(),
            DynamicsSpec::Dgsv(p) => p.validate(),
        }
    }

    /// Whether simulated paths carry the predicted log-volatility series.
    pub fn has_volatility(&self) -> bool {
        matches!(self, DynamicsSpec::Dgsv(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            DynamicsSpec::Ar1(_) => "ar1",
            DynamicsSpec::Ma(_) => "ma",
            DynamicsSpec::Dgsv(_) => "dgsv",
        }
    }
}

/// A simulated trajectory. Index `i` holds time `t = i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPath {
    /// Log-returns `H_t`.
    pub h: Vec<f64>,
    /// Shocks `ε_t`.
    pub eps: Vec<f64>,
    /// Shocks `η_t`; empty unless DGSV.
    pub eta: Vec<f64>,
    /// `ν_{t-1} = E[Y_t | ε_{t-1}, ε_{t-2}, ...]`, the predicted log-volatility
    /// available when deciding about `H_t`; empty unless DGSV.
    pub nu: Vec<f64>,
    /// Realized log-volatility `Y_t`; empty unless DGSV.
    pub log_vol: Vec<f64>,
    pub seed: u64,
}

impl ReturnPath {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn has_volatility(&self) -> bool {
        !self.nu.is_empty()
    }
}

/// `[β₀, …, β_{lags-1}]` with `β_j = b₀ (1+j)^{-b}`.
pub fn ma_coefficients(b0: f64, b: f64, lags: usize) -> Result<Vec<f64>> {
    check_coefficients(b0, b, lags, false)?;
    Ok(coefficients(b0, b, lags))
}

fn coefficients(b0: f64, b: f64, lags: usize) -> Vec<f64> {
    (0..lags).map(|j| b0 * (1.0 + j as f64).powf(-b)).collect()
}

pub fn stationary_moments_ar1(params: &Ar1Params) -> Result<(f64, f64)> {
    params.validate()?;
    let Ar1Params { mu, alpha, sigma } = *params;
    if alpha.abs() >= 1.0 {
        return Err(Error::param(
            "alpha",
            "|alpha| must be < 1 for a stationary AR(1)",
        ));
    }
    Ok((mu / (1.0 - alpha), sigma * sigma / (1.0 - alpha * alpha)))
}

pub fn simulate_ar1(params: &Ar1Params, t_len: usize, seed: u64) -> Result<ReturnPath> {
    check_len(t_len)?;
    let (mean, _) = stationary_moments_ar1(params)?;
    let eps = rng::normals(seed, STREAM_EPS, t_len);
    let mut prev = mean;
    let h = eps
        .iter()
        .map(|e| {
            prev = params.mu + params.alpha * prev + params.sigma * e;
            prev
        })
        .collect();
    Ok(ReturnPath {
        h,
        eps,
        eta: Vec::new(),
        nu: Vec::new(),
        log_vol: Vec::new(),
        seed,
    })
}

pub fn simulate_ma(params: &MaParams, t_len: usize, seed: u64) -> Result<ReturnPath> {
    check_len(t_len)?;
    params.validate()?;
    let beta = coefficients(params.b0, params.b, params.lags);
    let conv = MovingSum::new(&beta, seed, t_len);
    let h = (0..t_len).map(|i| params.mu + conv.full(i)).collect();
    Ok(ReturnPath {
        h,
        eps: conv.shocks().to_vec(),
        eta: Vec::new(),
        nu: Vec::new(),
        log_vol: Vec::new(),
        seed,
    })
}

pub fn simulate_dgsv(params: &DgsvParams, t_len: usize, seed: u64) -> Result<ReturnPath> {
    check_len(t_len)?;
    params.validate()?;
    let (mean, _) = stationary_moments_ar1(&params.drift())?;
    let eta = rng::normals(seed, STREAM_ETA, t_len);
    let rho_perp = (1.0 - params.rho * params.rho).sqrt();

    let (eps, nu, log_vol) = if params.b0 == 0.0 {
        let eps = rng::normals(seed, STREAM_EPS, t_len);
        (eps, vec![0.0; t_len], vec![0.0; t_len])
    } else {
        let beta = coefficients(params.b0, params.b, params.lags);
        let conv = MovingSum::new(&beta, seed, t_len);
        let nu: Vec<f64> = (0..t_len).map(|i| conv.past(i)).collect();
        let eps = conv.shocks().to_vec();
        let log_vol = nu.iter().zip(&eps).map(|(n, e)| n + beta[0] * e).collect();
        (eps, nu, log_vol)
    };

    let mut prev = mean;
    let h = (0..t_len)
        .map(|i| {
            let shock = params.rho * eps[i] + rho_perp * eta[i];
            prev = params.mu + params.alpha * prev + params.sigma * log_vol[i].exp() * shock;
            prev
        })
        .collect();
    Ok(ReturnPath {
        h,
        eps,
        eta,
        nu,
        log_vol,
        seed,
    })
}

/// Truncated moving sum `Σ_{j<lags} β_j ε_{t-j}` over a shock buffer that
/// starts `lags - 1` periods before `t = 1`.
struct MovingSum {
    /// Coefficients in reverse order, `rev[k] = β_{lags-1-k}`.
    rev: Vec<f64>,
    /// `buf[lags - 1 + i] = ε_{i+1}`; earlier entries are the pre-sample.
    buf: Vec<f64>,
}

impl MovingSum {
    fn new(beta: &[f64], seed: u64, t_len: usize) -> Self {
        let lags = beta.len();
        let mut pre = rng::normals(seed, STREAM_PRESAMPLE, lags - 1);
        // Drawn as ε₀, ε₋₁, ...: put them in time order.
        pre.reverse();
        pre.extend(rng::normals(seed, STREAM_EPS, t_len));
        MovingSum {
            rev: beta.iter().rev().copied().collect(),
            buf: pre,
        }
    }

    fn shocks(&self) -> &[f64] {
        &self.buf[self.rev.len() - 1..]
    }

    /// Full sum for time index `i` (t = i + 1).
    fn full(&self, i: usize) -> f64 {
        let lags = self.rev.len();
        dot(&self.rev, &self.buf[i..i + lags])
    }

    /// Sum without the `j = 0` term.
    fn past(&self, i: usize) -> f64 {
        let lags = self.rev.len();
        dot(&self.rev[..lags - 1], &self.buf[i..i + lags - 1])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, ra) = a.split_at(a.len() / 4 * 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn check_len(t_len: usize) -> Result<()> {
    if t_len == 0 {
        return Err(Error::param("t_len", "must be >= 1"));
    }
    Ok(())
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::param(name, format!("must be finite, got {v}")));
    }
    Ok(())
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if !(v.abs() <= 1.0) {
        return Err(Error::param(name, format!("must lie in [-1, 1], got {v}")));
    }
    Ok(())
}

fn check_coefficients(b0: f64, b: f64, lags: usize, allow_zero_scale: bool) -> Result<()> {
    let scale_ok = if allow_zero_scale {
        b0 >= 0.0
    } else {
        b0 > 0.0
    };
    if !(scale_ok && b0.is_finite()) {
        let bound = if allow_zero_scale { ">= 0" } else { "> 0" };
        return Err(Error::param("b0", format!("must be {bound}, got {b0}")));
    }
    check_finite("b", b)?;
    if lags == 0 {
        return Err(Error::param("lags", "must be >= 1"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset1_dgsv() -> DgsvParams {
        DgsvParams {
            mu: 0.01,
            alpha: 0.5,
            sigma: 0.05,
            rho: -0.2,
            b0: 0.4,
            b: 0.7,
            lags: 200,
        }
    }

    #[test]
    fn coefficient_examples() {
        let beta = ma_coefficients(0.4, 0.7, 2).unwrap();
        assert_eq!(beta[0], 0.4);
        // 0.4 * 2^-0.7 evaluated independently: 2^-0.7 = exp(-0.7 ln 2).
        let expected = 0.4 * (-0.7 * std::f64::consts::LN_2).exp();
        assert!((beta[1] - expected).abs() < 1e-15);
        assert!((beta[1] - 0.246_229).abs() < 1e-6);
        assert_eq!(ma_coefficients(0.4, 0.0, 3).unwrap(), vec![0.4; 3]);
    }

    #[test]
    fn coefficients_decrease() {
        let beta = ma_coefficients(0.4, 0.7, 50).unwrap();
        assert!(beta.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn coefficient_errors() {
        assert!(ma_coefficients(0.0, 0.7, 3).is_err());
        assert!(ma_coefficients(-1.0, 0.7, 3).is_err());
        assert!(ma_coefficients(0.4, 0.7, 0).is_err());
    }

    #[test]
    fn stationary_moment_examples() {
        let (m, v) = stationary_moments_ar1(&Ar1Params::new(0.01, 0.5, 0.05).unwrap()).unwrap();
        assert!((m - 0.02).abs() < 1e-15);
        assert!((v - 0.0025 / 0.75).abs() < 1e-15);
        assert!((v - 0.003_333_3).abs() < 1e-7);
        let (m, v) = stationary_moments_ar1(&Ar1Params::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!((m, v), (0.0, 1.0));
        assert!(stationary_moments_ar1(&Ar1Params::new(0.0, 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(Ar1Params::new(0.0, 1.5, 0.1).is_err());
        assert!(Ar1Params::new(0.0, 0.5, -0.1).is_err());
        assert!(Ar1Params::new(f64::NAN, 0.5, 0.1).is_err());
        let mut p = dataset1_dgsv();
        p.rho = 1.2;
        assert!(p.validate().is_err());
        let mut p = dataset1_dgsv();
        p.b0 = 0.0;
        assert!(p.validate().is_ok());
        p.b0 = -0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn noiseless_ar1_reaches_fixed_point() {
        let p = Ar1Params::new(0.01, 0.5, 0.0).unwrap();
        let path = simulate_ar1(&p, 50, 1).unwrap();
        assert!(path.h.iter().all(|h| (h - 0.02).abs() < 1e-15));
    }

    #[test]
    fn ar1_unit_root_rejected() {
        let p = Ar1Params::new(0.0, -1.0, 0.1).unwrap();
        assert!(simulate_ar1(&p, 10, 1).is_err());
        assert!(simulate_ar1(&Ar1Params::new(0.0, 0.5, 0.1).unwrap(), 0, 1).is_err());
    }

    #[test]
    fn simulators_are_deterministic() {
        let ar = Ar1Params::new(0.01, 0.5, 0.05).unwrap();
        assert_eq!(
            simulate_ar1(&ar, 500, 9).unwrap(),
            simulate_ar1(&ar, 500, 9).unwrap()
        );
        let d = dataset1_dgsv();
        assert_eq!(
            simulate_dgsv(&d, 300, 9).unwrap(),
            simulate_dgsv(&d, 300, 9).unwrap()
        );
        assert_ne!(
            simulate_dgsv(&d, 300, 9).unwrap().h,
            simulate_dgsv(&d, 300, 10).unwrap().h
        );
    }

    #[test]
    fn single_term_ma_is_scaled_shock() {
        let p = MaParams {
            mu: 0.0,
            b0: 0.4,
            b: 0.7,
            lags: 1,
        };
        let path = simulate_ma(&p, 1000, 3).unwrap();
        for (h, e) in path.h.iter().zip(&path.eps) {
            assert_eq!(*h, 0.4 * e);
        }
    }

    #[test]
    fn ma_truncation_bound() {
        let short = MaParams {
            mu: 0.0,
            b0: 0.4,
            b: 0.7,
            lags: 64,
        };
        let long = MaParams { lags: 128, ..short };
        let a = simulate_ma(&short, 2000, 5).unwrap();
        let b = simulate_ma(&long, 2000, 5).unwrap();
        assert_eq!(a.eps, b.eps);
        let beta = ma_coefficients(0.4, 0.7, 128).unwrap();
        let tail: f64 = beta[64..].iter().sum();
        let pre = rng::normals(5, STREAM_PRESAMPLE, 127);
        let max_eps = a
            .eps
            .iter()
            .chain(&pre)
            .fold(0.0_f64, |m, e| m.max(e.abs()));
        for (x, y) in a.h.iter().zip(&b.h) {
            assert!((x - y).abs() <= tail * max_eps + 1e-12);
        }
    }

    #[test]
    fn dgsv_nu_identity_and_direct_sum() {
        let p = dataset1_dgsv();
        let path = simulate_dgsv(&p, 1000, 11).unwrap();
        let beta = ma_coefficients(p.b0, p.b, p.lags).unwrap();
        for i in 0..path.len() {
            assert!((path.log_vol[i] - path.nu[i] - beta[0] * path.eps[i]).abs() < 1e-14);
        }
        // Once t exceeds the lag window, ν can be recomputed from the exposed shocks.
        for i in p.lags..path.len() {
            let direct: f64 = (1..p.lags).map(|j| beta[j] * path.eps[i - j]).sum();
            assert!((direct - path.nu[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dgsv_without_volatility_is_ar1() {
        let p = DgsvParams {
            rho: 1.0,
            b0: 0.0,
            ..dataset1_dgsv()
        };
        let d = simulate_dgsv(&p, 2000, 21).unwrap();
        let a = simulate_ar1(&p.drift(), 2000, 21).unwrap();
        assert_eq!(d.eps, a.eps);
        assert_eq!(d.h, a.h);
    }
}
