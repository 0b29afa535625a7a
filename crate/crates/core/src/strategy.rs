//! Threshold strategies and growth accounting.
//!
//! A threshold strategy holds either the stock (`π_t = 1`) or the bond
//! (`π_t = 0`) over period `t`, deciding from data up to `t - 1` only. With a
//! zero interest rate the log-wealth increment `log(1 - π + π e^{H})` is
//! exactly `π H` for binary `π`.

use serde::{Deserialize, Serialize};

use crate::dynamics::ReturnPath;
use crate::error::{Error, Result};

/// Which side of the threshold buys the stock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Buy when the signal is strictly above the threshold.
    #[default]
    Above,
    /// Buy when the signal is strictly below the threshold (negative autocorrelation).
    Below,
}

impl Direction {
    /// `+1` for [`Direction::Above`], `-1` for [`Direction::Below`].
    pub fn sign(self) -> f64 {
        match self {
            Direction::Above => 1.0,
            Direction::Below => -1.0,
        }
    }

    fn fires(self, signal: f64, threshold: f64) -> bool {
        match self {
            Direction::Above => signal > threshold,
            Direction::Below => signal < threshold,
        }
    }
}

/// Strategy family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    /// `π_t = 1{H_{t-1} > θ¹}`.
    #[default]
    Univariate,
    /// `π_t = 1{H_{t-1} + θ² e^{ν_{t-1}} > θ¹}`.
    Volatility,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    /// Threshold, in log-return units.
    pub theta1: f64,
    /// Weight of the predicted volatility; present iff the strategy is
    /// [`StrategyKind::Volatility`].
    pub theta2: Option<f64>,
    #[serde(default)]
    pub direction: Direction,
}

impl Theta {
    pub fn univariate(theta1: f64) -> Self {
        Theta {
            theta1,
            theta2: None,
            direction: Direction::Above,
        }
    }

    pub fn volatility(theta1: f64, theta2: f64) -> Self {
        Theta {
            theta1,
            theta2: Some(theta2),
            direction: Direction::Above,
        }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn kind(&self) -> StrategyKind {
        match self.theta2 {
            Some(_) => StrategyKind::Volatility,
            None => StrategyKind::Univariate,
        }
    }
}

/// Stock position for period `t` given `X_{t-1}`; ties hold the bond.
pub fn decide_univariate(x_prev: f64, theta: &Theta) -> u8 {
    u8::from(theta.direction.fires(x_prev, theta.theta1))
}

/// Stock position for the volatility-augmented strategy.
///
/// A missing `theta2` is treated as zero weight.
pub fn decide_volatility(h_prev: f64, nu_prev: f64, theta: &Theta) -> u8 {
    let weight = theta.theta2.unwrap_or(0.0);
    u8::from(
        theta
            .direction
            .fires(h_prev + weight * nu_prev.exp(), theta.theta1),
    )
}

/// Log-wealth increment `log(1 - π + π e^{h})` for binary `π`.
pub fn growth_increment(h_t: f64, pi_t: u8) -> f64 {
    if pi_t == 0 {
        0.0
    } else {
        h_t
    }
}

/// Per-period increments `π_t H_t` for `t = 2..T`.
fn increments<'a>(
    path: &'a ReturnPath,
    theta: &'a Theta,
    kind: StrategyKind,
) -> Result<impl Iterator<Item = f64> + 'a> {
    if path.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: path.len(),
        });
    }
    if kind == StrategyKind::Volatility && !path.has_volatility() {
        return Err(Error::param(
            "kind",
            "volatility strategy needs a path with predicted log-volatility",
        ));
    }
    Ok((1..path.len()).map(move |i| {
        let pi = match kind {
            StrategyKind::Univariate => decide_univariate(path.h[i - 1], theta),
            StrategyKind::Volatility => decide_volatility(path.h[i - 1], path.nu[i], theta),
        };
        growth_increment(path.h[i], pi)
    }))
}

/// Time-average growth `(1/(T-1)) Σ_{t=2..T} π_t H_t` of a fixed strategy.
pub fn realized_growth(path: &ReturnPath, theta: &Theta, kind: StrategyKind) -> Result<f64> {
    let total: f64 = increments(path, theta, kind)?.sum();
    Ok(total / (path.len() - 1) as f64)
}

/// Log-wealth `log(W_t / W_1)` for `t = 1..T`, starting at zero.
pub fn wealth_path(path: &ReturnPath, theta: &Theta, kind: StrategyKind) -> Result<Vec<f64>> {
    let mut wealth = Vec::with_capacity(path.len());
    wealth.push(0.0);
    let mut acc = 0.0;
    for inc in increments(path, theta, kind)? {
        acc += inc;
        wealth.push(acc);
    }
    Ok(wealth)
}
