//! Ground-truth optimal thresholds.
//!
//! For AR(1) the conditional mean `φ(x) = μ + αx` is known and its root
//! `-μ/α` is the optimal threshold. Elsewhere the growth curve
//! `g(θ) = E[H_t 1{X_{t-1} > θ}]` is estimated by Monte Carlo and maximized on
//! a grid.
//!
//! All Monte-Carlo estimates use per-path seeds derived from a base seed, and
//! every grid point is evaluated on the same paths, so neighbouring curve
//! values share their noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Ar1Params, DynamicsSpec, ReturnPath};
use crate::error::{Error, Result};
use crate::pool;
use crate::rng::derive_seed;
use crate::strategy::{realized_growth, Direction, StrategyKind, Theta};

/// Percentiles of pooled `H` spanned by the default grid.
pub const GRID_PERCENTILES: (f64, f64) = (0.01, 0.99);

/// Optimal AR(1) threshold `-μ/α` and the side that buys.
pub fn optimal_theta_ar1(mu: f64, alpha: f64) -> Result<(f64, Direction)> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::NoThreshold(
            "alpha = 0 makes E[H_t | H_{t-1}] constant".into(),
        ));
    }
    let direction = if alpha > 0.0 {
        Direction::Above
    } else {
        Direction::Below
    };
    // `0.0 - x` keeps a zero drift from producing -0.0.
    Ok((0.0 - mu / alpha, direction))
}

/// AR(1) threshold function `φ(x) = E[H_t | H_{t-1} = x]`.
pub fn phi_ar1(x: f64, params: &Ar1Params) -> f64 {
    params.mu + params.alpha * x
}

/// Monte-Carlo sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McSettings {
    pub grid_size: usize,
    pub n_paths: usize,
    pub t_len: usize,
    pub seed: u64,
    /// Worker threads, `0` for one per core. Does not affect results.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            grid_size: 201,
            n_paths: 200,
            t_len: 10_000,
            seed: 0,
            workers: 0,
        }
    }
}

impl McSettings {
    fn validate(&self) -> Result<()> {
        if self.grid_size < 3 {
            return Err(Error::param("grid_size", "must be >= 3"));
        }
        if self.n_paths == 0 {
            return Err(Error::param("n_paths", "must be >= 1"));
        }
        if self.t_len < 2 {
            return Err(Error::param("t_len", "must be >= 2"));
        }
        Ok(())
    }
}

/// The decision signal a curve is drawn for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    /// `X_{t-1} = H_{t-1}`.
    Univariate(Direction),
    /// `X_{t-1} = H_{t-1} + θ² e^{ν_{t-1}}` with fixed `θ²`.
    Volatility { theta2: f64, direction: Direction },
}

impl Signal {
    fn direction(&self) -> Direction {
        match *self {
            Signal::Univariate(d) | Signal::Volatility { direction: d, .. } => d,
        }
    }

    fn values(&self, path: &ReturnPath) -> Result<Vec<f64>> {
        match *self {
            Signal::Univariate(_) => Ok(path.h[..path.len() - 1].to_vec()),
            Signal::Volatility { theta2, .. } => {
                if !path.has_volatility() {
                    return Err(Error::param(
                        "kind",
                        "volatility signal needs predicted log-volatility",
                    ));
                }
                Ok((1..path.len())
                    .map(|i| path.h[i - 1] + theta2 * path.nu[i].exp())
                    .collect())
            }
        }
    }
}

/// Monte-Carlo estimate of `θ ↦ g(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCurve {
    pub grid: Vec<f64>,
    pub g_hat: Vec<f64>,
    /// Standard error of each `g_hat` across paths.
    pub se: Vec<f64>,
    pub n_samples: usize,
}

impl GrowthCurve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Sorted `(signal, next return)` pairs of one path with cumulative sums, for
/// evaluating the time-average growth at many thresholds at once.
struct SortedPath {
    signal: Vec<f64>,
    /// `prefix[k]` = sum of the returns of the `k` smallest signals.
    prefix: Vec<f64>,
    periods: f64,
}

impl SortedPath {
    fn new(signal: Vec<f64>, next: &[f64]) -> Self {
        let mut pairs: Vec<(f64, f64)> = signal.into_iter().zip(next.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prefix = Vec::with_capacity(pairs.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for (_, h) in &pairs {
            acc += h;
            prefix.push(acc);
        }
        SortedPath {
            periods: pairs.len() as f64,
            signal: pairs.into_iter().map(|p| p.0).collect(),
            prefix,
        }
    }

    fn growth(&self, theta: f64, direction: Direction) -> f64 {
        let total = match direction {
            Direction::Above => {
                let k = self.signal.partition_point(|&s| s <= theta);
                self.prefix[self.signal.len()] - self.prefix[k]
            }
            Direction::Below => {
                let k = self.signal.partition_point(|&s| s < theta);
                self.prefix[k]
            }
        };
        total / self.periods
    }
}

/// Simulates `n_paths` paths with seeds `derive_seed(seed, i)`.
pub fn simulate_paths(spec: &DynamicsSpec, settings: &McSettings) -> Result<Vec<ReturnPath>> {
    spec.validate()?;
    pool::with_workers(settings.workers, || {
        (0..settings.n_paths)
            .into_par_iter()
            .map(|i| spec.simulate(settings.t_len, derive_seed(settings.seed, i as u64)))
            .collect()
    })
}

/// Linear-interpolation percentile of sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `[q₁, q₉₉]` of the pooled returns of `paths`.
pub fn pooled_percentile_range(paths: &[ReturnPath]) -> (f64, f64) {
    let mut pooled: Vec<f64> = paths.iter().flat_map(|p| p.h.iter().copied()).collect();
    pooled.sort_by(f64::total_cmp);
    (
        percentile(&pooled, GRID_PERCENTILES.0),
        percentile(&pooled, GRID_PERCENTILES.1),
    )
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// Growth curve of fixed paths over a given grid.
pub fn growth_curve_on(
    paths: &[ReturnPath],
    signal: Signal,
    grid: Vec<f64>,
    workers: usize,
) -> Result<GrowthCurve> {
    if paths.is_empty() {
        return Err(Error::param("paths", "need at least one path"));
    }
    if let Some(p) = paths.iter().find(|p| p.len() < 2) {
        return Err(Error::TooShort {
            needed: 2,
            got: p.len(),
        });
    }
    let direction = signal.direction();
    let per_path: Vec<Vec<f64>> = pool::with_workers(workers, || {
        paths
            .par_iter()
            .map(|path| {
                let sorted = SortedPath::new(signal.values(path)?, &path.h[1..]);
                Ok(grid.iter().map(|&t| sorted.growth(t, direction)).collect())
            })
            .collect::<Result<_>>()
    })?;
    let (g_hat, se) = column_stats(&per_path, grid.len());
    Ok(GrowthCurve {
        grid,
        g_hat,
        se,
        n_samples: paths.len(),
    })
}

/// Monte-Carlo growth curve over the pooled 1%–99% range of `H`.
pub fn mc_growth_curve(
    spec: &DynamicsSpec,
    signal: Signal,
    settings: &McSettings,
) -> Result<GrowthCurve> {
    settings.validate()?;
    let paths = simulate_paths(spec, settings)?;
    let (lo, hi) = pooled_percentile_range(&paths);
    if !(hi > lo) {
        return Err(Error::Degenerate(
            "simulated returns have no spread; cannot build a grid".into(),
        ));
    }
    growth_curve_on(
        &paths,
        signal,
        linspace(lo, hi, settings.grid_size),
        settings.workers,
    )
}

/// Column means and standard errors of a row-major table.
fn column_stats(rows: &[Vec<f64>], width: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; width];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let se = if rows.len() < 2 {
        vec![0.0; width]
    } else {
        let mut ss = vec![0.0; width];
        for row in rows {
            for ((s, v), m) in ss.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        ss.iter().map(|s| (s / (n - 1.0) / n).sqrt()).collect()
    };
    (mean, se)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
}

/// Maximizer of a growth curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEstimate {
    /// Grid argmax refined by the vertex of the parabola through it and its
    /// neighbours.
    pub theta: f64,
    pub argmax: usize,
    pub g_max: f64,
    pub grid_step: f64,
    /// Largest distance from `theta` to a grid point of the contiguous region
    /// around the argmax where `g_hat` stays within `3·se` of the maximum.
    pub se_width: f64,
    /// Set when the argmax lies on the edge of the grid; widen the grid.
    pub boundary: Option<Edge>,
}

impl ThetaEstimate {
    /// Tolerance `grid_step + se_width`.
    pub fn uncertainty(&self) -> f64 {
        self.grid_step + self.se_width
    }
}

pub fn mc_optimal_theta(curve: &GrowthCurve) -> Result<ThetaEstimate> {
    let n = curve.len();
    if n < 3 || curve.g_hat.len() != n || curve.se.len() != n {
        return Err(Error::Degenerate(
            "growth curve needs at least 3 points of equal length".into(),
        ));
    }
    if curve.g_hat.iter().any(|g| !g.is_finite()) {
        return Err(Error::Degenerate(
            "growth curve has non-finite values".into(),
        ));
    }
    // First index of the maximum.
    let k = (1..n).fold(0, |best, i| {
        if curve.g_hat[i] > curve.g_hat[best] {
            i
        } else {
            best
        }
    });
    let grid_step = (curve.grid[n - 1] - curve.grid[0]) / (n - 1) as f64;
    let boundary = match k {
        0 => Some(Edge::Left),
        k if k == n - 1 => Some(Edge::Right),
        _ => None,
    };

    let theta = if boundary.is_none() {
        let (gl, g0, gr) = (curve.g_hat[k - 1], curve.g_hat[k], curve.g_hat[k + 1]);
        let (xl, x0, xr) = (curve.grid[k - 1], curve.grid[k], curve.grid[k + 1]);
        parabola_vertex((xl, gl), (x0, g0), (xr, gr)).unwrap_or(x0)
    } else {
        curve.grid[k]
    };

    let floor = curve.g_hat[k] - 3.0 * curve.se[k];
    let mut lo = k;
    while lo > 0 && curve.g_hat[lo - 1] >= floor {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < n && curve.g_hat[hi + 1] >= floor {
        hi += 1;
    }
    let se_width = (theta - curve.grid[lo]).max(curve.grid[hi] - theta);

    Ok(ThetaEstimate {
        theta,
        argmax: k,
        g_max: curve.g_hat[k],
        grid_step,
        se_width,
        boundary,
    })
}

/// Vertex of the parabola through three points if it is a maximum, clamped to
/// the outer points.
fn parabola_vertex(l: (f64, f64), m: (f64, f64), r: (f64, f64)) -> Option<f64> {
    let d1 = (m.1 - l.1) / (m.0 - l.0);
    let d2 = (r.1 - m.1) / (r.0 - m.0);
    let curvature = (d2 - d1) / (r.0 - l.0);
    if !(curvature < 0.0) {
        return None;
    }
    // g(x) = m.1 + s (x - m.0) + curvature (x - m.0)^2 with slope s at m.0.
    let slope = d1 + curvature * (m.0 - l.0);
    let vertex = m.0 - slope / (2.0 * curvature);
    Some(vertex.clamp(l.0, r.0))
}

/// Settings of the two-dimensional oracle for the volatility strategy.
///
/// The oracle maximizes the profile `θ² ↦ max_θ¹ g(θ¹, θ²)`: each `θ²` gets a
/// full growth curve in `θ¹`, refined like [`mc_optimal_theta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BivariateSettings {
    pub n_paths: usize,
    pub t_len: usize,
    pub seed: u64,
    /// `θ¹` grid size of each profile curve, over the pooled 1%–99% range of `H`.
    pub grid1: usize,
    /// `θ²` grid size of each round.
    pub grid2: usize,
    /// Initial range of `θ²`.
    pub theta2_range: [f64; 2],
    /// Number of `θ²` rounds; each zooms to ±2 grid steps around the vertex of
    /// a least-squares parabola through the previous round's profile.
    pub rounds: usize,
    pub direction: Direction,
    #[serde(skip)]
    pub workers: usize,
}

impl Default for BivariateSettings {
    fn default() -> Self {
        BivariateSettings {
            n_paths: 200,
            t_len: 10_000,
            seed: 0,
            grid1: 201,
            grid2: 21,
            theta2_range: [-1.0, 1.0],
            rounds: 4,
            direction: Direction::Above,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BivariateOptimum {
    pub theta1: f64,
    pub theta2: f64,
    pub g_max: f64,
    pub se: f64,
    /// Final grid resolution per coordinate.
    pub grid_step: [f64; 2],
    /// The first-round argmax touched the edge of the initial box.
    pub boundary: bool,
}

impl BivariateOptimum {
    pub fn theta(&self, direction: Direction) -> Theta {
        Theta::volatility(self.theta1, self.theta2).with_direction(direction)
    }
}

/// Monte-Carlo optimum of the volatility strategy.
pub fn mc_optimal_theta_bivariate(
    spec: &DynamicsSpec,
    settings: &BivariateSettings,
) -> Result<BivariateOptimum> {
    if settings.grid1 < 3 || settings.grid2 < 5 {
        return Err(Error::param(
            "grid",
            "need at least 3 points for theta1 and 5 for theta2",
        ));
    }
    if settings.rounds == 0 {
        return Err(Error::param("rounds", "must be >= 1"));
    }
    if !spec.has_volatility() {
        return Err(Error::param(
            "dynamics",
            "volatility strategy needs dynamics with stochastic volatility",
        ));
    }
    let mc = McSettings {
        grid_size: settings.grid1,
        n_paths: settings.n_paths,
        t_len: settings.t_len,
        seed: settings.seed,
        workers: settings.workers,
    };
    mc.validate()?;
    let paths = simulate_paths(spec, &mc)?;
    let (lo1, hi1) = pooled_percentile_range(&paths);
    let grid1 = linspace(lo1, hi1, settings.grid1);
    let best_theta1 = |theta2: f64| -> Result<ThetaEstimate> {
        let signal = Signal::Volatility {
            theta2,
            direction: settings.direction,
        };
        mc_optimal_theta(&growth_curve_on(
            &paths,
            signal,
            grid1.clone(),
            settings.workers,
        )?)
    };

    let mut range2 = settings.theta2_range;
    let mut theta2 = 0.5 * (range2[0] + range2[1]);
    let mut step2 = 0.0;
    let mut boundary = false;
    for round in 0..settings.rounds {
        let grid2 = linspace(range2[0], range2[1], settings.grid2);
        step2 = grid2[1] - grid2[0];
        let profile: Vec<f64> = grid2
            .iter()
            .map(|&t2| best_theta1(t2).map(|e| e.g_max))
            .collect::<Result<_>>()?;
        let k = (1..profile.len()).fold(0, |b, i| if profile[i] > profile[b] { i } else { b });
        if round == 0 {
            boundary = k == 0 || k + 1 == grid2.len();
        }
        theta2 = least_squares_vertex(&grid2, &profile).unwrap_or(grid2[k]);
        range2 = [theta2 - 2.0 * step2, theta2 + 2.0 * step2];
    }
    let inner = best_theta1(theta2)?;
    let i = inner.argmax;
    let signal = Signal::Volatility {
        theta2,
        direction: settings.direction,
    };
    let curve = growth_curve_on(&paths, signal, vec![grid1[i]], settings.workers)?;
    Ok(BivariateOptimum {
        theta1: inner.theta,
        theta2,
        g_max: inner.g_max,
        se: curve.se[0],
        grid_step: [inner.grid_step, step2],
        boundary: boundary || inner.boundary.is_some(),
    })
}

/// Vertex of the least-squares parabola through `(x, y)` if it opens
/// downwards, clamped to the range of `x`.
fn least_squares_vertex(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mid = x.iter().sum::<f64>() / n;
    let mut s = [0.0; 5];
    let mut t = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let u = xi - mid;
        let mut p = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += p;
            if k < 3 {
                t[k] += p * yi;
            }
            p *= u;
        }
    }
    // Normal equations for y = c0 + c1 u + c2 u².
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det3 = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det3(m);
    if d == 0.0 {
        return None;
    }
    let replace = |col: usize| {
        let mut a = m;
        for (row, v) in a.iter_mut().zip(t) {
            row[col] = v;
        }
        det3(a) / d
    };
    let (c1, c2) = (replace(1), replace(2));
    if !(c2 < 0.0) {
        return None;
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((mid - c1 / (2.0 * c2)).clamp(lo, hi))
}

/// Finite-difference gradient estimate of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub estimate: f64,
    pub se: f64,
}

impl GradientEstimate {
    pub fn z_score(&self) -> f64 {
        self.estimate / self.se
    }
}

/// Central differences `(g(θ + δeᵢ) - g(θ - δeᵢ)) / (2δ)` of the Monte-Carlo
/// growth, with both sides evaluated on the same paths.
///
/// Returns one estimate for a univariate `theta` and two for a volatility
/// strategy.
pub fn mc_gradient_check(
    spec: &DynamicsSpec,
    theta: &Theta,
    delta: f64,
    n_paths: usize,
    t_len: usize,
    seed: u64,
) -> Result<Vec<GradientEstimate>> {
    mc_gradient_check_with(spec, theta, delta, n_paths, t_len, seed, 0)
}

pub fn mc_gradient_check_with(
    spec: &DynamicsSpec,
    theta: &Theta,
    delta: f64,
    n_paths: usize,
    t_len: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<GradientEstimate>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("must be > 0, got {delta}")));
    }
    let settings = McSettings {
        grid_size: 3,
        n_paths,
        t_len,
        seed,
        workers,
    };
    settings.validate()?;
    let kind = theta.kind();
    let coords = match kind {
        StrategyKind::Univariate => 1,
        StrategyKind::Volatility => 2,
    };
    let shifted = |coord: usize, d: f64| {
        let mut t = *theta;
        match coord {
            0 => t.theta1 += d,
            _ => t.theta2 = t.theta2.map(|v| v + d),
        }
        t
    };
    let per_path: Vec<Vec<f64>> = pool::with_workers(workers, || {
        (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let path = spec.simulate(t_len, derive_seed(seed, i as u64))?;
                (0..coords)
                    .map(|c| {
                        let up = realized_growth(&path, &shifted(c, delta), kind)?;
                        let down = realized_growth(&path, &shifted(c, -delta), kind)?;
                        Ok((up - down) / (2.0 * delta))
                    })
                    .collect()
            })
            .collect::<Result<_>>()
    })?;
    let (mean, se) = column_stats(&per_path, coords);
    Ok(mean
        .into_iter()
        .zip(se)
        .map(|(estimate, se)| GradientEstimate { estimate, se })
        .collect())
}
