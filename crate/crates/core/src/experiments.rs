//! Multi-realization experiments: mean-squared error of the learned threshold
//! against the optimum, power-law fits of its decay, and the comparison of
//! step scalings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Ar1Params, DgsvParams, DynamicsSpec, DEFAULT_LAGS};
use crate::error::{Error, Result};
use crate::kw::{self, LearnerConfig, ScalingMode, Trajectory, WARMUP_LEN};
use crate::oracle::{self, BivariateSettings, McSettings, Signal};
use crate::pool;
use crate::rng::{derive_seed, domain_seed};
use crate::strategy::StrategyKind;

/// Upper bound on stored points of an MSE series.
pub const DEFAULT_MAX_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Dataset1,
    Dataset2,
}

impl DatasetName {
    pub const ALL: [DatasetName; 2] = [DatasetName::Dataset1, DatasetName::Dataset2];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::Dataset1 => "dataset1",
            DatasetName::Dataset2 => "dataset2",
        }
    }
}

impl std::str::FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataset1" => Ok(DatasetName::Dataset1),
            "dataset2" => Ok(DatasetName::Dataset2),
            other => Err(Error::param(
                "dataset",
                format!("unknown preset `{other}` (expected dataset1 or dataset2)"),
            )),
        }
    }
}

/// Parameter sets of the reference experiments. AR(1) uses only `μ, α, σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetPreset {
    pub name: DatasetName,
    pub mu: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub rho: f64,
    pub b0: f64,
    pub b: f64,
}

impl DatasetPreset {
    pub fn get(name: DatasetName) -> Self {
        let (mu, alpha) = match name {
            DatasetName::Dataset1 => (0.01, 0.5),
            DatasetName::Dataset2 => (0.005, 0.2),
        };
        DatasetPreset {
            name,
            mu,
            alpha,
            sigma: 0.05,
            rho: -0.2,
            b0: 0.4,
            b: 0.7,
        }
    }

    pub fn ar1(&self) -> Ar1Params {
        Ar1Params {
            mu: self.mu,
            alpha: self.alpha,
            sigma: self.sigma,
        }
    }

    pub fn dgsv(&self, lags: usize) -> DgsvParams {
        DgsvParams {
            mu: self.mu,
            alpha: self.alpha,
            sigma: self.sigma,
            rho: self.rho,
            b0: self.b0,
            b: self.b,
            lags,
        }
    }

    pub fn spec(&self, model: Model, lags: usize) -> DynamicsSpec {
        match model {
            Model::Ar1 => DynamicsSpec::Ar1(self.ar1()),
            Model::Dgsv => DynamicsSpec::Dgsv(self.dgsv(lags)),
        }
    }
}

/// Looks up a preset by name.
pub fn dataset_preset(name: &str) -> Result<DatasetPreset> {
    Ok(DatasetPreset::get(name.parse()?))
}

/// Dynamics families of the scaling comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ar1,
    Dgsv,
}

impl Model {
    pub const ALL: [Model; 2] = [Model::Ar1, Model::Dgsv];

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Ar1 => "ar1",
            Model::Dgsv => "dgsv",
        }
    }
}

/// Where the reference optimum comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaStarSource {
    /// `-μ/α`; AR(1) with the univariate strategy only.
    Analytic,
    /// Monte-Carlo oracle; its seed is derived from the experiment's base seed.
    MonteCarlo(McSettings),
    Fixed {
        theta1: f64,
        theta2: Option<f64>,
    },
}

impl ThetaStarSource {
    pub fn default_for(spec: &DynamicsSpec, kind: StrategyKind) -> Self {
        match (spec, kind) {
            (DynamicsSpec::Ar1(_), StrategyKind::Univariate) => ThetaStarSource::Analytic,
            _ => ThetaStarSource::MonteCarlo(McSettings::default()),
        }
    }
}

/// Optimum used as the MSE reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaStar {
    pub value: Vec<f64>,
    /// The Monte-Carlo argmax sat on the edge of its grid.
    pub boundary: bool,
}

/// Resolves the reference optimum for `(spec, learner)`.
pub fn theta_star(
    spec: &DynamicsSpec,
    learner: &LearnerConfig,
    source: &ThetaStarSource,
    base_seed: u64,
    workers: usize,
) -> Result<ThetaStar> {
    let oracle_seed = domain_seed(base_seed, "theta-star");
    match (*source, learner.kind) {
        (ThetaStarSource::Fixed { theta1, .. }, StrategyKind::Univariate) => Ok(ThetaStar {
            value: vec![theta1],
            boundary: false,
        }),
        (ThetaStarSource::Fixed { theta1, theta2 }, StrategyKind::Volatility) => Ok(ThetaStar {
            value: vec![theta1, theta2.unwrap_or(0.0)],
            boundary: false,
        }),
        (ThetaStarSource::Analytic, StrategyKind::Univariate) => match spec {
            DynamicsSpec::Ar1(p) => {
                let (theta, _) = oracle::optimal_theta_ar1(p.mu, p.alpha)?;
                Ok(ThetaStar {
                    value: vec![theta],
                    boundary: false,
                })
            }
            _ => Err(Error::param(
                "theta_star",
                "analytic optimum is only available for AR(1)",
            )),
        },
        (ThetaStarSource::Analytic, StrategyKind::Volatility) => Err(Error::param(
            "theta_star",
            "analytic optimum is only available for the univariate strategy",
        )),
        (ThetaStarSource::MonteCarlo(mc), StrategyKind::Univariate) => {
            let settings = McSettings {
                seed: oracle_seed,
                workers,
                ..mc
            };
            let curve =
                oracle::mc_growth_curve(spec, Signal::Univariate(learner.direction), &settings)?;
            let est = oracle::mc_optimal_theta(&curve)?;
            Ok(ThetaStar {
                value: vec![est.theta],
                boundary: est.boundary.is_some(),
            })
        }
        (ThetaStarSource::MonteCarlo(mc), StrategyKind::Volatility) => {
            let settings = BivariateSettings {
                n_paths: mc.n_paths,
                t_len: mc.t_len,
                seed: oracle_seed,
                direction: learner.direction,
                workers,
                ..BivariateSettings::default()
            };
            let opt = oracle::mc_optimal_theta_bivariate(spec, &settings)?;
            Ok(ThetaStar {
                value: vec![opt.theta1, opt.theta2],
                boundary: opt.boundary,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dynamics: DynamicsSpec,
    pub learner: LearnerConfig,
    pub n_realizations: usize,
    pub t_len: usize,
    pub base_seed: u64,
    pub theta_star: ThetaStarSource,
    pub max_points: usize,
    /// Keep every realization's full trajectory in the result.
    pub keep_trajectories: bool,
    #[serde(skip)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(dynamics: DynamicsSpec, learner: LearnerConfig) -> Self {
        ExperimentConfig {
            theta_star: ThetaStarSource::default_for(&dynamics, learner.kind),
            dynamics,
            learner,
            n_realizations: 25,
            t_len: 50_000,
            base_seed: 0,
            max_points: DEFAULT_MAX_POINTS,
            keep_trajectories: false,
            workers: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        self.dynamics.validate()?;
        if self.n_realizations == 0 {
            return Err(Error::param("n_realizations", "must be >= 1"));
        }
        if self.t_len <= WARMUP_LEN {
            return Err(Error::param(
                "t_len",
                format!("must exceed the {WARMUP_LEN}-point warm-up"),
            ));
        }
        if self.max_points < 2 {
            return Err(Error::param("max_points", "must be >= 2"));
        }
        Ok(())
    }
}

/// Mean-squared error `(1/N) Σᵢ |θₜ⁽ⁱ⁾ - θ*|²` at stored times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseSeries {
    pub t: Vec<usize>,
    pub mse: Vec<f64>,
    pub n: usize,
    pub theta_star: Vec<f64>,
}

impl MseSeries {
    pub fn last(&self) -> f64 {
        *self.mse.last().expect("series is never empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub series: MseSeries,
    /// Boundary warning of the Monte-Carlo optimum.
    pub boundary: bool,
    /// Full trajectories by realization, when requested.
    pub trajectories: Option<Vec<Trajectory>>,
}

/// Roughly log-spaced distinct times in `[first, last]`, at most `max_points`,
/// always including both ends.
pub fn log_thinned_times(first: usize, last: usize, max_points: usize) -> Vec<usize> {
    if last <= first {
        return vec![first];
    }
    let span = last - first + 1;
    if span <= max_points {
        return (first..=last).collect();
    }
    let (lo, hi) = ((first as f64).ln(), (last as f64).ln());
    let mut out: Vec<usize> = (0..max_points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (max_points - 1) as f64;
            (x.exp().round() as usize).clamp(first, last)
        })
        .collect();
    out[0] = first;
    out[max_points - 1] = last;
    out.dedup();
    out
}

fn squared_error(traj: &Trajectory, t: usize, star: &[f64]) -> f64 {
    let theta = traj.at(t).expect("stored time within trajectory");
    let mut e = (theta.theta1 - star[0]).powi(2);
    if let (Some(t2), Some(s2)) = (theta.theta2, star.get(1)) {
        e += (t2 - s2).powi(2);
    }
    e
}

/// Runs `n_realizations` independent learners and aggregates their error.
pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceRun> {
    config.validate()?;
    let star = theta_star(
        &config.dynamics,
        &config.learner,
        &config.theta_star,
        config.base_seed,
        config.workers,
    )?;
    let times = log_thinned_times(WARMUP_LEN, config.t_len, config.max_points);

    let per_realization: Vec<(Vec<f64>, Option<Trajectory>)> =
        pool::with_workers(config.workers, || {
            (0..config.n_realizations)
                .into_par_iter()
                .map(|i| {
                    let path = config
                        .dynamics
                        .simulate(config.t_len, derive_seed(config.base_seed, i as u64))?;
                    let learned = kw::run(&path, &config.learner)?;
                    let errors = times
                        .iter()
                        .map(|&t| squared_error(&learned.trajectory, t, &star.value))
                        .collect();
                    let keep = config.keep_trajectories.then_some(learned.trajectory);
                    Ok((errors, keep))
                })
                .collect::<Result<_>>()
        })?;

    let n = config.n_realizations as f64;
    let mut mse = vec![0.0; times.len()];
    for (errors, _) in &per_realization {
        for (m, e) in mse.iter_mut().zip(errors) {
            *m += e;
        }
    }
    mse.iter_mut().for_each(|m| *m /= n);

    let trajectories = config
        .keep_trajectories
        .then(|| per_realization.into_iter().filter_map(|(_, t)| t).collect());
    Ok(ConvergenceRun {
        series: MseSeries {
            t: times,
            mse,
            n: config.n_realizations,
            theta_star: star.value,
        },
        boundary: star.boundary,
        trajectories,
    })
}

/// Least-squares slope of `ln mse` against `ln t` over the last
/// `tail_fraction` of stored points.
pub fn fit_power_law(series: &MseSeries, tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::param("tail_fraction", "must lie in (0, 1]"));
    }
    let n = series.t.len();
    let take = ((n as f64) * tail_fraction).ceil() as usize;
    fit_points(&series.t[n - take..], &series.mse[n - take..])
}

/// Slope over stored points with `t >= t_min`.
pub fn fit_power_law_from(series: &MseSeries, t_min: usize) -> Result<f64> {
    let start = series.t.partition_point(|&t| t < t_min);
    fit_points(&series.t[start..], &series.mse[start..])
}

fn fit_points(t: &[usize], mse: &[f64]) -> Result<f64> {
    if t.len() < 10 {
        return Err(Error::TooShort {
            needed: 10,
            got: t.len(),
        });
    }
    if mse.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Degenerate(
            "zero MSE in the fitting window; log-log fit undefined".into(),
        ));
    }
    let xs: Vec<f64> = t.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = mse.iter().map(|m| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TableConfig {
    pub t_len: usize,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub lags: usize,
    /// Learner template; its `scaling` is replaced by each compared mode.
    pub learner: LearnerConfig,
    /// Monte-Carlo oracle sizes for the DGSV optimum.
    pub oracle: McSettings,
    pub models: Vec<Model>,
    pub datasets: Vec<DatasetName>,
    pub modes: Vec<ScalingMode>,
    #[serde(skip)]
    pub workers: usize,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            t_len: 100_000,
            n_realizations: 25,
            base_seed: 0,
            lags: DEFAULT_LAGS,
            learner: LearnerConfig::default(),
            oracle: McSettings::default(),
            models: Model::ALL.to_vec(),
            datasets: DatasetName::ALL.to_vec(),
            modes: ScalingMode::ALL.to_vec(),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub dynamics: Model,
    pub dataset: DatasetName,
    pub scaling: ScalingMode,
    pub mse_at_t: f64,
    pub theta_star: f64,
    pub boundary: bool,
}

impl TableConfig {
    /// Experiment equivalent to one cell of the table.
    pub fn cell(&self, model: Model, dataset: DatasetName, mode: ScalingMode) -> ExperimentConfig {
        let dynamics = DatasetPreset::get(dataset).spec(model, self.lags);
        let learner = LearnerConfig {
            scaling: mode,
            kind: StrategyKind::Univariate,
            ..self.learner
        };
        ExperimentConfig {
            theta_star: match model {
                Model::Ar1 => ThetaStarSource::Analytic,
                Model::Dgsv => ThetaStarSource::MonteCarlo(self.oracle),
            },
            dynamics,
            learner,
            n_realizations: self.n_realizations,
            t_len: self.t_len,
            base_seed: self.base_seed,
            max_points: 2,
            keep_trajectories: false,
            workers: self.workers,
        }
    }
}

/// Final MSE for every (dynamics, dataset, scaling) combination.
///
/// Each path is simulated once and shared by all scaling modes; every cell
/// equals the last point of [`run_convergence`] on [`TableConfig::cell`].
pub fn run_scaling_table(config: &TableConfig) -> Result<Vec<TableRow>> {
    if config.modes.is_empty() {
        return Err(Error::param("modes", "need at least one scaling mode"));
    }
    let mut rows = Vec::new();
    for &model in &config.models {
        for &dataset in &config.datasets {
            let first = config.cell(model, dataset, config.modes[0]);
            first.validate()?;
            let star = theta_star(
                &first.dynamics,
                &first.learner,
                &first.theta_star,
                first.base_seed,
                config.workers,
            )?;
            let target = star.value[0];
            let errors: Vec<Vec<f64>> = pool::with_workers(config.workers, || {
                (0..config.n_realizations)
                    .into_par_iter()
                    .map(|i| {
                        let path = first
                            .dynamics
                            .simulate(config.t_len, derive_seed(config.base_seed, i as u64))?;
                        config
                            .modes
                            .iter()
                            .map(|&scaling| {
                                let learner = LearnerConfig {
                                    scaling,
                                    ..first.learner
                                };
                                let run = kw::run(&path, &learner)?;
                                Ok((run.trajectory.last().theta1 - target).powi(2))
                            })
                            .collect()
                    })
                    .collect::<Result<_>>()
            })?;
            for (m, &scaling) in config.modes.iter().enumerate() {
                let total: f64 = errors.iter().map(|e| e[m]).sum();
                rows.push(TableRow {
                    dynamics: model,
                    dataset,
                    scaling,
                    mse_at_t: total / config.n_realizations as f64,
                    theta_star: target,
                    boundary: star.boundary,
                });
            }
        }
    }
    Ok(rows)
}
