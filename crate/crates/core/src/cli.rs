//! Command-line front end.
//!
//! Every command reads an optional JSON config, lets flags override it, writes
//! CSV artifacts into `--out` and finishes with an atomically written
//! `manifest.json` that is sufficient to rerun the command bit-for-bit with
//! `--from-manifest`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Ar1Params, DgsvParams, DynamicsSpec, MaParams, DEFAULT_LAGS};
use crate::error::Error;
use crate::experiments::{
    self, DatasetName, DatasetPreset, ExperimentConfig, TableConfig, ThetaStarSource,
    DEFAULT_MAX_POINTS,
};
use crate::kw::{self, LearnerConfig};
use crate::oracle::{self, McSettings, Signal};
use crate::output;
use crate::strategy::StrategyKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEDULE_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_STRICT: i32 = 4;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "threshold-kw",
    version,
    about = "Learn log-optimal trading thresholds"
)]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV artifacts and the manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base seed for all randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for one per core. Never changes the results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Exit with a distinct code when a warning is raised.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Rerun the command recorded in a manifest.
    #[arg(long, global = true, conflicts_with = "config")]
    pub from_manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Simulate one return path: `t,h,eps,eta,nu`.
    Simulate,
    /// Monte-Carlo growth curve: `theta,g_hat,se`.
    Hill,
    /// Learn along one path: `t,theta1[,theta2]`.
    Learn,
    /// Mean-squared error over realizations: `t,mse`.
    Converge,
    /// Scaling comparison: `dynamics,dataset,scaling,mse_at_T`.
    Table,
    /// Check the step-size conditions for `a_t ~ t^-p`, `c_t ~ t^-q`.
    ValidateSchedule {
        #[arg(allow_negative_numbers = true)]
        p: f64,
        #[arg(allow_negative_numbers = true)]
        q: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Hill => "hill",
            Command::Learn => "learn",
            Command::Converge => "converge",
            Command::Table => "table",
            Command::ValidateSchedule { .. } => "validate-schedule",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    #[default]
    Ar1,
    Ma,
    Dgsv,
}

/// Dynamics section: a model, an optional dataset preset and per-field
/// overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub model: ModelName,
    pub preset: Option<DatasetName>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub rho: Option<f64>,
    pub b0: Option<f64>,
    pub b: Option<f64>,
    pub lags: Option<usize>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            model: ModelName::Ar1,
            preset: Some(DatasetName::Dataset1),
            mu: None,
            alpha: None,
            sigma: None,
            rho: None,
            b0: None,
            b: None,
            lags: None,
        }
    }
}

impl DynamicsConfig {
    pub fn resolve(&self) -> Result<DynamicsSpec, String> {
        let preset = self.preset.map(DatasetPreset::get);
        let field = |name: &str, value: Option<f64>, from_preset: Option<f64>| {
            value
                .or(from_preset)
                .ok_or_else(|| format!("dynamics.{name}: required when no preset supplies it"))
        };
        let lags = self.lags.unwrap_or(DEFAULT_LAGS);
        let spec = match self.model {
            ModelName::Ar1 => DynamicsSpec::Ar1(Ar1Params {
                mu: field("mu", self.mu, preset.map(|p| p.mu))?,
                alpha: field("alpha", self.alpha, preset.map(|p| p.alpha))?,
                sigma: field("sigma", self.sigma, preset.map(|p| p.sigma))?,
            }),
            ModelName::Ma => DynamicsSpec::Ma(MaParams {
                mu: field("mu", self.mu, preset.map(|p| p.mu))?,
                b0: field("b0", self.b0, preset.map(|p| p.b0))?,
                b: field("b", self.b, preset.map(|p| p.b))?,
                lags,
            }),
            ModelName::Dgsv => DynamicsSpec::Dgsv(DgsvParams {
                mu: field("mu", self.mu, preset.map(|p| p.mu))?,
                alpha: field("alpha", self.alpha, preset.map(|p| p.alpha))?,
                sigma: field("sigma", self.sigma, preset.map(|p| p.sigma))?,
                rho: field("rho", self.rho, preset.map(|p| p.rho))?,
                b0: field("b0", self.b0, preset.map(|p| p.b0))?,
                b: field("b", self.b, preset.map(|p| p.b))?,
                lags,
            }),
        };
        spec.validate().map_err(|e| format!("dynamics: {e}"))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HillConfig {
    pub grid_size: usize,
    pub n_paths: usize,
    pub t_len: usize,
    /// Fixed volatility weight when `learner.kind` is `volatility`.
    pub theta2: f64,
}

impl Default for HillConfig {
    fn default() -> Self {
        let mc = McSettings::default();
        HillConfig {
            grid_size: mc.grid_size,
            n_paths: mc.n_paths,
            t_len: mc.t_len,
            theta2: 0.0,
        }
    }
}

/// Everything a run needs besides the command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dynamics: DynamicsConfig,
    pub learner: LearnerConfig,
    /// Path length; defaults depend on the command.
    pub t_len: Option<usize>,
    pub realizations: usize,
    pub seed: u64,
    /// Reference optimum for `converge`; chosen from the dynamics if absent.
    pub theta_star: Option<ThetaStarSource>,
    pub max_points: usize,
    /// Write every realization's trajectory next to the MSE series.
    pub dump_trajectories: bool,
    /// Fraction of stored MSE points used for the reported slope.
    pub tail_fraction: f64,
    pub hill: HillConfig,
    pub table: TableConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dynamics: DynamicsConfig::default(),
            learner: LearnerConfig::default(),
            t_len: None,
            realizations: 25,
            seed: 0,
            theta_star: None,
            max_points: DEFAULT_MAX_POINTS,
            dump_trajectories: false,
            tail_fraction: 0.5,
            hill: HillConfig::default(),
            table: TableConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses JSON, naming the offending field on error.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path.is_empty() || path == "." {
                format!("config: {inner}")
            } else {
                format!("config field `{path}`: {inner}")
            }
        })
    }

    fn t_len_for(&self, command: &Command) -> usize {
        self.t_len.unwrap_or(match command {
            Command::Simulate => 10_000,
            Command::Learn => 100_000,
            _ => 50_000,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    /// Resolved config, with flags applied.
    pub config: RunConfig,
    pub base_seed: u64,
    pub workers: usize,
    /// Artifact paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read manifest {}: {e}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| format!("manifest field `{}`: {}", e.path(), e.inner()))
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Collected artifacts and warnings of one command.
struct Run<'a> {
    out: &'a Path,
    artifacts: Vec<String>,
    warnings: Vec<String>,
}

impl Run<'_> {
    /// Writes `name` inside the output directory via a temporary file.
    fn artifact<F>(&mut self, name: &str, write: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> crate::Result<()>,
    {
        let target = self.out.join(name);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = tmp_path(&target);
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            write(&mut w)?;
            w.flush()?;
        }
        fs::rename(&tmp, &target)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }
}

fn tmp_path(target: &Path) -> PathBuf {
    let mut name = OsString::from(".");
    name.push(target.file_name().unwrap_or_default());
    name.push(".tmp");
    target.with_file_name(name)
}

fn write_atomic(target: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = tmp_path(target);
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, target)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    let (command, config, out) = match resolve(&cli) {
        Ok(resolved) => resolved,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let workers = cli.workers.unwrap_or(0);

    if let Command::ValidateSchedule { p, q } = command {
        let report = kw::validate_schedule(p, q);
        println!("{report}");
        return if report.all_satisfied() {
            EXIT_OK
        } else {
            EXIT_SCHEDULE_FAILED
        };
    }

    let Some(out) = out else {
        eprintln!("error: --out is required for `{}`", command.name());
        return EXIT_CONFIG;
    };
    if let Err(e) = fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return EXIT_RUNTIME;
    }

    let started = Instant::now();
    let started_unix_seconds = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut run = Run {
        out: &out,
        artifacts: Vec::new(),
        warnings: Vec::new(),
    };
    let outcome = execute(&command, &config, workers, &mut run);
    let code = match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_RUNTIME;
        }
    };

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command,
        base_seed: config.seed,
        config,
        workers,
        artifacts: run.artifacts,
        warnings: run.warnings,
        started_unix_seconds,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = write_atomic(&out.join(MANIFEST_FILE), &json) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_RUNTIME;
    }
    if cli.strict && !manifest.warnings.is_empty() {
        return EXIT_STRICT;
    }
    code
}

fn resolve(cli: &Cli) -> Result<(Command, RunConfig, Option<PathBuf>), String> {
    let (command, mut config, mut out) = if let Some(path) = &cli.from_manifest {
        let manifest = RunManifest::read(path)?;
        if let Some(c) = cli.command {
            if c != manifest.command {
                return Err(format!(
                    "command `{}` differs from the manifest's `{}`",
                    c.name(),
                    manifest.command.name()
                ));
            }
        }
        let dir = path.parent().map(Path::to_path_buf);
        (manifest.command, manifest.config, dir)
    } else {
        let command = cli
            .command
            .ok_or_else(|| "no command given (see --help)".to_string())?;
        let config = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        (command, config, None)
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.out.is_some() {
        out.clone_from(&cli.out);
    }
    config.t_len = Some(config.t_len_for(&command));
    config.table.base_seed = config.seed;
    Ok((command, config, out))
}

fn execute(
    command: &Command,
    config: &RunConfig,
    workers: usize,
    run: &mut Run,
) -> Result<(), Failure> {
    let t_len = config.t_len_for(command);
    match command {
        Command::Simulate => {
            let spec = config.dynamics.resolve().map_err(Failure::Config)?;
            let path = spec.simulate(t_len, config.seed)?;
            run.artifact("path.csv", |w| output::write_path(w, &path))?;
            println!("simulated {} steps of {}", path.len(), spec.name());
        }
        Command::Hill => {
            let spec = config.dynamics.resolve().map_err(Failure::Config)?;
            let settings = McSettings {
                grid_size: config.hill.grid_size,
                n_paths: config.hill.n_paths,
                t_len: config.hill.t_len,
                seed: config.seed,
                workers,
            };
            let signal = match config.learner.kind {
                StrategyKind::Univariate => Signal::Univariate(config.learner.direction),
                StrategyKind::Volatility => Signal::Volatility {
                    theta2: config.hill.theta2,
                    direction: config.learner.direction,
                },
            };
            let curve = oracle::mc_growth_curve(&spec, signal, &settings)?;
            run.artifact("growth_curve.csv", |w| output::write_curve(w, &curve))?;
            match oracle::mc_optimal_theta(&curve) {
                Ok(est) => {
                    println!(
                        "argmax theta = {} (g = {}, +/- {})",
                        est.theta,
                        est.g_max,
                        est.uncertainty()
                    );
                    if let Some(edge) = est.boundary {
                        run.warn(format!("growth curve maximum on the {edge:?} grid edge"));
                    }
                }
                Err(e) => run.warn(format!("no argmax: {e}")),
            }
        }
        Command::Learn => {
            let spec = config.dynamics.resolve().map_err(Failure::Config)?;
            let path = spec.simulate(t_len, config.seed)?;
            let learned = kw::run(&path, &config.learner)?;
            if learned.scale.degenerate {
                run.warn("sample standard deviation is zero; scaling disabled".into());
            }
            run.artifact("theta.csv", |w| {
                output::write_trajectory(w, &learned.trajectory)
            })?;
            let last = learned.trajectory.last();
            match last.theta2 {
                Some(t2) => println!("final theta = ({}, {t2})", last.theta1),
                None => println!("final theta = {}", last.theta1),
            }
        }
        Command::Converge => {
            let spec = config.dynamics.resolve().map_err(Failure::Config)?;
            let theta_star = config
                .theta_star
                .unwrap_or_else(|| ThetaStarSource::default_for(&spec, config.learner.kind));
            let exp = ExperimentConfig {
                dynamics: spec,
                learner: config.learner,
                n_realizations: config.realizations,
                t_len,
                base_seed: config.seed,
                theta_star,
                max_points: config.max_points,
                keep_trajectories: config.dump_trajectories,
                workers,
            };
            let result = experiments::run_convergence(&exp)?;
            if result.boundary {
                run.warn("reference optimum lies on the oracle grid edge".into());
            }
            run.artifact("mse.csv", |w| output::write_mse(w, &result.series))?;
            if let Some(trajs) = &result.trajectories {
                for (i, traj) in trajs.iter().enumerate() {
                    run.artifact(&format!("trajectories/realization_{i:04}.csv"), |w| {
                        output::write_trajectory(w, traj)
                    })?;
                }
            }
            print!("final mse = {}", result.series.last());
            match experiments::fit_power_law(&result.series, config.tail_fraction) {
                Ok(slope) => println!(", log-log slope = {slope}"),
                Err(e) => println!(", slope unavailable: {e}"),
            }
        }
        Command::Table => {
            let table = TableConfig {
                base_seed: config.seed,
                workers,
                ..config.table.clone()
            };
            let rows = experiments::run_scaling_table(&table)?;
            for row in rows.iter().filter(|r| r.boundary) {
                run.warn(format!(
                    "{}/{}: reference optimum lies on the oracle grid edge",
                    row.dynamics.as_str(),
                    row.dataset.as_str()
                ));
            }
            run.artifact("scaling_table.csv", |w| output::write_table(w, &rows))?;
            for row in &rows {
                println!(
                    "{:5} {:9} {:7} {:.3e}",
                    row.dynamics.as_str(),
                    row.dataset.as_str(),
                    row.scaling.name(),
                    row.mse_at_t
                );
            }
        }
        Command::ValidateSchedule { .. } => unreachable!("handled before any output"),
    }
    Ok(())
}
