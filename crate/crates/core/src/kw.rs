//! Kiefer-Wolfowitz learning of the threshold.
//!
//! The growth of a threshold strategy, `G(θ) = H_t 1{X_{t-1} > θ}`, is an
//! indicator in `θ`, so the finite difference `(G(θ + c) - G(θ - c)) / c`
//! collapses to `-H_t 1{X_{t-1} ∈ [θ ± c]} / c`. The learner climbs that
//! gradient estimate with gains `a_t = K t^{-p}` and half-widths
//! `c_t = K t^{-q}`, and projects the threshold onto the range of returns
//! observed so far so it cannot drift into the flat tails of the growth curve.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::ReturnPath;
use crate::error::{Error, Result};
use crate::strategy::{Direction, StrategyKind, Theta};

/// Number of observations averaged into the initial threshold.
pub const WARMUP_LEN: usize = 10;

pub const DEFAULT_THETA2_BOUNDS: [f64; 2] = [-100.0, 100.0];

/// Exponents of a schedule `a_t = K t^{-p}`, `c_t = K t^{-q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
}

impl Default for Exponents {
    fn default() -> Self {
        Exponents {
            p: 1.0,
            q: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub k: f64,
    pub p: f64,
    pub q: f64,
}

impl StepSchedule {
    /// Any finite exponents are accepted; use [`validate_schedule`] to check
    /// the convergence conditions (constant-step tracking runs fail them on
    /// purpose).
    pub fn new(k: f64, p: f64, q: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::param("k", format!("scale must be > 0, got {k}")));
        }
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::param("p/q", "exponents must be finite"));
        }
        Ok(StepSchedule { k, p, q })
    }

    pub fn scaled(k: f64, exponents: Exponents) -> Result<Self> {
        StepSchedule::new(k, exponents.p, exponents.q)
    }

    /// Gain `a_t`.
    pub fn gain(&self, t: u64) -> f64 {
        self.k * (t as f64).powf(-self.p)
    }

    /// Finite-difference half-width `c_t`.
    pub fn width(&self, t: u64) -> f64 {
        self.k * (t as f64).powf(-self.q)
    }

    pub fn report(&self) -> ScheduleReport {
        validate_schedule(self.p, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `c_t → 0`, i.e. `q > 0`.
    WidthVanishes,
    /// `Σ a_t = ∞`, i.e. `p ≤ 1`.
    GainDiverges,
    /// `Σ a_t c_t < ∞`, i.e. `p + q > 1`.
    GainWidthSummable,
    /// `Σ a_t² c_t⁻² < ∞`, i.e. `2 (p - q) > 1`.
    RatioSquareSummable,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::WidthVanishes,
        Condition::GainDiverges,
        Condition::GainWidthSummable,
        Condition::RatioSquareSummable,
    ];

    /// 1-based position in the usual listing of the conditions.
    pub fn number(self) -> usize {
        match self {
            Condition::WidthVanishes => 1,
            Condition::GainDiverges => 2,
            Condition::GainWidthSummable => 3,
            Condition::RatioSquareSummable => 4,
        }
    }

    fn holds(self, p: f64, q: f64) -> bool {
        match self {
            Condition::WidthVanishes => q > 0.0,
            Condition::GainDiverges => p <= 1.0,
            Condition::GainWidthSummable => p + q > 1.0,
            Condition::RatioSquareSummable => 2.0 * (p - q) > 1.0,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Condition::WidthVanishes => "c_t -> 0 (q > 0)",
            Condition::GainDiverges => "sum a_t = inf (p <= 1)",
            Condition::GainWidthSummable => "sum a_t c_t < inf (p + q > 1)",
            Condition::RatioSquareSummable => "sum a_t^2 / c_t^2 < inf (2(p - q) > 1)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub p: f64,
    pub q: f64,
    pub checks: [ConditionCheck; 4],
}

impl ScheduleReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn failed(&self) -> Vec<Condition> {
        self.checks
            .iter()
            .filter(|c| !c.satisfied)
            .map(|c| c.condition)
            .collect()
    }
}

impl fmt::Display for ScheduleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "schedule a_t = K t^-{}, c_t = K t^-{}", self.p, self.q)?;
        for c in &self.checks {
            let mark = if c.satisfied { "ok  " } else { "FAIL" };
            writeln!(
                f,
                "  [{mark}] ({}) {}",
                c.condition.number(),
                c.condition.describe()
            )?;
        }
        if self.all_satisfied() {
            write!(f, "all conditions satisfied")
        } else {
            let failed: Vec<String> = self
                .failed()
                .iter()
                .map(|c| c.number().to_string())
                .collect();
            write!(f, "failed conditions: {}", failed.join(", "))
        }
    }
}

/// Checks the step-size conditions for `a_t = K t^{-p}`, `c_t = K t^{-q}`.
pub fn validate_schedule(p: f64, q: f64) -> ScheduleReport {
    let checks = Condition::ALL.map(|condition| ConditionCheck {
        condition,
        satisfied: condition.holds(p, q),
    });
    ScheduleReport { p, q, checks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    /// `K = 1`.
    #[default]
    None,
    /// `K` = sample standard deviation of the path.
    Stdev,
    /// `K` = five sample standard deviations.
    Stdev5,
}

impl ScalingMode {
    pub const ALL: [ScalingMode; 3] = [ScalingMode::None, ScalingMode::Stdev, ScalingMode::Stdev5];

    pub fn name(self) -> &'static str {
        match self {
            ScalingMode::None => "none",
            ScalingMode::Stdev => "stdev",
            ScalingMode::Stdev5 => "stdev5",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleFactor {
    pub k: f64,
    /// The path had zero variance and `K` fell back to 1.
    pub degenerate: bool,
}

/// Step scale `K` for a path. Uses the whole path, i.e. it looks ahead.
pub fn scale_factor(path: &ReturnPath, mode: ScalingMode) -> Result<ScaleFactor> {
    if path.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: path.len(),
        });
    }
    let multiple = match mode {
        ScalingMode::None => {
            return Ok(ScaleFactor {
                k: 1.0,
                degenerate: false,
            })
        }
        ScalingMode::Stdev => 1.0,
        ScalingMode::Stdev5 => 5.0,
    };
    let sd = sample_sd(&path.h);
    let constant = path.h.iter().all(|x| *x == path.h[0]);
    if !constant && sd > 0.0 && sd.is_finite() {
        Ok(ScaleFactor {
            k: multiple * sd,
            degenerate: false,
        })
    } else {
        Ok(ScaleFactor {
            k: 1.0,
            degenerate: true,
        })
    }
}

pub(crate) fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Initial threshold: mean of the warm-up window; `θ²` starts at zero.
pub fn init_theta(warmup: &[f64], kind: StrategyKind, direction: Direction) -> Result<Theta> {
    if warmup.len() != WARMUP_LEN {
        return Err(Error::param(
            "warmup",
            format!("expected {WARMUP_LEN} values, got {}", warmup.len()),
        ));
    }
    let mean = warmup.iter().sum::<f64>() / WARMUP_LEN as f64;
    let theta = match kind {
        StrategyKind::Univariate => Theta::univariate(mean),
        StrategyKind::Volatility => Theta::volatility(mean, 0.0),
    };
    Ok(theta.with_direction(direction))
}

/// Learner state. Step functions return a new state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KwState {
    pub theta: Theta,
    /// Index of the next update; schedules are evaluated here.
    pub t: u64,
    pub h_min: f64,
    pub h_max: f64,
    pub initialized: bool,
    pub theta2_bounds: [f64; 2],
}

impl Default for KwState {
    fn default() -> Self {
        KwState {
            theta: Theta::univariate(0.0),
            t: 1,
            h_min: f64::INFINITY,
            h_max: f64::NEG_INFINITY,
            initialized: false,
            theta2_bounds: DEFAULT_THETA2_BOUNDS,
        }
    }
}

impl KwState {
    /// Initialized state at an arbitrary point, mostly for tests and bindings.
    pub fn at(theta: Theta, t: u64, h_min: f64, h_max: f64) -> Self {
        KwState {
            theta,
            t,
            h_min,
            h_max,
            initialized: true,
            theta2_bounds: DEFAULT_THETA2_BOUNDS,
        }
    }

    /// State after the warm-up window; the first update uses counter `first_step`.
    pub fn initialize(
        warmup: &[f64],
        kind: StrategyKind,
        direction: Direction,
        first_step: u64,
    ) -> Result<Self> {
        let theta = init_theta(warmup, kind, direction)?;
        let (h_min, h_max) = min_max(warmup);
        Ok(KwState::at(theta, first_step.max(1), h_min, h_max))
    }

    pub fn with_theta2_bounds(mut self, bounds: [f64; 2]) -> Self {
        self.theta2_bounds = bounds;
        self
    }

    fn observe(&mut self, h_t: f64) {
        self.h_min = self.h_min.min(h_t);
        self.h_max = self.h_max.max(h_t);
    }

    fn project_theta1(&mut self) {
        self.theta.theta1 = self.theta.theta1.clamp(self.h_min, self.h_max);
    }

    /// One univariate update from `H_t` and `X_{t-1}`.
    ///
    /// When `X_{t-1}` falls within `c_t` of the threshold, the threshold moves
    /// by `a_t H_t / c_t` against the buying side (a positive return near
    /// the threshold makes buying there worthwhile, so the threshold drops
    /// under [`Direction::Above`]). The running range is updated with `H_t`
    /// before the projection.
    pub fn step_univariate(&self, h_t: f64, x_prev: f64, schedule: &StepSchedule) -> Result<Self> {
        if !self.initialized {
            return Err(Error::Uninitialized);
        }
        let (a, c) = (schedule.gain(self.t), schedule.width(self.t));
        let mut next = *self;
        if (x_prev - self.theta.theta1).abs() <= c {
            next.theta.theta1 -= self.theta.direction.sign() * a * h_t / c;
        }
        next.observe(h_t);
        next.project_theta1();
        next.t += 1;
        Ok(next)
    }

    /// One update of the volatility-augmented strategy.
    ///
    /// Both coordinates are judged against the incoming `(θ¹, θ²)`: the window
    /// for `θ¹` is `c¹_t` around `θ¹ - θ² e^ν`, the window for `θ²` is
    /// `c²_t e^ν` around the same center. `θ¹` is projected on the running
    /// range of returns and `θ²` on `theta2_bounds`.
    pub fn step_bivariate(
        &self,
        h_t: f64,
        h_prev: f64,
        nu_prev: f64,
        schedule1: &StepSchedule,
        schedule2: &StepSchedule,
    ) -> Result<Self> {
        if !self.initialized {
            return Err(Error::Uninitialized);
        }
        let theta2 = self
            .theta
            .theta2
            .ok_or_else(|| Error::param("theta2", "bivariate step needs a volatility weight"))?;
        if !nu_prev.is_finite() {
            return Err(Error::param(
                "nu",
                "predicted log-volatility must be finite",
            ));
        }
        let vol = nu_prev.exp();
        let center = self.theta.theta1 - theta2 * vol;
        let distance = (h_prev - center).abs();
        let sign = self.theta.direction.sign();

        let mut next = *self;
        let c1 = schedule1.width(self.t);
        if distance <= c1 {
            next.theta.theta1 -= sign * schedule1.gain(self.t) * h_t / c1;
        }
        let c2 = schedule2.width(self.t);
        if distance <= c2 * vol {
            let [lo, hi] = self.theta2_bounds;
            let updated = theta2 + sign * schedule2.gain(self.t) * h_t / c2;
            next.theta.theta2 = Some(updated.clamp(lo, hi));
        }
        next.observe(h_t);
        next.project_theta1();
        next.t += 1;
        Ok(next)
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// How the schedule counter relates to time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOrigin {
    /// `a_t`, `c_t` are indexed by the time of the observation, so the first
    /// update after the warm-up uses `t = 11`.
    #[default]
    DataTime,
    /// The counter starts at 1 on the first update.
    FirstUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub kind: StrategyKind,
    pub direction: Direction,
    /// Exponents for `θ¹`.
    pub schedule: Exponents,
    /// Exponents for `θ²` (volatility strategy only).
    pub schedule2: Exponents,
    pub scaling: ScalingMode,
    pub theta2_bounds: [f64; 2],
    pub step_origin: StepOrigin,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kind: StrategyKind::Univariate,
            direction: Direction::Above,
            schedule: Exponents::default(),
            schedule2: Exponents::default(),
            scaling: ScalingMode::None,
            theta2_bounds: DEFAULT_THETA2_BOUNDS,
            step_origin: StepOrigin::DataTime,
        }
    }
}

/// Thresholds after each time step, starting with the initial value at
/// `t = 10`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start_t: usize,
    pub theta1: Vec<f64>,
    pub theta2: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.theta1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta1.is_empty()
    }

    pub fn end_t(&self) -> usize {
        self.start_t + self.len() - 1
    }

    /// Threshold after the update at time `t`.
    pub fn at(&self, t: usize) -> Option<Theta> {
        let i = t.checked_sub(self.start_t)?;
        let theta1 = *self.theta1.get(i)?;
        Some(match &self.theta2 {
            Some(t2) => Theta::volatility(theta1, t2[i]),
            None => Theta::univariate(theta1),
        })
    }

    pub fn last(&self) -> Theta {
        self.at(self.end_t()).expect("trajectory is never empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnRun {
    pub trajectory: Trajectory,
    pub scale: ScaleFactor,
}

/// Learns the threshold along a path: warm-up on `H_1..H_10`, then one update
/// per `t = 11..T` from `(H_t, H_{t-1}[, ν_{t-1}])`.
pub fn run(path: &ReturnPath, config: &LearnerConfig) -> Result<LearnRun> {
    if path.len() <= WARMUP_LEN {
        return Err(Error::TooShort {
            needed: WARMUP_LEN + 1,
            got: path.len(),
        });
    }
    if config.kind == StrategyKind::Volatility && !path.has_volatility() {
        return Err(Error::param(
            "kind",
            "volatility strategy needs a path with predicted log-volatility",
        ));
    }
    let scale = scale_factor(path, config.scaling)?;
    let schedule1 = StepSchedule::scaled(scale.k, config.schedule)?;
    let schedule2 = StepSchedule::scaled(scale.k, config.schedule2)?;
    let first_step = match config.step_origin {
        StepOrigin::DataTime => WARMUP_LEN as u64 + 1,
        StepOrigin::FirstUpdate => 1,
    };
    let mut state = KwState::initialize(
        &path.h[..WARMUP_LEN],
        config.kind,
        config.direction,
        first_step,
    )?
    .with_theta2_bounds(config.theta2_bounds);

    let steps = path.len() - WARMUP_LEN + 1;
    let mut theta1 = Vec::with_capacity(steps);
    theta1.push(state.theta.theta1);
    let mut theta2 = match config.kind {
        StrategyKind::Univariate => None,
        StrategyKind::Volatility => {
            let mut v = Vec::with_capacity(steps);
            v.push(state.theta.theta2.unwrap_or(0.0));
            Some(v)
        }
    };

    for i in WARMUP_LEN..path.len() {
        state = match config.kind {
            StrategyKind::Univariate => {
                state.step_univariate(path.h[i], path.h[i - 1], &schedule1)?
            }
            StrategyKind::Volatility => state.step_bivariate(
                path.h[i],
                path.h[i - 1],
                path.nu[i],
                &schedule1,
                &schedule2,
            )?,
        };
        theta1.push(state.theta.theta1);
        if let Some(v) = theta2.as_mut() {
            v.push(state.theta.theta2.unwrap_or(0.0));
        }
    }

    Ok(LearnRun {
        trajectory: Trajectory {
            start_t: WARMUP_LEN,
            theta1,
            theta2,
        },
        scale,
    })
}
