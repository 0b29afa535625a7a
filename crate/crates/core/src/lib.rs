//! Online learning of log-optimal threshold trading strategies.
//!
//! The crate simulates log-return processes (AR(1), long-memory MA(∞) and
//! discrete Gaussian stochastic volatility), evaluates threshold strategies
//! that switch between an all-stock and an all-bond position, and learns the
//! growth-optimal threshold online with a Kiefer-Wolfowitz finite-difference
//! stochastic gradient. Monte-Carlo oracles provide ground-truth optima and the
//! experiment harness measures convergence of the learner in mean square.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod kw;
pub mod oracle;
pub mod output;
pub mod pool;
pub mod rng;
pub mod strategy;

pub use dynamics::{Ar1Params, DgsvParams, DynamicsSpec, MaParams, ReturnPath};
pub use error::{Error, Result};
pub use kw::{KwState, ScalingMode, StepSchedule};
pub use strategy::{Direction, StrategyKind, Theta};
