//! Curriculum scheduling driven by learning progress, plus the tooling needed
//! to study it end to end:
//!
//! - [`lp`] maintains per-task success-probability estimates (a fast and a slow
//!   EMA), converts them into reweighted learning-progress scores, and turns
//!   those into a sampling distribution over tasks.
//! - [`explore`] computes the within-episode exploration bonus and maintains
//!   the dynamic exploration set across training.
//! - [`graph`] and [`sim`] provide a synthetic learner: a task-dependency
//!   graph with parametric skill dynamics (learning, group-correlated
//!   forgetting) that stands in for an RL agent at desk scale.
//! - [`estimator`] analyses the difference-quotient slope estimator that
//!   motivates the EMA design: its expected square error, the closed-form
//!   optimal lag, and a Monte Carlo oracle for both.
//! - [`config`] and [`artifacts`] define the JSON config / manifest and the
//!   CSV series formats written by the command-line harness.
//!
//! Core math is generic over the scalar type; `f64` aliases are exported at
//! the crate root and are what the harness uses.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

pub mod artifacts;
pub mod config;
pub mod error;
pub mod estimator;
pub mod explore;
pub mod graph;
pub mod lp;
pub mod presets;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{TaskGraph, TaskId};

/// Floating-point scalar the core math is generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum + fmt::Debug + fmt::Display + 'static
{
    /// Lossless-enough conversion from an `f64` constant.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A task counts as discovered once its true success probability exceeds this.
pub const DISCOVERY_THRESHOLD: f64 = 0.05;

/// Learning-progress state over `f64`, the default scalar.
pub type LpState64 = lp::LpState<f64>;
/// Learner state over `f64`.
pub type LearnerState64 = sim::LearnerState<f64>;
/// Exploration set over `f64`.
pub type ExplorationSet64 = explore::ExplorationSet<f64>;
