//! Learning-progress estimation and task sampling.
//!
//! Per task we keep a fast EMA of the measured success rate and a slow EMA of
//! the fast one. Learning progress is the difference between the two after
//! both have been passed through a reweighting function that magnifies
//! differences in small probabilities. A z-score + sigmoid + normalize step
//! turns the per-task progress values into a sampling distribution that
//! concentrates most of the probability mass on the tasks with the largest
//! progress while never starving the rest completely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TaskId;
use crate::Real;

/// Default EMA time scale, in optimization rounds.
pub const DEFAULT_TIME_SCALE: f64 = 1250.0;
/// Default reweighting parameter.
pub const DEFAULT_REWEIGHT_THETA: f64 = 0.1;
/// Default slope of the sampling sigmoid.
pub const DEFAULT_SIGMOID_SLOPE: f64 = 4.0;
/// 90% quantile of the standard normal distribution; the sampling sigmoid is
/// centered here so that roughly the top decile of tasks receives most of the
/// sampling weight.
pub const SIGMOID_CENTER: f64 = 1.281_551_565_544_600_4;

/// Reweighting that magnifies differences between small probabilities:
/// `f(p) = (1 - theta) * p / (p + theta * (1 - 2p))`.
///
/// Strictly increasing on [0, 1] with fixed points f(0) = 0 and f(1) = 1 for
/// any `theta` in (0, 0.5).
pub fn reweight<F: Real>(p: F, theta: F) -> Result<F> {
    if !(p >= F::zero() && p <= F::one()) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    check_theta(theta)?;
    let one = F::one();
    let two = F::of(2.0);
    Ok((one - theta) * p / (p + theta * (one - two * p)))
}

fn check_theta<F: Real>(theta: F) -> Result<()> {
    if !(theta > F::zero() && theta < F::of(0.5)) {
        return Err(Error::domain(format!(
            "reweight theta {theta} outside (0, 0.5)"
        )));
    }
    Ok(())
}

/// Per-task learning-progress scores and the sampling distribution derived
/// from one of them.
#[derive(Debug, Clone, PartialEq)]
pub struct LpScores<F> {
    /// |f(p_fast) - f(p_slow)| per task; tracks changes in both directions.
    pub bidirectional: Vec<F>,
    /// max(0, f(p_fast) - f(p_slow)) per task; tracks improvements only.
    pub unidirectional: Vec<F>,
    /// Normalized sampling probabilities (sum 1, all strictly positive).
    pub sampling_probability: Vec<F>,
}

/// Which progress signal drives sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpDirection {
    Bidirectional,
    Unidirectional,
}

/// Fast/slow EMA success-probability estimates for a set of tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct LpState<F> {
    p_fast: Vec<F>,
    p_slow: Vec<F>,
    initialized: Vec<bool>,
    time_scale: F,
    reweight_theta: F,
}

impl<F: Real> LpState<F> {
    /// Fresh state for `task_count` tasks; both EMAs start at 0 and only
    /// advance on rounds where the task was actually measured.
    pub fn new(task_count: usize, time_scale: F, reweight_theta: F) -> Result<Self> {
        if time_scale.is_nan() || time_scale <= F::zero() {
            return Err(Error::domain(format!(
                "EMA time scale {time_scale} must be > 0"
            )));
        }
        check_theta(reweight_theta)?;
        Ok(Self {
            p_fast: vec![F::zero(); task_count],
            p_slow: vec![F::zero(); task_count],
            initialized: vec![false; task_count],
            time_scale,
            reweight_theta,
        })
    }

    /// State with the default time scale and reweighting parameter.
    pub fn with_defaults(task_count: usize) -> Self {
        Self::new(
            task_count,
            F::of(DEFAULT_TIME_SCALE),
            F::of(DEFAULT_REWEIGHT_THETA),
        )
        .expect("defaults are valid")
    }

    pub fn task_count(&self) -> usize {
        self.p_fast.len()
    }

    pub fn time_scale(&self) -> F {
        self.time_scale
    }

    pub fn reweight_theta(&self) -> F {
        self.reweight_theta
    }

    pub fn p_fast(&self) -> &[F] {
        &self.p_fast
    }

    pub fn p_slow(&self) -> &[F] {
        &self.p_slow
    }

    /// Whether the task has received at least one measurement.
    pub fn is_initialized(&self, task: TaskId) -> bool {
        self.initialized[task.index()]
    }

    fn check_task(&self, task: TaskId) -> Result<usize> {
        let i = task.index();
        if i >= self.p_fast.len() {
            return Err(Error::UnknownTask {
                id: i,
                count: self.p_fast.len(),
            });
        }
        Ok(i)
    }

    /// Advance both EMAs of one task with this round's measured success rate.
    ///
    /// `p_fast += a * (rate - p_fast)` followed by
    /// `p_slow += a * (p_fast - p_slow)` with `a = 1 / time_scale`; the slow
    /// EMA smooths the already-updated fast one. Tasks that were not measured
    /// this round must simply not be passed here; their estimates stay put.
    pub fn update(&mut self, task: TaskId, measured_rate: F) -> Result<()> {
        let i = self.check_task(task)?;
        if !(measured_rate >= F::zero() && measured_rate <= F::one()) {
            return Err(Error::domain(format!(
                "measured rate {measured_rate} outside [0, 1]"
            )));
        }
        let alpha = F::one() / self.time_scale;
        self.p_fast[i] = self.p_fast[i] + alpha * (measured_rate - self.p_fast[i]);
        self.p_slow[i] = self.p_slow[i] + alpha * (self.p_fast[i] - self.p_slow[i]);
        self.initialized[i] = true;
        Ok(())
    }

    /// Reweighted learning progress per task: `(bidirectional, unidirectional)`.
    ///
    /// Reweighting is applied to both estimates before differencing, the same
    /// way for both directions, so tasks without progress map to zero progress
    /// no matter their success probability.
    pub fn learning_progress(&self) -> (Vec<F>, Vec<F>) {
        let theta = self.reweight_theta;
        let mut bi = Vec::with_capacity(self.p_fast.len());
        let mut uni = Vec::with_capacity(self.p_fast.len());
        for i in 0..self.p_fast.len() {
            let rf = reweight(self.p_fast[i], theta).expect("state invariant: p in [0,1]");
            let rs = reweight(self.p_slow[i], theta).expect("state invariant: p in [0,1]");
            let diff = rf - rs;
            bi.push(diff.abs());
            uni.push(diff.max(F::zero()));
        }
        (bi, uni)
    }

    /// Progress scores plus the sampling distribution over `direction`.
    pub fn scores(&self, direction: LpDirection, sigmoid_slope: F) -> Result<LpScores<F>> {
        let (bi, uni) = self.learning_progress();
        let driving = match direction {
            LpDirection::Bidirectional => &bi,
            LpDirection::Unidirectional => &uni,
        };
        let sampling_probability = sampling_distribution(driving, sigmoid_slope)?;
        Ok(LpScores {
            bidirectional: bi,
            unidirectional: uni,
            sampling_probability,
        })
    }

    /// Serializable snapshot for checkpoint/resume.
    pub fn to_checkpoint(&self) -> LpCheckpoint {
        LpCheckpoint {
            ema_time_scale: self.time_scale.to_f64().expect("finite"),
            reweight_theta: self.reweight_theta.to_f64().expect("finite"),
            tasks: (0..self.p_fast.len())
                .map(|i| LpTaskCheckpoint {
                    p_fast: self.p_fast[i].to_f64().expect("finite"),
                    p_slow: self.p_slow[i].to_f64().expect("finite"),
                    initialized: self.initialized[i],
                })
                .collect(),
        }
    }

    /// Rebuild state from a checkpoint, validating every invariant.
    pub fn from_checkpoint(ck: &LpCheckpoint) -> Result<Self> {
        let mut state = Self::new(
            ck.tasks.len(),
            F::of(ck.ema_time_scale),
            F::of(ck.reweight_theta),
        )?;
        for (i, t) in ck.tasks.iter().enumerate() {
            if !(0.0..=1.0).contains(&t.p_fast) || !(0.0..=1.0).contains(&t.p_slow) {
                return Err(Error::domain(format!(
                    "checkpoint task {i} has probabilities outside [0, 1]"
                )));
            }
            state.p_fast[i] = F::of(t.p_fast);
            state.p_slow[i] = F::of(t.p_slow);
            state.initialized[i] = t.initialized;
        }
        Ok(state)
    }
}

/// JSON checkpoint schema for [`LpState`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpCheckpoint {
    pub ema_time_scale: f64,
    pub reweight_theta: f64,
    pub tasks: Vec<LpTaskCheckpoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpTaskCheckpoint {
    pub p_fast: f64,
    pub p_slow: f64,
    pub initialized: bool,
}

/// Sum in ascending value order. Makes every aggregate below invariant under
/// permutations of the input, bit for bit, which the sampling distribution
/// inherits.
fn canonical_sum<F: Real>(values: &[F]) -> F {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut acc = F::zero();
    for v in sorted {
        acc += v;
    }
    acc
}

/// Convert per-task progress values into sampling probabilities.
///
/// The values are z-scored (population standard deviation), passed through a
/// logistic sigmoid centered on the 90% quantile of the standard normal, and
/// normalized to sum 1. If all values are identical there is nothing to rank
/// and the distribution falls back to uniform.
pub fn sampling_distribution<F: Real>(lp: &[F], sigmoid_slope: F) -> Result<Vec<F>> {
    if lp.len() < 2 {
        return Err(Error::domain(format!(
            "sampling distribution needs at least 2 tasks, got {}",
            lp.len()
        )));
    }
    if lp.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("learning progress values must be finite"));
    }
    let n = F::of(lp.len() as f64);
    let mean = canonical_sum(lp) / n;
    let sq_dev: Vec<F> = lp
        .iter()
        .map(|v| {
            let d = *v - mean;
            d * d
        })
        .collect();
    let std = (canonical_sum(&sq_dev) / n).sqrt();
    if std == F::zero() {
        return Ok(vec![F::one() / n; lp.len()]);
    }
    let center = F::of(SIGMOID_CENTER);
    let weights: Vec<F> = lp
        .iter()
        .map(|v| {
            let z = (*v - mean) / std;
            F::one() / (F::one() + (-sigmoid_slope * (z - center)).exp())
        })
        .collect();
    let total = canonical_sum(&weights);
    Ok(weights.into_iter().map(|w| w / total).collect())
}
