//! Difference-quotient estimation of the slope of a success-probability
//! curve from binomial measurements, together with its expected square error
//! and the closed-form lag that minimizes it.
//!
//! The slope estimate from two snapshots a lag apart suffers high variance
//! when the lag is small (it measures the slope of the noise) and bias when
//! the lag is large (it misses recent curvature). The expected square error
//! decomposes as `2*sigma^2 / (n*lag^2) + (mu''/2)^2 * lag^2` up to third
//! order in the lag, which is minimized at `(8*sigma^2 / (n*mu''^2))^(1/4)`.
//! A Monte Carlo resampling oracle validates both expressions.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::Real;

/// Default snapshot size used in the lag studies.
pub const DEFAULT_SAMPLES_PER_SNAPSHOT: u64 = 200;
/// Default success level at which the slope is estimated. On a logistic
/// curve this level keeps the truncated error expression within a few
/// percent of the Monte Carlo truth over the whole default lag grid.
pub const DEFAULT_EVAL_LEVEL: f64 = 0.28;
/// Default lag grid: this many decades in total, centered on the optimum.
pub const DEFAULT_GRID_DECADES: u32 = 2;
/// Default lag grid resolution.
pub const DEFAULT_GRID_POINTS_PER_DECADE: u32 = 25;

/// Success-probability curve family with analytic derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum CurveFamily<F> {
    /// `1 / (1 + exp(-(t - midpoint) / scale))`
    Logistic { midpoint: F, scale: F },
    /// `intercept + slope * t`
    Linear { intercept: F, slope: F },
    /// `a*t^2 + b*t + c`
    Quadratic { a: F, b: F, c: F },
    /// Piecewise-linear interpolation through `(times, values)` knots.
    Table { times: Vec<F>, values: Vec<F> },
}

/// A curve together with the time window it is defined on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve<F> {
    family: CurveFamily<F>,
    t0: F,
    t1: F,
}

impl<F: Real> SuccessCurve<F> {
    pub fn new(family: CurveFamily<F>, t0: F, t1: F) -> Result<Self> {
        if t0.is_nan() || t1.is_nan() || t0 >= t1 {
            return Err(Error::domain(format!("empty time domain [{t0}, {t1}]")));
        }
        match &family {
            CurveFamily::Logistic { scale, .. } => {
                if scale.is_nan() || *scale <= F::zero() {
                    return Err(Error::domain("logistic scale must be > 0".to_string()));
                }
            }
            CurveFamily::Linear { intercept, slope } => {
                for t in [t0, t1] {
                    let v = *intercept + *slope * t;
                    check_unit(v, "linear curve")?;
                }
            }
            CurveFamily::Quadratic { a, b, c } => {
                let mut extremes = vec![t0, t1];
                if *a != F::zero() {
                    let vertex = -*b / (F::of(2.0) * *a);
                    if vertex > t0 && vertex < t1 {
                        extremes.push(vertex);
                    }
                }
                for t in extremes {
                    let v = (*a * t + *b) * t + *c;
                    check_unit(v, "quadratic curve")?;
                }
            }
            CurveFamily::Table { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::domain(
                        "table curve needs >= 2 aligned knots".to_string(),
                    ));
                }
                if times.windows(2).any(|w| w[0].is_nan() || w[1].is_nan() || w[0] >= w[1]) {
                    return Err(Error::domain(
                        "table times must be strictly increasing".to_string(),
                    ));
                }
                for v in values {
                    check_unit(*v, "table curve")?;
                }
                if t0 < times[0] || t1 > times[times.len() - 1] {
                    return Err(Error::domain(
                        "time domain extends beyond the table knots".to_string(),
                    ));
                }
            }
        }
        Ok(Self { family, t0, t1 })
    }

    /// Logistic curve over `[t0, t1]`.
    pub fn logistic(midpoint: F, scale: F, t0: F, t1: F) -> Result<Self> {
        Self::new(CurveFamily::Logistic { midpoint, scale }, t0, t1)
    }

    pub fn domain(&self) -> (F, F) {
        (self.t0, self.t1)
    }

    pub fn family(&self) -> &CurveFamily<F> {
        &self.family
    }

    pub fn contains(&self, t: F) -> bool {
        t >= self.t0 && t <= self.t1
    }

    /// Mean success probability at `t`.
    pub fn mu(&self, t: F) -> F {
        match &self.family {
            CurveFamily::Logistic { midpoint, scale } => sigmoid((t - *midpoint) / *scale),
            CurveFamily::Linear { intercept, slope } => *intercept + *slope * t,
            CurveFamily::Quadratic { a, b, c } => (*a * t + *b) * t + *c,
            CurveFamily::Table { times, values } => {
                let (i, j, w) = locate(times, t);
                values[i] * (F::one() - w) + values[j] * w
            }
        }
    }

    /// First derivative of the mean at `t`.
    pub fn mu1(&self, t: F) -> F {
        match &self.family {
            CurveFamily::Logistic { midpoint, scale } => {
                let m = sigmoid((t - *midpoint) / *scale);
                m * (F::one() - m) / *scale
            }
            CurveFamily::Linear { slope, .. } => *slope,
            CurveFamily::Quadratic { a, b, .. } => F::of(2.0) * *a * t + *b,
            CurveFamily::Table { times, values } => {
                let (i, j, _) = locate(times, t);
                (values[j] - values[i]) / (times[j] - times[i])
            }
        }
    }

    /// Second derivative (curvature) of the mean at `t`. Zero for the linear
    /// and table families.
    pub fn mu2(&self, t: F) -> F {
        match &self.family {
            CurveFamily::Logistic { midpoint, scale } => {
                let m = sigmoid((t - *midpoint) / *scale);
                m * (F::one() - m) * (F::one() - F::of(2.0) * m) / (*scale * *scale)
            }
            CurveFamily::Linear { .. } => F::zero(),
            CurveFamily::Quadratic { a, .. } => F::of(2.0) * *a,
            CurveFamily::Table { .. } => F::zero(),
        }
    }

    /// Bernoulli variance of a single sample at `t`.
    pub fn variance(&self, t: F) -> F {
        let m = self.mu(t);
        m * (F::one() - m)
    }

    /// Time at which a logistic curve crosses `level`; errors for other
    /// families.
    pub fn time_at_level(&self, level: F) -> Result<F> {
        if !(level > F::zero() && level < F::one()) {
            return Err(Error::domain(format!("level {level} outside (0, 1)")));
        }
        match &self.family {
            CurveFamily::Logistic { midpoint, scale } => {
                Ok(*midpoint + *scale * (level / (F::one() - level)).ln())
            }
            _ => Err(Error::domain(
                "time_at_level is only defined for the logistic family".to_string(),
            )),
        }
    }
}

fn check_unit<F: Real>(v: F, what: &str) -> Result<()> {
    if !(v >= F::zero() && v <= F::one()) {
        return Err(Error::domain(format!(
            "{what} leaves [0, 1] (value {v}) on its domain"
        )));
    }
    Ok(())
}

fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Table lookup: segment `[i, j]` containing `t` and the interpolation weight.
fn locate<F: Real>(times: &[F], t: F) -> (usize, usize, F) {
    let mut i = 0;
    while i + 2 < times.len() && times[i + 1] <= t {
        i += 1;
    }
    let j = i + 1;
    let w = ((t - times[i]) / (times[j] - times[i]))
        .max(F::zero())
        .min(F::one());
    (i, j, w)
}

/// Snapshot size and lag of the difference-quotient estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec<F> {
    samples_per_snapshot: u64,
    lag: F,
}

impl<F: Real> EstimatorSpec<F> {
    pub fn new(samples_per_snapshot: u64, lag: F) -> Result<Self> {
        if samples_per_snapshot == 0 {
            return Err(Error::domain("need at least 1 sample per snapshot"));
        }
        if lag.is_nan() || lag <= F::zero() {
            return Err(Error::domain(format!("lag {lag} must be > 0")));
        }
        Ok(Self {
            samples_per_snapshot,
            lag,
        })
    }

    pub fn samples_per_snapshot(&self) -> u64 {
        self.samples_per_snapshot
    }

    pub fn lag(&self) -> F {
        self.lag
    }
}

/// One noisy estimate of `mu'(t)`: average `n` Bernoulli draws at `t` and at
/// `t - lag` and divide the difference by the lag.
pub fn difference_quotient<F: Real>(
    spec: &EstimatorSpec<F>,
    curve: &SuccessCurve<F>,
    t: F,
    rng: &mut ChaCha8Rng,
) -> Result<F> {
    let earlier = t - spec.lag;
    let (t0, t1) = curve.domain();
    if earlier < t0 || t > t1 {
        return Err(Error::domain(format!(
            "snapshots at {earlier} and {t} leave the curve domain [{t0}, {t1}]"
        )));
    }
    let n = spec.samples_per_snapshot;
    let mean_at = |time: F, rng: &mut ChaCha8Rng| -> F {
        let p = curve.mu(time).to_f64().expect("finite mu").clamp(0.0, 1.0);
        let k = Binomial::new(n, p).expect("p in [0,1]").sample(rng);
        F::of(k as f64 / n as f64)
    };
    let early = mean_at(earlier, rng);
    let late = mean_at(t, rng);
    Ok((late - early) / spec.lag)
}

/// Expected square error of the difference quotient, to second order in the
/// lag: variance term plus squared bias term.
pub fn expected_square_error<F: Real>(
    sigma_bar_sq: F,
    samples_per_snapshot: u64,
    curvature: F,
    lag: F,
) -> Result<F> {
    if lag.is_nan() || lag <= F::zero() {
        return Err(Error::domain(format!("lag {lag} must be > 0")));
    }
    if samples_per_snapshot == 0 {
        return Err(Error::domain("need at least 1 sample per snapshot"));
    }
    if sigma_bar_sq < F::zero() {
        return Err(Error::domain("variance must be >= 0"));
    }
    let n = F::of(samples_per_snapshot as f64);
    let variance = F::of(2.0) * sigma_bar_sq / (n * lag * lag);
    let half_curv = curvature / F::of(2.0);
    let bias_sq = half_curv * half_curv * lag * lag;
    Ok(variance + bias_sq)
}

/// Curve-level expected square error at time `t`, averaging the Bernoulli
/// variances of the two snapshots.
pub fn analytic_err2<F: Real>(
    spec: &EstimatorSpec<F>,
    curve: &SuccessCurve<F>,
    t: F,
) -> Result<F> {
    let earlier = t - spec.lag;
    let (t0, t1) = curve.domain();
    if earlier < t0 || t > t1 {
        return Err(Error::domain(format!(
            "snapshots at {earlier} and {t} leave the curve domain [{t0}, {t1}]"
        )));
    }
    let sigma_bar_sq = (curve.variance(t) + curve.variance(earlier)) / F::of(2.0);
    expected_square_error(sigma_bar_sq, spec.samples_per_snapshot, curve.mu2(t), spec.lag)
}

/// Closed-form lag minimizing the expected square error:
/// `(8*sigma^2 / (n*curvature^2))^(1/4)`. The optimum exists if and only if
/// the curvature is non-zero.
pub fn optimal_lag<F: Real>(sigma_bar_sq: F, samples_per_snapshot: u64, curvature: F) -> Result<F> {
    if samples_per_snapshot == 0 {
        return Err(Error::domain("need at least 1 sample per snapshot"));
    }
    if sigma_bar_sq < F::zero() {
        return Err(Error::domain("variance must be >= 0"));
    }
    if curvature == F::zero() {
        return Err(Error::NoOptimum(
            "the optimal lag exists if and only if the curvature is non-zero".to_string(),
        ));
    }
    let n = F::of(samples_per_snapshot as f64);
    Ok((F::of(8.0) * sigma_bar_sq / (n * curvature * curvature)).powf(F::of(0.25)))
}

/// Closed-form optimal lag for a curve at time `t`, with the average variance
/// evaluated in the zero-lag limit (`sigma^2(t)`), which is how the closed
/// form treats it as a constant.
pub fn optimal_lag_for_curve<F: Real>(
    curve: &SuccessCurve<F>,
    t: F,
    samples_per_snapshot: u64,
) -> Result<F> {
    optimal_lag(curve.variance(t), samples_per_snapshot, curve.mu2(t))
}

/// Numerically minimize the same frozen-variance objective the closed form
/// solves, by golden-section search on the log of the lag. Validates the
/// algebra of the closed form.
pub fn optimal_lag_numeric<F: Real>(
    curve: &SuccessCurve<F>,
    t: F,
    samples_per_snapshot: u64,
) -> Result<F> {
    let sigma_sq = curve.variance(t);
    let curvature = curve.mu2(t);
    if curvature == F::zero() {
        return Err(Error::NoOptimum(
            "the optimal lag exists if and only if the curvature is non-zero".to_string(),
        ));
    }
    let objective = |lag: F| -> F {
        expected_square_error(sigma_sq, samples_per_snapshot, curvature, lag)
            .expect("positive lag")
    };
    // Bracket the optimum generously; the objective is unimodal in log-lag.
    let guess = optimal_lag(sigma_sq, samples_per_snapshot, curvature)?;
    let mut lo = (guess / F::of(100.0)).ln();
    let mut hi = (guess * F::of(100.0)).ln();
    let inv_phi = F::of(0.618_033_988_749_894_8);
    let mut a = hi - (hi - lo) * inv_phi;
    let mut b = lo + (hi - lo) * inv_phi;
    let mut fa = objective(a.exp());
    let mut fb = objective(b.exp());
    for _ in 0..200 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - (hi - lo) * inv_phi;
            fa = objective(a.exp());
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + (hi - lo) * inv_phi;
            fb = objective(b.exp());
        }
    }
    Ok(((lo + hi) / F::of(2.0)).exp())
}

/// Logarithmic lag grid centered on `center`: `decades` total decades at
/// `points_per_decade` resolution, so `decades * points_per_decade + 1`
/// points from `center * 10^(-decades/2)` upward.
pub fn log_grid<F: Real>(center: F, decades: u32, points_per_decade: u32) -> Vec<F> {
    let count = decades * points_per_decade + 1;
    let start_exp = -F::of(f64::from(decades) / 2.0);
    (0..count)
        .map(|i| {
            let e = start_exp + F::of(f64::from(i) / f64::from(points_per_decade));
            center * F::of(10.0).powf(e)
        })
        .collect()
}

/// One row of the lag study table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagErrorRow<F> {
    pub delta_t: F,
    pub analytic_err2: F,
    pub empirical_err2: F,
    pub empirical_stderr: F,
}

/// Monte Carlo oracle for the expected square error: for each lag in the
/// grid, average `(difference_quotient - mu'(t))^2` over independent trials.
///
/// Trial generators derive from `(master_seed, grid index, trial index)`, so
/// the table is reproducible and independent of evaluation order.
pub fn empirical_err2_curve<F: Real>(
    curve: &SuccessCurve<F>,
    t: F,
    samples_per_snapshot: u64,
    grid: &[F],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<LagErrorRow<F>>> {
    if trials == 0 {
        return Err(Error::domain("need at least 1 trial".to_string()));
    }
    let truth = curve.mu1(t);
    let mut rows = Vec::with_capacity(grid.len());
    for (gi, &lag) in grid.iter().enumerate() {
        let spec = EstimatorSpec::new(samples_per_snapshot, lag)?;
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for trial in 0..trials {
            let mut rng = rng::stream_indexed(master_seed, "lag-trial", gi as u64 * trials + trial);
            let est = difference_quotient(&spec, curve, t, &mut rng)?;
            let err = (est - truth).to_f64().expect("finite error");
            let sq = err * err;
            sum += sq;
            sum_sq += sq * sq;
        }
        let tf = trials as f64;
        let mean = sum / tf;
        let var = (sum_sq / tf - mean * mean).max(0.0);
        let stderr = if trials > 1 {
            (var / (tf - 1.0)).sqrt()
        } else {
            f64::INFINITY
        };
        rows.push(LagErrorRow {
            delta_t: lag,
            analytic_err2: analytic_err2(&spec, curve, t)?,
            empirical_err2: F::of(mean),
            empirical_stderr: F::of(stderr),
        });
    }
    Ok(rows)
}

/// Index of the grid row with the smallest empirical error.
pub fn empirical_argmin<F: Real>(rows: &[LagErrorRow<F>]) -> usize {
    rows.iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.empirical_err2
                .partial_cmp(&b.empirical_err2)
                .expect("finite errors")
        })
        .map(|(i, _)| i)
        .expect("non-empty grid")
}
