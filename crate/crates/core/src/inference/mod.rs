//! Student-t quantiles and the mean / variance / confidence interval
//! computation shared by every estimator in the crate.

mod student_t;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use student_t::{t_cdf, t_pdf, t_quantile};

/// Mean with its (already correction-scaled) variance and a symmetric
/// t-interval at level `1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub mean: f64,
    pub variance: f64,
    pub df: u64,
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
}

impl IntervalEstimate {
    pub fn std_error(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn overlaps(&self, other: &IntervalEstimate) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability(alpha))
    }
}

/// Unbiased sample variance, `(m - 1)` denominator.
pub fn sample_variance(samples: &[f64]) -> f64 {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
}

/// Mean of `samples` with variance `(1/m + c) * s^2` and the interval
/// `mean ± t_{1-alpha/2, m-1} * sqrt(variance)`.
///
/// With `c = 0` this is the textbook standard error of a mean. A positive `c`
/// inflates the variance to account for overlap between the training sets
/// that produced the samples.
pub fn corrected_mean_ci(samples: &[f64], c: f64, alpha: f64) -> Result<IntervalEstimate> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::TooFewSamples { got: m, need: 2 });
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams(format!("correction constant {c} must be finite and >= 0")));
    }
    check_alpha(alpha)?;
    if let Some(bad) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(format!("sample {bad} is not finite")));
    }
    let mean = samples.iter().sum::<f64>() / m as f64;
    let s2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let variance = (1.0 / m as f64 + c) * s2;
    let df = (m - 1) as u64;
    let half = if variance > 0.0 {
        t_quantile(1.0 - alpha / 2.0, df)? * variance.sqrt()
    } else {
        0.0
    };
    Ok(IntervalEstimate {
        mean,
        variance,
        df,
        lower: mean - half,
        upper: mean + half,
        alpha,
    })
}
