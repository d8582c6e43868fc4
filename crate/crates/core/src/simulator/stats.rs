use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::SimError;

/// Sample mean with a two-sided 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub ci_halfwidth: f64,
    pub n: usize,
}

impl Summary {
    pub fn lower(&self) -> f64 {
        self.mean - self.ci_halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci_halfwidth
    }

    /// Whether the two intervals share no point.
    pub fn disjoint(&self, other: &Summary) -> bool {
        self.upper() < other.lower() || other.upper() < self.lower()
    }
}

/// 0.975 quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile_975(df: usize) -> Result<f64, SimError> {
    let t = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| SimError::Config(e.to_string()))?;
    Ok(t.inverse_cdf(0.975))
}

pub fn t_interval(values: &[f64]) -> Result<Summary, SimError> {
    let n = values.len();
    if n < 2 {
        return Err(SimError::Config(format!("a confidence interval needs at least 2 samples, got {n}")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let ci_halfwidth = t_quantile_975(n - 1)? * (var / n as f64).sqrt();
    Ok(Summary { mean, ci_halfwidth, n })
}
