use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of batches for the jackknife error of the variance.
pub const DEFAULT_BATCHES: usize = 10;

/// Mean and unbiased variance of a replicate sample with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error_mean: f64,
    /// Delete-one-batch jackknife error of `variance`.
    pub std_error_variance: f64,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::with_batches(values, DEFAULT_BATCHES)
    }

    /// Summary with a `batches`-group jackknife for the variance error.
    /// Values are reduced in slice order, so the result depends only on the
    /// input sequence.
    pub fn with_batches(values: &[f64], batches: usize) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 values, got {n}")));
        }
        if batches < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 batches, got {batches}")));
        }
        let (mean, variance) = mean_var(values);
        let b = batches.min(n / 2);
        let std_error_variance = if b >= 2 {
            jackknife_variance_error(values, b)
        } else {
            variance * (2.0 / (n as f64 - 1.0)).sqrt()
        };
        Ok(SummaryStats {
            n,
            mean,
            variance,
            std_error_mean: (variance / n as f64).sqrt(),
            std_error_variance,
        })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Mean and unbiased variance (two-pass).
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = if values.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    (mean, var)
}

fn jackknife_variance_error(values: &[f64], batches: usize) -> f64 {
    let n = values.len();
    let bounds: Vec<usize> = (0..=batches).map(|k| k * n / batches).collect();
    let mut kept = Vec::with_capacity(n);
    let est: Vec<f64> = (0..batches)
        .map(|k| {
            kept.clear();
            kept.extend_from_slice(&values[..bounds[k]]);
            kept.extend_from_slice(&values[bounds[k + 1]..]);
            mean_var(&kept).1
        })
        .collect();
    let b = batches as f64;
    let avg = est.iter().sum::<f64>() / b;
    let ss: f64 = est.iter().map(|v| (v - avg) * (v - avg)).sum();
    ((b - 1.0) / b * ss).sqrt()
}

/// `|x - y| / sqrt(se_x² + se_y²)`; infinite when both errors vanish and
/// the values differ.
pub fn z_score(x: f64, se_x: f64, y: f64, se_y: f64) -> f64 {
    let se = (se_x * se_x + se_y * se_y).sqrt();
    let diff = (x - y).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

/// Ordinary least-squares slope and its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("regression needs at least 2 paired values".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("regression abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let se = if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - my - slope * (a - mx);
                r * r
            })
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok((slope, se))
}
