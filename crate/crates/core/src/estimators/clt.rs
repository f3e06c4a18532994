use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mc::{check_intensity, check_replicates, rst_functional_sample};
use super::normal::kolmogorov_distance;
use super::stats::{mean_var, ols_slope};
use crate::error::{Error, Result};
use crate::functionals::check_exponent;
use crate::geom::Window;
use crate::pointprocess::stream_seed;

/// Default number of disjoint blocks for the subsampling error.
pub const DEFAULT_SUBSAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub t: f64,
    pub ks: f64,
    pub ks_stderr: f64,
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub a: f64,
    pub replicates: usize,
    pub rows: Vec<CltRow>,
    /// Least-squares slope of `ln ks` against `ln t`.
    pub slope: f64,
    pub slope_stderr: f64,
    /// Consecutive increases of `ks` along `t`.
    pub inversions: usize,
    /// Increases larger than three combined subsampling errors.
    pub significant_inversions: usize,
}

impl CltReport {
    /// At most one increase along `t`, none of them significant.
    pub fn decreasing(&self) -> bool {
        self.inversions <= 1 && self.significant_inversions == 0
    }

    pub fn final_ks(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.ks)
    }
}

/// Kolmogorov distance of `values` standardised by their own mean and
/// standard deviation.
pub fn standardized_ks(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter("need at least 2 values".into()));
    }
    let (mean, var) = mean_var(values);
    if !(var > 0.0) {
        return Err(Error::Domain("values have zero variance".into()));
    }
    let sd = var.sqrt();
    let z: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    kolmogorov_distance(&z)
}

/// Standard error of [`standardized_ks`] from `blocks` disjoint
/// consecutive subsamples of size `m`: the spread of the block distances,
/// rescaled by `sqrt(m / n)`.
pub fn subsampling_stderr(values: &[f64], blocks: usize) -> Result<f64> {
    let n = values.len();
    if blocks < 2 || n / blocks < 2 {
        return Err(Error::InvalidParameter(format!(
            "cannot split {n} values into {blocks} blocks"
        )));
    }
    let m = n / blocks;
    let ks: Vec<f64> = (0..blocks)
        .map(|b| standardized_ks(&values[b * m..(b + 1) * m]))
        .collect::<Result<_>>()?;
    let (_, var) = mean_var(&ks);
    Ok(var.sqrt() * (m as f64 / n as f64).sqrt())
}

/// Replicates `L_t^{(a)}` at each `t`, standardises, and measures the
/// distance to normality.
pub fn clt_experiment(
    w: &Window,
    a: f64,
    t_list: &[f64],
    replicates: usize,
    seed: u64,
    subsamples: usize,
) -> Result<CltReport> {
    check_exponent(a)?;
    w.validate()?;
    check_replicates(replicates, 2 * subsamples.max(2))?;
    if replicates > u32::MAX as usize || t_list.len() > u32::MAX as usize {
        return Err(Error::InvalidParameter("too many replicates".into()));
    }
    if t_list.len() < 2 || t_list.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidParameter("t_list must hold at least two increasing values".into()));
    }
    let mut rows = Vec::with_capacity(t_list.len());
    for (k, &t) in t_list.iter().enumerate() {
        check_intensity(t)?;
        let values: Vec<f64> = (0..replicates as u32)
            .into_par_iter()
            .map(|i| rst_functional_sample(w, t, a, stream_seed(seed, k as u32, i)))
            .collect::<Result<_>>()?;
        let (mean, var) = mean_var(&values);
        rows.push(CltRow {
            t,
            ks: standardized_ks(&values)?,
            ks_stderr: subsampling_stderr(&values, subsamples)?,
            mean,
            std_dev: var.sqrt(),
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.ks.ln()).collect();
    let (slope, slope_stderr) = ols_slope(&lx, &ly)?;
    let mut inversions = 0;
    let mut significant = 0;
    for p in rows.windows(2) {
        if p[1].ks > p[0].ks {
            inversions += 1;
            let se = (p[0].ks_stderr.powi(2) + p[1].ks_stderr.powi(2)).sqrt();
            if p[1].ks - p[0].ks > 3.0 * se {
                significant += 1;
            }
        }
    }
    Ok(CltReport {
        a,
        replicates,
        rows,
        slope,
        slope_stderr,
        inversions,
        significant_inversions: significant,
    })
}
