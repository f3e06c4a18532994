use serde::{Deserialize, Serialize};

use super::closed_form::diff2_bound;
use super::mc::{check_intensity, check_replicates, replicate};
use super::stats::{ols_slope, SummaryStats};
use crate::error::{Error, Result};
use crate::functionals::{check_exponent, DiffContext, FunctionalSpec};
use crate::geom::{check_dim, Window};
use crate::pointprocess::{derive_replicate_seed, sample_poisson};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffMomentRow {
    pub t: f64,
    pub a: f64,
    pub probe: usize,
    /// `|t^{a/d} D_z L|^5`.
    pub first: SummaryStats,
    /// `|t^{a/d} D²_{z1,z2} L|^5` with `z2 = z1 + t^{-1/d} offset`.
    pub second: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffMomentReport {
    pub rows: Vec<DiffMomentRow>,
    /// Largest ratio `moment(t') / moment(t)` over `t < t'`, per exponent
    /// and probe, for the first and second order differences.
    pub max_growth_first: f64,
    pub max_growth_second: f64,
    /// Every second-order difference was exactly zero for `a = 0`.
    pub zero_exponent_exact: bool,
}

impl DiffMomentReport {
    pub fn growth_within(&self, factor: f64) -> bool {
        self.max_growth_first <= factor && self.max_growth_second <= factor
    }
}

fn growth(values: &[f64]) -> f64 {
    let mut g = 1.0f64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let (lo, hi) = (values[i], values[j]);
            if lo > 0.0 {
                g = g.max(hi / lo);
            } else if hi > 0.0 {
                g = f64::INFINITY;
            }
        }
    }
    g
}

/// Empirical fifth absolute moments of the scaled first and second order
/// differences of the radial-tree functional, scanned over `t_list`.
///
/// The second point of each pair sits at `z1 + t^{-1/d} · offset`, a fixed
/// separation in the natural length scale of the process.
pub fn diff_moment_check(
    w: &Window,
    t_list: &[f64],
    a_list: &[f64],
    probes: &[Vec<f64>],
    offset: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<DiffMomentReport> {
    w.validate()?;
    check_replicates(replicates, 2)?;
    if t_list.is_empty() || a_list.is_empty() || probes.is_empty() {
        return Err(Error::InvalidParameter("empty t, a or probe list".into()));
    }
    check_dim(w.dim(), offset.len())?;
    for &a in a_list {
        check_exponent(a)?;
    }
    let d = w.dim() as f64;
    for &t in t_list {
        check_intensity(t)?;
        for z in probes {
            check_dim(w.dim(), z.len())?;
            let z2: Vec<f64> = z.iter().zip(offset).map(|(p, o)| p + t.powf(-1.0 / d) * o).collect();
            if !w.contains_unchecked(z) || !w.contains_unchecked(&z2) {
                return Err(Error::PointOutsideWindow);
            }
        }
    }
    let specs: Vec<FunctionalSpec> = a_list.iter().map(|&a| FunctionalSpec::rst(a)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut zero_exact = true;
    for (ti, &t) in t_list.iter().enumerate() {
        let step = t.powf(-1.0 / d);
        // per replicate: [spec][probe] -> (first, second)
        let per_rep: Vec<Vec<Vec<(f64, f64)>>> = replicate(derive_replicate_seed(seed, ti as u64), replicates, |s| {
            let sample = sample_poisson(w, t, s)?;
            specs
                .iter()
                .map(|spec| {
                    let ctx = DiffContext::new(spec, &sample)?;
                    let scale = t.powf(spec.a / d);
                    probes
                        .iter()
                        .map(|z| {
                            let z2: Vec<f64> = z.iter().zip(offset).map(|(p, o)| p + step * o).collect();
                            let d1 = ctx.diff_first(z)?;
                            let d2 = ctx.diff_second(z, &z2)?;
                            Ok(((scale * d1).abs().powi(5), (scale * d2).abs().powi(5)))
                        })
                        .collect()
                })
                .collect()
        })?;
        for (si, spec) in specs.iter().enumerate() {
            for pi in 0..probes.len() {
                let first: Vec<f64> = per_rep.iter().map(|r| r[si][pi].0).collect();
                let second: Vec<f64> = per_rep.iter().map(|r| r[si][pi].1).collect();
                if spec.a == 0.0 && second.iter().any(|&v| v != 0.0) {
                    zero_exact = false;
                }
                rows.push(DiffMomentRow {
                    t,
                    a: spec.a,
                    probe: pi,
                    first: SummaryStats::from_values(&first)?,
                    second: SummaryStats::from_values(&second)?,
                });
            }
        }
    }
    let mut g1 = 1.0f64;
    let mut g2 = 1.0f64;
    for &a in a_list {
        for pi in 0..probes.len() {
            let sel: Vec<&DiffMomentRow> = rows.iter().filter(|r| r.a == a && r.probe == pi).collect();
            g1 = g1.max(growth(&sel.iter().map(|r| r.first.mean).collect::<Vec<_>>()));
            g2 = g2.max(growth(&sel.iter().map(|r| r.second.mean).collect::<Vec<_>>()));
        }
    }
    Ok(DiffMomentReport {
        rows,
        max_growth_first: g1,
        max_growth_second: g2,
        zero_exponent_exact: zero_exact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub separation: f64,
    /// Fraction of replicates with a non-zero second-order difference.
    pub frequency: f64,
    pub std_error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diff2DecayReport {
    pub t: f64,
    pub a: f64,
    pub alpha_w: f64,
    pub rows: Vec<DecayRow>,
    /// Increases of the frequency along the separation grid larger than
    /// three combined standard errors.
    pub monotone_violations: usize,
    /// Least-squares slope of `ln frequency` against `separation^d` over
    /// rows with non-zero frequency (`None` with fewer than two such rows).
    pub log_slope: Option<f64>,
}

impl Diff2DecayReport {
    /// `frequency − sigmas·se ≤ bound` at every separation.
    pub fn below_bound(&self, sigmas: f64) -> bool {
        self.rows.iter().all(|r| r.frequency - sigmas * r.std_error <= r.bound)
    }
}

/// Frequency of `D²_{z1,z2} L_t^{(a)} ≠ 0` with `z2 = z1 + s·unit` across
/// `separations`, against the curve `(2 + 2/α_W) exp(−t α_W κ_d s^d / 2^d)`.
#[allow(clippy::too_many_arguments)]
pub fn diff2_decay_check(
    w: &Window,
    t: f64,
    a: f64,
    z1: &[f64],
    unit: &[f64],
    separations: &[f64],
    alpha_w: f64,
    replicates: usize,
    seed: u64,
) -> Result<Diff2DecayReport> {
    w.validate()?;
    check_intensity(t)?;
    check_replicates(replicates, 2)?;
    check_dim(w.dim(), z1.len())?;
    check_dim(w.dim(), unit.len())?;
    if !(alpha_w > 0.0 && alpha_w <= 1.0) {
        return Err(Error::Domain(format!("alpha_W = {alpha_w} not in (0, 1]")));
    }
    let n_unit = crate::geom::norm(unit);
    if !(n_unit > 0.0) {
        return Err(Error::InvalidParameter("separation direction must be non-zero".into()));
    }
    let points: Vec<Vec<f64>> = separations
        .iter()
        .map(|&s| {
            if !(s >= 0.0) || s > w.diameter() {
                return Err(Error::InvalidParameter(format!("separation {s} outside [0, diameter]")));
            }
            let z2: Vec<f64> = z1.iter().zip(unit).map(|(p, u)| p + s * u / n_unit).collect();
            if !w.contains_unchecked(z1) || !w.contains_unchecked(&z2) {
                return Err(Error::PointOutsideWindow);
            }
            Ok(z2)
        })
        .collect::<Result<_>>()?;
    let spec = FunctionalSpec::rst(a)?;
    let hits: Vec<Vec<bool>> = replicate(seed, replicates, |s| {
        let sample = sample_poisson(w, t, s)?;
        let ctx = DiffContext::new(&spec, &sample)?;
        points.iter().map(|z2| Ok(ctx.diff_second(z1, z2)? != 0.0)).collect()
    })?;
    let n = replicates as f64;
    let d = w.dim();
    let rows: Vec<DecayRow> = separations
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let p = hits.iter().filter(|h| h[k]).count() as f64 / n;
            Ok(DecayRow {
                separation: s,
                frequency: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                bound: diff2_bound(s, t, alpha_w, d)?,
            })
        })
        .collect::<Result<_>>()?;
    let monotone_violations = rows
        .windows(2)
        .filter(|w| {
            let se = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
            w[1].frequency - w[0].frequency > 3.0 * se
        })
        .count();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.frequency > 0.0)
        .map(|r| (r.separation.powi(d as i32), r.frequency.ln()))
        .unzip();
    let log_slope = if xs.len() >= 2 { ols_slope(&xs, &ys).ok().map(|v| v.0) } else { None };
    Ok(Diff2DecayReport {
        t,
        a,
        alpha_w,
        rows,
        monotone_violations,
        log_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_exponent_moments_are_trivial() {
        let w = Window::unit_cube(2).unwrap();
        let r = diff_moment_check(&w, &[100.0, 400.0], &[0.0], &[vec![0.1, 0.05]], &[0.5, 0.3], 20, 1).unwrap();
        assert!(r.zero_exponent_exact);
        for row in &r.rows {
            assert_eq!(row.first.mean, 1.0);
            assert_eq!(row.second.mean, 0.0);
        }
        assert_eq!(r.max_growth_first, 1.0);
    }

    #[test]
    fn decay_frequency_drops_with_separation() {
        let w = Window::unit_cube(2).unwrap();
        let seps = [1e-6, 0.02, 0.2];
        let r = diff2_decay_check(&w, 500.0, 1.0, &[0.1, 0.1], &[1.0, 0.0], &seps, 0.25, 200, 3).unwrap();
        assert!(r.rows[0].frequency > 0.9);
        assert!(r.rows[2].frequency < 0.05);
        assert!(r.below_bound(3.0));
    }

    #[test]
    fn growth_ratio() {
        assert_eq!(growth(&[1.0, 1.5, 1.2]), 1.5);
        assert_eq!(growth(&[0.0, 0.0]), 1.0);
        assert_eq!(growth(&[2.0, 1.0]), 1.0);
    }
}
