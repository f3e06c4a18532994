use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closed_form::{rst_tail_bound, TailBoundParams};
use super::normal::ks_distance_to;
use super::stats::{z_score, SummaryStats};
use crate::error::{Error, Result};
use crate::functionals::{check_exponent, edge_power, eval_rst_functional};
use crate::geom::{check_dim, norm, unit_ball_volume, Direction, Window};
use crate::pointprocess::{
    default_dilation_margin, derive_replicate_seed, sample_poisson, stream_seed, uniform_point, PointSample,
};
use crate::spanning::{build_rst, Insertions};

/// Runs `f(replicate_seed)` for every replicate in parallel and returns the
/// results in replicate order.
pub(crate) fn replicate<T, F>(seed: u64, replicates: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..replicates as u64)
        .into_par_iter()
        .map(|i| f(derive_replicate_seed(seed, i)))
        .collect()
}

pub(crate) fn check_replicates(replicates: usize, min: usize) -> Result<()> {
    if replicates < min {
        return Err(Error::InvalidParameter(format!(
            "need at least {min} replicates, got {replicates}"
        )));
    }
    Ok(())
}

pub(crate) fn check_intensity(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidIntensity(t))
    }
}

/// `L_t^{(a)}` of one seeded realisation on `w`.
pub fn rst_functional_sample(w: &Window, t: f64, a: f64, seed: u64) -> Result<f64> {
    let s = sample_poisson(w, t, seed)?;
    Ok(eval_rst_functional(&build_rst(&s), a)?.value)
}

/// Statistics of `t^{a/d - 1} L_t^{(a)}` over seeded replicates.
pub fn estimate_rst_mean(w: &Window, t: f64, a: f64, replicates: usize, seed: u64) -> Result<SummaryStats> {
    check_exponent(a)?;
    check_intensity(t)?;
    check_replicates(replicates, 2)?;
    w.validate()?;
    let scale = t.powf(a / w.dim() as f64 - 1.0);
    let v = replicate(seed, replicates, |s| Ok(scale * rst_functional_sample(w, t, a, s)?))?;
    SummaryStats::from_values(&v)
}

/// Statistics of `t^{a/d - 1/2} L_t^{(a)}`; the `variance` field is the
/// scaled variance `t^{2a/d - 1} V[L_t^{(a)}]`.
pub fn estimate_rst_variance(w: &Window, t: f64, a: f64, replicates: usize, seed: u64) -> Result<SummaryStats> {
    check_exponent(a)?;
    check_intensity(t)?;
    check_replicates(replicates, 30)?;
    w.validate()?;
    let scale = t.powf(a / w.dim() as f64 - 0.5);
    let v = replicate(seed, replicates, |s| Ok(scale * rst_functional_sample(w, t, a, s)?))?;
    SummaryStats::from_values(&v)
}

/// Radial edge length of an extra point `x` inserted into `sample`.
pub fn inserted_radial_length(sample: &PointSample, x: &[f64]) -> Result<f64> {
    check_dim(sample.dim(), x.len())?;
    let mut ins = Insertions::new(sample, 1)?;
    ins.set(0, x);
    Ok(ins.radial(0, &[]).d2.sqrt())
}

/// Both sides of the Mecke identity
/// `E Σ_{x∈η_t} g(ℓ(x, η_t)) = t ∫_W E g(ℓ(x, η_t + δ_x)) dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeckeReport {
    pub lhs: SummaryStats,
    pub rhs: SummaryStats,
    /// `|lhs.mean - rhs.mean|` in combined standard errors.
    pub z: f64,
    pub points_per_replicate: usize,
}

impl MeckeReport {
    pub fn agrees(&self, sigmas: f64) -> bool {
        self.z <= sigmas
    }
}

/// Inserted points averaged per replicate on the right-hand side.
pub const MECKE_POINTS: usize = 32;

fn mecke_with<G>(w: &Window, t: f64, replicates: usize, seed: u64, g: G) -> Result<MeckeReport>
where
    G: Fn(f64) -> f64 + Sync + Send,
{
    check_intensity(t)?;
    check_replicates(replicates, 30)?;
    w.validate()?;
    if replicates > u32::MAX as usize {
        return Err(Error::InvalidParameter("too many replicates".into()));
    }
    let vol = w.volume();
    let d = w.dim();
    let pairs: Vec<(f64, f64)> = (0..replicates as u32)
        .into_par_iter()
        .map(|i| {
            let s = sample_poisson(w, t, stream_seed(seed, 0, i))?;
            let tree = build_rst(&s);
            let lhs: f64 = tree.edge_length.iter().map(|&l| g(l)).sum();

            let s2 = sample_poisson(w, t, stream_seed(seed, 1, i))?;
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 2, i));
            let mut ins = Insertions::new(&s2, 1)?;
            let mut x = vec![0.0; d];
            let mut acc = 0.0;
            for _ in 0..MECKE_POINTS {
                uniform_point(w, &mut rng, &mut x);
                ins.set(0, &x);
                acc += g(ins.radial(0, &[]).d2.sqrt());
            }
            Ok((lhs, t * vol * acc / MECKE_POINTS as f64))
        })
        .collect::<Result<_>>()?;
    let (l, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let lhs = SummaryStats::from_values(&l)?;
    let rhs = SummaryStats::from_values(&r)?;
    let z = z_score(lhs.mean, lhs.std_error_mean, rhs.mean, rhs.std_error_mean);
    Ok(MeckeReport {
        lhs,
        rhs,
        z,
        points_per_replicate: MECKE_POINTS,
    })
}

/// Mecke identity with `g(ℓ) = ℓ^a`.
pub fn mecke_check(w: &Window, t: f64, a: f64, replicates: usize, seed: u64) -> Result<MeckeReport> {
    check_exponent(a)?;
    mecke_with(w, t, replicates, seed, |l| edge_power(l, a))
}

/// Mecke identity with the indicator `g(ℓ) = 1{ℓ ≥ u}`.
pub fn mecke_tail_check(w: &Window, t: f64, u: f64, replicates: usize, seed: u64) -> Result<MeckeReport> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("tail argument {u} must be non-negative")));
    }
    mecke_with(w, t, replicates, seed, |l| if l >= u { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub u: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
}

impl TailRow {
    /// One-sided check `empirical - sigmas·se ≤ bound`.
    pub fn below_bound(&self, sigmas: f64) -> bool {
        self.empirical - sigmas * self.std_error <= self.bound
    }
}

/// Empirical `P(ℓ(x, η_t + δ_x) ≥ u)` next to the dominating curve.
pub fn rst_tail_check(
    w: &Window,
    t: f64,
    x: &[f64],
    u_list: &[f64],
    params: &TailBoundParams,
    replicates: usize,
    seed: u64,
) -> Result<Vec<TailRow>> {
    check_intensity(t)?;
    check_replicates(replicates, 2)?;
    check_dim(w.dim(), x.len())?;
    if !w.contains_unchecked(x) {
        return Err(Error::PointOutsideWindow);
    }
    let lengths = replicate(seed, replicates, |s| inserted_radial_length(&sample_poisson(w, t, s)?, x))?;
    let n = lengths.len() as f64;
    u_list
        .iter()
        .map(|&u| {
            let p = lengths.iter().filter(|&&l| l >= u).count() as f64 / n;
            Ok(TailRow {
                u,
                empirical: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                bound: rst_tail_bound(u, t, params, w.dim())?,
            })
        })
        .collect()
}

/// `ℓ_e(0, η + δ_0)` for a unit-intensity process sampled on the ball of
/// the default dilation radius, one value per replicate.
pub fn ell_e_center_lengths(d: usize, e: &Direction, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    check_dim(d, e.dim())?;
    check_replicates(replicates, 1)?;
    let region = Window::new_ball(d, default_dilation_margin(d)?)?;
    let origin = vec![0.0; d];
    replicate(seed, replicates, |s| {
        let sample = sample_poisson(&region, 1.0, s)?;
        let mut ins = Insertions::new(&sample, 1)?;
        ins.set(0, &origin);
        let b = ins.directed(e, 0, &[]);
        Ok(if b.idx.is_some() { b.d2.sqrt() } else { 0.0 })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailLawReport {
    pub d: usize,
    pub replicates: usize,
    /// Kolmogorov distance to `1 - exp(-κ_d u^d / 2)`.
    pub ks: f64,
    pub mean: f64,
}

/// Compares the empirical law of `ℓ_e(0, η + δ_0)` with its closed form.
pub fn ell_e_tail_check(d: usize, e: &Direction, replicates: usize, seed: u64) -> Result<TailLawReport> {
    let lengths = ell_e_center_lengths(d, e, replicates, seed)?;
    let kappa = unit_ball_volume(d)?;
    let ks = ks_distance_to(&lengths, |u| 1.0 - (-kappa * u.powi(d as i32) / 2.0).exp())?;
    Ok(TailLawReport {
        d,
        replicates,
        ks,
        mean: lengths.iter().sum::<f64>() / lengths.len() as f64,
    })
}

/// Monte Carlo estimate of `λ(B(x,u) ∩ B(0,‖x‖) ∩ W) / λ(B(x,u))` and its
/// standard error.
pub fn volume_ratio(w: &Window, x: &[f64], u: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    check_dim(w.dim(), x.len())?;
    if !(u > 0.0) || samples == 0 {
        return Err(Error::InvalidParameter("radius and sample count must be positive".into()));
    }
    let ball = Window::new_ball(w.dim(), u)?;
    let r2 = crate::geom::sq_norm(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![0.0; w.dim()];
    let mut hits = 0usize;
    for _ in 0..samples {
        uniform_point(&ball, &mut rng, &mut p);
        for (pi, xi) in p.iter_mut().zip(x) {
            *pi += xi;
        }
        if crate::geom::sq_norm(&p) <= r2 && w.contains_unchecked(&p) {
            hits += 1;
        }
    }
    let n = samples as f64;
    let ratio = hits as f64 / n;
    Ok((ratio, (ratio * (1.0 - ratio) / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaProbeReport {
    pub params: TailBoundParams,
    pub min_ratio: f64,
    pub min_std_error: f64,
    pub argmin_x: Vec<f64>,
    pub argmin_u: f64,
    pub evaluations: usize,
}

/// Radii probed per location, as fractions of `‖x‖`.
pub const ALPHA_PROBE_FRACTIONS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];

/// Lower floor of the probed constant.
pub const ALPHA_FLOOR: f64 = 1e-6;

/// Empirical lower-bound probe of the volume-ratio constant of `w`.
///
/// Locations form a regular lattice with `grid_points` nodes per axis over
/// the bounding box (corners included), restricted to `w` and excluding the
/// origin; each is paired with the radii in [`ALPHA_PROBE_FRACTIONS`]. The
/// returned constant is the smallest ratio minus three standard errors,
/// floored at [`ALPHA_FLOOR`]. This is not a certified bound.
pub fn alpha_probe_report(w: &Window, grid_points: usize, mc_per_cell: usize, seed: u64) -> Result<AlphaProbeReport> {
    w.validate()?;
    if grid_points < 1 || mc_per_cell < 2 {
        return Err(Error::InvalidParameter(
            "alpha probe needs grid_points >= 1 and mc_per_cell >= 2".into(),
        ));
    }
    let d = w.dim();
    let (lo, hi) = w.bounding_box();
    let total = grid_points
        .checked_pow(d as u32)
        .filter(|&n| n <= 1 << 24)
        .ok_or_else(|| Error::Resource("alpha probe lattice too large".into()))?;
    let mut locations = Vec::new();
    for k in 0..total {
        let mut rem = k;
        let mut x = vec![0.0; d];
        for i in 0..d {
            let j = rem % grid_points;
            rem /= grid_points;
            x[i] = if grid_points == 1 {
                0.5 * (lo[i] + hi[i])
            } else {
                lo[i] + (hi[i] - lo[i]) * j as f64 / (grid_points - 1) as f64
            };
        }
        if w.contains_unchecked(&x) && norm(&x) > 0.0 {
            locations.push(x);
        }
    }
    if locations.is_empty() {
        return Err(Error::InvalidWindow("no probe locations inside the window".into()));
    }
    let jobs: Vec<(usize, f64)> = locations
        .iter()
        .enumerate()
        .flat_map(|(i, x)| ALPHA_PROBE_FRACTIONS.iter().map(move |f| (i, f * norm(x))))
        .collect();
    let results: Vec<(f64, f64)> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(i, u))| volume_ratio(w, &locations[i], u, mc_per_cell, derive_replicate_seed(seed, k as u64)))
        .collect::<Result<_>>()?;
    let (mut best, mut at) = (f64::INFINITY, 0);
    for (k, (r, se)) in results.iter().enumerate() {
        if r - 3.0 * se < best {
            best = r - 3.0 * se;
            at = k;
        }
    }
    let alpha = best.clamp(ALPHA_FLOOR, 1.0);
    Ok(AlphaProbeReport {
        params: TailBoundParams::new(alpha, w.clone())?,
        min_ratio: results[at].0,
        min_std_error: results[at].1,
        argmin_x: locations[jobs[at].0].clone(),
        argmin_u: jobs[at].1,
        evaluations: jobs.len(),
    })
}

pub fn alpha_probe(w: &Window, grid_points: usize, mc_per_cell: usize, seed: u64) -> Result<TailBoundParams> {
    Ok(alpha_probe_report(w, grid_points, mc_per_cell, seed)?.params)
}
