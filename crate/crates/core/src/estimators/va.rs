//! Two estimators of the limiting scaled variance `v_a`.
//!
//! The ball estimator is the variance of the directed-forest functional on
//! a large ball divided by the ball volume. The integral estimator samples
//! the covariance integrand
//! `E[ℓ_e(0, η+δ_0+δ_z)^a ℓ_e(z, η+δ_0+δ_z)^a] − m_a²` over a truncation
//! ball and adds `m_{2a}`.
//!
//! For the integral, the product is centred at `m_a = E ℓ_e(0, η+δ_0)^a`:
//! with `Q` the regularised upper incomplete Gamma function,
//! `E ℓ_e(0, η+δ_0+δ_z)^a = m_a (1 − Q(a/d, κ_d‖z‖^d/2))` when `⟨e,z⟩ ≤ 0`
//! (and `= m_a` otherwise), and symmetrically for `ℓ_e(z, ·)`. Hence the
//! integrand equals `E[(ℓ_0^a − m_a)(ℓ_z^a − m_a)] − m_a² Q(a/d, κ_d‖z‖^d/2)`
//! and the second part integrates over `R^d` to `2(a/d) m_a²`. Only the
//! centred product is sampled, which removes most of the Monte Carlo noise
//! from distant `z`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closed_form::{ell_e_moment_closed_form, integrand_envelope};
use super::mc::{check_replicates, replicate};
use super::stats::{mean_var, SummaryStats};
use crate::error::{Error, Result};
use crate::functionals::{check_exponent, edge_power};
use crate::geom::{check_dim, unit_ball_volume, Direction, Window};
use crate::pointprocess::{default_dilation_margin, sample_poisson, sample_poisson_dilated, stream_seed, uniform_point};
use crate::spanning::{Best, Insertions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VaMethod {
    BallVariance,
    CovarianceIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaEstimate {
    pub method: VaMethod,
    pub a: f64,
    pub d: usize,
    pub value: f64,
    pub std_error: f64,
    /// Ball radius (ball method) or truncation radius (integral method).
    pub radius: f64,
    pub replicates: usize,
    /// Integrand evaluations per point-process replicate (integral method).
    pub z_samples: Option<usize>,
    /// Constant of the envelope used to choose the truncation radius.
    pub envelope_constant: Option<f64>,
    /// Set when the 3-sigma interval reaches zero; the limit is positive.
    pub ci_includes_zero: bool,
}

impl VaEstimate {
    fn new(method: VaMethod, a: f64, d: usize, value: f64, std_error: f64, radius: f64, replicates: usize) -> Self {
        VaEstimate {
            method,
            a,
            d,
            value,
            std_error,
            radius,
            replicates,
            z_samples: None,
            envelope_constant: None,
            ci_includes_zero: value - 3.0 * std_error <= 0.0,
        }
    }
}

#[inline]
fn directed_power(b: &Best, a: f64) -> f64 {
    edge_power(if b.idx.is_some() { b.d2.sqrt() } else { 0.0 }, a)
}

/// `V[\hat L^{(a)}_{B(0,r)}] / (κ_d r^d)` over seeded replicates of a
/// unit-intensity process on the dilated ball.
pub fn estimate_va_ball(r: f64, a: f64, d: usize, e: &Direction, replicates: usize, seed: u64) -> Result<VaEstimate> {
    check_exponent(a)?;
    check_dim(d, e.dim())?;
    check_replicates(replicates, 2)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("ball radius {r} must be positive")));
    }
    let core = Window::new_ball(d, r)?;
    let margin = default_dilation_margin(d)?;
    let values = replicate(seed, replicates, |s| {
        let sample = sample_poisson_dilated(&core, 1.0, margin, s)?;
        let ins = Insertions::new(&sample, 0)?;
        let mut total = 0.0;
        for (x, p) in sample.points().enumerate() {
            if core.contains_unchecked(p) {
                total += directed_power(&ins.directed_of_point(e, x), a);
            }
        }
        Ok(total)
    })?;
    let stats = SummaryStats::from_values(&values)?;
    let vol = core.volume();
    Ok(VaEstimate::new(
        VaMethod::BallVariance,
        a,
        d,
        stats.variance / vol,
        stats.std_error_variance / vol,
        r,
        replicates,
    ))
}

/// Bound `m_{2a} + m_a²` on the magnitude of the covariance integrand.
pub fn envelope_constant(a: f64, d: usize) -> Result<f64> {
    let m = ell_e_moment_closed_form(a, d)?;
    Ok(ell_e_moment_closed_form(2.0 * a, d)? + m * m)
}

/// Smallest `R` (on a 1e-3 grid) with
/// `c · exp(−κ_d R^d / 2^{d+1}) · κ_d R^d < 1e-3 · estimate`.
pub fn truncation_radius(c: f64, estimate: f64, d: usize) -> Result<f64> {
    if !(c > 0.0 && estimate > 0.0) {
        return Err(Error::InvalidParameter(
            "envelope constant and estimate must be positive".into(),
        ));
    }
    let kappa = unit_ball_volume(d)?;
    let target = 1e-3 * estimate;
    let df = d as f64;
    let f = |r: f64| integrand_envelope(r, c, d).map(|v| v * kappa * r.powf(df));
    // the envelope times the ball volume peaks at κ R^d = 2^{d+1}
    let mut r = (2f64.powf(df + 1.0) / kappa).powf(1.0 / df);
    while f(r)? >= target {
        r += 1e-3;
    }
    Ok(r)
}

/// Default truncation radius: envelope constant from [`envelope_constant`]
/// and the variance of `ℓ_e^a` as the scale of the estimate.
pub fn default_truncation_radius(a: f64, d: usize) -> Result<f64> {
    let m = ell_e_moment_closed_form(a, d)?;
    let scale = (ell_e_moment_closed_form(2.0 * a, d)? - m * m).max(1e-3);
    truncation_radius(envelope_constant(a, d)?, scale, d)
}

/// Centred integrand samples for one point-process replicate: the
/// realisation is drawn on `B(0, R + margin)` and `zs` are the probe points.
fn centred_products(
    a: f64,
    d: usize,
    e: &Direction,
    outer: &Window,
    zs: &[Vec<f64>],
    seed: u64,
    m: f64,
) -> Result<Vec<f64>> {
    let sample = sample_poisson(outer, 1.0, seed)?;
    let mut ins = Insertions::new(&sample, 2)?;
    ins.set(0, &vec![0.0; d]);
    let mut out = Vec::with_capacity(zs.len());
    for z in zs {
        ins.set(1, z);
        let l0 = directed_power(&ins.directed(e, 0, &[1]), a);
        let lz = directed_power(&ins.directed(e, 1, &[0]), a);
        out.push((l0 - m) * (lz - m));
    }
    Ok(out)
}

/// Monte Carlo of the covariance integral over `B(0, r_trunc)` plus the
/// closed-form terms. `r_trunc = None` uses [`default_truncation_radius`].
pub fn estimate_va_integral(
    r_trunc: Option<f64>,
    a: f64,
    d: usize,
    e: &Direction,
    z_samples: usize,
    replicates: usize,
    seed: u64,
) -> Result<VaEstimate> {
    check_exponent(a)?;
    check_dim(d, e.dim())?;
    check_replicates(replicates, 2)?;
    if z_samples == 0 {
        return Err(Error::InvalidParameter("z_samples must be positive".into()));
    }
    if replicates > u32::MAX as usize {
        return Err(Error::InvalidParameter("too many replicates".into()));
    }
    let r = match r_trunc {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(r) => return Err(Error::InvalidParameter(format!("truncation radius {r} must be positive"))),
        None => default_truncation_radius(a, d)?,
    };
    let c = envelope_constant(a, d)?;
    let m = ell_e_moment_closed_form(a, d)?;
    let constant = ell_e_moment_closed_form(2.0 * a, d)? - 2.0 * a / d as f64 * m * m;
    let mut est = if a == 0.0 {
        VaEstimate::new(VaMethod::CovarianceIntegral, a, d, constant, 0.0, r, replicates)
    } else {
        let ball = Window::new_ball(d, r)?;
        let outer = Window::new_ball(d, r + default_dilation_margin(d)?)?;
        let vol = ball.volume();
        let groups: Vec<f64> = (0..replicates as u32)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 1, i));
                let zs: Vec<Vec<f64>> = (0..z_samples)
                    .map(|_| {
                        let mut z = vec![0.0; d];
                        uniform_point(&ball, &mut rng, &mut z);
                        z
                    })
                    .collect();
                let p = centred_products(a, d, e, &outer, &zs, stream_seed(seed, 0, i), m)?;
                Ok(vol * p.iter().sum::<f64>() / z_samples as f64)
            })
            .collect::<Result<_>>()?;
        let (mean, var) = mean_var(&groups);
        VaEstimate::new(
            VaMethod::CovarianceIntegral,
            a,
            d,
            mean + constant,
            (var / replicates as f64).sqrt(),
            r,
            replicates,
        )
    };
    est.z_samples = Some(z_samples);
    est.envelope_constant = Some(c);
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandRow {
    pub radius: f64,
    /// Mean of the raw integrand `ℓ_0^a ℓ_z^a − m_a²` at this radius.
    pub value: f64,
    pub std_error: f64,
    pub envelope: f64,
}

/// Raw covariance integrand at `‖z‖ = radius`, averaged over directions of
/// `z` and point-process replicates, next to the envelope.
pub fn va_integrand_profile(
    radii: &[f64],
    a: f64,
    d: usize,
    e: &Direction,
    replicates: usize,
    seed: u64,
) -> Result<Vec<IntegrandRow>> {
    check_exponent(a)?;
    check_dim(d, e.dim())?;
    check_replicates(replicates, 2)?;
    let m = ell_e_moment_closed_form(a, d)?;
    let c = envelope_constant(a, d)?;
    let margin = default_dilation_margin(d)?;
    let sphere = Window::new_ball(d, 1.0)?;
    radii
        .iter()
        .enumerate()
        .map(|(k, &rad)| {
            if !(rad >= 0.0) {
                return Err(Error::InvalidParameter(format!("radius {rad} must be non-negative")));
            }
            let outer = Window::new_ball(d, rad + margin)?;
            let vals = replicate(stream_seed(seed, k as u32, 0), replicates, |s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0x5555_5555_5555_5555);
                let mut dirn = vec![0.0; d];
                uniform_point(&sphere, &mut rng, &mut dirn);
                let n = crate::geom::norm(&dirn);
                let z: Vec<f64> = dirn.iter().map(|v| v / n * rad).collect();
                let p = centred_products(a, d, e, &outer, &[z], s, 0.0)?;
                Ok(p[0] - m * m)
            })?;
            let stats = SummaryStats::from_values(&vals)?;
            Ok(IntegrandRow {
                radius: rad,
                value: stats.mean,
                std_error: stats.std_error_mean,
                envelope: integrand_envelope(rad, c, d)?,
            })
        })
        .collect()
}
