use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::check_exponent;
use crate::geom::{gamma, unit_ball_volume, Window};

/// Volume-ratio constant of a window together with the window it was
/// probed on. The value is an empirical lower bound, not a certified one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBoundParams {
    pub alpha_w: f64,
    pub window: Window,
}

impl TailBoundParams {
    pub fn new(alpha_w: f64, window: Window) -> Result<Self> {
        if !(alpha_w > 0.0 && alpha_w <= 1.0) {
            return Err(Error::Domain(format!("alpha_W = {alpha_w} not in (0, 1]")));
        }
        Ok(TailBoundParams { alpha_w, window })
    }
}

fn check_dim(d: usize) -> Result<f64> {
    unit_ball_volume(d)
}

/// `E[ℓ_e(0, η + δ_0)^a] = (2/κ_d)^{a/d} Γ(1 + a/d)` for a unit-intensity
/// stationary process.
pub fn ell_e_moment_closed_form(a: f64, d: usize) -> Result<f64> {
    check_exponent(a)?;
    let kappa = check_dim(d)?;
    let r = a / d as f64;
    Ok((2.0 / kappa).powf(r) * gamma(1.0 + r)?)
}

/// Limit of `t^{a/d - 1} E[L_t^{(a)}]` on a window of volume `vol`.
pub fn expectation_limit(a: f64, d: usize, vol: f64) -> Result<f64> {
    if !(vol > 0.0 && vol.is_finite()) {
        return Err(Error::Domain(format!("volume {vol} must be positive")));
    }
    Ok(ell_e_moment_closed_form(a, d)? * vol)
}

/// `P(ℓ_e(0, η + δ_0) ≥ u) = exp(-κ_d u^d / 2)`.
pub fn ell_e_tail(u: f64, d: usize) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("tail argument {u} must be non-negative")));
    }
    let kappa = check_dim(d)?;
    Ok((-kappa * u.powi(d as i32) / 2.0).exp())
}

/// Dominating curve `exp(-t α_W κ_d u^d)` for the radial edge-length tail.
pub fn rst_tail_bound(u: f64, t: f64, params: &TailBoundParams, d: usize) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("tail argument {u} must be non-negative")));
    }
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Domain(format!("intensity {t} must be at least 1")));
    }
    if !(params.alpha_w > 0.0 && params.alpha_w <= 1.0) {
        return Err(Error::Domain(format!("alpha_W = {} not in (0, 1]", params.alpha_w)));
    }
    let kappa = check_dim(d)?;
    Ok((-t * params.alpha_w * kappa * u.powi(d as i32)).exp())
}

/// `c_a = Γ(1 + a/d) / (α_W κ_d)^{a/d}`, the constant in
/// `E[ℓ(x, η_t + δ_x)^a] ≤ c_a t^{-a/d}`.
pub fn rst_moment_constant(a: f64, params: &TailBoundParams, d: usize) -> Result<f64> {
    check_exponent(a)?;
    let kappa = check_dim(d)?;
    let r = a / d as f64;
    Ok(gamma(1.0 + r)? / (params.alpha_w * kappa).powf(r))
}

/// Curve `(2 + 2/α_W) exp(-t α_W κ_d s^d / 2^d)` bounding the probability
/// that the second-order difference at separation `s` is non-zero.
pub fn diff2_bound(s: f64, t: f64, alpha_w: f64, d: usize) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("separation {s} must be non-negative")));
    }
    let kappa = check_dim(d)?;
    let df = d as f64;
    Ok((2.0 + 2.0 / alpha_w) * (-t * alpha_w * kappa * s.powf(df) / 2f64.powf(df)).exp())
}

/// Dominating curve `C exp(-κ_d r^d / 2^{d+1})` for the covariance integrand.
pub fn integrand_envelope(r: f64, c: f64, d: usize) -> Result<f64> {
    let kappa = check_dim(d)?;
    let df = d as f64;
    Ok(c * (-kappa * r.powf(df) / 2f64.powf(df + 1.0)).exp())
}
