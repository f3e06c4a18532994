//! Closed-form limits, Monte Carlo estimators and empirical checks.
//!
//! Replicates are keyed by [`derive_replicate_seed`](crate::pointprocess::derive_replicate_seed)
//! (or a named stream of it), run in parallel and collected in replicate
//! order before any reduction, so results do not depend on the number of
//! worker threads.

mod closed_form;
mod clt;
mod diffs;
mod mc;
mod normal;
mod record;
mod stats;
mod va;

pub use closed_form::*;
pub use clt::*;
pub use diffs::*;
pub use mc::{
    alpha_probe, alpha_probe_report, ell_e_center_lengths, ell_e_tail_check, estimate_rst_mean, estimate_rst_variance,
    inserted_radial_length, mecke_check, mecke_tail_check, rst_functional_sample, rst_tail_check, volume_ratio,
    AlphaProbeReport, MeckeReport, TailLawReport, TailRow, ALPHA_FLOOR, ALPHA_PROBE_FRACTIONS, MECKE_POINTS,
};
pub use normal::{erf, erfc, kolmogorov_distance, ks_distance_to, normal_cdf};
pub use record::EstimatorRecord;
pub use stats::{mean_var, ols_slope, z_score, SummaryStats, DEFAULT_BATCHES};
pub use va::*;
