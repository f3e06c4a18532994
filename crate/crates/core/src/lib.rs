//! Radial spanning trees and directed spanning forests over Poisson point
//! processes, with edge-length functionals and Monte Carlo estimators for
//! their mean, variance and normal approximation.

pub mod error;
pub mod estimators;
pub mod functionals;
pub mod geom;
pub mod pointprocess;
pub mod spanning;

pub use error::{Error, Result};
pub use geom::{Direction, Window};
pub use pointprocess::PointSample;
