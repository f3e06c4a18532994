//! Geometric primitives: observation windows, unit-ball volumes, the Gamma
//! function and half-space membership.
//!
//! Points are plain `&[f64]` slices of length `d`. All routines here are pure.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Absolute tolerance used for unit-norm checks.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// The Gamma function for `x > 0`.
///
/// Positive integers up to 171 are evaluated exactly as factorials so that
/// `Γ(1) = 1` holds bit-for-bit; other arguments go through `statrs`.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma requires x > 0, got {x}")));
    }
    if x.fract() == 0.0 && x <= 171.0 {
        let n = x as u32;
        return Ok((1..n).fold(1.0, |acc, k| acc * k as f64));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// Volume κ_d of the closed unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    let half = d as f64 / 2.0;
    Ok(PI.powf(half) / gamma(half + 1.0)?)
}

/// Convex observation window containing the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Window {
    /// Axis-aligned box `[lower_i, upper_i]` per axis.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Closed ball of the given radius centred at the origin.
    Ball { dim: usize, radius: f64 },
}

impl Window {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let w = Window::Box { lower, upper };
        w.validate()?;
        Ok(w)
    }

    pub fn new_ball(dim: usize, radius: f64) -> Result<Self> {
        let w = Window::Ball { dim, radius };
        w.validate()?;
        Ok(w)
    }

    /// Unit-volume cube `[-1/2, 1/2]^d`.
    pub fn unit_cube(dim: usize) -> Result<Self> {
        Self::new_box(vec![-0.5; dim], vec![0.5; dim])
    }

    /// Checks the type invariants (origin inside, positive volume).
    pub fn validate(&self) -> Result<()> {
        match self {
            Window::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(Error::InvalidDimension(0));
                }
                if lower.len() != upper.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.len(),
                        got: upper.len(),
                    });
                }
                for (i, (&lo, &hi)) in lower.iter().zip(upper).enumerate() {
                    if !lo.is_finite() || !hi.is_finite() {
                        return Err(Error::InvalidWindow(format!("axis {i} has non-finite bounds")));
                    }
                    if !(hi > lo) {
                        return Err(Error::InvalidWindow(format!(
                            "axis {i}: upper {hi} must exceed lower {lo}"
                        )));
                    }
                    if lo > 0.0 || hi < 0.0 {
                        return Err(Error::InvalidWindow(format!(
                            "axis {i}: [{lo}, {hi}] does not contain the origin"
                        )));
                    }
                }
                Ok(())
            }
            Window::Ball { dim, radius } => {
                if *dim < 1 {
                    return Err(Error::InvalidDimension(*dim));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidWindow(format!("ball radius {radius} must be positive")));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Window::Box { lower, .. } => lower.len(),
            Window::Ball { dim, .. } => *dim,
        }
    }

    /// Lebesgue measure of the window.
    pub fn volume(&self) -> f64 {
        match self {
            Window::Box { lower, upper } => lower.iter().zip(upper).map(|(lo, hi)| hi - lo).product(),
            Window::Ball { dim, radius } => {
                unit_ball_volume(*dim).expect("validated dimension") * radius.powi(*dim as i32)
            }
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        match self {
            Window::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&lo, &hi))| lo <= v && v <= hi),
            Window::Ball { radius, .. } => norm(x) <= *radius,
        }
    }

    /// Minkowski dilation by a ball of radius `margin`.
    pub fn dilate(&self, margin: f64) -> Result<Self> {
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(Error::InvalidParameter(format!("dilation margin {margin} must be >= 0")));
        }
        Ok(match self {
            Window::Box { lower, upper } => Window::Box {
                lower: lower.iter().map(|v| v - margin).collect(),
                upper: upper.iter().map(|v| v + margin).collect(),
            },
            Window::Ball { dim, radius } => Window::Ball {
                dim: *dim,
                radius: radius + margin,
            },
        })
    }

    /// True when `inner` is geometrically contained in `self`.
    pub fn contains_window(&self, inner: &Window) -> bool {
        if self.dim() != inner.dim() {
            return false;
        }
        match (self, inner) {
            (Window::Box { lower, upper }, Window::Box { lower: l2, upper: u2 }) => lower
                .iter()
                .zip(upper)
                .zip(l2.iter().zip(u2))
                .all(|((lo, hi), (lo2, hi2))| lo <= lo2 && hi2 <= hi),
            (Window::Ball { radius, .. }, Window::Ball { radius: r2, .. }) => r2 <= radius,
            (Window::Box { lower, upper }, Window::Ball { radius, .. }) => lower
                .iter()
                .zip(upper)
                .all(|(lo, hi)| *lo <= -radius && *radius <= *hi),
            (Window::Ball { radius, .. }, Window::Box { lower, upper }) => {
                let far: f64 = lower
                    .iter()
                    .zip(upper)
                    .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
                    .sum();
                far.sqrt() <= *radius
            }
        }
    }

    /// Axis-aligned bounding box `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Window::Box { lower, upper } => (lower.clone(), upper.clone()),
            Window::Ball { dim, radius } => (vec![-radius; *dim], vec![*radius; *dim]),
        }
    }

    /// Largest distance between two points of the window.
    pub fn diameter(&self) -> f64 {
        match self {
            Window::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(lo, hi)| (hi - lo).powi(2))
                .sum::<f64>()
                .sqrt(),
            Window::Ball { radius, .. } => 2.0 * radius,
        }
    }
}

/// Unit vector fixing the orientation of a directed spanning forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Accepts a vector whose norm is 1 within [`UNIT_NORM_TOL`].
    pub fn new(e: Vec<f64>) -> Result<Self> {
        if e.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        let n = norm(&e);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidDirection(format!("norm {n} is not 1")));
        }
        Ok(Direction(e))
    }

    /// Normalises an arbitrary non-zero vector.
    pub fn normalized(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidDirection("cannot normalise a zero vector".into()));
        }
        Self::new(v.into_iter().map(|x| x / n).collect())
    }

    /// The `axis`-th standard basis vector, optionally negated.
    pub fn axis(dim: usize, axis: usize, negative: bool) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidDimension(dim));
        }
        if axis >= dim {
            return Err(Error::InvalidParameter(format!("axis {axis} >= dimension {dim}")));
        }
        let mut e = vec![0.0; dim];
        e[axis] = if negative { -1.0 } else { 1.0 };
        Ok(Direction(e))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Direction {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Direction::new(v)
    }
}

impl From<Direction> for Vec<f64> {
    fn from(d: Direction) -> Vec<f64> {
        d.0
    }
}

/// `⟨e, y - x⟩`, evaluated in axis order.
#[inline]
pub fn directed_offset(e: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..e.len() {
        s += e[i] * (y[i] - x[i]);
    }
    s
}

/// True iff `y` lies in the closed half-space `H_{x,e} = {y : ⟨e, y - x⟩ <= 0}`.
pub fn halfspace_contains(e: &Direction, x: &[f64], y: &[f64]) -> Result<bool> {
    check_dim(e.dim(), x.len())?;
    check_dim(e.dim(), y.len())?;
    Ok(directed_offset(e.as_slice(), x, y) <= 0.0)
}

#[inline]
pub fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        let t = x[i] - y[i];
        s += t * t;
    }
    s
}

#[inline]
pub fn sq_norm(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for &v in x {
        s += v * v;
    }
    s
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    sq_norm(x).sqrt()
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn unit_ball_volume_small_dims() {
        assert!((unit_ball_volume(1).unwrap() - 2.0).abs() < 1e-13);
        assert!((unit_ball_volume(2).unwrap() - PI).abs() < 1e-13);
        assert!((unit_ball_volume(3).unwrap() - 4.0 * PI / 3.0).abs() < 1e-13);
        assert_eq!(unit_ball_volume(0), Err(Error::InvalidDimension(0)));
    }

    #[test]
    fn unit_ball_volume_recursion() {
        for d in 2..=10usize {
            let lhs = unit_ball_volume(d).unwrap();
            let rhs = unit_ball_volume(d - 1).unwrap() * PI.sqrt() * gamma((d as f64 + 1.0) / 2.0).unwrap()
                / gamma(d as f64 / 2.0 + 1.0).unwrap();
            assert!(rel(lhs, rhs) <= 1e-10, "d={d}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn gamma_reference_values() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert_eq!(gamma(2.0).unwrap(), 1.0);
        assert_eq!(gamma(5.0).unwrap(), 24.0);
        assert!(rel(gamma(1.5).unwrap(), PI.sqrt() / 2.0) < 1e-13);
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-13);
        assert!(rel(gamma(0.1).unwrap(), 9.513_507_698_668_732) < 1e-12);
        assert!(rel(gamma(7.3).unwrap(), 1_271.423_633_663_91) < 1e-12);
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
    }

    #[test]
    fn gamma_recursion() {
        let mut x = 0.05;
        while x < 30.0 {
            let ours = gamma(x).unwrap();
            // Γ(x + 1) = xΓ(x)
            let next = gamma(x + 1.0).unwrap();
            assert!(rel(next, x * ours) < 1e-12, "x={x}: {next} vs {}", x * ours);
            x += 0.173;
        }
    }

    #[test]
    fn window_volumes() {
        let b = Window::new_box(vec![-0.5, -0.5], vec![0.5, 0.5]).unwrap();
        assert!((b.volume() - 1.0).abs() < 1e-15);
        assert!((Window::new_ball(2, 1.0).unwrap().volume() - PI).abs() < 1e-14);
        assert!((Window::new_ball(3, 2.0).unwrap().volume() - 32.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn window_rejects_bad_shapes() {
        // origin on a corner is allowed, origin outside is not
        assert!(Window::new_box(vec![0.0, 0.0], vec![1.0, 1.0]).is_ok());
        assert!(Window::new_box(vec![0.1, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Window::new_box(vec![-1.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(Window::new_box(vec![-1.0], vec![1.0, 1.0]).is_err());
        assert!(Window::new_ball(2, 0.0).is_err());
        assert!(Window::new_ball(0, 1.0).is_err());
    }

    #[test]
    fn window_membership() {
        let b = Window::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(b.contains(&[0.0, 0.0]).unwrap());
        assert!(b.contains(&[1.0, -1.0]).unwrap());
        let ball = Window::new_ball(2, 1.0).unwrap();
        assert!(ball.contains(&[1.0, 0.0]).unwrap());
        assert!(!ball.contains(&[1.0001, 0.0]).unwrap());
        assert!(ball.contains(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn ball_membership_matches_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ball = Window::new_ball(3, 1.3).unwrap();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.6..1.6)).collect();
            assert_eq!(ball.contains(&x).unwrap(), norm(&x) <= 1.3);
        }
    }

    #[test]
    fn halfspace_examples() {
        let e = Direction::new(vec![1.0, 0.0]).unwrap();
        assert!(halfspace_contains(&e, &[0.0, 0.0], &[-1.0, 0.0]).unwrap());
        assert!(halfspace_contains(&e, &[0.0, 0.0], &[0.0, 5.0]).unwrap());
        assert!(!halfspace_contains(&e, &[0.0, 0.0], &[0.1, 0.0]).unwrap());
        assert!(halfspace_contains(&e, &[0.0, 0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn halfspace_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut u = || rng.random_range(-1.0..1.0);
        for _ in 0..10_000 {
            let e = Direction::normalized(vec![u(), u()]).unwrap();
            // dyadic coordinates keep the translated differences exact
            let q = |v: f64| (v * 1024.0).round() / 1024.0;
            let x = [q(u()), q(u())];
            let y = [q(u()), q(u())];
            let s = [q(u()), q(u())];
            let xs = [x[0] + s[0], x[1] + s[1]];
            let ys = [y[0] + s[0], y[1] + s[1]];
            assert_eq!(
                halfspace_contains(&e, &x, &y).unwrap(),
                halfspace_contains(&e, &xs, &ys).unwrap()
            );
        }
    }

    #[test]
    fn direction_requires_unit_norm() {
        assert!(Direction::new(vec![1.0, 1.0]).is_err());
        assert!(Direction::new(vec![0.6, 0.8]).is_ok());
        assert!(Direction::normalized(vec![0.0, 0.0]).is_err());
        let d: Direction = serde_json::from_str("[0.0, -1.0]").unwrap();
        assert_eq!(d.as_slice(), &[0.0, -1.0]);
        assert!(serde_json::from_str::<Direction>("[2.0, 0.0]").is_err());
    }

    #[test]
    fn dilation_and_containment() {
        let core = Window::unit_cube(2).unwrap();
        let big = core.dilate(1.0).unwrap();
        assert!((big.volume() - 9.0).abs() < 1e-12);
        assert!(big.contains_window(&core));
        assert!(!core.contains_window(&big));
        let ball = Window::new_ball(2, 2.0).unwrap().dilate(1.0).unwrap();
        assert!((ball.volume() - 9.0 * PI).abs() < 1e-12);
    }
}
