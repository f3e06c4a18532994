//! Seeded sampling of homogeneous Poisson point processes.
//!
//! Every sample is a pure function of `(window, intensity, margin, seed)`.
//! The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`; the
//! point count is drawn first, then the points one by one, so the output is
//! byte-identical across runs and thread counts.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{check_dim, unit_ball_volume, Window};

/// Largest admissible expected point count.
pub const MAX_MEAN_COUNT: f64 = 2_147_483_648.0;

/// Tail probability the default dilation margin is tuned for.
pub const DEFAULT_MARGIN_TAIL: f64 = 1e-6;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One realisation of a Poisson point process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    dim: usize,
    coords: Vec<f64>,
    window: Window,
    intensity: f64,
    seed: u64,
    dilation_margin: f64,
    duplicates_rejected: u64,
}

impl PointSample {
    /// Wraps an explicit point list. Every point must lie in `window`.
    pub fn from_points(window: Window, points: &[Vec<f64>]) -> Result<Self> {
        Self::from_points_dilated(window, 0.0, points)
    }

    /// Like [`from_points`](Self::from_points) but points may occupy the
    /// collar of width `margin` around `window`.
    pub fn from_points_dilated(window: Window, margin: f64, points: &[Vec<f64>]) -> Result<Self> {
        window.validate()?;
        let region = window.dilate(margin)?;
        let dim = window.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            check_dim(dim, p.len())?;
            if !region.contains_unchecked(p) {
                return Err(Error::PointOutsideWindow);
            }
            coords.extend_from_slice(p);
        }
        Ok(PointSample {
            dim,
            coords,
            window,
            intensity: 0.0,
            seed: 0,
            dilation_margin: margin,
            duplicates_rejected: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Flat coordinate buffer, `d` values per point.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The undilated (core) window.
    pub fn window(&self) -> &Window {
        &self.window
    }

    /// The region points were drawn from: the core window dilated by the margin.
    pub fn sampling_window(&self) -> Window {
        self.window.dilate(self.dilation_margin).expect("validated margin")
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dilation_margin(&self) -> f64 {
        self.dilation_margin
    }

    /// Number of exact-duplicate draws that were discarded and redrawn.
    pub fn duplicates_rejected(&self) -> u64 {
        self.duplicates_rejected
    }

    /// Copy with `z` appended as the last point. `z` must lie in the
    /// sampling window.
    pub fn with_point(&self, z: &[f64]) -> Result<Self> {
        check_dim(self.dim, z.len())?;
        if !self.sampling_window().contains_unchecked(z) {
            return Err(Error::PointOutsideWindow);
        }
        let mut out = self.clone();
        out.coords.extend_from_slice(z);
        Ok(out)
    }

    /// Copy with every coordinate (and the window) multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor {s} must be positive")));
        }
        let window = match &self.window {
            Window::Box { lower, upper } => Window::Box {
                lower: lower.iter().map(|v| v * s).collect(),
                upper: upper.iter().map(|v| v * s).collect(),
            },
            Window::Ball { dim, radius } => Window::Ball {
                dim: *dim,
                radius: radius * s,
            },
        };
        Ok(PointSample {
            dim: self.dim,
            coords: self.coords.iter().map(|v| v * s).collect(),
            window,
            intensity: self.intensity / s.powi(self.dim as i32),
            seed: self.seed,
            dilation_margin: self.dilation_margin * s,
            duplicates_rejected: self.duplicates_rejected,
        })
    }
}

/// Poisson process with intensity `t` on `w`.
pub fn sample_poisson(w: &Window, t: f64, seed: u64) -> Result<PointSample> {
    sample_poisson_dilated(w, t, 0.0, seed)
}

/// Poisson process with intensity `t` on `w` dilated by `margin`.
pub fn sample_poisson_dilated(w: &Window, t: f64, margin: f64, seed: u64) -> Result<PointSample> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidIntensity(t));
    }
    w.validate()?;
    let region = w.dilate(margin)?;
    let dim = w.dim();
    let mean = t * region.volume();
    if mean > MAX_MEAN_COUNT {
        return Err(Error::Resource(format!(
            "expected point count {mean:.3e} exceeds 2^31"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = if mean > 0.0 {
        let dist = Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?;
        let n: f64 = dist.sample(&mut rng);
        n as usize
    } else {
        0
    };

    let mut coords = Vec::with_capacity(count * dim);
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(count);
    let mut rejected = 0u64;
    let mut p = vec![0.0; dim];
    while coords.len() < count * dim {
        uniform_point(&region, &mut rng, &mut p);
        if !seen.insert(p.iter().map(|v| v.to_bits()).collect()) {
            rejected += 1;
            continue;
        }
        coords.extend_from_slice(&p);
    }

    Ok(PointSample {
        dim,
        coords,
        window: w.clone(),
        intensity: t,
        seed,
        dilation_margin: margin,
        duplicates_rejected: rejected,
    })
}

/// Draws one point uniformly from `w` into `out`.
pub fn uniform_point<R: Rng + ?Sized>(w: &Window, rng: &mut R, out: &mut [f64]) {
    match w {
        Window::Box { lower, upper } => loop {
            for (o, (lo, hi)) in out.iter_mut().zip(lower.iter().zip(upper)) {
                *o = lo + (hi - lo) * rng.random::<f64>();
            }
            if w.contains_unchecked(out) {
                return;
            }
        },
        Window::Ball { dim, radius } => loop {
            let mut sq = 0.0;
            for o in out.iter_mut() {
                let g: f64 = StandardNormal.sample(rng);
                *o = g;
                sq += g * g;
            }
            if sq == 0.0 {
                continue;
            }
            let r = radius * rng.random::<f64>().powf(1.0 / *dim as f64) / sq.sqrt();
            for o in out.iter_mut() {
                *o *= r;
            }
            // rounding can push a point a hair past the boundary
            if w.contains_unchecked(out) {
                return;
            }
        },
    }
}

/// Seed of replicate `index` under `master_seed`.
///
/// The mixer is `fmix(master_seed + (index + 1) * 0x9E3779B97F4A7C15)` with
/// wrapping arithmetic, where `fmix` is the SplitMix64 output function
/// (xor-shift 30, multiply 0xBF58476D1CE4E5B9, xor-shift 27, multiply
/// 0x94D049BB133111EB, xor-shift 31). Both steps are bijections of `u64`, so
/// the map is injective in `index` for a fixed master seed.
pub fn derive_replicate_seed(master_seed: u64, replicate_index: u64) -> u64 {
    let z = master_seed.wrapping_add(replicate_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    splitmix_finalize(z)
}

/// Seed for replicate `index` of an independent named stream.
///
/// Streams occupy disjoint index ranges `[stream << 32, (stream + 1) << 32)`.
pub fn stream_seed(master_seed: u64, stream: u32, index: u32) -> u64 {
    derive_replicate_seed(master_seed, ((stream as u64) << 32) | index as u64)
}

fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Smallest margin `m` with `exp(-κ_d m^d / 2) < tail`.
pub fn default_dilation_margin(d: usize) -> Result<f64> {
    margin_for_tail(d, DEFAULT_MARGIN_TAIL)
}

pub fn margin_for_tail(d: usize, tail: f64) -> Result<f64> {
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::InvalidParameter(format!("tail probability {tail} not in (0,1)")));
    }
    let kappa = unit_ball_volume(d)?;
    let m = (-2.0 * tail.ln() / kappa).powf(1.0 / d as f64);
    Ok(m * (1.0 + 1e-12))
}

/// Formats a float with 17 significant digits in locale-independent
/// scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the sample as CSV with header `x0,x1,...,x{d-1}`.
pub fn write_points_csv<W: Write>(sample: &PointSample, mut out: W) -> io::Result<()> {
    let header: Vec<String> = (0..sample.dim()).map(|i| format!("x{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in sample.points() {
        let row: Vec<String> = p.iter().map(|&v| format_f64(v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn count_stats(counts: &[f64]) -> (f64, f64) {
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_intensity_is_empty() {
        let w = Window::unit_cube(2).unwrap();
        assert!(sample_poisson(&w, 0.0, 1).unwrap().is_empty());
    }

    #[test]
    fn negative_intensity_rejected() {
        let w = Window::unit_cube(2).unwrap();
        assert_eq!(sample_poisson(&w, -1.0, 1), Err(Error::InvalidIntensity(-1.0)));
        assert!(sample_poisson(&w, f64::NAN, 1).is_err());
    }

    #[test]
    fn huge_mean_is_a_resource_error() {
        let w = Window::unit_cube(2).unwrap();
        let err = sample_poisson(&w, 3e9, 1).unwrap_err();
        assert!(err.is_resource());
    }

    #[test]
    fn box_counts_have_poisson_moments() {
        let w = Window::unit_cube(2).unwrap();
        let counts: Vec<f64> = (0..10_000)
            .map(|i| sample_poisson(&w, 500.0, derive_replicate_seed(17, i)).unwrap().len() as f64)
            .collect();
        let (mean, var) = count_stats(&counts);
        let se = (500.0f64 / 10_000.0).sqrt();
        assert!((mean - 500.0).abs() < 3.0 * se, "mean {mean}");
        let ratio = var / mean;
        assert!((0.95..=1.05).contains(&ratio), "dispersion {ratio}");
    }

    #[test]
    fn ball_counts_have_poisson_mean() {
        let w = Window::new_ball(2, 1.0).unwrap();
        let expected = 100.0 * PI;
        let counts: Vec<f64> = (0..10_000)
            .map(|i| sample_poisson(&w, 100.0, derive_replicate_seed(3, i)).unwrap().len() as f64)
            .collect();
        let (mean, _) = count_stats(&counts);
        assert!((mean - expected).abs() < 3.0 * (expected / 10_000.0).sqrt(), "mean {mean}");
    }

    #[test]
    fn dilated_box_counts() {
        let w = Window::unit_cube(2).unwrap();
        let t = 20.0;
        let counts: Vec<f64> = (0..4_000)
            .map(|i| {
                sample_poisson_dilated(&w, t, 1.0, derive_replicate_seed(8, i))
                    .unwrap()
                    .len() as f64
            })
            .collect();
        let (mean, _) = count_stats(&counts);
        let expected = 9.0 * t;
        assert!((mean - expected).abs() < 3.0 * (expected / 4_000.0).sqrt(), "mean {mean}");
    }

    #[test]
    fn zero_margin_matches_plain_sampling() {
        let w = Window::new_ball(2, 2.0).unwrap();
        assert_eq!(
            sample_poisson_dilated(&w, 5.0, 0.0, 42).unwrap(),
            sample_poisson(&w, 5.0, 42).unwrap()
        );
        let dilated = sample_poisson_dilated(&w, 1.0, 1.0, 42).unwrap();
        assert!((dilated.sampling_window().volume() - 9.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn points_stay_inside_the_region() {
        let w = Window::new_ball(3, 1.0).unwrap();
        let s = sample_poisson_dilated(&w, 50.0, 0.5, 9).unwrap();
        let region = s.sampling_window();
        assert!(s.points().all(|p| region.contains(p).unwrap()));
        let b = Window::new_box(vec![-0.2, -1.0], vec![0.3, 0.0]).unwrap();
        let s = sample_poisson(&b, 400.0, 9).unwrap();
        assert!(s.points().all(|p| b.contains(p).unwrap()));
    }

    #[test]
    fn sampling_is_deterministic() {
        let w = Window::unit_cube(3).unwrap();
        let a = sample_poisson(&w, 300.0, 77).unwrap();
        let b = sample_poisson(&w, 300.0, 77).unwrap();
        assert_eq!(a.coords().len(), b.coords().len());
        assert!(a.coords().iter().zip(b.coords()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, sample_poisson(&w, 300.0, 78).unwrap());
    }

    #[test]
    fn replicate_seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_replicate_seed(5, 9), derive_replicate_seed(5, 9));
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..1_000_000 {
            let s: u64 = rng.random();
            assert_ne!(derive_replicate_seed(s, 0), derive_replicate_seed(s, 1));
        }
        let seeds: HashSet<u64> = (0..100_000).map(|i| derive_replicate_seed(99, i)).collect();
        assert_eq!(seeds.len(), 100_000);
        assert_ne!(stream_seed(1, 0, 5), stream_seed(1, 1, 5));
    }

    #[test]
    fn disjoint_subbox_counts_uncorrelated() {
        let w = Window::unit_cube(2).unwrap();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for i in 0..10_000 {
            let s = sample_poisson(&w, 100.0, derive_replicate_seed(21, i)).unwrap();
            left.push(s.points().filter(|p| p[0] < -0.1).count() as f64);
            right.push(s.points().filter(|p| p[0] > 0.2).count() as f64);
        }
        let (ml, vl) = count_stats(&left);
        let (mr, vr) = count_stats(&right);
        let cov = left.iter().zip(&right).map(|(a, b)| (a - ml) * (b - mr)).sum::<f64>() / 9_999.0;
        let corr = cov / (vl * vr).sqrt();
        assert!(corr.abs() < 0.05, "correlation {corr}");
        // restriction property: region x0 < -0.1 has area 0.4
        assert!((ml - 40.0).abs() < 3.0 * (40.0f64 / 10_000.0).sqrt(), "sub-box mean {ml}");
    }

    #[test]
    fn default_margin_hits_tail_target() {
        for d in 1..=4 {
            let m = default_dilation_margin(d).unwrap();
            let kappa = unit_ball_volume(d).unwrap();
            let tail = (-kappa * m.powi(d as i32) / 2.0).exp();
            assert!(tail < DEFAULT_MARGIN_TAIL);
            assert!(tail > DEFAULT_MARGIN_TAIL * 0.999_999);
        }
    }

    #[test]
    fn csv_export_format() {
        let w = Window::unit_cube(2).unwrap();
        let s = PointSample::from_points(w, &[vec![0.25, -0.1], vec![0.0, 0.5]]).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x0,x1");
        assert_eq!(lines[1], "2.5000000000000000e-1,-1.0000000000000001e-1");
        assert_eq!(lines.len(), 3);
        let back: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, -0.1);
    }

    #[test]
    fn with_point_rejects_outside() {
        let w = Window::unit_cube(2).unwrap();
        let s = PointSample::from_points(w, &[]).unwrap();
        assert!(s.with_point(&[0.6, 0.0]).is_err());
        assert_eq!(s.with_point(&[0.1, 0.0]).unwrap().len(), 1);
    }
}
