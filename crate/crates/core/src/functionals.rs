//! Edge-length functionals and their first and second order difference
//! operators.
//!
//! `0^0` is taken to be 1, so the functional with exponent 0 counts points
//! (including directed-forest points without a parent).
//!
//! Difference operators are summed point by point: each point of the
//! enlarged sample contributes its own change in `ℓ^a`, in index order, with
//! the inserted points last. The incremental evaluation visits only points
//! whose parent can change; every other point contributes an exact zero, so
//! the result is bit-identical to rebuilding every graph from scratch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{check_dim, sq_norm, Direction, Window};
use crate::pointprocess::PointSample;
use crate::spanning::{
    build_dsf, build_rst, default_cell_size, grid_directed_with, grid_radial_with, Best, DirectedForest, GridIndex,
    RadialTree, Ranked,
};

/// Which graph a functional is evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphKind {
    Rst,
    Dsf { direction: Direction },
}

/// Exponent, graph and optional restriction window of a functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    pub a: f64,
    pub graph: GraphKind,
    /// Only points inside this window contribute. Required for the directed
    /// forest on a dilated sample; `None` sums over every point.
    pub core: Option<Window>,
}

impl FunctionalSpec {
    pub fn rst(a: f64) -> Result<Self> {
        check_exponent(a)?;
        Ok(FunctionalSpec {
            a,
            graph: GraphKind::Rst,
            core: None,
        })
    }

    pub fn dsf(a: f64, direction: Direction, core: Window) -> Result<Self> {
        check_exponent(a)?;
        Ok(FunctionalSpec {
            a,
            graph: GraphKind::Dsf { direction },
            core: Some(core),
        })
    }

    fn validate_for(&self, sample: &PointSample) -> Result<()> {
        check_exponent(self.a)?;
        if let GraphKind::Dsf { direction } = &self.graph {
            check_dim(sample.dim(), direction.dim())?;
        }
        if let Some(core) = &self.core {
            check_core(core, sample)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub value: f64,
    /// Number of points that contributed to the sum.
    pub point_count: usize,
    pub spec: FunctionalSpec,
}

pub(crate) fn check_exponent(a: f64) -> Result<()> {
    if a.is_finite() && a >= 0.0 {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent(a))
    }
}

fn check_core(core: &Window, sample: &PointSample) -> Result<()> {
    check_dim(sample.dim(), core.dim())?;
    if !sample.sampling_window().contains_window(core) {
        return Err(Error::InvalidWindow(
            "restriction window is not contained in the sampling window".into(),
        ));
    }
    Ok(())
}

/// `len^a` with `0^0 = 1`.
#[inline]
pub fn edge_power(len: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        len.powf(a)
    }
}

/// `Σ_x ℓ(x)^a` over every vertex of the radial tree.
pub fn eval_rst_functional(tree: &RadialTree, a: f64) -> Result<FunctionalValue> {
    check_exponent(a)?;
    let value = tree.edge_length.iter().map(|&l| edge_power(l, a)).sum();
    Ok(FunctionalValue {
        value,
        point_count: tree.len(),
        spec: FunctionalSpec::rst(a)?,
    })
}

/// `Σ_{x ∈ core} ℓ_e(x)^a` for a forest built on `sample`; parents may lie
/// outside `core`.
pub fn eval_dsf_functional(
    sample: &PointSample,
    forest: &DirectedForest,
    core: &Window,
    a: f64,
) -> Result<FunctionalValue> {
    check_exponent(a)?;
    check_core(core, sample)?;
    if forest.len() != sample.len() {
        return Err(Error::InvalidParameter(format!(
            "forest has {} vertices but the sample has {} points",
            forest.len(),
            sample.len()
        )));
    }
    let mut value = 0.0;
    let mut count = 0;
    for (x, &l) in sample.points().zip(&forest.edge_length) {
        if core.contains_unchecked(x) {
            value += edge_power(l, a);
            count += 1;
        }
    }
    Ok(FunctionalValue {
        value,
        point_count: count,
        spec: FunctionalSpec::dsf(a, forest.direction.clone(), core.clone())?,
    })
}

/// Evaluates `spec` on `sample`, building the graph.
pub fn eval_functional(spec: &FunctionalSpec, sample: &PointSample) -> Result<FunctionalValue> {
    spec.validate_for(sample)?;
    let lengths = match &spec.graph {
        GraphKind::Rst => build_rst(sample).edge_length,
        GraphKind::Dsf { direction } => build_dsf(sample, direction)?.edge_length,
    };
    let mut value = 0.0;
    let mut count = 0;
    for (x, &l) in sample.points().zip(&lengths) {
        if spec.core.as_ref().is_none_or(|w| w.contains_unchecked(x)) {
            value += edge_power(l, spec.a);
            count += 1;
        }
    }
    Ok(FunctionalValue {
        value,
        point_count: count,
        spec: spec.clone(),
    })
}

/// `F(η + δ_z) − F(η)`.
pub fn diff_first(spec: &FunctionalSpec, sample: &PointSample, z: &[f64]) -> Result<f64> {
    DiffContext::new(spec, sample)?.diff_first(z)
}

/// `F(η + δ_{z1} + δ_{z2}) − F(η + δ_{z1}) − F(η + δ_{z2}) + F(η)`.
pub fn diff_second(spec: &FunctionalSpec, sample: &PointSample, z1: &[f64], z2: &[f64]) -> Result<f64> {
    DiffContext::new(spec, sample)?.diff_second(z1, z2)
}

/// Base graph and spatial index for repeated difference-operator queries
/// against one sample.
pub struct DiffContext<'a> {
    spec: FunctionalSpec,
    sample: &'a PointSample,
    grid: GridIndex,
    sqnorm: Vec<f64>,
    base: Vec<Best>,
    /// Largest finite squared edge length.
    max_d2: f64,
    /// Directed-forest points without a parent.
    orphans: Vec<usize>,
    counted: Vec<bool>,
}

impl<'a> DiffContext<'a> {
    pub fn new(spec: &FunctionalSpec, sample: &'a PointSample) -> Result<Self> {
        spec.validate_for(sample)?;
        let cell = default_cell_size(sample);
        let grid = GridIndex::build(sample, cell)?;
        let ranked = Ranked::of(sample);
        let base: Vec<Best> = match &spec.graph {
            GraphKind::Rst => (0..sample.len()).map(|x| grid_radial_with(&ranked, &grid, x, &[])).collect(),
            GraphKind::Dsf { direction } => (0..sample.len())
                .map(|x| grid_directed_with(&ranked, &grid, direction.as_slice(), x, &[]))
                .collect(),
        };
        let max_d2 = base
            .iter()
            .filter(|b| b.d2.is_finite())
            .fold(0.0f64, |m, b| m.max(b.d2));
        let orphans = match spec.graph {
            GraphKind::Dsf { .. } => (0..base.len()).filter(|&i| base[i].idx.is_none()).collect(),
            GraphKind::Rst => Vec::new(),
        };
        let counted = sample
            .points()
            .map(|x| spec.core.as_ref().is_none_or(|w| w.contains_unchecked(x)))
            .collect();
        Ok(DiffContext {
            spec: spec.clone(),
            sample,
            grid,
            sqnorm: ranked.sqnorms().to_vec(),
            base,
            max_d2,
            orphans,
            counted,
        })
    }

    pub fn spec(&self) -> &FunctionalSpec {
        &self.spec
    }

    /// Functional value of the base sample, summed in index order.
    pub fn value(&self) -> f64 {
        let mut v = 0.0;
        for (b, &c) in self.base.iter().zip(&self.counted) {
            if c {
                v += self.power(b);
            }
        }
        v
    }

    #[inline]
    fn power(&self, b: &Best) -> f64 {
        let len = match (&self.spec.graph, b.idx) {
            (GraphKind::Dsf { .. }, None) => 0.0,
            _ => b.d2.sqrt(),
        };
        edge_power(len, self.spec.a)
    }

    fn counts(&self, z: &[f64]) -> bool {
        self.spec.core.as_ref().is_none_or(|w| w.contains_unchecked(z))
    }

    fn check_point(&self, z: &[f64]) -> Result<()> {
        check_dim(self.sample.dim(), z.len())?;
        if !self.sample.sampling_window().contains_unchecked(z) {
            return Err(Error::PointOutsideWindow);
        }
        Ok(())
    }

    fn extended(&self, extra: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
        let mut coords = Vec::with_capacity(self.sample.coords().len() + extra.len() * self.sample.dim());
        coords.extend_from_slice(self.sample.coords());
        let mut sq = Vec::with_capacity(self.sqnorm.len() + extra.len());
        sq.extend_from_slice(&self.sqnorm);
        for z in extra {
            coords.extend_from_slice(z);
            sq.push(sq_norm(z));
        }
        (coords, sq)
    }

    /// Base points whose parent may change when point `zi` is inserted, in
    /// increasing index order.
    fn affected(&self, ranked: &Ranked<'_>, zi: usize) -> Vec<usize> {
        let z = ranked.point(zi);
        let mut out = Vec::new();
        if self.max_d2 > 0.0 {
            let radius = self.max_d2.sqrt() * (1.0 + 1e-9);
            self.grid.for_each_within(z, radius, |x| {
                if self.gains(ranked, x, zi) {
                    out.push(x);
                }
            });
        }
        for &x in &self.orphans {
            if self.gains(ranked, x, zi) {
                out.push(x);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Best candidate of base point `x` after offering inserted points.
    #[inline]
    fn offer(&self, ranked: &Ranked<'_>, x: usize, zs: &[usize]) -> Best {
        let mut best = self.base[x];
        for &zi in zs {
            match &self.spec.graph {
                GraphKind::Rst => ranked.offer_radial(x, zi, &mut best),
                GraphKind::Dsf { direction } => ranked.offer_directed(direction.as_slice(), x, zi, &mut best),
            }
        }
        best
    }

    #[inline]
    fn gains(&self, ranked: &Ranked<'_>, x: usize, zi: usize) -> bool {
        self.offer(ranked, x, &[zi]).idx == Some(zi)
    }

    /// Best candidate of an inserted point, searching the base sample plus
    /// the other inserted points listed in `others`.
    fn search(&self, ranked: &Ranked<'_>, zi: usize, others: &[usize]) -> Best {
        match &self.spec.graph {
            GraphKind::Rst => grid_radial_with(ranked, &self.grid, zi, others),
            GraphKind::Dsf { direction } => grid_directed_with(ranked, &self.grid, direction.as_slice(), zi, others),
        }
    }

    pub fn diff_first(&self, z: &[f64]) -> Result<f64> {
        self.check_point(z)?;
        let n = self.sample.len();
        let (coords, sq) = self.extended(&[z]);
        let ranked = Ranked::with_sqnorm(self.sample.dim(), &coords, &sq);
        let mut total = 0.0;
        for x in self.affected(&ranked, n) {
            if self.counted[x] {
                let new = self.offer(&ranked, x, &[n]);
                total += self.power(&new) - self.power(&self.base[x]);
            }
        }
        if self.counts(z) {
            total += self.power(&self.search(&ranked, n, &[]));
        }
        Ok(total)
    }

    pub fn diff_second(&self, z1: &[f64], z2: &[f64]) -> Result<f64> {
        self.check_point(z1)?;
        self.check_point(z2)?;
        let n = self.sample.len();
        let (i1, i2) = (n, n + 1);
        let (coords, sq) = self.extended(&[z1, z2]);
        let ranked = Ranked::with_sqnorm(self.sample.dim(), &coords, &sq);
        let mut xs = self.affected(&ranked, i1);
        xs.extend(self.affected(&ranked, i2));
        xs.sort_unstable();
        xs.dedup();
        let mut total = 0.0;
        for x in xs {
            if !self.counted[x] {
                continue;
            }
            let both = self.power(&self.offer(&ranked, x, &[i1, i2]));
            let one = self.power(&self.offer(&ranked, x, &[i1]));
            let two = self.power(&self.offer(&ranked, x, &[i2]));
            let none = self.power(&self.base[x]);
            total += (both + none) - (one + two);
        }
        let t1 = if self.counts(z1) {
            self.power(&self.search(&ranked, i1, &[i2])) - self.power(&self.search(&ranked, i1, &[]))
        } else {
            0.0
        };
        let t2 = if self.counts(z2) {
            self.power(&self.search(&ranked, i2, &[i1])) - self.power(&self.search(&ranked, i2, &[]))
        } else {
            0.0
        };
        Ok(total + (t1 + t2))
    }
}

/// Per-point powers `ℓ(x)^a` (zero for points outside the restriction).
fn point_powers(spec: &FunctionalSpec, sample: &PointSample) -> Result<Vec<f64>> {
    let lengths = match &spec.graph {
        GraphKind::Rst => build_rst(sample).edge_length,
        GraphKind::Dsf { direction } => build_dsf(sample, direction)?.edge_length,
    };
    Ok(sample
        .points()
        .zip(lengths)
        .map(|(x, l)| {
            if spec.core.as_ref().is_none_or(|w| w.contains_unchecked(x)) {
                edge_power(l, spec.a)
            } else {
                0.0
            }
        })
        .collect())
}

/// [`diff_first`] by rebuilding both graphs from scratch.
pub fn diff_first_recompute(spec: &FunctionalSpec, sample: &PointSample, z: &[f64]) -> Result<f64> {
    spec.validate_for(sample)?;
    let with = sample.with_point(z)?;
    let old = point_powers(spec, sample)?;
    let new = point_powers(spec, &with)?;
    let n = sample.len();
    let mut total = 0.0;
    for x in 0..n {
        total += new[x] - old[x];
    }
    Ok(total + new[n])
}

/// [`diff_second`] by rebuilding all four graphs from scratch.
pub fn diff_second_recompute(spec: &FunctionalSpec, sample: &PointSample, z1: &[f64], z2: &[f64]) -> Result<f64> {
    spec.validate_for(sample)?;
    let s1 = sample.with_point(z1)?;
    let s2 = sample.with_point(z2)?;
    let s12 = s1.with_point(z2)?;
    let none = point_powers(spec, sample)?;
    let one = point_powers(spec, &s1)?;
    let two = point_powers(spec, &s2)?;
    let both = point_powers(spec, &s12)?;
    let n = sample.len();
    let mut total = 0.0;
    for x in 0..n {
        total += (both[x] + none[x]) - (one[x] + two[x]);
    }
    let t1 = both[n] - one[n];
    let t2 = both[n + 1] - two[n];
    Ok(total + (t1 + t2))
}
