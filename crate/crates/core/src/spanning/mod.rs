//! Radial spanning tree and directed spanning forest construction.
//!
//! Candidates are ranked by squared Euclidean distance to the query point.
//! Equidistant candidates are ordered by squared norm, then lexicographically
//! by coordinates, then by index; the origin (root of the radial tree) wins
//! every tie. A sample point `y` is a radial candidate of `x` when
//! `(‖y‖², y, index)` precedes `(‖x‖², x, index)` in the same order, which
//! admits equal-norm candidates while keeping the tree acyclic.

mod grid;

use std::borrow::Cow;
use std::cmp::Ordering;
use std::io::{self, Write};

use rayon::prelude::*;

pub use grid::{grid_build, grid_shell_candidates, GridIndex};

use crate::error::{Error, Result};
use crate::geom::{directed_offset, sq_dist, sq_norm, Direction};
use crate::pointprocess::{format_f64, PointSample};

/// Parent of a radial spanning tree vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadialParent {
    Root,
    Node(usize),
}

/// Radial spanning tree rooted at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTree {
    pub parent: Vec<RadialParent>,
    pub edge_length: Vec<f64>,
    pub(crate) sq_length: Vec<f64>,
}

/// Directed spanning forest; `None` marks a point with an empty half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedForest {
    pub direction: Direction,
    pub parent: Vec<Option<usize>>,
    pub edge_length: Vec<f64>,
    pub(crate) sq_length: Vec<f64>,
}

impl RadialTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn edge_rows(&self) -> impl Iterator<Item = EdgeRow> + '_ {
        self.parent.iter().zip(&self.edge_length).enumerate().map(|(i, (p, &len))| match *p {
            RadialParent::Root => EdgeRow::new(i, EdgeKind::Root, None, len),
            RadialParent::Node(j) => EdgeRow::new(i, EdgeKind::Node, Some(j), len),
        })
    }
}

impl DirectedForest {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn edge_rows(&self) -> impl Iterator<Item = EdgeRow> + '_ {
        self.parent.iter().zip(&self.edge_length).enumerate().map(|(i, (p, &len))| match *p {
            None => EdgeRow::new(i, EdgeKind::None, None, len),
            Some(j) => EdgeRow::new(i, EdgeKind::Node, Some(j), len),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Root,
    Node,
    None,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Root => "ROOT",
            EdgeKind::Node => "NODE",
            EdgeKind::None => "NONE",
        }
    }
}

/// One line of the edge-list export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRow {
    pub child: usize,
    pub kind: EdgeKind,
    /// Parent index, or -1 for `ROOT` / `NONE`.
    pub parent: i64,
    pub length: f64,
}

impl EdgeRow {
    fn new(child: usize, kind: EdgeKind, parent: Option<usize>, length: f64) -> Self {
        EdgeRow {
            child,
            kind,
            parent: parent.map_or(-1, |p| p as i64),
            length,
        }
    }
}

/// Writes `child_index,parent_index,parent_kind,length` rows.
pub fn write_edges_csv<W: Write, I: IntoIterator<Item = EdgeRow>>(rows: I, mut out: W) -> io::Result<()> {
    writeln!(out, "child_index,parent_index,parent_kind,length")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.child, r.parent, r.kind.as_str(), format_f64(r.length))?;
    }
    Ok(())
}

/// Point coordinates with cached squared norms and the ranking rules.
pub(crate) struct Ranked<'a> {
    dim: usize,
    coords: &'a [f64],
    sqnorm: Cow<'a, [f64]>,
}

/// Best candidate so far. `idx == None` is the origin (radial) or "nothing
/// found yet" (directed, with infinite distance).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Best {
    pub d2: f64,
    pub idx: Option<usize>,
}

impl<'a> Ranked<'a> {
    pub fn new(dim: usize, coords: &'a [f64]) -> Self {
        let sqnorm = coords.chunks_exact(dim).map(sq_norm).collect();
        Ranked {
            dim,
            coords,
            sqnorm: Cow::Owned(sqnorm),
        }
    }

    /// Reuses precomputed squared norms (one per point of `coords`).
    pub fn with_sqnorm(dim: usize, coords: &'a [f64], sqnorm: &'a [f64]) -> Self {
        debug_assert_eq!(coords.len(), dim * sqnorm.len());
        Ranked {
            dim,
            coords,
            sqnorm: Cow::Borrowed(sqnorm),
        }
    }

    pub fn sqnorms(&self) -> &[f64] {
        &self.sqnorm
    }

    pub fn of(sample: &'a PointSample) -> Self {
        Self::new(sample.dim(), sample.coords())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.sqnorm.len()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &'a [f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Total order on sample points: squared norm, coordinates, index.
    #[inline]
    pub fn key_cmp(&self, i: usize, j: usize) -> Ordering {
        self.sqnorm[i]
            .total_cmp(&self.sqnorm[j])
            .then_with(|| {
                let (a, b) = (self.point(i), self.point(j));
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
            .then(i.cmp(&j))
    }

    /// True when `y` may serve as the radial parent of `x`.
    #[inline]
    pub fn radial_admissible(&self, x: usize, y: usize) -> bool {
        self.key_cmp(y, x) == Ordering::Less
    }

    /// True when candidate `y` at squared distance `d2` beats `best`.
    #[inline]
    pub fn improves(&self, d2: f64, y: usize, best: &Best) -> bool {
        match d2.partial_cmp(&best.d2) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => match best.idx {
                None => false,
                Some(b) => self.key_cmp(y, b) == Ordering::Less,
            },
            _ => false,
        }
    }

    /// Initial best for a radial query: the origin.
    #[inline]
    pub fn radial_start(&self, x: usize) -> Best {
        Best {
            d2: self.sqnorm[x],
            idx: None,
        }
    }

    #[inline]
    pub fn offer_radial(&self, x: usize, y: usize, best: &mut Best) {
        if y == x || !self.radial_admissible(x, y) {
            return;
        }
        let d2 = sq_dist(self.point(x), self.point(y));
        if self.improves(d2, y, best) {
            *best = Best { d2, idx: Some(y) };
        }
    }

    #[inline]
    pub fn offer_directed(&self, e: &[f64], x: usize, y: usize, best: &mut Best) {
        if y == x || directed_offset(e, self.point(x), self.point(y)) > 0.0 {
            return;
        }
        let d2 = sq_dist(self.point(x), self.point(y));
        if self.improves(d2, y, best) {
            *best = Best { d2, idx: Some(y) };
        }
    }
}

/// Squared-distance slack for shell termination (rounding in cell bounds).
const SHELL_SLACK: f64 = 1e-9;

/// Radial parent of point `x` by expanding-shell search on `grid`.
pub(crate) fn grid_radial(ranked: &Ranked<'_>, grid: &GridIndex, x: usize) -> Best {
    grid_radial_with(ranked, grid, x, &[])
}

/// As [`grid_radial`], also offering points `extra` that are not indexed
/// by `grid`.
pub(crate) fn grid_radial_with(ranked: &Ranked<'_>, grid: &GridIndex, x: usize, extra: &[usize]) -> Best {
    let p = ranked.point(x);
    let mut best = ranked.radial_start(x);
    for &y in extra {
        ranked.offer_radial(x, y, &mut best);
    }
    let center = grid.cell_of(p);
    let max_k = grid.max_shell(&center);
    for k in 0..=max_k {
        if k > 0 {
            let b = grid.shell_lower_bound(p, &center, k);
            if b * b > best.d2 * (1.0 + SHELL_SLACK) {
                break;
            }
        }
        grid.for_each_shell_cell(&center, k, |c, _| {
            for &y in grid.bucket(c) {
                ranked.offer_radial(x, y as usize, &mut best);
            }
        });
    }
    best
}

/// Directed parent of point `x` by expanding-shell search on `grid`; cells
/// lying strictly outside the half-space are skipped.
pub(crate) fn grid_directed(ranked: &Ranked<'_>, grid: &GridIndex, e: &[f64], x: usize) -> Best {
    grid_directed_with(ranked, grid, e, x, &[])
}

pub(crate) fn grid_directed_with(ranked: &Ranked<'_>, grid: &GridIndex, e: &[f64], x: usize, extra: &[usize]) -> Best {
    let p = ranked.point(x);
    let mut best = Best {
        d2: f64::INFINITY,
        idx: None,
    };
    for &y in extra {
        ranked.offer_directed(e, x, y, &mut best);
    }
    let center = grid.cell_of(p);
    let max_k = grid.max_shell(&center);
    let cell = grid.cell_size();
    let px: f64 = e.iter().zip(p).map(|(a, b)| a * b).sum();
    let scale: f64 = p.iter().fold(cell, |m, v| m.max(v.abs()));
    let slack = 1e-9 * scale * e.len() as f64;
    for k in 0..=max_k {
        if k > 0 && best.idx.is_some() {
            let b = grid.shell_lower_bound(p, &center, k);
            if b * b > best.d2 * (1.0 + SHELL_SLACK) {
                break;
            }
        }
        grid.for_each_shell_cell(&center, k, |c, cc| {
            // smallest ⟨e, y⟩ over the cell box
            let mut lo = 0.0;
            for i in 0..e.len() {
                let a = grid.cell_lower(cc, i);
                lo += e[i] * if e[i] > 0.0 { a } else { a + cell };
            }
            if lo - px > slack {
                return;
            }
            for &y in grid.bucket(c) {
                ranked.offer_directed(e, x, y as usize, &mut best);
            }
        });
    }
    best
}

/// Default grid cell: the mean spacing `(|region| / n)^(1/d)`, which equals
/// `t^(-1/d)` for a Poisson sample of intensity `t`.
pub fn default_cell_size(sample: &PointSample) -> f64 {
    let d = sample.dim() as f64;
    let spacing = if sample.intensity() > 0.0 {
        sample.intensity().powf(-1.0 / d)
    } else if !sample.is_empty() {
        (sample.sampling_window().volume() / sample.len() as f64).powf(1.0 / d)
    } else {
        1.0
    };
    if spacing.is_finite() && spacing > 0.0 {
        spacing
    } else {
        1.0
    }
}

fn check_index(sample: &PointSample, x: usize) -> Result<()> {
    if x >= sample.len() {
        Err(Error::IndexOutOfRange {
            index: x,
            len: sample.len(),
        })
    } else {
        Ok(())
    }
}

fn to_radial(best: Best) -> (RadialParent, f64) {
    let parent = best.idx.map_or(RadialParent::Root, RadialParent::Node);
    (parent, best.d2.sqrt())
}

fn to_directed(best: Best) -> (Option<usize>, f64) {
    match best.idx {
        Some(j) => (Some(j), best.d2.sqrt()),
        None => (None, 0.0),
    }
}

/// Radial nearest neighbour of point `x_index` by linear scan.
pub fn radial_parent(x_index: usize, sample: &PointSample) -> Result<(RadialParent, f64)> {
    check_index(sample, x_index)?;
    let ranked = Ranked::of(sample);
    let mut best = ranked.radial_start(x_index);
    for y in 0..ranked.len() {
        ranked.offer_radial(x_index, y, &mut best);
    }
    Ok(to_radial(best))
}

/// Nearest point of the closed half-space `H_{x,e}` other than `x`, by
/// linear scan. Returns `(None, 0)` when the half-space holds no other point.
pub fn directed_parent(x_index: usize, sample: &PointSample, e: &Direction) -> Result<(Option<usize>, f64)> {
    check_index(sample, x_index)?;
    crate::geom::check_dim(sample.dim(), e.dim())?;
    let ranked = Ranked::of(sample);
    let mut best = Best {
        d2: f64::INFINITY,
        idx: None,
    };
    for y in 0..ranked.len() {
        ranked.offer_directed(e.as_slice(), x_index, y, &mut best);
    }
    Ok(to_directed(best))
}

const PAR_MIN_LEN: usize = 512;

/// Radial spanning tree with the default grid cell.
pub fn build_rst(sample: &PointSample) -> RadialTree {
    build_rst_with_cell(sample, default_cell_size(sample)).expect("default cell is positive")
}

pub fn build_rst_with_cell(sample: &PointSample, cell: f64) -> Result<RadialTree> {
    let grid = GridIndex::build(sample, cell)?;
    Ok(build_rst_on(sample, &grid))
}

pub(crate) fn build_rst_on(sample: &PointSample, grid: &GridIndex) -> RadialTree {
    let ranked = Ranked::of(sample);
    let best: Vec<Best> = (0..sample.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|x| grid_radial(&ranked, grid, x))
        .collect();
    RadialTree {
        parent: best.iter().map(|b| to_radial(*b).0).collect(),
        edge_length: best.iter().map(|b| b.d2.sqrt()).collect(),
        sq_length: best.iter().map(|b| b.d2).collect(),
    }
}

/// Directed spanning forest with the default grid cell.
pub fn build_dsf(sample: &PointSample, e: &Direction) -> Result<DirectedForest> {
    build_dsf_with_cell(sample, e, default_cell_size(sample))
}

pub fn build_dsf_with_cell(sample: &PointSample, e: &Direction, cell: f64) -> Result<DirectedForest> {
    crate::geom::check_dim(sample.dim(), e.dim())?;
    let grid = GridIndex::build(sample, cell)?;
    Ok(build_dsf_on(sample, e, &grid))
}

pub(crate) fn build_dsf_on(sample: &PointSample, e: &Direction, grid: &GridIndex) -> DirectedForest {
    let ranked = Ranked::of(sample);
    let best: Vec<Best> = (0..sample.len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|x| grid_directed(&ranked, grid, e.as_slice(), x))
        .collect();
    forest_from(e, &best)
}

pub(crate) fn forest_from(e: &Direction, best: &[Best]) -> DirectedForest {
    DirectedForest {
        direction: e.clone(),
        parent: best.iter().map(|b| b.idx).collect(),
        edge_length: best.iter().map(|b| to_directed(*b).1).collect(),
        sq_length: best.iter().map(|b| if b.idx.is_some() { b.d2 } else { 0.0 }).collect(),
    }
}

/// A sample with a few extra slots appended for query points that are not
/// indexed by the grid. Slot `k` has point index `len + k`.
pub(crate) struct Insertions<'s> {
    sample: &'s PointSample,
    grid: GridIndex,
    coords: Vec<f64>,
    sqnorm: Vec<f64>,
}

impl<'s> Insertions<'s> {
    pub fn new(sample: &'s PointSample, slots: usize) -> Result<Self> {
        let grid = GridIndex::build(sample, default_cell_size(sample))?;
        let d = sample.dim();
        let mut coords = sample.coords().to_vec();
        coords.resize(coords.len() + slots * d, 0.0);
        let mut sqnorm: Vec<f64> = sample.points().map(sq_norm).collect();
        sqnorm.resize(sqnorm.len() + slots, 0.0);
        Ok(Insertions {
            sample,
            grid,
            coords,
            sqnorm,
        })
    }

    #[inline]
    pub fn index(&self, slot: usize) -> usize {
        self.sample.len() + slot
    }

    pub fn set(&mut self, slot: usize, p: &[f64]) {
        let d = self.sample.dim();
        let i = self.index(slot);
        self.coords[i * d..(i + 1) * d].copy_from_slice(p);
        self.sqnorm[i] = sq_norm(p);
    }

    fn ranked(&self) -> Ranked<'_> {
        Ranked::with_sqnorm(self.sample.dim(), &self.coords, &self.sqnorm)
    }

    /// Radial best of slot `slot` among the sample and the slots `others`.
    pub fn radial(&self, slot: usize, others: &[usize]) -> Best {
        let extra: Vec<usize> = others.iter().map(|&k| self.index(k)).collect();
        grid_radial_with(&self.ranked(), &self.grid, self.index(slot), &extra)
    }

    /// Directed best of slot `slot` among the sample and the slots `others`.
    pub fn directed(&self, e: &Direction, slot: usize, others: &[usize]) -> Best {
        let extra: Vec<usize> = others.iter().map(|&k| self.index(k)).collect();
        grid_directed_with(&self.ranked(), &self.grid, e.as_slice(), self.index(slot), &extra)
    }

    /// Directed best of sample point `x` (the slots are ignored).
    pub fn directed_of_point(&self, e: &Direction, x: usize) -> Best {
        grid_directed_with(&self.ranked(), &self.grid, e.as_slice(), x, &[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Window;
    use crate::pointprocess::{derive_replicate_seed, sample_poisson};

    fn unit() -> Window {
        Window::unit_cube(2).unwrap()
    }

    fn sample(pts: &[[f64; 2]]) -> PointSample {
        let v: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        PointSample::from_points(Window::new_box(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(), &v).unwrap()
    }

    #[test]
    fn radial_parent_examples() {
        let s = sample(&[[0.5, 0.0]]);
        assert_eq!(radial_parent(0, &s).unwrap(), (RadialParent::Root, 0.5));

        let s = sample(&[[0.5, 0.0], [0.6, 0.0]]);
        let (p, len) = radial_parent(1, &s).unwrap();
        assert_eq!(p, RadialParent::Node(0));
        assert!((len - 0.1).abs() < 1e-15);

        let s = sample(&[[0.3, 0.4], [0.0, 0.45]]);
        let (p, len) = radial_parent(0, &s).unwrap();
        assert_eq!(p, RadialParent::Node(1));
        assert!((len - 0.0925f64.sqrt()).abs() < 1e-15);
        assert!((len - 0.30414).abs() < 1e-5);

        assert!(matches!(radial_parent(2, &s), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn directed_parent_examples() {
        let e = Direction::new(vec![1.0, 0.0]).unwrap();
        let s = sample(&[[0.0, 0.0], [-1.0, 0.0], [0.5, 0.0]]);
        assert_eq!(directed_parent(0, &s, &e).unwrap(), (Some(1), 1.0));

        let s = sample(&[[0.0, 0.0]]);
        assert_eq!(directed_parent(0, &s, &e).unwrap(), (None, 0.0));

        let e = Direction::new(vec![0.0, -1.0]).unwrap();
        let s = sample(&[[0.0, 0.0], [0.2, 0.1]]);
        let (p, len) = directed_parent(0, &s, &e).unwrap();
        assert_eq!(p, Some(1));
        assert!((len - 0.05f64.sqrt()).abs() < 1e-15);
        assert!((len - 0.22361).abs() < 1e-5);
    }

    #[test]
    fn empty_and_single() {
        let s = sample(&[]);
        assert!(build_rst(&s).is_empty());
        let e = Direction::axis(2, 0, false).unwrap();
        assert!(build_dsf(&s, &e).unwrap().is_empty());

        let s = sample(&[[0.3, -0.4]]);
        let t = build_rst(&s);
        assert_eq!(t.parent, vec![RadialParent::Root]);
        assert!((t.edge_length[0] - 0.5).abs() < 1e-15);
        let f = build_dsf(&s, &e).unwrap();
        assert_eq!(f.parent, vec![None]);
        assert_eq!(f.edge_length, vec![0.0]);
    }

    #[test]
    fn equal_norm_points_do_not_form_cycles() {
        // four points on a circle, each equidistant to two neighbours
        let s = sample(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]);
        let t = build_rst(&s);
        for start in 0..4 {
            let mut cur = RadialParent::Node(start);
            let mut steps = 0;
            while let RadialParent::Node(i) = cur {
                cur = t.parent[i];
                steps += 1;
                assert!(steps <= 4, "cycle through {start}");
            }
        }
        for i in 0..4 {
            assert_eq!(t.parent[i], radial_parent(i, &s).unwrap().0);
        }
    }

    #[test]
    fn ties_prefer_smaller_norm() {
        // (1,0) is equidistant (1.0) from (0,0.0)... use symmetric pair around x
        let s = sample(&[[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]);
        // (1,0) and (0,1) are both at distance 1 from (1,1); (0.5,0.5) is nearer
        assert_eq!(radial_parent(0, &s).unwrap().0, RadialParent::Node(3));
        let s = sample(&[[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        // equal distance and equal norm: lexicographically smaller (0,1) wins
        assert_eq!(radial_parent(0, &s).unwrap().0, RadialParent::Node(2));
    }

    #[test]
    fn grid_matches_linear_scan_for_each_point() {
        let w = unit();
        let e = Direction::normalized(vec![0.3, -0.8]).unwrap();
        for i in 0..20 {
            let s = sample_poisson(&w, 150.0, derive_replicate_seed(4, i)).unwrap();
            let t = build_rst(&s);
            let f = build_dsf(&s, &e).unwrap();
            for x in 0..s.len() {
                let (p, len) = radial_parent(x, &s).unwrap();
                assert_eq!(t.parent[x], p);
                assert_eq!(t.edge_length[x], len);
                let (q, len) = directed_parent(x, &s, &e).unwrap();
                assert_eq!(f.parent[x], q);
                assert_eq!(f.edge_length[x], len);
            }
        }
    }

    #[test]
    fn only_the_lowest_point_is_orphaned() {
        let w = unit();
        let e = Direction::axis(2, 1, false).unwrap();
        let s = sample_poisson(&w, 300.0, 12).unwrap();
        let f = build_dsf(&s, &e).unwrap();
        let lowest = (0..s.len())
            .min_by(|&a, &b| s.point(a)[1].total_cmp(&s.point(b)[1]))
            .unwrap();
        for x in 0..s.len() {
            assert_eq!(f.parent[x].is_none(), x == lowest);
        }
    }

    #[test]
    fn edge_csv_rows() {
        let s = sample(&[[0.5, 0.0], [0.6, 0.0]]);
        let t = build_rst(&s);
        let mut buf = Vec::new();
        write_edges_csv(t.edge_rows(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "child_index,parent_index,parent_kind,length");
        assert_eq!(lines[1], "0,-1,ROOT,5.0000000000000000e-1");
        assert!(lines[2].starts_with("1,0,NODE,"));

        let e = Direction::axis(2, 0, false).unwrap();
        let f = build_dsf(&s, &e).unwrap();
        let rows: Vec<EdgeRow> = f.edge_rows().collect();
        assert_eq!(rows[0].kind, EdgeKind::None);
        assert_eq!(rows[0].parent, -1);
        assert_eq!(rows[1].parent, 0);
    }
}
