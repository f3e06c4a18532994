//! Uniform grid over the bounding box of a point set, queried by expanding
//! Chebyshev shells of cells.

use crate::error::{Error, Result};
use crate::pointprocess::PointSample;

/// Bucketed point indices on a regular grid.
///
/// Cells are addressed by integer coordinates relative to the lower corner of
/// the points' bounding box. Queries outside the box use clamped coordinates.
#[derive(Debug, Clone)]
pub struct GridIndex {
    dim: usize,
    cell: f64,
    origin: Vec<f64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    starts: Vec<u32>,
    items: Vec<u32>,
}

/// Cell budget relative to the number of points.
const CELLS_PER_POINT: usize = 16;
const MIN_CELL_BUDGET: usize = 4096;

impl GridIndex {
    /// Buckets the points of `sample` into cells of side `cell`.
    ///
    /// If the requested cell would produce more than
    /// `max(16 n, 4096)` cells, the side is enlarged until it fits.
    pub fn build(sample: &PointSample, cell: f64) -> Result<Self> {
        Self::from_coords(sample.dim(), sample.coords(), cell)
    }

    pub fn from_coords(dim: usize, coords: &[f64], cell: f64) -> Result<Self> {
        if !(cell.is_finite() && cell > 0.0) {
            return Err(Error::InvalidParameter(format!("grid cell size {cell} must be positive")));
        }
        let n = coords.len() / dim;
        if n > u32::MAX as usize {
            return Err(Error::Resource("too many points for the grid index".into()));
        }
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in coords.chunks_exact(dim) {
            for i in 0..dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        if n == 0 {
            lo.fill(0.0);
            hi.fill(0.0);
        }

        let budget = (CELLS_PER_POINT * n).max(MIN_CELL_BUDGET);
        let mut cell = cell;
        let shape = loop {
            let shape: Vec<usize> = lo
                .iter()
                .zip(&hi)
                .map(|(l, h)| ((h - l) / cell).floor() as usize + 1)
                .collect();
            let total = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
            match total {
                Some(t) if t <= budget => break shape,
                _ => cell *= 1.5,
            }
        };

        let mut strides = vec![1usize; dim];
        for i in (0..dim.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let total: usize = shape.iter().product();

        let mut grid = GridIndex {
            dim,
            cell,
            origin: lo,
            shape,
            strides,
            starts: vec![0; total + 1],
            items: vec![0; n],
        };
        let linear: Vec<usize> = coords.chunks_exact(dim).map(|p| grid.linear_cell(p)).collect();
        for &c in &linear {
            grid.starts[c + 1] += 1;
        }
        for c in 0..total {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in linear.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side length actually used (may exceed the requested one).
    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn num_cells(&self) -> usize {
        self.starts.len() - 1
    }

    /// Clamped integer cell coordinate of `x` along `axis`.
    #[inline]
    fn axis_cell(&self, x: f64, axis: usize) -> usize {
        let c = ((x - self.origin[axis]) / self.cell).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(self.shape[axis] - 1)
        }
    }

    pub fn cell_of(&self, x: &[f64]) -> Vec<usize> {
        (0..self.dim).map(|i| self.axis_cell(x[i], i)).collect()
    }

    fn linear_cell(&self, x: &[f64]) -> usize {
        (0..self.dim).map(|i| self.axis_cell(x[i], i) * self.strides[i]).sum()
    }

    /// Point indices stored in the cell with linear index `c`.
    #[inline]
    pub fn bucket(&self, c: usize) -> &[u32] {
        &self.items[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    /// Largest shell radius that still contains cells.
    pub fn max_shell(&self, center: &[usize]) -> usize {
        center
            .iter()
            .zip(&self.shape)
            .map(|(&c, &s)| c.max(s - 1 - c))
            .max()
            .unwrap_or(0)
    }

    /// Lower bound on the distance from `x` to any point stored in a shell
    /// of radius `>= k` around `center`.
    pub fn shell_lower_bound(&self, x: &[f64], center: &[usize], k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let mut bound = f64::INFINITY;
        for i in 0..self.dim {
            let c = center[i];
            // cells strictly below / above the inner box on this axis
            if c + 1 > k {
                let edge = self.origin[i] + (c + 1 - k) as f64 * self.cell;
                bound = bound.min(x[i] - edge);
            }
            if c + k < self.shape[i] {
                let edge = self.origin[i] + (c + k) as f64 * self.cell;
                bound = bound.min(edge - x[i]);
            }
        }
        bound.max(0.0)
    }

    /// Calls `visit(linear_index, cell_coords)` for every grid cell at
    /// Chebyshev distance exactly `k` from `center`.
    pub fn for_each_shell_cell<F: FnMut(usize, &[usize])>(&self, center: &[usize], k: usize, mut visit: F) {
        let mut scratch = vec![0usize; self.dim];
        self.shell_rec(center, k, 0, 0, false, &mut scratch, &mut visit);
    }

    #[allow(clippy::too_many_arguments)]
    fn shell_rec<F: FnMut(usize, &[usize])>(
        &self,
        center: &[usize],
        k: usize,
        axis: usize,
        offset: usize,
        on_shell: bool,
        scratch: &mut [usize],
        visit: &mut F,
    ) {
        let c = center[axis] as isize;
        let k_i = k as isize;
        let last = axis + 1 == self.dim;
        let lo = (c - k_i).max(0);
        let hi = (c + k_i).min(self.shape[axis] as isize - 1);
        if last && !on_shell {
            for v in [c - k_i, c + k_i] {
                if v >= lo && v <= hi {
                    scratch[axis] = v as usize;
                    visit(offset + v as usize * self.strides[axis], scratch);
                }
                if k == 0 {
                    break;
                }
            }
            return;
        }
        for v in lo..=hi {
            scratch[axis] = v as usize;
            let off = offset + v as usize * self.strides[axis];
            if last {
                visit(off, scratch);
            } else {
                let boundary = on_shell || (v - c).abs() == k_i;
                self.shell_rec(center, k, axis + 1, off, boundary, scratch, visit);
            }
        }
    }

    /// Point indices in the shell of radius `shell` around the cell of `x`,
    /// in cell order.
    pub fn shell_candidates(&self, x: &[f64], shell: usize) -> Vec<usize> {
        let center = self.cell_of(x);
        let mut out = Vec::new();
        self.for_each_shell_cell(&center, shell, |c, _| {
            out.extend(self.bucket(c).iter().map(|&i| i as usize));
        });
        out
    }

    /// Lower corner of the cell with integer coordinates `cell`.
    pub fn cell_lower(&self, cell: &[usize], axis: usize) -> f64 {
        self.origin[axis] + cell[axis] as f64 * self.cell
    }

    /// Calls `visit` for every point within distance `radius` of `x`
    /// (and possibly a few more; callers filter exactly).
    pub fn for_each_within<F: FnMut(usize)>(&self, x: &[f64], radius: f64, mut visit: F) {
        let center = self.cell_of(x);
        let max_k = self.max_shell(&center);
        for k in 0..=max_k {
            if k > 0 && self.shell_lower_bound(x, &center, k) > radius * (1.0 + 1e-9) {
                break;
            }
            self.for_each_shell_cell(&center, k, |c, _| {
                for &i in self.bucket(c) {
                    visit(i as usize);
                }
            });
        }
    }
}

/// Standard grid-query entry point.
pub fn grid_build(sample: &PointSample, cell: f64) -> Result<GridIndex> {
    GridIndex::build(sample, cell)
}

/// Candidates in shell `shell_radius` around the cell containing `x`.
pub fn grid_shell_candidates(index: &GridIndex, x: &[f64], shell_radius: usize) -> Vec<usize> {
    index.shell_candidates(x, shell_radius)
}
