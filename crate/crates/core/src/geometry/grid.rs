use serde::{Deserialize, Serialize};

use super::aabb::AxisBox;
use crate::error::{Error, Result};

/// Uniform grid over a closed box. Cells are indexed row-major with the last
/// axis varying fastest.
///
/// Cell boundaries belong to the cell with the larger index; the upper edge of
/// the domain folds into the last cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: AxisBox,
    pub resolution: Vec<usize>,
}

impl Grid {
    pub fn new(domain: AxisBox, resolution: Vec<usize>) -> Result<Self> {
        if domain.dim() != resolution.len() {
            return Err(Error::Dimension {
                expected: domain.dim(),
                got: resolution.len(),
            });
        }
        if resolution.contains(&0) {
            return Err(Error::config("resolution", "cell counts must be positive"));
        }
        Ok(Grid {
            domain: domain.as_closed(),
            resolution,
        })
    }

    pub fn uniform(domain: AxisBox, n: usize) -> Result<Self> {
        let d = domain.dim();
        Grid::new(domain, vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        self.domain.width(axis) / self.resolution[axis] as f64
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        let n = self.resolution[axis];
        if i == n {
            return self.domain.hi[axis];
        }
        self.domain.lo[axis] + self.domain.width(axis) * (i as f64) / (n as f64)
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.resolution)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.resolution[axis];
            flat /= self.resolution[axis];
        }
        idx
    }

    /// Axis index of a coordinate, without the domain check.
    fn axis_index(&self, axis: usize, v: f64) -> usize {
        let n = self.resolution[axis];
        let t = (v - self.domain.lo[axis]) / self.domain.width(axis) * n as f64;
        let mut i = t.floor().max(0.0) as usize;
        if i >= n {
            i = n - 1;
        }
        // Floating rounding can misplace points that sit exactly on a boundary.
        if i + 1 < n && v >= self.coord(axis, i + 1) {
            i += 1;
        } else if i > 0 && v < self.coord(axis, i) {
            i -= 1;
        }
        i
    }

    pub fn cell_of(&self, point: &[f64]) -> Result<usize> {
        if point.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: point.len(),
            });
        }
        if !self.domain.contains_point(point) {
            return Err(Error::OutOfDomain {
                point: point.to_vec(),
            });
        }
        let idx: Vec<usize> = (0..self.dim())
            .map(|a| self.axis_index(a, point[a]))
            .collect();
        Ok(self.flat(&idx))
    }

    pub fn cell_box(&self, flat: usize) -> AxisBox {
        let idx = self.unflat(flat);
        AxisBox::closed(
            idx.iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect(),
            idx.iter().enumerate().map(|(a, &i)| self.coord(a, i + 1)).collect(),
        )
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        self.cell_box(flat).center()
    }

    /// Range of axis indices of cells meeting the closed interval `[lo, hi]`,
    /// clamped to the grid. `None` when the interval misses the domain.
    pub fn axis_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        if hi < self.domain.lo[axis] || lo > self.domain.hi[axis] {
            return None;
        }
        let lo = lo.max(self.domain.lo[axis]);
        let a = self.axis_index(axis, lo);
        let b = self.axis_index(axis, hi.min(self.domain.hi[axis]));
        // A closed interval starting on a boundary also touches the lower cell.
        let a = if a > 0 && lo <= self.coord(axis, a) { a - 1 } else { a };
        Some((a, b))
    }

    /// Flat indices of all cells whose closed box meets the closed hull of `b`.
    pub fn cells_meeting(&self, b: &AxisBox) -> Vec<usize> {
        let mut ranges = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            match self.axis_range(axis, b.lo[axis], b.hi[axis]) {
                Some(r) => ranges.push(r),
                None => return Vec::new(),
            }
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(self.flat(&idx));
            let mut axis = self.dim();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if idx[axis] < ranges[axis].1 {
                    idx[axis] += 1;
                    for j in axis + 1..self.dim() {
                        idx[j] = ranges[j].0;
                    }
                    break;
                }
            }
        }
    }

    /// Grid vertices (cell corners), row-major.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let counts: Vec<usize> = self.resolution.iter().map(|n| n + 1).collect();
        let total: usize = counts.iter().product();
        (0..total)
            .map(|mut f| {
                let mut p = vec![0.0; self.dim()];
                for axis in (0..self.dim()).rev() {
                    p[axis] = self.coord(axis, f % counts[axis]);
                    f /= counts[axis];
                }
                p
            })
            .collect()
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        (0..self.cell_count()).map(|c| self.cell_center(c)).collect()
    }

    pub fn full_region(&self) -> GridRegion {
        GridRegion {
            grid: self.clone(),
            cells: (0..self.cell_count()).collect(),
        }
    }
}

/// Finite set of cells of a grid, kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRegion {
    pub grid: Grid,
    pub cells: Vec<usize>,
}

impl GridRegion {
    pub fn new(grid: Grid, mut cells: Vec<usize>) -> Result<Self> {
        let n = grid.cell_count();
        if let Some(&bad) = cells.iter().find(|&&c| c >= n) {
            return Err(Error::config("cells", format!("cell index {bad} out of range {n}")));
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(GridRegion { grid, cells })
    }

    /// Cells of `grid` meeting the closed box `b`.
    pub fn from_box(grid: &Grid, b: &AxisBox) -> Self {
        GridRegion {
            grid: grid.clone(),
            cells: grid.cells_meeting(b),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn contains_cell(&self, c: usize) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.grid
            .cell_of(x)
            .map(|c| self.contains_cell(c))
            .unwrap_or(false)
    }

    pub fn boxes(&self) -> Vec<AxisBox> {
        self.cells.iter().map(|&c| self.grid.cell_box(c)).collect()
    }

    pub fn bounding_box(&self) -> Option<AxisBox> {
        AxisBox::hull_of(&self.boxes())
    }

    /// Connected runs of cells along a 1-D grid, as closed intervals.
    pub fn runs_1d(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &c in &self.cells {
            match out.last_mut() {
                Some(last) if last.1 + 1 == c => last.1 = c,
                _ => out.push((c, c)),
            }
        }
        out.into_iter()
            .map(|(a, b)| (self.grid.cell_box(a).lo[0], self.grid.cell_box(b).hi[0]))
            .collect()
    }
}
