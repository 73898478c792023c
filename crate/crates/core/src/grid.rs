//! Discretized one-dimensional position basis.
//!
//! The grid is cell-centered: cell `i` (0-based) of `n` cells spanning an
//! aperture of width `a` sits at `x_i = a * (2i + 1 - n) / (2n)`. The ratio is
//! formed before scaling by `a`, so `position(flip_index(i)) == -position(i)`
//! holds bit-exactly and index reversal realizes `x -> -x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell-centered sampling of `[-a/2, a/2]`, lengths in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    n_cells: usize,
    extent_mm: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n_cells: usize,
    extent_mm: f64,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.n_cells, raw.extent_mm)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid {
            n_cells: g.n_cells,
            extent_mm: g.extent_mm,
        }
    }
}

impl GridSpec {
    pub fn new(n_cells: usize, extent_mm: f64) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells, got {n_cells}"
            )));
        }
        if !(extent_mm.is_finite() && extent_mm > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive and finite, got {extent_mm}"
            )));
        }
        Ok(GridSpec { n_cells, extent_mm })
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn extent_mm(&self) -> f64 {
        self.extent_mm
    }

    /// Cell width in millimeters.
    #[inline]
    pub fn pitch_mm(&self) -> f64 {
        self.extent_mm / self.n_cells as f64
    }

    /// Center of cell `i`, in millimeters.
    #[inline]
    pub fn position(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_cells);
        let num = 2 * i as i64 + 1 - self.n_cells as i64;
        self.extent_mm * (num as f64 / (2 * self.n_cells) as f64)
    }

    /// Left edge of cell `k`; `edge(n)` is the right edge of the last cell.
    #[inline]
    pub fn edge(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n_cells);
        let num = 2 * k as i64 - self.n_cells as i64;
        self.extent_mm * (num as f64 / (2 * self.n_cells) as f64)
    }

    /// Index of the cell at the mirrored position `-x_i`.
    #[inline]
    pub fn flip_index(&self, i: usize) -> usize {
        self.n_cells - 1 - i
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.position(i)).collect()
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n_cells != other.n_cells {
            return Err(Error::GridMismatch {
                expected: self.n_cells,
                found: other.n_cells,
            });
        }
        if self.extent_mm != other.extent_mm {
            return Err(Error::ShapeMismatch(format!(
                "grid extents differ: {} mm vs {} mm",
                self.extent_mm, other.extent_mm
            )));
        }
        Ok(())
    }
}
