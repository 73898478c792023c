//! Direct inversion of analyzer frames into a density matrix.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::forward::PolarizationFrames;
use crate::linalg::{self, CMatrix};

/// `rho(x1, x2) = [D - A](x2, -x1) + i [R - L](x2, -x1)`.
///
/// Raw output: neither Hermitized nor trace-normalized.
pub fn reconstruct_density(frames: &PolarizationFrames) -> Result<DensityMatrix> {
    let grid = *frames.grid();
    let n = grid.n_cells();
    let (d, a, r, l) = (
        frames.gamma_d(),
        frames.gamma_a(),
        frames.gamma_r(),
        frames.gamma_l(),
    );
    if [d, a, r, l].iter().any(|p| p.shape() != (n, n)) {
        return Err(Error::ShapeMismatch("frame planes do not match grid".into()));
    }
    let mut rho = CMatrix::zeros(n, n);
    // column i2 of rho reads pixel column x = i2
    rho.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i2, col)| {
            for (i1, out) in col.iter_mut().enumerate() {
                let y = grid.flip_index(i1);
                *out = Complex64::new(
                    d[(i2, y)] - a[(i2, y)],
                    r[(i2, y)] - l[(i2, y)],
                );
            }
        });
    DensityMatrix::new(rho, grid)
}

/// `(rho + rho^dagger) / 2`; the result is exactly Hermitian and the map is
/// idempotent bit-for-bit.
pub fn hermitize(rho: &DensityMatrix) -> DensityMatrix {
    rho.map_elements(linalg::hermitian_part)
}

/// `rho / Re Tr rho`.
pub fn renormalize_trace(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let tr = rho.trace().re;
    if !(tr.is_finite() && tr > 0.0) {
        return Err(Error::NonPositiveTrace(tr));
    }
    if tr == 1.0 {
        return Ok(rho.clone());
    }
    Ok(rho.map_elements(|m| m.unscale(tr)))
}
