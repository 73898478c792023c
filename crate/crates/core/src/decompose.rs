//! Coherent-mode decomposition of a Hermitian density matrix.
//!
//! For Hermitian `rho = M S M^dagger` the columns of `M` are the pure modes and
//! the diagonal of `S` their weights. We use the Hermitian eigendecomposition:
//! it coincides with the SVD up to the sign of each weight, and a negative
//! weight is exactly the unphysicality a noisy reconstruction can carry.

use std::ops::Range;

use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::PureStateVector;

/// Largest Hermiticity defect `decompose_density` accepts.
pub const DECOMPOSE_HERMITICITY_TOLERANCE: f64 = 1e-9;

/// Relative gap below which neighbouring weights count as degenerate.
pub const DEGENERACY_RELATIVE_GAP: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    /// Signed eigenvalues, ordered by descending magnitude.
    pub weights: Vec<f64>,
    /// Gauge-fixed unit modes matching `weights`.
    pub modes: Vec<PureStateVector>,
    /// `|| rho - sum_k w_k |psi_k><psi_k| ||_F` over the retained modes.
    pub residual: f64,
}

impl DecompositionResult {
    /// `|w_k|`, the singular values.
    pub fn singular_values(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.abs()).collect()
    }

    /// Index ranges of weights whose relative spacing is below
    /// [`DEGENERACY_RELATIVE_GAP`]. Within such a range only the spanned
    /// subspace is meaningful.
    pub fn degenerate_clusters(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.weights.len() {
            let split = k == self.weights.len() || {
                let (a, b) = (self.weights[k - 1], self.weights[k]);
                let scale = a.abs().max(b.abs());
                scale == 0.0 || (a - b).abs() > DEGENERACY_RELATIVE_GAP * scale
            };
            if split {
                out.push(start..k);
                start = k;
            }
        }
        out
    }
}

pub fn decompose_density(rho: &DensityMatrix, k_max: usize) -> Result<DecompositionResult> {
    let n = rho.dim();
    if k_max == 0 || k_max > n {
        return Err(Error::ShapeMismatch(format!(
            "k_max must lie in 1..={n}, got {k_max}"
        )));
    }
    let defect = rho.hermiticity_defect();
    if defect > DECOMPOSE_HERMITICITY_TOLERANCE {
        return Err(Error::NotHermitian {
            defect,
            tolerance: DECOMPOSE_HERMITICITY_TOLERANCE,
        });
    }
    let herm = linalg::hermitian_part(rho.elements());
    let (vals, vecs) = linalg::hermitian_eigenpairs(&herm);

    let grid = *rho.grid();
    let modes = (0..k_max)
        .map(|k| fix_gauge(&PureStateVector::normalized(vecs.column(k).into_owned(), grid)?))
        .collect::<Result<Vec<_>>>()?;
    let weights = vals[..k_max].to_vec();

    let basis = CMatrix::from_fn(n, k_max, |i, k| modes[k].amplitudes()[i]);
    let scaled = CMatrix::from_fn(n, k_max, |i, k| basis[(i, k)] * weights[k]);
    let residual = (&herm - scaled * basis.adjoint()).norm();

    Ok(DecompositionResult {
        weights,
        modes,
        residual,
    })
}

/// Removes the arbitrary global phase: the largest-magnitude amplitude (lowest
/// index on ties) becomes real and positive.
pub fn fix_gauge(psi: &PureStateVector) -> Result<PureStateVector> {
    let amps = psi.amplitudes();
    let (peak, peak_norm) = amps
        .iter()
        .map(|a| a.norm())
        .enumerate()
        .fold((0, 0.0), |best, (i, m)| if m > best.1 { (i, m) } else { best });
    if peak_norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let rotation = amps[peak].conj() / peak_norm;
    let mut out = amps.map(|a| a * rotation);
    out[peak] = Complex64::new(peak_norm, 0.0);
    PureStateVector::normalized(out, *psi.grid())
}

/// `|<a|b>|^2`.
pub fn mode_fidelity(a: &PureStateVector, b: &PureStateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `Tr(P_a P_b) / max(dim a, dim b)` for the projectors onto two orthonormal
/// sets; 1 iff they span the same subspace.
pub fn subspace_overlap(a: &[PureStateVector], b: &[PureStateVector]) -> Result<f64> {
    let dim = a.len().max(b.len());
    if dim == 0 {
        return Ok(1.0);
    }
    let mut acc = 0.0;
    for u in a {
        for v in b {
            acc += mode_fidelity(u, v)?;
        }
    }
    Ok(acc / dim as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMatch {
    pub theory: usize,
    pub recovered: usize,
    pub fidelity: f64,
}

/// Greedy maximum-fidelity pairing. `theory` should be listed in descending
/// weight order; each picks the best still-unassigned recovered mode.
pub fn match_modes(
    theory: &[PureStateVector],
    recovered: &[PureStateVector],
) -> Result<Vec<ModeMatch>> {
    let mut taken = vec![false; recovered.len()];
    let mut out = Vec::with_capacity(theory.len().min(recovered.len()));
    for (t, psi) in theory.iter().enumerate() {
        let mut best: Option<ModeMatch> = None;
        for (r, phi) in recovered.iter().enumerate() {
            if taken[r] {
                continue;
            }
            let fidelity = mode_fidelity(psi, phi)?;
            if best.is_none_or(|b| fidelity > b.fidelity) {
                best = Some(ModeMatch {
                    theory: t,
                    recovered: r,
                    fidelity,
                });
            }
        }
        if let Some(m) = best {
            taken[m.recovered] = true;
            out.push(m);
        }
    }
    Ok(out)
}
