use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::{self, CMatrix};
use crate::state::PureStateVector;

/// Physicality diagnostics of a (possibly unphysical) density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `max |rho - rho^dagger|`.
    pub hermiticity_defect: f64,
    pub trace: Complex64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

/// An `N x N` complex matrix in the position basis of `grid`.
///
/// Hermiticity, unit trace and positivity are not enforced: reconstructions
/// from noisy frames violate all three. [`DensityMatrix::diagnostics`]
/// measures them on first request.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    elements: CMatrix,
    grid: GridSpec,
    diagnostics: OnceLock<Diagnostics>,
}

impl PartialEq for DensityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.elements == other.elements
    }
}

impl DensityMatrix {
    pub fn new(elements: CMatrix, grid: GridSpec) -> Result<Self> {
        let n = grid.n_cells();
        if elements.nrows() != n || elements.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "density matrix is {}x{}, grid has {n} cells",
                elements.nrows(),
                elements.ncols()
            )));
        }
        Ok(DensityMatrix {
            elements,
            grid,
            diagnostics: OnceLock::new(),
        })
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &PureStateVector) -> Self {
        let a = psi.amplitudes();
        let elements = a * a.adjoint();
        DensityMatrix::new(linalg::hermitian_part(&elements), *psi.grid())
            .expect("state length matches its grid")
    }

    #[inline]
    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn into_elements(self) -> CMatrix {
        self.elements
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.grid.n_cells()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.elements[(i, j)]
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.elements)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.elements)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() == 0.0
    }

    /// Diagonal `rho(x, x)`, the intensity profile.
    pub fn populations(&self) -> Vec<f64> {
        self.elements.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn diagnostics(&self) -> Diagnostics {
        *self.diagnostics.get_or_init(|| {
            let herm = linalg::hermitian_part(&self.elements);
            let min_eigenvalue = linalg::hermitian_eigenvalues(&herm)
                .first()
                .copied()
                .unwrap_or(0.0);
            Diagnostics {
                hermiticity_defect: linalg::hermiticity_defect(&self.elements),
                trace: self.trace(),
                min_eigenvalue,
            }
        })
    }

    pub(crate) fn map_elements(&self, f: impl FnOnce(&CMatrix) -> CMatrix) -> Self {
        DensityMatrix {
            elements: f(&self.elements),
            grid: self.grid,
            diagnostics: OnceLock::new(),
        }
    }
}
