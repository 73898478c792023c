//! Thin helpers over nalgebra for the Hermitian matrices used throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// `max |m_ij - conj(m_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m^dagger) / 2`, with the lower triangle written as the exact conjugate
/// of the upper one so the result is bit-exactly Hermitian.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
        out[(j, j)] = Complex64::new(m[(j, j)].re, 0.0);
    }
    out
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is
/// trusted, so callers should pass an exactly Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigenpairs of a Hermitian matrix, ordered by descending `|lambda|`
/// (ties keep the larger signed value first).
pub fn hermitian_eigenpairs(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        lb.abs().total_cmp(&la.abs()).then(lb.total_cmp(&la))
    });
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), order.len(), |i, c| {
        eig.eigenvectors[(i, order[c])]
    });
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_part_formula() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 1.), c(0., 0.), c(1., 0.)]);
        let h = hermitian_part(&m);
        assert_eq!(h[(0, 1)], c(0., 0.5));
        assert_eq!(h[(1, 0)], c(0., -0.5));
        assert_eq!(hermiticity_defect(&h), 0.0);
        assert_eq!(hermiticity_defect(&m), 1.0);
    }

    #[test]
    fn eigenpairs_sorted_by_magnitude() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(0.2, 0.),
            c(-0.5, 0.),
            c(0.3, 0.),
        ]));
        let (vals, vecs) = hermitian_eigenpairs(&m);
        assert_eq!(vals, vec![-0.5, 0.3, 0.2]);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert_eq!(hermitian_eigenvalues(&m), vec![-0.5, 0.2, 0.3]);
    }
}
