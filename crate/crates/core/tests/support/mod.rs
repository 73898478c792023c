//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the crate's own linear algebra.

#![allow(dead_code)]

use dtomo::linalg::{CMatrix, CVector};
use dtomo::{DensityMatrix, GridSpec, PureStateVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real `2n x 2n` embedding `[[Re, -Im], [Im, Re]]`; every eigenvalue and
/// singular value of `m` appears twice in it.
fn real_embedding(m: &CMatrix) -> DMatrix<f64> {
    let (r, k) = m.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * k);
    for j in 0..k {
        for i in 0..r {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i + r, j + k)] = z.re;
            out[(i + r, j)] = z.im;
            out[(i, j + k)] = -z.im;
        }
    }
    out
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix, ascending.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-32 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let ev = jacobi_eigenvalues(real_embedding(m));
    ev.into_iter().step_by(2).collect()
}

/// One-sided (Hestenes) Jacobi singular values of a general complex matrix,
/// descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut a = real_embedding(m);
    let cols = a.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..a.nrows() {
                    let ap = a[(k, p)];
                    let aq = a[(k, q)];
                    a[(k, p)] = cs * ap - sn * aq;
                    a[(k, q)] = sn * ap + cs * aq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv.into_iter().step_by(2).collect()
}

/// `1/2` times the nuclear norm of `a - b`.
pub fn half_nuclear_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * singular_values(&(a - b)).iter().sum::<f64>()
}

/// Analyzer frames from the explicit position-polarization picture.
///
/// For pixel `(i, j)` the rotation `U = T (x) |H><H| + 1 (x) |V><V|` acts on
/// `rho (x) |D><D|`, where `T` exchanges positions `i` and `-y_j`. The
/// frame value is `Tr[(|i><i| (x) |P><P|) U rho_i U^dagger]`, evaluated as
/// `v^dagger rho_i v` with `v = U^dagger |i, P>`. Basis index is
/// `2 * position + polarization`, with H = 0 and V = 1.
pub fn forward_oracle(rho: &DensityMatrix) -> [DMatrix<f64>; 4] {
    let n = rho.dim();
    let g = rho.grid();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let d_pol = [c(s, 0.0), c(s, 0.0)];
    // D, A, R, L
    let analyzers = [
        [c(s, 0.0), c(s, 0.0)],
        [c(s, 0.0), c(-s, 0.0)],
        [c(s, 0.0), c(0.0, -s)],
        [c(s, 0.0), c(0.0, s)],
    ];

    let mut rho_i = CMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            for p in 0..2 {
                for q in 0..2 {
                    rho_i[(2 * a + p, 2 * b + q)] = rho.get(a, b) * d_pol[p] * d_pol[q].conj();
                }
            }
        }
    }

    let mut out = [
        DMatrix::zeros(n, n),
        DMatrix::zeros(n, n),
        DMatrix::zeros(n, n),
        DMatrix::zeros(n, n),
    ];
    for j in 0..n {
        let f = g.flip_index(j);
        for i in 0..n {
            let mut t = CMatrix::identity(n, n);
            if i != f {
                t[(i, i)] = c(0.0, 0.0);
                t[(f, f)] = c(0.0, 0.0);
                t[(i, f)] = c(1.0, 0.0);
                t[(f, i)] = c(1.0, 0.0);
            }
            let mut u = CMatrix::zeros(2 * n, 2 * n);
            for a in 0..n {
                for b in 0..n {
                    u[(2 * a, 2 * b)] = t[(a, b)];
                }
                u[(2 * a + 1, 2 * a + 1)] = c(1.0, 0.0);
            }
            let u_dag = u.adjoint();
            for (k, pol) in analyzers.iter().enumerate() {
                let mut e = CVector::zeros(2 * n);
                e[2 * i] = pol[0];
                e[2 * i + 1] = pol[1];
                let v = &u_dag * e;
                let val = v.dotc(&(&rho_i * &v));
                out[k][(i, j)] = val.re;
            }
        }
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

pub fn random_state(rng: &mut ChaCha8Rng, grid: &GridSpec) -> PureStateVector {
    PureStateVector::normalized(gaussian_vector(rng, grid.n_cells()), *grid).unwrap()
}

/// `sum_k p_k |psi_k><psi_k|` with random weights and `k` random states.
pub fn random_mixture(rng: &mut ChaCha8Rng, grid: &GridSpec, k: usize) -> DensityMatrix {
    let n = grid.n_cells();
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = CMatrix::zeros(n, n);
    for w in weights {
        let psi = random_state(rng, grid);
        let a = psi.amplitudes();
        m += (a * a.adjoint()) * c(w / total, 0.0);
    }
    DensityMatrix::new(dtomo::linalg::hermitian_part(&m), *grid).unwrap()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    g.qr().q()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}
