//! Conventional two-aperture raster scan, used as an independent
//! reconstruction oracle and for resource accounting.
//!
//! With apertures at cells `i` and `j` and a relative phase `phi` on the second
//! path, the detector sees `I = rho_ii + rho_jj + 2 Re[e^{i phi} rho_ij]`.
//! Single-aperture intensities give the diagonal; two or more phase steps fix
//! `Re rho_ij` and `Im rho_ij`. Each unordered pair is measured once and
//! mirrored, so the estimate is Hermitian by construction.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::forward::{poisson_draw, stream_rng, NoiseModel};
use crate::linalg::CMatrix;

const SCAN_HERMITICITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan {
    n_cells: usize,
    phase_steps: Vec<f64>,
    /// Least-squares rows mapping `I_phi - rho_ii - rho_jj` to (Re, Im).
    solve: [Vec<f64>; 2],
}

impl ScanPlan {
    pub fn new(n_cells: usize, phase_steps: Vec<f64>) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidPlan("scan needs at least one cell".into()));
        }
        if phase_steps.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidPlan("phase steps must be finite".into()));
        }
        // Design rows [2 cos phi, -2 sin phi]; solve the 2x2 normal equations.
        let (mut scc, mut sss, mut scs) = (0.0, 0.0, 0.0);
        for &p in &phase_steps {
            let (c, s) = (2.0 * p.cos(), -2.0 * p.sin());
            scc += c * c;
            sss += s * s;
            scs += c * s;
        }
        let det = scc * sss - scs * scs;
        if det.abs() < 1e-9 * (scc + sss).powi(2) || phase_steps.len() < 2 {
            return Err(Error::InvalidPlan(format!(
                "phase steps {phase_steps:?} do not separate real and imaginary parts"
            )));
        }
        let mut re_row = Vec::with_capacity(phase_steps.len());
        let mut im_row = Vec::with_capacity(phase_steps.len());
        for &p in &phase_steps {
            let (c, s) = (2.0 * p.cos(), -2.0 * p.sin());
            re_row.push((sss * c - scs * s) / det);
            im_row.push((scc * s - scs * c) / det);
        }
        Ok(ScanPlan {
            n_cells,
            phase_steps,
            solve: [re_row, im_row],
        })
    }

    /// Phase steps `{0, pi/2}`.
    pub fn two_step(n_cells: usize) -> Result<Self> {
        ScanPlan::new(n_cells, vec![0.0, FRAC_PI_2])
    }

    /// Phase steps `{0, pi/2, pi, 3pi/2}`.
    pub fn four_step(n_cells: usize) -> Result<Self> {
        ScanPlan::new(n_cells, (0..4).map(|k| k as f64 * FRAC_PI_2).collect())
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn phase_steps(&self) -> &[f64] {
        &self.phase_steps
    }

    /// Nominal count `N^2 x |phase steps|` used to share the photon budget.
    pub fn measurements_total(&self) -> u64 {
        (self.n_cells as u64).pow(2) * self.phase_steps.len() as u64
    }
}

struct Detector {
    noise: Option<(u64, f64)>,
}

impl Detector {
    fn new(noise: &NoiseModel, plan: &ScanPlan) -> Result<Self> {
        noise.validate()?;
        if noise.is_none() {
            return Ok(Detector { noise: None });
        }
        let per_measurement = noise.photon_budget / plan.measurements_total() as f64;
        Ok(Detector {
            noise: Some((noise.seed.expect("validated"), per_measurement)),
        })
    }

    fn stream(&self, id: u64) -> Option<(rand_chacha::ChaCha8Rng, f64)> {
        self.noise.map(|(seed, photons)| (stream_rng(seed, id), photons))
    }
}

fn measure(intensity: f64, rng: &mut Option<(rand_chacha::ChaCha8Rng, f64)>) -> f64 {
    match rng {
        None => intensity,
        Some((rng, photons)) => poisson_draw(rng, intensity.max(0.0) * *photons) / *photons,
    }
}

fn check_input(rho: &DensityMatrix, plan: &ScanPlan) -> Result<()> {
    if plan.n_cells != rho.dim() {
        return Err(Error::InvalidPlan(format!(
            "plan covers {} cells, state has {}",
            plan.n_cells,
            rho.dim()
        )));
    }
    let defect = rho.hermiticity_defect();
    if defect > SCAN_HERMITICITY_TOLERANCE {
        return Err(Error::NotHermitian {
            defect,
            tolerance: SCAN_HERMITICITY_TOLERANCE,
        });
    }
    Ok(())
}

/// Single-aperture scan: the intensity profile `rho(x, x)`.
pub fn scan_profile(rho: &DensityMatrix, plan: &ScanPlan, noise: &NoiseModel) -> Result<Vec<f64>> {
    check_input(rho, plan)?;
    let det = Detector::new(noise, plan)?;
    let n = rho.dim();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = det.stream((i * n + i) as u64);
            measure(rho.get(i, i).re, &mut rng)
        })
        .collect())
}

/// Full raster-scan estimate of `rho_true`.
pub fn scan_reconstruct(
    rho_true: &DensityMatrix,
    plan: &ScanPlan,
    noise: &NoiseModel,
) -> Result<DensityMatrix> {
    let diag = scan_profile(rho_true, plan, noise)?;
    let det = Detector::new(noise, plan)?;
    let n = rho_true.dim();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pii = rho_true.get(i, i).re;
            ((i + 1)..n)
                .map(|j| {
                    let pjj = rho_true.get(j, j).re;
                    let c = rho_true.get(i, j);
                    let mut rng = det.stream((i * n + j) as u64);
                    let base = diag[i] + diag[j];
                    let (mut re, mut im) = (0.0, 0.0);
                    for (k, &phi) in plan.phase_steps.iter().enumerate() {
                        let truth = pii + pjj + 2.0 * (Complex64::from_polar(1.0, phi) * c).re;
                        let excess = measure(truth, &mut rng) - base;
                        re += plan.solve[0][k] * excess;
                        im += plan.solve[1][k] * excess;
                    }
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();

    let mut est = CMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        est[(i, i)] = Complex64::new(diag[i], 0.0);
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            est[(i, j)] = v;
            est[(j, i)] = v.conj();
        }
    }
    DensityMatrix::new(est, *rho_true.grid())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceReport {
    pub dimension: u64,
    pub scan_measurements: u64,
    pub direct_measurements: u64,
    /// Fraction of the beam a two-aperture scan keeps, `min(1, 2/N)`.
    pub relative_photon_efficiency: f64,
}

/// Measurement counts of a two-step raster scan versus one direct frame set.
pub fn resource_report(n: u64) -> ResourceReport {
    ResourceReport {
        dimension: n,
        scan_measurements: 2 * n * n,
        direct_measurements: 1,
        relative_photon_efficiency: if n == 0 { 1.0 } else { (2.0 / n as f64).min(1.0) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::state::{assemble_density_matrix, MixtureSpec};

    #[test]
    fn plan_validation() {
        assert!(ScanPlan::new(4, vec![0.0]).is_err());
        assert!(ScanPlan::new(4, vec![0.0, std::f64::consts::PI]).is_err());
        assert!(ScanPlan::new(0, vec![0.0, FRAC_PI_2]).is_err());
        let p = ScanPlan::two_step(10).unwrap();
        assert_eq!(p.measurements_total(), 200);
        assert_eq!(ScanPlan::four_step(10).unwrap().measurements_total(), 400);
    }

    #[test]
    fn noiseless_scan_is_exact() {
        let g = GridSpec::new(32, 2.0).unwrap();
        let rho = assemble_density_matrix(&MixtureSpec::hermite_gauss_triplet(), &g).unwrap();
        for plan in [ScanPlan::two_step(32).unwrap(), ScanPlan::four_step(32).unwrap()] {
            let est = scan_reconstruct(&rho, &plan, &NoiseModel::none()).unwrap();
            let err = (est.elements() - rho.elements()).camax();
            assert!(err < 1e-12, "{err}");
            assert!(est.is_hermitian());
        }
    }

    #[test]
    fn profile_matches_intensity() {
        let g = GridSpec::new(40, 2.0).unwrap();
        let mix = MixtureSpec::hermite_gauss_triplet();
        let rho = assemble_density_matrix(&mix, &g).unwrap();
        let prof = scan_profile(&rho, &ScanPlan::two_step(40).unwrap(), &NoiseModel::none()).unwrap();
        let states = mix.states(&g).unwrap();
        for (i, v) in prof.iter().enumerate() {
            let want: f64 = mix
                .probs()
                .iter()
                .zip(&states)
                .map(|(p, s)| p * s.amplitudes()[i].norm_sqr())
                .sum();
            assert!((v - want).abs() < 1e-15);
        }
    }

    #[test]
    fn noisy_scan_is_seeded_and_hermitian() {
        let g = GridSpec::new(12, 2.0).unwrap();
        let rho = assemble_density_matrix(&MixtureSpec::hermite_gauss_triplet(), &g).unwrap();
        let plan = ScanPlan::two_step(12).unwrap();
        let noise = NoiseModel::poisson(1e6, 9);
        let a = scan_reconstruct(&rho, &plan, &noise).unwrap();
        assert_eq!(a, scan_reconstruct(&rho, &plan, &noise).unwrap());
        assert!(a.is_hermitian());
        assert!(scan_reconstruct(&rho, &ScanPlan::two_step(11).unwrap(), &noise).is_err());
    }

    #[test]
    fn resources() {
        let r = resource_report(580);
        assert_eq!(r.scan_measurements, 672_800);
        assert_eq!(r.direct_measurements, 1);
        let one = resource_report(1);
        assert_eq!((one.scan_measurements, one.direct_measurements), (2, 1));
        assert_eq!(one.relative_photon_efficiency, 1.0);
        for n in [8u64, 64, 512] {
            assert_eq!(resource_report(n).scan_measurements / (n * n), 2);
        }
    }
}
