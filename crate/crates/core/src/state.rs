//! Pure-state families on the position grid and mixed-state assembly.
//!
//! States use discrete normalization, `sum_j |psi_j|^2 = 1`, so that
//! `Tr rho = 1` is a matrix identity independent of the grid pitch. The
//! continuum amplitude is `psi_j / sqrt(pitch)`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::{self, CMatrix, CVector};

/// Tolerance on `sum p_k = 1`.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PureStateVector {
    amplitudes: CVector,
    grid: GridSpec,
}

impl PureStateVector {
    /// Wraps `amplitudes` after rescaling to unit discrete norm.
    pub fn normalized(amplitudes: CVector, grid: GridSpec) -> Result<Self> {
        if amplitudes.len() != grid.n_cells() {
            return Err(Error::GridMismatch {
                expected: grid.n_cells(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(PureStateVector {
            amplitudes: amplitudes.unscale(norm),
            grid,
        })
    }

    /// Wraps amplitudes that the caller has already normalized.
    pub(crate) fn from_unit(amplitudes: CVector, grid: GridSpec) -> Self {
        debug_assert_eq!(amplitudes.len(), grid.n_cells());
        PureStateVector { amplitudes, grid }
    }

    #[inline]
    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `<self|other>` on the grid.
    pub fn inner(&self, other: &PureStateVector) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Multiplies by the global phase `e^{i theta}`.
    pub fn with_phase(&self, theta: f64) -> Self {
        PureStateVector {
            amplitudes: self.amplitudes.map(|a| a * Complex64::from_polar(1.0, theta)),
            grid: self.grid,
        }
    }
}

/// One term `coeff * (x/a)^power` of a phase polynomial; the phase is
/// `pi * sum coeff * (x/a)^power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTerm {
    pub power: u32,
    pub coeff: f64,
}

impl PhaseTerm {
    pub const fn new(power: u32, coeff: f64) -> Self {
        PhaseTerm { power, coeff }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeDescriptor {
    /// Uniform-modulus state with polynomial phase across the aperture.
    PhasePoly { terms: Vec<PhaseTerm> },
    /// 1D Hermite-Gauss mode of order `order`, waist `waist_ratio * a`.
    HermiteGauss { order: u32, waist_ratio: f64 },
    /// Explicit amplitudes `[re, im]` per cell, renormalized on evaluation.
    Raw { amplitudes: Vec<[f64; 2]> },
}

impl ModeDescriptor {
    pub fn evaluate(&self, grid: &GridSpec) -> Result<PureStateVector> {
        match self {
            ModeDescriptor::PhasePoly { terms } => eval_phase_poly_state(terms, grid),
            ModeDescriptor::HermiteGauss { order, waist_ratio } => {
                eval_hg_state(*order, *waist_ratio, grid)
            }
            ModeDescriptor::Raw { amplitudes } => {
                let v = DVector::from_iterator(
                    amplitudes.len(),
                    amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)),
                );
                PureStateVector::normalized(v, *grid).map_err(|e| match e {
                    Error::ZeroVector => Error::InvalidMode("raw amplitudes are all zero".into()),
                    e => e,
                })
            }
        }
    }
}

/// Phase in radians, `pi * sum coeff * r^power`, at `r = x/a`.
pub fn phase_at(terms: &[PhaseTerm], x_over_a: f64) -> f64 {
    PI * terms
        .iter()
        .map(|t| t.coeff * x_over_a.powi(t.power as i32))
        .sum::<f64>()
}

pub fn eval_phase_poly_state(terms: &[PhaseTerm], grid: &GridSpec) -> Result<PureStateVector> {
    for t in terms {
        if t.power == 0 {
            return Err(Error::InvalidMode("phase powers must be >= 1".into()));
        }
        if !t.coeff.is_finite() {
            return Err(Error::InvalidMode(format!(
                "non-finite phase coefficient {}",
                t.coeff
            )));
        }
    }
    let n = grid.n_cells();
    let modulus = 1.0 / (n as f64).sqrt();
    let a = grid.extent_mm();
    let amps = DVector::from_fn(n, |j, _| {
        Complex64::from_polar(modulus, phase_at(terms, grid.position(j) / a))
    });
    Ok(PureStateVector::from_unit(amps, *grid))
}

/// Physicists' Hermite polynomial `H_m(u)` by the three-term recurrence.
pub fn hermite(m: u32, u: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * u);
    if m == 0 {
        return prev;
    }
    for k in 1..m {
        let next = 2.0 * u * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_m(u) exp(-u^2/2) / sqrt(2^m m! sqrt(pi))`, evaluated with the
/// normalized recurrence so large orders neither overflow nor underflow early.
pub fn hermite_function(m: u32, u: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * u * u).exp();
    for k in 0..m {
        let k = k as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * u * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Samples `HG_m(x) ~ H_m(sqrt(2) x / w0) exp(-x^2 / w0^2)` on the grid.
pub fn eval_hg_state(m: u32, waist_ratio: f64, grid: &GridSpec) -> Result<PureStateVector> {
    if !(waist_ratio.is_finite() && waist_ratio > 0.0) {
        return Err(Error::InvalidMode(format!(
            "waist ratio must be positive, got {waist_ratio}"
        )));
    }
    let a = grid.extent_mm();
    let w0 = waist_ratio * a;
    let width = 2.0 * w0 * (m as f64 + 1.0).sqrt();
    if width > a {
        return Err(Error::InvalidMode(format!(
            "HG order {m} has width {width:.4} mm, exceeding the {a} mm aperture"
        )));
    }
    if grid.pitch_mm() > w0 / 4.0 {
        log::warn!(
            "HG_{m}: pitch {:.4} mm under-resolves waist {w0:.4} mm",
            grid.pitch_mm()
        );
    }
    let scale = 2f64.sqrt() / w0;
    let amps = DVector::from_fn(grid.n_cells(), |j, _| {
        Complex64::new(hermite_function(m, scale * grid.position(j)), 0.0)
    });
    PureStateVector::normalized(amps, *grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture", into = "RawMixture")]
pub struct MixtureSpec {
    probs: Vec<f64>,
    modes: Vec<ModeDescriptor>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMixture {
    probs: Vec<f64>,
    modes: Vec<ModeDescriptor>,
}

impl TryFrom<RawMixture> for MixtureSpec {
    type Error = Error;

    fn try_from(raw: RawMixture) -> Result<Self> {
        MixtureSpec::new(raw.probs, raw.modes)
    }
}

impl From<MixtureSpec> for RawMixture {
    fn from(m: MixtureSpec) -> Self {
        RawMixture {
            probs: m.probs,
            modes: m.modes,
        }
    }
}

impl MixtureSpec {
    pub fn new(probs: Vec<f64>, modes: Vec<ModeDescriptor>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidMixture("mixture has no components".into()));
        }
        if probs.len() != modes.len() {
            return Err(Error::InvalidMixture(format!(
                "{} probabilities for {} modes",
                probs.len(),
                modes.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidMixture(format!(
                "probabilities must be positive, got {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidMixture(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(MixtureSpec { probs, modes })
    }

    /// The three polynomial-phase states mixed with weights 0.21/0.30/0.49.
    pub fn phase_only_triplet() -> Self {
        MixtureSpec::new(
            vec![0.21, 0.30, 0.49],
            vec![
                ModeDescriptor::PhasePoly {
                    terms: vec![PhaseTerm::new(1, 1.04)],
                },
                ModeDescriptor::PhasePoly {
                    terms: vec![PhaseTerm::new(3, -8.42), PhaseTerm::new(1, 4.04)],
                },
                ModeDescriptor::PhasePoly {
                    terms: vec![PhaseTerm::new(5, -17.6), PhaseTerm::new(1, -1.0)],
                },
            ],
        )
        .expect("valid preset")
    }

    /// HG_0, HG_1, HG_2 with waist 0.15 a, weights 0.22/0.33/0.45.
    pub fn hermite_gauss_triplet() -> Self {
        let hg = |order| ModeDescriptor::HermiteGauss {
            order,
            waist_ratio: 0.15,
        };
        MixtureSpec::new(vec![0.22, 0.33, 0.45], vec![hg(0), hg(1), hg(2)])
            .expect("valid preset")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn modes(&self) -> &[ModeDescriptor] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn states(&self, grid: &GridSpec) -> Result<Vec<PureStateVector>> {
        self.modes.iter().map(|m| m.evaluate(grid)).collect()
    }
}

/// `rho = sum_k p_k |psi_k><psi_k|`, made bit-exactly Hermitian.
pub fn assemble_density_matrix(mix: &MixtureSpec, grid: &GridSpec) -> Result<DensityMatrix> {
    let states = mix.states(grid)?;
    let n = grid.n_cells();
    let weighted = CMatrix::from_fn(n, states.len(), |i, k| {
        states[k].amplitudes()[i] * mix.probs[k].sqrt()
    });
    let rho = &weighted * weighted.adjoint();
    DensityMatrix::new(linalg::hermitian_part(&rho), *grid)
}

/// `G_kl = <psi_k|psi_l>`.
pub fn gram_matrix(states: &[PureStateVector]) -> Result<CMatrix> {
    let k = states.len();
    let mut g = CMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            g[(a, b)] = states[a].inner(&states[b])?;
        }
    }
    Ok(g)
}
