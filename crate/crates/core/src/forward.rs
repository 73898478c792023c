//! The simulated polarization camera.
//!
//! A diagonally polarized photon in state `rho` passes a polarization-sensitive
//! 90 degree image rotation (H arm rotated, V arm untouched) and is detected
//! behind D/A/R/L analyzers. Pixel `(x_i, y_j)` then sees the H amplitude from
//! input position `-y_j` and the V amplitude from `x_i`, giving
//!
//! ```text
//! Gamma_D,A = 1/4 [rho(-y,-y) + rho(x,x) +- 2 Re rho(-y,x)]
//! Gamma_R,L = 1/4 [rho(-y,-y) + rho(x,x) +- 2 Im rho(-y,x)]
//! ```
//!
//! Frames are indexed `(x-index, y-index)` and share the grid of `rho` on both
//! axes.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub type Image = DMatrix<f64>;

/// Largest Hermiticity defect `forward_frames` accepts.
pub const FORWARD_HERMITICITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analyzer {
    D,
    A,
    R,
    L,
}

impl Analyzer {
    pub const ALL: [Analyzer; 4] = [Analyzer::D, Analyzer::A, Analyzer::R, Analyzer::L];
}

/// The four analyzer images `Gamma_D, Gamma_A, Gamma_R, Gamma_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationFrames {
    planes: [Image; 4],
    grid: GridSpec,
    photon_budget: Option<f64>,
}

impl PolarizationFrames {
    /// Planes in `Analyzer::ALL` order (D, A, R, L).
    pub fn new(planes: [Image; 4], grid: GridSpec) -> Result<Self> {
        let n = grid.n_cells();
        for (p, a) in planes.iter().zip(Analyzer::ALL) {
            if p.nrows() != n || p.ncols() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{a:?} frame is {}x{}, grid has {n} cells",
                    p.nrows(),
                    p.ncols()
                )));
            }
        }
        Ok(PolarizationFrames {
            planes,
            grid,
            photon_budget: None,
        })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn photon_budget(&self) -> Option<f64> {
        self.photon_budget
    }

    pub fn with_photon_budget(mut self, budget: f64) -> Self {
        self.photon_budget = Some(budget);
        self
    }

    #[inline]
    pub fn plane(&self, a: Analyzer) -> &Image {
        &self.planes[a as usize]
    }

    pub fn planes(&self) -> &[Image; 4] {
        &self.planes
    }

    pub fn into_planes(self) -> [Image; 4] {
        self.planes
    }

    pub fn gamma_d(&self) -> &Image {
        self.plane(Analyzer::D)
    }

    pub fn gamma_a(&self) -> &Image {
        self.plane(Analyzer::A)
    }

    pub fn gamma_r(&self) -> &Image {
        self.plane(Analyzer::R)
    }

    pub fn gamma_l(&self) -> &Image {
        self.plane(Analyzer::L)
    }

    /// Sum over all pixels of all four planes.
    pub fn total_intensity(&self) -> f64 {
        self.planes.iter().map(|p| p.sum()).sum()
    }

    /// `max |Gamma_D + Gamma_A - Gamma_R - Gamma_L|`; zero for noiseless frames.
    pub fn closure_defect(&self) -> f64 {
        let [d, a, r, l] = &self.planes;
        d.iter()
            .zip(a.iter())
            .zip(r.iter().zip(l.iter()))
            .map(|((d, a), (r, l))| (d + a - r - l).abs())
            .fold(0.0, f64::max)
    }

    fn with_planes(&self, planes: [Image; 4]) -> Self {
        PolarizationFrames {
            planes,
            grid: self.grid,
            photon_budget: self.photon_budget,
        }
    }
}

/// Noiseless analyzer images of `rho`.
pub fn forward_frames(rho: &DensityMatrix, grid: &GridSpec) -> Result<PolarizationFrames> {
    rho.grid().check_same(grid)?;
    let defect = rho.hermiticity_defect();
    if defect > FORWARD_HERMITICITY_TOLERANCE {
        return Err(Error::NotHermitian {
            defect,
            tolerance: FORWARD_HERMITICITY_TOLERANCE,
        });
    }
    let n = grid.n_cells();
    let m = rho.elements();
    let pop: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();

    let mut planes: [Image; 4] = std::array::from_fn(|_| Image::zeros(n, n));
    let [d, a, r, l] = &mut planes;
    // Column j (fixed y_j) is contiguous in nalgebra's column-major storage.
    d.as_mut_slice()
        .par_chunks_mut(n)
        .zip(a.as_mut_slice().par_chunks_mut(n))
        .zip(r.as_mut_slice().par_chunks_mut(n))
        .zip(l.as_mut_slice().par_chunks_mut(n))
        .enumerate()
        .for_each(|(j, (((dc, ac), rc), lc))| {
            let f = grid.flip_index(j);
            for i in 0..n {
                let base = 0.25 * (pop[f] + pop[i]);
                let c = m[(f, i)];
                dc[i] = base + 0.5 * c.re;
                ac[i] = base - 0.5 * c.re;
                rc[i] = base + 0.5 * c.im;
                lc[i] = base - 0.5 * c.im;
            }
        });
    PolarizationFrames::new(planes, *grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    Poisson,
    PoissonPlusReadout,
}

/// Photon-counting camera statistics.
///
/// `photon_budget` is the expected number of detected photons summed over all
/// pixels of all four frames. `readout_sigma` is in counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    #[serde(default)]
    pub photon_budget: f64,
    #[serde(default)]
    pub readout_sigma: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::none()
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            kind: NoiseKind::None,
            photon_budget: 0.0,
            readout_sigma: 0.0,
            seed: None,
        }
    }

    pub fn poisson(photon_budget: f64, seed: u64) -> Self {
        NoiseModel {
            kind: NoiseKind::Poisson,
            photon_budget,
            readout_sigma: 0.0,
            seed: Some(seed),
        }
    }

    pub fn is_none(&self) -> bool {
        self.kind == NoiseKind::None
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_none() {
            return Ok(());
        }
        if !(self.photon_budget.is_finite() && self.photon_budget > 0.0) {
            return Err(Error::InvalidNoise(format!(
                "photon budget must be positive, got {}",
                self.photon_budget
            )));
        }
        if self.seed.is_none() {
            return Err(Error::InvalidNoise(
                "a seed is required when noise is enabled".into(),
            ));
        }
        if self.kind == NoiseKind::PoissonPlusReadout
            && !(self.readout_sigma.is_finite() && self.readout_sigma >= 0.0)
        {
            return Err(Error::InvalidNoise(format!(
                "readout sigma must be non-negative, got {}",
                self.readout_sigma
            )));
        }
        Ok(())
    }
}

/// Independent random stream for one (frame, column) pair. Draws never
/// depend on the order in which columns are processed.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn poisson_draw<R: Rng>(rng: &mut R, lambda: f64) -> f64 {
    if lambda > 0.0 {
        Poisson::new(lambda)
            .expect("positive finite rate")
            .sample(rng)
    } else {
        0.0
    }
}

/// Replaces each pixel by a photon count drawn around its expected value and
/// rescales back to intensity units.
pub fn apply_noise(frames: &PolarizationFrames, noise: &NoiseModel) -> Result<PolarizationFrames> {
    noise.validate()?;
    if noise.is_none() {
        return Ok(frames.clone());
    }
    let total = frames.total_intensity();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidNoise(format!(
            "frames carry no usable intensity (total {total})"
        )));
    }
    let seed = noise.seed.expect("validated");
    let counts_per_unit = noise.photon_budget / total;
    let readout = match noise.kind {
        NoiseKind::PoissonPlusReadout if noise.readout_sigma > 0.0 => {
            Some(Normal::new(0.0, noise.readout_sigma).expect("validated sigma"))
        }
        _ => None,
    };
    let n = frames.grid.n_cells();
    let planes: [Image; 4] = std::array::from_fn(|f| {
        let src = &frames.planes[f];
        let mut out = Image::zeros(n, n);
        out.as_mut_slice()
            .par_chunks_mut(n)
            .zip(src.as_slice().par_chunks(n))
            .enumerate()
            .for_each(|(j, (dst, col))| {
                let mut rng = stream_rng(seed, ((f as u64) << 32) | j as u64);
                for (o, &g) in dst.iter_mut().zip(col) {
                    let mut counts = poisson_draw(&mut rng, g.max(0.0) * counts_per_unit);
                    if let Some(normal) = &readout {
                        counts += normal.sample(&mut rng);
                    }
                    *o = counts / counts_per_unit;
                }
            });
        out
    });
    let mut noisy = frames.with_planes(planes);
    noisy.photon_budget = Some(noise.photon_budget);
    Ok(noisy)
}

/// Normalized 1D Gaussian taps for offsets `-r..=r`, `r = ceil(4 sigma)`.
pub fn gaussian_kernel(sigma_px: f64) -> Vec<f64> {
    let radius = (4.0 * sigma_px).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma_px * sigma_px)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

fn blur_line(src: &[f64], dst: &mut [f64], taps: &[f64]) {
    let n = src.len();
    let radius = taps.len() / 2;
    let full: f64 = taps.iter().sum();
    for (p, out) in dst.iter_mut().enumerate() {
        let lo = p.saturating_sub(radius);
        let hi = (p + radius).min(n - 1);
        let w = &taps[lo + radius - p..=hi + radius - p];
        let acc: f64 = w.iter().zip(&src[lo..=hi]).map(|(a, b)| a * b).sum();
        let mass = if w.len() == taps.len() { full } else { w.iter().sum() };
        *out = acc / mass;
    }
}

fn blur_image(img: &Image, taps: &[f64]) -> Image {
    let (rows, cols) = img.shape();
    // along the first index: columns are contiguous
    let mut pass1 = Image::zeros(rows, cols);
    pass1
        .as_mut_slice()
        .par_chunks_mut(rows)
        .zip(img.as_slice().par_chunks(rows))
        .for_each(|(dst, src)| blur_line(src, dst, taps));
    // along the second index on the transpose
    let t = pass1.transpose();
    let mut pass2 = Image::zeros(cols, rows);
    pass2
        .as_mut_slice()
        .par_chunks_mut(cols)
        .zip(t.as_slice().par_chunks(cols))
        .for_each(|(dst, src)| blur_line(src, dst, taps));
    pass2.transpose()
}

/// Separable low-pass Gaussian filter on every plane. Truncated at `4 sigma`;
/// near the borders the kernel is renormalized over the in-bounds taps.
pub fn gaussian_filter(frames: &PolarizationFrames, sigma_px: f64) -> Result<PolarizationFrames> {
    if !(sigma_px.is_finite() && sigma_px >= 0.0) {
        return Err(Error::InvalidFilter(sigma_px));
    }
    if sigma_px == 0.0 {
        return Ok(frames.clone());
    }
    let taps = gaussian_kernel(sigma_px);
    let planes = std::array::from_fn(|f| blur_image(&frames.planes[f], &taps));
    Ok(frames.with_planes(planes))
}

/// Interleaves four equally sized planes (D, A, R, L) into 2x2 superpixels:
///
/// ```text
/// D R
/// L A
/// ```
pub fn interleave(planes: &[Image; 4]) -> Result<Image> {
    let (rows, cols) = planes[0].shape();
    if planes.iter().any(|p| p.shape() != (rows, cols)) {
        return Err(Error::ShapeMismatch("mosaic planes differ in shape".into()));
    }
    let [d, a, r, l] = planes;
    let mut out = Image::zeros(2 * rows, 2 * cols);
    for j in 0..cols {
        for i in 0..rows {
            out[(2 * i, 2 * j)] = d[(i, j)];
            out[(2 * i, 2 * j + 1)] = r[(i, j)];
            out[(2 * i + 1, 2 * j)] = l[(i, j)];
            out[(2 * i + 1, 2 * j + 1)] = a[(i, j)];
        }
    }
    Ok(out)
}

/// Inverse of [`interleave`].
pub fn deinterleave(mosaic: &Image) -> Result<[Image; 4]> {
    let (rows, cols) = mosaic.shape();
    if rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::ShapeMismatch(format!(
            "mosaic must have even dimensions, got {rows}x{cols}"
        )));
    }
    let (h, w) = (rows / 2, cols / 2);
    let pick = |di: usize, dj: usize| Image::from_fn(h, w, |i, j| mosaic[(2 * i + di, 2 * j + dj)]);
    Ok([pick(0, 0), pick(1, 1), pick(0, 1), pick(1, 0)])
}

pub fn to_mosaic(frames: &PolarizationFrames) -> Image {
    interleave(&frames.planes).expect("frames share one grid")
}

pub fn from_mosaic(mosaic: &Image, grid: &GridSpec) -> Result<PolarizationFrames> {
    let planes = deinterleave(mosaic)?;
    PolarizationFrames::new(planes, *grid)
}
