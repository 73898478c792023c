//! Shared fixtures for the criterion benches in `benches/`.

use dtomo::{assemble_density_matrix, forward_frames, DensityMatrix, GridSpec, MixtureSpec, PolarizationFrames};

/// Sizes swept by every bench; 580 is the full camera-scale grid.
pub const SIZES: [usize; 4] = [64, 128, 256, 580];

pub fn hg_density(n: usize) -> DensityMatrix {
    let grid = GridSpec::new(n, 2.0).expect("grid");
    assemble_density_matrix(&MixtureSpec::hermite_gauss_triplet(), &grid).expect("mixture")
}

pub fn hg_frames(n: usize) -> PolarizationFrames {
    let rho = hg_density(n);
    forward_frames(&rho, rho.grid()).expect("frames")
}

pub fn phase_density(n: usize) -> DensityMatrix {
    let grid = GridSpec::new(n, 2.0).expect("grid");
    assemble_density_matrix(&MixtureSpec::phase_only_triplet(), &grid).expect("mixture")
}
