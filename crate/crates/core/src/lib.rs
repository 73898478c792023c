//! Scan-free direct tomography of photonic density matrices in the position
//! basis.
//!
//! A mixed state `rho(x1, x2)` on a 1D grid is imaged through a
//! polarization-sensitive 90 degree rotation onto a four-analyzer camera. The
//! four frames determine every element of `rho` directly, with no scanning
//! and no iterative fitting:
//!
//! ```text
//! rho(x1, x2) = [Gamma_D - Gamma_A](x2, -x1) + i [Gamma_R - Gamma_L](x2, -x1)
//! ```
//!
//! The crate simulates the camera ([`forward`]), inverts it
//! ([`reconstruct`]), splits the result into weighted pure modes
//! ([`decompose`]) and scores it ([`metrics`]). [`scan`] provides the
//! two-aperture raster scan as an independent oracle.

pub mod config;
pub mod decompose;
pub mod density;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod reconstruct;
pub mod scan;
pub mod state;

pub use config::PipelineConfig;
pub use decompose::{decompose_density, fix_gauge, mode_fidelity, DecompositionResult};
pub use density::{DensityMatrix, Diagnostics};
pub use error::{Error, Result};
pub use forward::{
    apply_noise, forward_frames, from_mosaic, gaussian_filter, to_mosaic, NoiseKind, NoiseModel,
    PolarizationFrames,
};
pub use grid::GridSpec;
pub use metrics::{purity, trace_distance, MetricsReport};
pub use pipeline::{run_pipeline, PipelineRun};
pub use reconstruct::{hermitize, reconstruct_density, renormalize_trace};
pub use scan::{resource_report, scan_reconstruct, ResourceReport, ScanPlan};
pub use state::{
    assemble_density_matrix, eval_hg_state, eval_phase_poly_state, MixtureSpec, ModeDescriptor,
    PhaseTerm, PureStateVector,
};
