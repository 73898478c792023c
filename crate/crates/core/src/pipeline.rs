//! End-to-end experiment: generate, image, invert, decompose, compare.
//!
//! Stage order is fixed: mixture -> density matrix -> analyzer frames ->
//! [camera noise] -> [mosaic round trip] -> [Gaussian filter] -> direct
//! inversion -> Hermitization -> [trace renormalization] -> decomposition ->
//! metrics. Errors carry the label of the stage that raised them.

use std::path::{Path, PathBuf};

use crate::config::PipelineConfig;
use crate::decompose::{decompose_density, match_modes, DecompositionResult};
use crate::density::DensityMatrix;
use crate::error::{Error, Result, StageExt};
use crate::forward::{apply_noise, forward_frames, from_mosaic, gaussian_filter, to_mosaic, PolarizationFrames};
use crate::io::{self, csv, ArrayData, Provenance};
use crate::metrics::{raw_trace_distance, trace_distance, MetricsReport};
use crate::reconstruct::{hermitize, reconstruct_density, renormalize_trace};
use crate::state::{assemble_density_matrix, PureStateVector};

/// Every intermediate of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config: PipelineConfig,
    /// Generating states, in mixture order.
    pub states: Vec<PureStateVector>,
    pub rho_true: DensityMatrix,
    /// Frames as recorded by the camera (after noise, before filtering).
    pub frames: PolarizationFrames,
    /// Raw direct inversion of the (filtered) frames.
    pub rho_raw: DensityMatrix,
    /// Hermitized and, if enabled, trace-renormalized estimate.
    pub rho: DensityMatrix,
    pub decomposition: DecompositionResult,
    /// Coherent modes of `rho_true`, for non-orthogonal mixtures.
    pub reference_modes: DecompositionResult,
    pub report: MetricsReport,
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun> {
    let config = config.clone().validated().stage("config")?;
    let grid = config.grid;

    let states = config.mixture.states(&grid).stage("generate")?;
    let rho_true = assemble_density_matrix(&config.mixture, &grid).stage("generate")?;

    let clean = forward_frames(&rho_true, &grid).stage("forward")?;
    let mut frames = apply_noise(&clean, &config.noise).stage("noise")?;
    if config.mosaic {
        let budget = frames.photon_budget();
        frames = from_mosaic(&to_mosaic(&frames), &grid).stage("mosaic")?;
        if let Some(b) = budget {
            frames = frames.with_photon_budget(b);
        }
    }
    let filtered = gaussian_filter(&frames, config.filter_sigma_px).stage("filter")?;

    let rho_raw = reconstruct_density(&filtered).stage("reconstruct")?;
    let rho_herm = hermitize(&rho_raw);
    let (rho, scaled_raw) = if config.renormalize {
        let rho = renormalize_trace(&rho_herm).stage("renormalize")?;
        let raw = renormalize_trace(&rho_raw).stage("renormalize")?;
        (rho, raw)
    } else {
        (rho_herm.clone(), rho_raw.clone())
    };

    let k = config.modes_to_keep();
    let decomposition = decompose_density(&rho, k).stage("decompose")?;
    let reference_modes = decompose_density(&rho_true, k).stage("decompose")?;

    let report = (|| -> Result<MetricsReport> {
        let mut report = MetricsReport::compare(&rho_true, &rho)?;
        let raw_diag = rho_raw.diagnostics();
        report.hermiticity_defect = raw_diag.hermiticity_defect;
        report.trace = raw_diag.trace;
        if raw_diag.hermiticity_defect > 0.0 {
            report.trace_distance_raw = Some(raw_trace_distance(&rho_true, &scaled_raw)?);
        }
        if config.renormalize {
            report.trace_distance_unnormalized = Some(trace_distance(&rho_true, &rho_herm)?);
        }
        report.per_mode_fidelities = theory_fidelities(&states, config.mixture.probs(), &decomposition)?;
        report.coherent_mode_fidelities = match_modes(&reference_modes.modes, &decomposition.modes)?
            .into_iter()
            .map(|m| m.fidelity)
            .collect();
        Ok(report)
    })()
    .stage("metrics")?;

    Ok(PipelineRun {
        config,
        states,
        rho_true,
        frames,
        rho_raw,
        rho,
        decomposition,
        reference_modes,
        report,
    })
}

/// Fidelity of each generating state (mixture order) with the recovered mode
/// greedily assigned to it, visiting states by descending probability.
fn theory_fidelities(
    states: &[PureStateVector],
    probs: &[f64],
    decomposition: &DecompositionResult,
) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    let sorted: Vec<PureStateVector> = order.iter().map(|&k| states[k].clone()).collect();
    let mut out = vec![0.0; states.len()];
    for m in match_modes(&sorted, &decomposition.modes)? {
        out[order[m.theory]] = m.fidelity;
    }
    Ok(out)
}

impl PipelineRun {
    /// Writes every intermediate as an array file (plus CSV dumps when asked)
    /// into `dir`, returning the paths written.
    pub fn write_artifacts(&self, dir: &Path, command: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(dir, e))
            .stage("write")?;
        let prov = Provenance {
            command: command.to_owned(),
            seed: self.config.noise.seed,
        };
        let mut written = Vec::new();
        let mut put = |name: &str, data: ArrayData| -> Result<()> {
            let base = dir.join(name);
            io::write_array(&base, &data, &prov)?;
            let (bin, json) = io::array_paths(&base);
            written.extend([bin, json]);
            Ok(())
        };
        (|| -> Result<()> {
            put("rho_true", ArrayData::Density(self.rho_true.clone()))?;
            if self.config.mosaic {
                put(
                    "mosaic",
                    ArrayData::Mosaic {
                        image: to_mosaic(&self.frames),
                        grid: self.config.grid,
                    },
                )?;
            } else {
                put("frames", ArrayData::Frames(self.frames.clone()))?;
            }
            put("rho_raw", ArrayData::Density(self.rho_raw.clone()))?;
            put("rho", ArrayData::Density(self.rho.clone()))?;
            for (k, mode) in self.decomposition.modes.iter().enumerate() {
                put(&format!("mode_{}", k + 1), ArrayData::Mode(mode.clone()))?;
            }
            Ok(())
        })()
        .stage("write")?;

        let extra = (|| -> Result<Vec<PathBuf>> {
            let mut paths = Vec::new();
            let metrics = dir.join("metrics.json");
            let mut text = serde_json::to_string_pretty(&self.report.to_flat_json()).expect("json");
            text.push('\n');
            std::fs::write(&metrics, text).map_err(|e| Error::io(&metrics, e))?;
            paths.push(metrics);

            let table = dir.join("modes.csv");
            let fids: Vec<Option<f64>> = (0..self.decomposition.weights.len())
                .map(|k| self.report.coherent_mode_fidelities.get(k).copied())
                .collect();
            csv::write_mode_table(&table, &self.decomposition.weights, &fids)?;
            paths.push(table);

            if self.config.emit_csv {
                for (name, rho) in [("rho_true.csv", &self.rho_true), ("rho.csv", &self.rho)] {
                    let p = dir.join(name);
                    csv::write_matrix(&p, rho)?;
                    paths.push(p);
                }
                for (k, mode) in self.decomposition.modes.iter().enumerate() {
                    let p = dir.join(format!("mode_{}.csv", k + 1));
                    csv::write_mode(&p, mode)?;
                    paths.push(p);
                }
            }
            Ok(paths)
        })()
        .stage("write")?;
        written.extend(extra);
        Ok(written)
    }
}
