//! `dtomo` command line.
//!
//! Flag precedence: built-in defaults < `--config` file < command-line flags.
//! Every subcommand prints one JSON report on stdout; artifacts go to the
//! `--out` directory.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dtomo::decompose::match_modes;
use dtomo::io::{self, csv, read_array, write_array, ArrayData, Provenance};
use dtomo::*;

#[derive(Parser, Debug)]
#[command(name = "dtomo", version, about = "Scan-free density-matrix tomography with a polarization camera")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON pipeline configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Noise seed; required whenever noise is enabled
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Skip trace renormalization of the reconstruction
    #[arg(long, global = true)]
    no_renormalize: bool,
    /// Gaussian filter width in pixels, applied to the frames before inversion
    #[arg(long, global = true)]
    filter_sigma: Option<f64>,
    /// Expected photons per frame set; turns on Poisson noise
    #[arg(long, global = true)]
    budget: Option<f64>,
    /// Also write CSV dumps of matrices and modes
    #[arg(long, global = true)]
    emit_csv: bool,
    /// Route frames through the 2x2 analyzer mosaic
    #[arg(long, global = true)]
    mosaic: bool,
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// Built-in mixture used when no config is given
    #[arg(long, value_enum, default_value_t = Preset::HermiteGauss)]
    preset: Preset,
    /// Grid size (overrides config)
    #[arg(long)]
    n: Option<usize>,
    /// Grid extent in mm (overrides config)
    #[arg(long)]
    extent: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Preset {
    PhaseOnly,
    HermiteGauss,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble the density matrix of a mixture
    Generate(Source),
    /// Simulate the four analyzer frames of a density matrix
    Forward {
        #[arg(long)]
        input: PathBuf,
    },
    /// Invert frames (or a mosaic) into a density matrix
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
    },
    /// Split a Hermitian density matrix into weighted modes
    Decompose {
        #[arg(long)]
        input: PathBuf,
        /// Modes to keep
        #[arg(long, default_value_t = 3)]
        modes: usize,
    },
    /// Compare a density matrix with a reference
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Two-aperture raster-scan reconstruction and resource counts
    ScanBaseline {
        /// Density matrix to scan; without it only resources are reported
        #[arg(long)]
        input: Option<PathBuf>,
        /// Dimension for resource accounting when no input is given
        #[arg(long)]
        n: Option<u64>,
        /// Phase steps per pair: 2 (0, pi/2) or 4 (quarter turns)
        #[arg(long, default_value_t = 2, value_parser = parse_steps)]
        steps: u8,
    },
    /// Generate, image, invert, decompose and score in one go
    Pipeline(Source),
}

fn parse_steps(s: &str) -> std::result::Result<u8, String> {
    match s {
        "2" => Ok(2),
        "4" => Ok(4),
        _ => Err(format!("expected 2 or 4, got {s}")),
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Forward { .. } => "forward",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Decompose { .. } => "decompose",
            Command::Metrics { .. } => "metrics",
            Command::ScanBaseline { .. } => "scan-baseline",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

/// Config file (or preset) with command-line overrides applied.
fn settings(common: &Common, source: Option<&Source>) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load_raw(path)?,
        None => {
            let mixture = match source.map_or(Preset::HermiteGauss, |s| s.preset) {
                Preset::PhaseOnly => MixtureSpec::phase_only_triplet(),
                Preset::HermiteGauss => MixtureSpec::hermite_gauss_triplet(),
            };
            PipelineConfig::new(GridSpec::new(128, 2.0)?, mixture)
        }
    };
    if let Some(s) = source {
        if s.n.is_some() || s.extent.is_some() {
            let n = s.n.unwrap_or(cfg.grid.n_cells());
            let extent = s.extent.unwrap_or(cfg.grid.extent_mm());
            cfg.grid = GridSpec::new(n, extent).map_err(|e| Error::Stage {
                stage: "config",
                source: Box::new(e),
            })?;
        }
    }
    if let Some(seed) = common.seed {
        cfg.noise.seed = Some(seed);
    }
    if let Some(b) = common.budget {
        cfg.noise.photon_budget = b;
        if cfg.noise.is_none() {
            cfg.noise.kind = NoiseKind::Poisson;
        }
    }
    if let Some(s) = common.filter_sigma {
        cfg.filter_sigma_px = s;
    }
    cfg.renormalize &= !common.no_renormalize;
    cfg.emit_csv |= common.emit_csv;
    cfg.mosaic |= common.mosaic;
    if common.out.is_some() {
        cfg.outputs = common.out.clone();
    }
    cfg.validated().map_err(|e| Error::Stage {
        stage: "config",
        source: Box::new(e),
    })
}

fn out_dir(dir: Option<&PathBuf>) -> Result<PathBuf> {
    let dir = dir.cloned().unwrap_or_else(|| PathBuf::from("dtomo-out"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    Ok(dir)
}

struct Writer {
    dir: PathBuf,
    prov: Provenance,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(cfg: &PipelineConfig) -> Result<Self> {
        Ok(Writer {
            dir: out_dir(cfg.outputs.as_ref())?,
            prov: Provenance {
                command: std::env::args().collect::<Vec<_>>().join(" "),
                seed: cfg.noise.seed,
            },
            written: Vec::new(),
        })
    }

    fn array(&mut self, name: &str, data: &ArrayData) -> Result<()> {
        let base = self.dir.join(name);
        write_array(&base, data, &self.prov)?;
        let (bin, json) = io::array_paths(&base);
        self.written.extend([bin, json]);
        Ok(())
    }

    fn csv_matrix(&mut self, name: &str, rho: &DensityMatrix) -> Result<()> {
        let p = self.dir.join(name);
        csv::write_matrix(&p, rho)?;
        self.written.push(p);
        Ok(())
    }

    fn paths(&self) -> Value {
        json!(self.written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
    }
}

fn read(path: &Path) -> Result<ArrayData> {
    Ok(read_array(path)?.0)
}

fn diagnostics_json(rho: &DensityMatrix) -> Value {
    let d = rho.diagnostics();
    json!({
        "trace_re": d.trace.re,
        "trace_im": d.trace.im,
        "hermiticity_defect": d.hermiticity_defect,
        "min_eigenvalue": d.min_eigenvalue,
        "purity": purity(rho),
    })
}

fn run(cli: &Cli) -> Result<Value> {
    let common = &cli.common;
    match &cli.command {
        Command::Generate(source) => {
            let cfg = settings(common, Some(source))?;
            let rho = assemble_density_matrix(&cfg.mixture, &cfg.grid).map_err(|e| Error::Stage {
                stage: "generate",
                source: Box::new(e),
            })?;
            let mut w = Writer::new(&cfg)?;
            w.array("rho_true", &ArrayData::Density(rho.clone()))?;
            if cfg.emit_csv {
                w.csv_matrix("rho_true.csv", &rho)?;
            }
            Ok(json!({
                "n_cells": cfg.grid.n_cells(),
                "extent_mm": cfg.grid.extent_mm(),
                "probs": cfg.mixture.probs(),
                "diagnostics": diagnostics_json(&rho),
                "outputs": w.paths(),
            }))
        }
        Command::Forward { input } => {
            let cfg = settings(common, None)?;
            let rho = read(input)?.into_density()?;
            let frames = forward_frames(&rho, rho.grid())?;
            let frames = apply_noise(&frames, &cfg.noise)?;
            let mut w = Writer::new(&cfg)?;
            if cfg.mosaic {
                let image = to_mosaic(&frames);
                w.array("mosaic", &ArrayData::Mosaic { image, grid: *rho.grid() })?;
            } else {
                w.array("frames", &ArrayData::Frames(frames.clone()))?;
            }
            Ok(json!({
                "n_cells": rho.dim(),
                "noise": cfg.noise,
                "total_intensity": frames.total_intensity(),
                "closure_defect": frames.closure_defect(),
                "outputs": w.paths(),
            }))
        }
        Command::Reconstruct { input } => {
            let cfg = settings(common, None)?;
            let frames = read(input)?.into_frames()?;
            let filtered = gaussian_filter(&frames, cfg.filter_sigma_px)?;
            let raw = reconstruct_density(&filtered)?;
            let mut rho = hermitize(&raw);
            if cfg.renormalize {
                rho = renormalize_trace(&rho)?;
            }
            let mut w = Writer::new(&cfg)?;
            w.array("rho_raw", &ArrayData::Density(raw.clone()))?;
            w.array("rho", &ArrayData::Density(rho.clone()))?;
            if cfg.emit_csv {
                w.csv_matrix("rho.csv", &rho)?;
            }
            Ok(json!({
                "filter_sigma_px": cfg.filter_sigma_px,
                "renormalized": cfg.renormalize,
                "raw": diagnostics_json(&raw),
                "final": diagnostics_json(&rho),
                "outputs": w.paths(),
            }))
        }
        Command::Decompose { input, modes } => {
            let cfg = settings(common, None)?;
            let rho = read(input)?.into_density()?;
            let res = decompose_density(&rho, *modes)?;
            let mut fidelities = vec![None; res.modes.len()];
            if common.config.is_some() {
                let states = cfg.mixture.states(rho.grid())?;
                let probs = cfg.mixture.probs();
                let mut order: Vec<usize> = (0..states.len()).collect();
                order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
                let theory: Vec<_> = order.iter().map(|&k| states[k].clone()).collect();
                for m in match_modes(&theory, &res.modes)? {
                    fidelities[m.recovered] = Some(m.fidelity);
                }
            }
            let mut w = Writer::new(&cfg)?;
            for (k, mode) in res.modes.iter().enumerate() {
                w.array(&format!("mode_{}", k + 1), &ArrayData::Mode(mode.clone()))?;
                if cfg.emit_csv {
                    let p = w.dir.join(format!("mode_{}.csv", k + 1));
                    csv::write_mode(&p, mode)?;
                    w.written.push(p);
                }
            }
            let table = w.dir.join("modes.csv");
            csv::write_mode_table(&table, &res.weights, &fidelities)?;
            w.written.push(table);
            let clusters: Vec<[usize; 2]> = res
                .degenerate_clusters()
                .iter()
                .filter(|r| r.len() > 1)
                .map(|r| [r.start, r.end])
                .collect();
            Ok(json!({
                "weights": res.weights,
                "singular_values": res.singular_values(),
                "residual": res.residual,
                "fidelities": fidelities,
                "degenerate_clusters": clusters,
                "outputs": w.paths(),
            }))
        }
        Command::Metrics { reference, input } => {
            let reference = read(reference)?.into_density()?;
            let measured = read(input)?.into_density()?;
            let report = MetricsReport::compare(&reference, &measured)?.to_flat_json();
            if let Some(dir) = &common.out {
                let path = out_dir(Some(dir))?.join("metrics.json");
                let text = serde_json::to_string_pretty(&report).expect("json") + "\n";
                std::fs::write(&path, text).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
            }
            Ok(report)
        }
        Command::ScanBaseline { input, n, steps } => {
            let Some(input) = input else {
                let n = n.ok_or_else(|| Error::Config("scan-baseline needs --input or --n".into()))?;
                return Ok(json!({ "resources": resource_report(n) }));
            };
            let cfg = settings(common, None)?;
            let rho = read(input)?.into_density()?;
            let plan = match steps {
                2 => ScanPlan::two_step(rho.dim())?,
                4 => ScanPlan::four_step(rho.dim())?,
                s => return Err(Error::InvalidPlan(format!("unsupported step count {s}"))),
            };
            let scan = scan_reconstruct(&rho, &plan, &cfg.noise)?;
            let mut w = Writer::new(&cfg)?;
            w.array("rho_scan", &ArrayData::Density(scan.clone()))?;
            Ok(json!({
                "measurements": plan.measurements_total(),
                "phase_steps": plan.phase_steps(),
                "trace_distance": trace_distance(&rho, &scan)?,
                "resources": resource_report(rho.dim() as u64),
                "outputs": w.paths(),
            }))
        }
        Command::Pipeline(source) => {
            let cfg = settings(common, Some(source))?;
            let run = run_pipeline(&cfg)?;
            let dir = out_dir(cfg.outputs.as_ref())?;
            let written = run.write_artifacts(&dir, &std::env::args().collect::<Vec<_>>().join(" "))?;
            Ok(json!({
                "n_cells": cfg.grid.n_cells(),
                "noise": cfg.noise,
                "filter_sigma_px": cfg.filter_sigma_px,
                "renormalized": cfg.renormalize,
                "weights": run.decomposition.weights,
                "metrics": run.report.to_flat_json(),
                "outputs": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = cli.command.name();
    let (report, code) = match run(&cli) {
        Ok(mut body) => {
            if let Value::Object(map) = &mut body {
                map.insert("command".into(), json!(command));
                map.insert("status".into(), json!("ok"));
            }
            (body, 0)
        }
        Err(e) => {
            eprintln!("dtomo {command}: {e}");
            let body = json!({
                "command": command,
                "status": "error",
                "stage": e.stage(),
                "code": e.code(),
                "message": e.to_string(),
            });
            (body, e.code())
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("json");
    // a closed stdout (e.g. piped into `head`) must not turn into a panic
    let _ = writeln!(std::io::stdout(), "{text}");
    ExitCode::from(code as u8)
}
