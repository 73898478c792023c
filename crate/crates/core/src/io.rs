//! Portable array files: a little-endian float64 payload (`<name>.bin`,
//! row-major, complex values interleaved as re, im) next to a JSON sidecar
//! (`<name>.json`) describing kind, shape and grid.
//!
//! Layouts by kind:
//!
//! | kind      | shape         | complex | element order            |
//! |-----------|---------------|---------|--------------------------|
//! | `density` | `[N, N]`      | yes     | `rho[i1][i2]`            |
//! | `frames`  | `[4, N, N]`   | no      | `Gamma_{D,A,R,L}[x][y]`  |
//! | `mode`    | `[N]`         | yes     | `psi[i]`                 |
//! | `mosaic`  | `[2N, 2N]`    | no      | `image[row][col]`        |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::forward::{Image, PolarizationFrames};
use crate::grid::GridSpec;
use crate::linalg::CMatrix;
use crate::state::PureStateVector;

pub const FORMAT_NAME: &str = "dtomo-array";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    Density,
    Frames,
    Mode,
    Mosaic,
}

impl ArrayKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(ArrayKind::Density),
            "frames" => Ok(ArrayKind::Frames),
            "mode" => Ok(ArrayKind::Mode),
            "mosaic" => Ok(ArrayKind::Mosaic),
            other => Err(Error::UnknownKind(other.to_owned())),
        }
    }

    fn is_complex(self) -> bool {
        matches!(self, ArrayKind::Density | ArrayKind::Mode)
    }

    fn expected_shape(self, n: usize) -> Vec<usize> {
        match self {
            ArrayKind::Density => vec![n, n],
            ArrayKind::Frames => vec![4, n, n],
            ArrayKind::Mode => vec![n],
            ArrayKind::Mosaic => vec![2 * n, 2 * n],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub command: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub kind: ArrayKind,
    pub shape: Vec<usize>,
    pub complex: bool,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_budget: Option<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    Density(DensityMatrix),
    Frames(PolarizationFrames),
    Mode(PureStateVector),
    Mosaic { image: Image, grid: GridSpec },
}

impl ArrayData {
    pub fn kind(&self) -> ArrayKind {
        match self {
            ArrayData::Density(_) => ArrayKind::Density,
            ArrayData::Frames(_) => ArrayKind::Frames,
            ArrayData::Mode(_) => ArrayKind::Mode,
            ArrayData::Mosaic { .. } => ArrayKind::Mosaic,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        match self {
            ArrayData::Density(r) => r.grid(),
            ArrayData::Frames(f) => f.grid(),
            ArrayData::Mode(m) => m.grid(),
            ArrayData::Mosaic { grid, .. } => grid,
        }
    }

    fn payload(&self) -> Vec<f64> {
        let mut out = Vec::new();
        match self {
            ArrayData::Density(rho) => {
                let m = rho.elements();
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        out.extend([m[(i, j)].re, m[(i, j)].im]);
                    }
                }
            }
            ArrayData::Frames(fr) => {
                for p in fr.planes() {
                    push_real_rows(p, &mut out);
                }
            }
            ArrayData::Mode(psi) => {
                for a in psi.amplitudes().iter() {
                    out.extend([a.re, a.im]);
                }
            }
            ArrayData::Mosaic { image, .. } => push_real_rows(image, &mut out),
        }
        out
    }

    pub fn into_density(self) -> Result<DensityMatrix> {
        match self {
            ArrayData::Density(r) => Ok(r),
            other => Err(wrong_kind(ArrayKind::Density, other.kind())),
        }
    }

    pub fn into_frames(self) -> Result<PolarizationFrames> {
        match self {
            ArrayData::Frames(f) => Ok(f),
            ArrayData::Mosaic { image, grid } => crate::forward::from_mosaic(&image, &grid),
            other => Err(wrong_kind(ArrayKind::Frames, other.kind())),
        }
    }

    pub fn into_mode(self) -> Result<PureStateVector> {
        match self {
            ArrayData::Mode(m) => Ok(m),
            other => Err(wrong_kind(ArrayKind::Mode, other.kind())),
        }
    }
}

fn wrong_kind(want: ArrayKind, got: ArrayKind) -> Error {
    Error::ShapeMismatch(format!("expected a {want:?} array, found {got:?}"))
}

fn push_real_rows(m: &Image, out: &mut Vec<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
}

/// `<base>.bin` and `<base>.json` for a path given with or without either
/// extension.
pub fn array_paths(path: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let path = path.as_ref();
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let mut bin = base.clone().into_os_string();
    bin.push(".bin");
    let mut json = base.into_os_string();
    json.push(".json");
    (bin.into(), json.into())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes payload and sidecar; each file is replaced atomically.
pub fn write_array(path: impl AsRef<Path>, data: &ArrayData, provenance: &Provenance) -> Result<Sidecar> {
    let (bin, json) = array_paths(path);
    let grid = *data.grid();
    let kind = data.kind();
    let sidecar = Sidecar {
        format: FORMAT_NAME.to_owned(),
        version: FORMAT_VERSION,
        kind,
        shape: kind.expected_shape(grid.n_cells()),
        complex: kind.is_complex(),
        grid,
        photon_budget: match data {
            ArrayData::Frames(f) => f.photon_budget(),
            _ => None,
        },
        provenance: provenance.clone(),
    };
    let payload = data.payload();
    let mut bytes = Vec::with_capacity(payload.len() * 8);
    for v in payload {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(&bin, &bytes)?;
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    write_atomic(&json, text.as_bytes())?;
    Ok(sidecar)
}

fn schema(path: &Path, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Sidecar> {
    let (_, json) = array_paths(path);
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| schema(&json, e.to_string()))?;
    // Kind is checked first so an unrecognised kind gets its own error.
    match value.get("kind").and_then(|k| k.as_str()) {
        Some(k) => {
            ArrayKind::parse(k)?;
        }
        None => return Err(schema(&json, "missing string field `kind`")),
    }
    let sidecar: Sidecar =
        serde_json::from_value(value).map_err(|e| schema(&json, e.to_string()))?;
    if sidecar.format != FORMAT_NAME || sidecar.version != FORMAT_VERSION {
        return Err(schema(
            &json,
            format!("unsupported format {} v{}", sidecar.format, sidecar.version),
        ));
    }
    let want = sidecar.kind.expected_shape(sidecar.grid.n_cells());
    if sidecar.shape != want {
        return Err(schema(
            &json,
            format!("shape {:?} does not match grid (expected {want:?})", sidecar.shape),
        ));
    }
    if sidecar.complex != sidecar.kind.is_complex() {
        return Err(schema(&json, "complex flag inconsistent with kind"));
    }
    Ok(sidecar)
}

/// Reads an array; nothing is returned unless payload and sidecar agree.
pub fn read_array(path: impl AsRef<Path>) -> Result<(ArrayData, Sidecar)> {
    let path = path.as_ref();
    let sidecar = read_sidecar(path)?;
    let (bin, _) = array_paths(path);
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let count: usize = sidecar.shape.iter().product::<usize>() * if sidecar.complex { 2 } else { 1 };
    if bytes.len() != count * 8 {
        return Err(Error::LengthMismatch {
            path: bin,
            expected: count * 8,
            found: bytes.len(),
        });
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let grid = sidecar.grid;
    let n = grid.n_cells();
    let data = match sidecar.kind {
        ArrayKind::Density => {
            let m = CMatrix::from_fn(n, n, |i, j| {
                let k = 2 * (i * n + j);
                Complex64::new(vals[k], vals[k + 1])
            });
            ArrayData::Density(DensityMatrix::new(m, grid)?)
        }
        ArrayKind::Frames => {
            let planes = std::array::from_fn(|f| {
                Image::from_fn(n, n, |i, j| vals[f * n * n + i * n + j])
            });
            let mut frames = PolarizationFrames::new(planes, grid)?;
            if let Some(b) = sidecar.photon_budget {
                frames = frames.with_photon_budget(b);
            }
            ArrayData::Frames(frames)
        }
        ArrayKind::Mode => {
            let v = DVector::from_fn(n, |i, _| Complex64::new(vals[2 * i], vals[2 * i + 1]));
            // Stored modes are taken verbatim; only a zero vector is refused.
            if v.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                return Err(schema(path, "mode payload is identically zero"));
            }
            ArrayData::Mode(PureStateVector::from_unit(v, grid))
        }
        ArrayKind::Mosaic => {
            let w = 2 * n;
            ArrayData::Mosaic {
                image: Image::from_fn(w, w, |i, j| vals[i * w + j]),
                grid,
            }
        }
    };
    Ok((data, sidecar))
}

/// CSV dumps for plotting. Every writer replaces its file atomically.
pub mod csv {
    use std::fmt::Write as _;
    use std::path::Path;

    use super::write_atomic;
    use crate::density::DensityMatrix;
    use crate::error::Result;
    use crate::state::PureStateVector;

    /// `i,j,re,im` for every element.
    pub fn write_matrix(path: &Path, rho: &DensityMatrix) -> Result<()> {
        let n = rho.dim();
        let mut out = String::with_capacity(n * n * 48);
        out.push_str("i,j,re,im\n");
        for i in 0..n {
            for j in 0..n {
                let z = rho.get(i, j);
                writeln!(out, "{i},{j},{:e},{:e}", z.re, z.im).expect("write to string");
            }
        }
        write_atomic(path, out.as_bytes())
    }

    /// `x_mm,re,im` along the grid.
    pub fn write_mode(path: &Path, psi: &PureStateVector) -> Result<()> {
        let g = psi.grid();
        let mut out = String::from("x_mm,re,im\n");
        for (i, a) in psi.amplitudes().iter().enumerate() {
            writeln!(out, "{:e},{:e},{:e}", g.position(i), a.re, a.im).expect("write to string");
        }
        write_atomic(path, out.as_bytes())
    }

    /// `k,weight,fidelity` with `k` counted from 1; missing fidelities are left
    /// empty.
    pub fn write_mode_table(path: &Path, weights: &[f64], fidelities: &[Option<f64>]) -> Result<()> {
        let mut out = String::from("k,weight,fidelity\n");
        for (k, w) in weights.iter().enumerate() {
            match fidelities.get(k).copied().flatten() {
                Some(f) => writeln!(out, "{},{w:e},{f:e}", k + 1),
                None => writeln!(out, "{},{w:e},", k + 1),
            }
            .expect("write to string");
        }
        write_atomic(path, out.as_bytes())
    }
}
