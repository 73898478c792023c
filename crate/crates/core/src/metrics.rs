//! Distances and physicality diagnostics for density matrices.

use num_complex::Complex64;
use serde_json::{Map, Number, Value};

pub use crate::density::Diagnostics;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

fn check_shapes(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.elements().shape() != b.elements().shape() {
        return Err(Error::ShapeMismatch(format!(
            "cannot compare {}x{} with {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `D` or `-D`, whichever has a positive leading nonzero component, so both
/// argument orders hand the solver the same matrix.
fn canonical_sign(mut d: CMatrix) -> CMatrix {
    let lead = d
        .iter()
        .flat_map(|z| [z.re, z.im])
        .find(|v| *v != 0.0)
        .unwrap_or(0.0);
    if lead < 0.0 {
        d.neg_mut();
    }
    d
}

/// `1/2 sum |lambda_i|` over the eigenvalues of the difference of the
/// Hermitian parts of `a` and `b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_shapes(a, b)?;
    let diff = linalg::hermitian_part(a.elements()) - linalg::hermitian_part(b.elements());
    let diff = canonical_sign(linalg::hermitian_part(&diff));
    Ok(0.5 * linalg::hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
}

/// `1/2 Tr sqrt(D D^dagger)` for `D = a - b` taken as-is, i.e. half the sum
/// of singular values. Equals [`trace_distance`] when both inputs are
/// Hermitian.
pub fn raw_trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_shapes(a, b)?;
    let diff = canonical_sign(a.elements() - b.elements());
    Ok(0.5 * diff.singular_values().sum())
}

/// `Re Tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.elements();
    let n = rho.dim();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (m[(i, j)] * m[(j, i)]).re;
        }
    }
    acc
}

pub fn diagnostics(rho: &DensityMatrix) -> Diagnostics {
    rho.diagnostics()
}

/// Flat summary comparing a measured matrix with its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Distance between the Hermitian parts of reference and measured.
    pub trace_distance: f64,
    /// Distance computed on the raw difference, reported when the measured
    /// matrix was not Hermitian.
    pub trace_distance_raw: Option<f64>,
    /// Distance before trace renormalization, when that step was applied.
    pub trace_distance_unnormalized: Option<f64>,
    pub purity: f64,
    pub trace: Complex64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// Fidelity of each generating state with its best-matching recovered mode.
    pub per_mode_fidelities: Vec<f64>,
    /// Same, against the coherent modes of the reference matrix.
    pub coherent_mode_fidelities: Vec<f64>,
}

impl MetricsReport {
    pub fn compare(reference: &DensityMatrix, measured: &DensityMatrix) -> Result<Self> {
        let diag = measured.diagnostics();
        let trace_distance = trace_distance(reference, measured)?;
        let trace_distance_raw = if diag.hermiticity_defect > 0.0 {
            Some(raw_trace_distance(reference, measured)?)
        } else {
            None
        };
        Ok(MetricsReport {
            trace_distance,
            trace_distance_raw,
            trace_distance_unnormalized: None,
            purity: purity(measured),
            trace: diag.trace,
            hermiticity_defect: diag.hermiticity_defect,
            min_eigenvalue: diag.min_eigenvalue,
            per_mode_fidelities: Vec::new(),
            coherent_mode_fidelities: Vec::new(),
        })
    }

    /// One JSON object with scalar values only; per-mode fidelities become
    /// `fidelity_1`, `fidelity_2`, ... (and `coherent_fidelity_k`).
    pub fn to_flat_json(&self) -> Value {
        let mut map = Map::new();
        let mut put = |k: &str, v: f64| {
            let v = Number::from_f64(v).map_or(Value::Null, Value::Number);
            map.insert(k.to_owned(), v);
        };
        put("trace_distance", self.trace_distance);
        if let Some(v) = self.trace_distance_raw {
            put("trace_distance_raw", v);
        }
        if let Some(v) = self.trace_distance_unnormalized {
            put("trace_distance_unnormalized", v);
        }
        put("purity", self.purity);
        put("trace_re", self.trace.re);
        put("trace_im", self.trace.im);
        put("hermiticity_defect", self.hermiticity_defect);
        put("min_eigenvalue", self.min_eigenvalue);
        for (k, f) in self.per_mode_fidelities.iter().enumerate() {
            put(&format!("fidelity_{}", k + 1), *f);
        }
        for (k, f) in self.coherent_mode_fidelities.iter().enumerate() {
            put(&format!("coherent_fidelity_{}", k + 1), *f);
        }
        Value::Object(map)
    }
}
