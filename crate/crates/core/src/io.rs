//! On-disk formats: measurement data sets, ground-truth sidecars, results,
//! and exact-rational group exports.
//!
//! The data set format is deliberately minimal; values are shuffled before
//! writing so that file order can never leak the measurement labels, and
//! the optional `meta` block is never needed for reconstruction. Ground
//! truth travels in a separate sidecar file so reconstruction can be run
//! blind.

use std::fs;
use std::path::Path;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Configuration;
use crate::measurement::{MeasurementEnsemble, MeasurementMode, UnlabeledDataSet, Walk};
use crate::ratmat::RationalMatrix;
use crate::reconstruction::{Claim, Diagnostics, ReconstructionResult};
use crate::symmetry::GroupElement;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(#[from] serde_json::Error),
    #[error("invalid file: {0}")]
    Invalid(String),
}

/// The unlabeled measurement data set as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    pub dimension: usize,
    pub bound: u32,
    pub mode: MeasurementMode,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<DatasetMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub generator_version: String,
}

impl DatasetFile {
    pub fn new(dataset: &UnlabeledDataSet<f64>, mode: MeasurementMode) -> Self {
        Self {
            dimension: dataset.dimension,
            bound: dataset.bound,
            mode,
            values: dataset.values.clone(),
            meta: None,
        }
    }

    pub fn to_dataset(&self) -> Result<UnlabeledDataSet<f64>, IoError> {
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(IoError::Invalid(
                "measurement values must be finite and non-negative".into(),
            ));
        }
        Ok(UnlabeledDataSet {
            values: self.values.clone(),
            dimension: self.dimension,
            bound: self.bound,
        })
    }
}

/// Ground truth for a simulated data set: configuration, ensemble walks,
/// and the labeled values in ensemble order. Written separately from the
/// data set so reconstruction stays blind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarFile {
    pub dimension: usize,
    pub mode: MeasurementMode,
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
    /// Vertex sequences, one per walk, in ensemble order.
    pub walks: Vec<Vec<usize>>,
    /// Value of each walk, in ensemble order (pre-shuffle).
    pub labeled_values: Vec<f64>,
}

impl SidecarFile {
    pub fn configuration(&self) -> Result<Configuration<f64>, IoError> {
        if self.points.is_empty() {
            return Err(IoError::Invalid("sidecar has no points".into()));
        }
        if self.points.iter().any(|p| p.len() != self.dimension) {
            return Err(IoError::Invalid(
                "every point needs exactly `dimension` coordinates".into(),
            ));
        }
        Ok(Configuration::from_coords(self.dimension, &self.points))
    }

    pub fn ensemble(&self) -> Result<MeasurementEnsemble, IoError> {
        let walks: Result<Vec<Walk>, _> =
            self.walks.iter().map(|v| Walk::new(v.clone())).collect();
        let walks = walks.map_err(|e| IoError::Invalid(e.to_string()))?;
        MeasurementEnsemble::new(self.mode, self.points.len(), walks)
            .map_err(|e| IoError::Invalid(e.to_string()))
    }
}

/// A reconstruction result as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub n: usize,
    pub dimension: usize,
    pub mode: MeasurementMode,
    pub scale: f64,
    pub points: Vec<Vec<f64>>,
    /// Walk hypotheses for the claimed values: `(value index, vertices)`.
    pub claims: Vec<(usize, Vec<usize>)>,
    pub diagnostics: serde_json::Value,
}

impl ResultFile {
    pub fn new(result: &ReconstructionResult<f64>) -> Self {
        Self {
            n: result.n,
            dimension: result.configuration.dimension(),
            mode: result.mode,
            scale: result.scale,
            points: result
                .configuration
                .points()
                .iter()
                .map(|p| p.iter().copied().collect())
                .collect(),
            claims: result
                .claims
                .iter()
                .map(|Claim { value_index, walk }| (*value_index, walk.vertices().to_vec()))
                .collect(),
            diagnostics: serde_json::to_value(&result.diagnostics)
                .unwrap_or(serde_json::Value::Null),
        }
    }

    pub fn configuration(&self) -> Result<Configuration<f64>, IoError> {
        if self.points.is_empty() {
            return Err(IoError::Invalid("result has no points".into()));
        }
        Ok(Configuration::from_coords(self.dimension, &self.points))
    }

    pub fn diagnostics(&self) -> Option<Diagnostics> {
        serde_json::from_value(self.diagnostics.clone()).ok()
    }
}

/// Exact-rational export of a group element set: each matrix as rows of
/// `[numerator, denominator]` pairs.
pub fn group_to_json(elements: &[GroupElement]) -> Result<serde_json::Value, IoError> {
    let mut out = Vec::with_capacity(elements.len());
    for e in elements {
        out.push(matrix_to_json(&e.matrix)?);
    }
    Ok(serde_json::Value::Array(out))
}

pub fn matrix_to_json(m: &RationalMatrix) -> Result<serde_json::Value, IoError> {
    let n = m.size();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let e = &m[(i, j)];
            let num = e.numer().to_i64().ok_or_else(|| {
                IoError::Invalid("rational entry numerator exceeds i64".into())
            })?;
            let den = e.denom().to_i64().ok_or_else(|| {
                IoError::Invalid("rational entry denominator exceeds i64".into())
            })?;
            row.push(serde_json::json!([num, den]));
        }
        rows.push(serde_json::Value::Array(row));
    }
    Ok(serde_json::Value::Array(rows))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<DatasetFile, IoError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn read_sidecar(path: &Path) -> Result<SidecarFile, IoError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn read_result(path: &Path) -> Result<ResultFile, IoError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_pseudo_generic;
    use crate::measurement::build_trilateration_ensemble;

    #[test]
    fn dataset_round_trip() {
        let config = sample_pseudo_generic::<f64>(5, 2, 4, 1.0).unwrap();
        let ensemble =
            build_trilateration_ensemble(5, 2, MeasurementMode::Loop, 1, 2, 4).unwrap();
        let ds = ensemble.evaluate(&config, 2, 4).unwrap();
        let file = DatasetFile::new(&ds, MeasurementMode::Loop);
        let text = serde_json::to_string(&file).unwrap();
        let parsed: DatasetFile = serde_json::from_str(&text).unwrap();
        let back = parsed.to_dataset().unwrap();
        assert_eq!(back.values, ds.values);
        assert_eq!(back.dimension, 2);
        assert_eq!(back.bound, 2);
    }

    #[test]
    fn negative_values_rejected() {
        let file = DatasetFile {
            dimension: 2,
            bound: 2,
            mode: MeasurementMode::Loop,
            values: vec![1.0, -0.5],
            meta: None,
        };
        assert!(file.to_dataset().is_err());
    }

    #[test]
    fn group_export_has_pairs() {
        let m = crate::symmetry::regge_matrix();
        let v = matrix_to_json(&m).unwrap();
        // Entry (0,0) is -1/2.
        assert_eq!(v[0][0][0], serde_json::json!(-1));
        assert_eq!(v[0][0][1], serde_json::json!(2));
    }
}
