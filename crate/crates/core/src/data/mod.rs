//! Datasets: CSV ingestion, encoding to normalized space, and missingness.
//!
//! Encoded matrices use the feature-by-sample layout (`d × n`). Missing
//! entries are flagged by a zero in the [`MaskMatrix`] and carry `0.0` in
//! the numeric slot of the [`DataMatrix`].

mod encode;
mod missing;
mod table;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

pub use encode::{decode, encode, ColumnKind, ColumnSchema, ColumnSpec, LabelSpec};
pub use missing::{holdout_known, inject_mcar, mask_labels, HoldoutSet};
pub use table::{load_csv, write_csv, RawTable, MISSING_TOKENS};

use crate::error::{Result, SeganError};
use crate::numerics::Matrix;

/// Binary observed (1) / missing (0) indicator matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct MaskMatrix(Matrix);

impl TryFrom<Matrix> for MaskMatrix {
    type Error = SeganError;

    fn try_from(m: Matrix) -> Result<Self> {
        MaskMatrix::from_matrix(m)
    }
}

impl From<MaskMatrix> for Matrix {
    fn from(m: MaskMatrix) -> Matrix {
        m.0
    }
}

impl MaskMatrix {
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.values().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(SeganError::Shape("mask entries must be 0 or 1".into()));
        }
        Ok(MaskMatrix(m))
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut observed: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        MaskMatrix(Matrix::from_fn(rows, cols, |r, c| {
            if observed(r, c) {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        MaskMatrix(Matrix::filled(rows, cols, 1.0))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        MaskMatrix(Matrix::zeros(rows, cols))
    }

    #[inline]
    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.0.get(row, col) == 1.0
    }

    pub fn observed_count(&self) -> usize {
        self.0.values().iter().filter(|&&v| v == 1.0).count()
    }

    pub fn missing_count(&self) -> usize {
        self.0.len() - self.observed_count()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn select_columns(&self, columns: &[usize]) -> MaskMatrix {
        MaskMatrix(self.0.select_columns(columns))
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, observed: bool) {
        self.0.set(row, col, if observed { 1.0 } else { 0.0 });
    }
}

impl Deref for MaskMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Feature values with missing slots zeroed; missingness lives in the paired mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix(Matrix);

impl DataMatrix {
    /// Wraps `values`, zeroing every slot the mask marks as missing.
    pub fn new(values: Matrix, mask: &MaskMatrix) -> Result<Self> {
        values.ensure_same_shape(mask, "data vs mask")?;
        Ok(DataMatrix(values.hadamard(mask)))
    }

    /// Wraps a matrix that has no missing entries.
    pub fn complete(values: Matrix) -> Self {
        DataMatrix(values)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl Deref for DataMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Per-sample class labels; `None` marks an absent label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<Option<usize>>,
    classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<Option<usize>>, classes: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().flatten().find(|&&y| y >= classes) {
            return Err(SeganError::Config(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(LabelVector { labels, classes })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, sample: usize) -> Option<usize> {
        self.labels[sample]
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn present_count(&self) -> usize {
        self.labels.iter().filter(|y| y.is_some()).count()
    }

    pub fn select(&self, samples: &[usize]) -> LabelVector {
        LabelVector {
            labels: samples.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    pub(crate) fn set(&mut self, sample: usize, label: Option<usize>) {
        self.labels[sample] = label;
    }
}

/// An encoded dataset ready for training or imputation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub data: DataMatrix,
    pub mask: MaskMatrix,
    pub labels: Option<LabelVector>,
    /// Fingerprint of the schema the data was encoded with, if any.
    pub schema_fingerprint: Option<String>,
}

impl Dataset {
    pub fn new(data: DataMatrix, mask: MaskMatrix, labels: Option<LabelVector>) -> Result<Self> {
        data.ensure_same_shape(&mask, "data vs mask")?;
        if let Some(l) = &labels {
            if l.len() != data.cols() {
                return Err(SeganError::Shape(format!(
                    "{} labels for {} samples",
                    l.len(),
                    data.cols()
                )));
            }
        }
        let data = DataMatrix::new(data.into_matrix(), &mask)?;
        Ok(Dataset {
            data,
            mask,
            labels,
            schema_fingerprint: None,
        })
    }

    pub fn features(&self) -> usize {
        self.data.rows()
    }

    pub fn samples(&self) -> usize {
        self.data.cols()
    }

    /// Same data under a different mask (entries the new mask hides are zeroed).
    pub fn with_mask(&self, mask: MaskMatrix) -> Result<Dataset> {
        let data = DataMatrix::new(self.data.as_matrix().clone(), &mask)?;
        Ok(Dataset {
            data,
            mask,
            labels: self.labels.clone(),
            schema_fingerprint: self.schema_fingerprint.clone(),
        })
    }

    pub fn with_labels(mut self, labels: Option<LabelVector>) -> Result<Dataset> {
        if let Some(l) = &labels {
            if l.len() != self.samples() {
                return Err(SeganError::Shape(format!(
                    "{} labels for {} samples",
                    l.len(),
                    self.samples()
                )));
            }
        }
        self.labels = labels;
        Ok(self)
    }
}
