use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::table::RawTable;
use super::{DataMatrix, Dataset, LabelVector, MaskMatrix};
use crate::error::{Result, SeganError};
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric {
        min: f64,
        max: f64,
    },
    /// One-hot encoded; the position in `categories` is the category index.
    Categorical {
        categories: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    /// Number of encoded rows this column expands to.
    pub fn width(&self) -> usize {
        match &self.kind {
            ColumnKind::Numeric { .. } => 1,
            ColumnKind::Categorical { categories } => categories.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub name: String,
    pub classes: Vec<String>,
}

/// How raw columns map onto encoded feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub columns: Vec<ColumnSpec>,
    pub label: Option<LabelSpec>,
}

fn sorted_distinct<'a>(cells: impl Iterator<Item = &'a str>) -> Vec<String> {
    cells
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect()
}

impl ColumnSchema {
    /// Infers column kinds: a column is numeric when every present cell parses
    /// as a finite number, categorical otherwise. Dictionaries are sorted.
    pub fn infer(table: &RawTable) -> Result<Self> {
        let mut columns = Vec::new();
        for col in table.feature_indices() {
            let present: Vec<&str> = table
                .rows
                .iter()
                .filter_map(|r| r[col].as_deref())
                .collect();
            let numbers: Option<Vec<f64>> = present
                .iter()
                .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect();
            let kind = match numbers {
                Some(values) => {
                    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if values.is_empty() {
                        ColumnKind::Numeric { min: 0.0, max: 0.0 }
                    } else {
                        ColumnKind::Numeric { min, max }
                    }
                }
                None => ColumnKind::Categorical {
                    categories: sorted_distinct(present.into_iter()),
                },
            };
            columns.push(ColumnSpec {
                name: table.header[col].clone(),
                kind,
            });
        }
        let label = match (table.label_name(), table.label_cells()) {
            (Some(name), Some(cells)) => Some(LabelSpec {
                name: name.to_string(),
                classes: sorted_distinct(cells.into_iter().flatten()),
            }),
            _ => None,
        };
        Ok(ColumnSchema { columns, label })
    }

    /// Total encoded feature count `d`.
    pub fn encoded_width(&self) -> usize {
        self.columns.iter().map(ColumnSpec::width).sum()
    }

    /// Stable hex digest identifying this schema.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

/// Encodes a raw table into normalized space.
///
/// Numeric columns are min-max scaled (constant columns map to 0);
/// categorical columns expand to one-hot blocks, and a missing categorical
/// cell leaves its whole block missing.
pub fn encode(table: &RawTable, schema: &ColumnSchema) -> Result<Dataset> {
    let feature_idx = table.feature_indices();
    if feature_idx.len() != schema.columns.len() {
        return Err(SeganError::Schema(format!(
            "table has {} feature columns, schema has {}",
            feature_idx.len(),
            schema.columns.len()
        )));
    }
    let d = schema.encoded_width();
    let n = table.samples();
    let mut values = Matrix::zeros(d, n);
    let mut mask = MaskMatrix::zeros(d, n);
    let mut offset = 0;
    for (&col, spec) in feature_idx.iter().zip(&schema.columns) {
        if table.header[col] != spec.name {
            return Err(SeganError::Schema(format!(
                "column {:?} does not match schema column {:?}",
                table.header[col], spec.name
            )));
        }
        match &spec.kind {
            ColumnKind::Numeric { min, max } => {
                let span = max - min;
                for (i, row) in table.rows.iter().enumerate() {
                    let Some(cell) = row[col].as_deref() else {
                        continue;
                    };
                    let x: f64 = cell
                        .parse()
                        .ok()
                        .filter(|v: &f64| v.is_finite())
                        .ok_or_else(|| {
                            SeganError::Schema(format!(
                                "column {:?}: {cell:?} is not numeric",
                                spec.name
                            ))
                        })?;
                    let scaled = if span > 0.0 { (x - min) / span } else { 0.0 };
                    values.set(offset, i, scaled);
                    mask.set(offset, i, true);
                }
            }
            ColumnKind::Categorical { categories } => {
                let index: HashMap<&str, usize> = categories
                    .iter()
                    .enumerate()
                    .map(|(k, c)| (c.as_str(), k))
                    .collect();
                for (i, row) in table.rows.iter().enumerate() {
                    let Some(cell) = row[col].as_deref() else {
                        continue;
                    };
                    let k = *index.get(cell).ok_or_else(|| {
                        SeganError::Schema(format!(
                            "column {:?}: unseen category {cell:?}",
                            spec.name
                        ))
                    })?;
                    for j in 0..categories.len() {
                        values.set(offset + j, i, if j == k { 1.0 } else { 0.0 });
                        mask.set(offset + j, i, true);
                    }
                }
            }
        }
        offset += spec.width();
    }

    let labels = match (&schema.label, table.label_cells()) {
        (Some(spec), Some(cells)) => {
            let index: HashMap<&str, usize> = spec
                .classes
                .iter()
                .enumerate()
                .map(|(k, c)| (c.as_str(), k))
                .collect();
            let labels = cells
                .into_iter()
                .map(|c| match c {
                    None => Ok(None),
                    Some(c) => index
                        .get(c)
                        .map(|&k| Some(k))
                        .ok_or_else(|| SeganError::Schema(format!("unseen label class {c:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            Some(LabelVector::new(labels, spec.classes.len())?)
        }
        (None, None) => None,
        _ => {
            return Err(SeganError::Schema(
                "label column present in only one of table and schema".into(),
            ))
        }
    };

    let mut dataset = Dataset::new(DataMatrix::new(values, &mask)?, mask, labels)?;
    dataset.schema_fingerprint = Some(schema.fingerprint());
    Ok(dataset)
}

fn format_number(x: f64) -> String {
    // Shortest representation that round-trips.
    format!("{x}")
}

/// Maps an encoded matrix back to text cells, one row per sample over the
/// feature columns. One-hot blocks decode to their argmax category.
pub fn decode(data: &Matrix, schema: &ColumnSchema) -> Result<Vec<Vec<String>>> {
    if data.rows() != schema.encoded_width() {
        return Err(SeganError::Shape(format!(
            "matrix has {} rows, schema encodes {}",
            data.rows(),
            schema.encoded_width()
        )));
    }
    let mut rows = vec![Vec::with_capacity(schema.columns.len()); data.cols()];
    let mut offset = 0;
    for spec in &schema.columns {
        for (i, row) in rows.iter_mut().enumerate() {
            let cell = match &spec.kind {
                ColumnKind::Numeric { min, max } => {
                    format_number(min + data.get(offset, i) * (max - min))
                }
                ColumnKind::Categorical { categories } => {
                    let best = (0..categories.len())
                        .max_by(|&a, &b| {
                            data.get(offset + a, i)
                                .total_cmp(&data.get(offset + b, i))
                                .then(b.cmp(&a))
                        })
                        .ok_or_else(|| {
                            SeganError::Schema(format!("column {:?} has no categories", spec.name))
                        })?;
                    categories[best].clone()
                }
            };
            row.push(cell);
        }
        offset += spec.width();
    }
    Ok(rows)
}
