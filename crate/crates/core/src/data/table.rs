use std::path::Path;

use super::encode::ColumnSchema;
use crate::error::{Result, SeganError};

/// Cell tokens that parse as missing (after trimming whitespace).
pub const MISSING_TOKENS: [&str; 3] = ["", "NA", "NaN"];

/// A CSV file as text cells, in the original column order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub header: Vec<String>,
    /// One entry per data row; `None` is a missing cell.
    pub rows: Vec<Vec<Option<String>>>,
    /// Position of the label column within `header`, if one was named.
    pub label_index: Option<usize>,
}

impl RawTable {
    pub fn new(
        header: Vec<String>,
        rows: Vec<Vec<Option<String>>>,
        label_column: Option<&str>,
    ) -> Result<Self> {
        if let Some((i, _)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != header.len())
        {
            return Err(SeganError::Shape(format!(
                "row {i} has {} cells, header has {}",
                rows[i].len(),
                header.len()
            )));
        }
        let label_index = match label_column {
            Some(name) => Some(header.iter().position(|h| h == name).ok_or_else(|| {
                SeganError::Config(format!("label column {name:?} not found in header"))
            })?),
            None => None,
        };
        Ok(RawTable {
            header,
            rows,
            label_index,
        })
    }

    pub fn samples(&self) -> usize {
        self.rows.len()
    }

    /// Header positions of the feature (non-label) columns, in order.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.header.len())
            .filter(|&i| Some(i) != self.label_index)
            .collect()
    }

    pub fn label_name(&self) -> Option<&str> {
        self.label_index.map(|i| self.header[i].as_str())
    }

    pub fn label_cells(&self) -> Option<Vec<Option<&str>>> {
        self.label_index.map(|li| {
            self.rows
                .iter()
                .map(|r| r[li].as_deref())
                .collect::<Vec<_>>()
        })
    }

    pub fn missing_cells(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_none()).count()
    }

    /// Fills the table's missing cells.
    ///
    /// `features` holds one decoded row per sample over the feature columns,
    /// `labels` one entry per sample for the label column. Observed cells keep
    /// their original text.
    pub fn completed(
        &self,
        features: &[Vec<String>],
        labels: Option<&[String]>,
    ) -> Result<RawTable> {
        let feature_idx = self.feature_indices();
        if features.len() != self.samples() {
            return Err(SeganError::Shape(format!(
                "{} decoded rows for {} samples",
                features.len(),
                self.samples()
            )));
        }
        let mut rows = self.rows.clone();
        for (row, decoded) in rows.iter_mut().zip(features) {
            if decoded.len() != feature_idx.len() {
                return Err(SeganError::Shape("decoded row width mismatch".into()));
            }
            for (&col, value) in feature_idx.iter().zip(decoded) {
                if row[col].is_none() {
                    row[col] = Some(value.clone());
                }
            }
        }
        if let (Some(li), Some(labels)) = (self.label_index, labels) {
            for (row, label) in rows.iter_mut().zip(labels) {
                if row[li].is_none() {
                    row[li] = Some(label.clone());
                }
            }
        }
        Ok(RawTable {
            header: self.header.clone(),
            rows,
            label_index: self.label_index,
        })
    }
}

fn parse_cell(cell: &str) -> Option<String> {
    let trimmed = cell.trim();
    if MISSING_TOKENS.contains(&trimmed) {
        None
    } else {
        Some(trimmed.to_string())
    }
}

/// Reads a comma-separated file with a header row and infers its schema.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
) -> Result<(RawTable, ColumnSchema)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| SeganError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let parse_err = |line: u64, message: String| SeganError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(parse_err(1, "missing header row".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        rows.push(record.iter().map(parse_cell).collect());
    }
    let table = RawTable::new(header, rows, label_column)?;
    let schema = ColumnSchema::infer(&table)?;
    Ok((table, schema))
}

/// Writes a table as CSV; missing cells are written empty.
pub fn write_csv(path: impl AsRef<Path>, table: &RawTable) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    writer
        .write_record(&table.header)
        .map_err(|e| csv_io(path, e))?;
    for row in &table.rows {
        writer
            .write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))
            .map_err(|e| csv_io(path, e))?;
    }
    writer.flush().map_err(|e| SeganError::io(path, e))?;
    Ok(())
}

fn csv_io(path: &Path, e: csv::Error) -> SeganError {
    SeganError::io(path, std::io::Error::other(e))
}
