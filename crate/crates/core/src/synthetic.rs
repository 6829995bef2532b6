//! Seeded synthetic tables with known structure, used by tests and examples.
//!
//! Features follow a two-factor model: the first half of the columns loads
//! mostly on factor `z1`, the second half mostly on `z2`, so every column is
//! predictable from the others. The binary label is `1{z1 + 0.5·z2 > 0}`
//! for [`correlated_gaussian`] and `1{Σ x_i > 0}` for [`separable_task`],
//! which is exactly linearly separable on the complete features.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{encode, ColumnSchema, Dataset, RawTable};
use crate::error::Result;
use crate::numerics::Matrix;
use crate::rng::{seeded, Stream};

const NOISE: f64 = 0.35;
pub const LABEL_COLUMN: &str = "label";

/// Raw feature values (features × samples) with a binary label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSet {
    pub values: Matrix,
    pub labels: Vec<usize>,
}

pub fn correlated_gaussian(samples: usize, features: usize, seed: u64) -> SyntheticSet {
    let mut rng = seeded(seed, Stream::Synthetic);
    let mut values = Matrix::zeros(features, samples);
    let mut labels = Vec::with_capacity(samples);
    for j in 0..samples {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        for i in 0..features {
            let (a, b) = if i < features.div_ceil(2) {
                (0.9, 0.3)
            } else {
                (0.3, 0.9)
            };
            let e: f64 = rng.sample(StandardNormal);
            values.set(i, j, a * z1 + b * z2 + NOISE * e);
        }
        labels.push(usize::from(z1 + 0.5 * z2 > 0.0));
    }
    SyntheticSet { values, labels }
}

/// Same features as [`correlated_gaussian`], labeled by the sign of the
/// feature sum.
pub fn separable_task(samples: usize, features: usize, seed: u64) -> SyntheticSet {
    let mut set = correlated_gaussian(samples, features, seed);
    set.labels = set
        .values
        .column_sums()
        .iter()
        .map(|&s| usize::from(s > 0.0))
        .collect();
    set
}

impl SyntheticSet {
    pub fn features(&self) -> usize {
        self.values.rows()
    }

    pub fn samples(&self) -> usize {
        self.values.cols()
    }

    /// Text table with columns `x0..x{d-1}` and a `label` column.
    pub fn to_table(&self) -> RawTable {
        let mut header: Vec<String> = (0..self.features()).map(|i| format!("x{i}")).collect();
        header.push(LABEL_COLUMN.to_string());
        let rows = (0..self.samples())
            .map(|j| {
                let mut row: Vec<Option<String>> = (0..self.features())
                    .map(|i| Some(format!("{}", self.values.get(i, j))))
                    .collect();
                row.push(Some(format!("c{}", self.labels[j])));
                row
            })
            .collect();
        RawTable::new(header, rows, Some(LABEL_COLUMN)).expect("rows match the header")
    }

    /// Fully observed, min-max encoded dataset with labels.
    pub fn dataset(&self) -> Dataset {
        self.encoded().expect("synthetic table always encodes").1
    }

    /// Schema and encoded dataset for the table form of this set.
    pub fn encoded(&self) -> Result<(ColumnSchema, Dataset)> {
        let table = self.to_table();
        let schema = ColumnSchema::infer(&table)?;
        let dataset = encode(&table, &schema)?;
        Ok((schema, dataset))
    }
}
