use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataMatrix, LabelVector, MaskMatrix};
use crate::error::{Result, SeganError};

/// Observed entries hidden from training and kept for scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldoutSet {
    cols: usize,
    /// Row-major flat indices, ascending.
    indices: Vec<usize>,
}

impl HoldoutSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `(row, col)` pairs in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.indices.iter().map(|&i| (i / self.cols, i % self.cols))
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.indices.binary_search(&(row * self.cols + col)).is_ok()
    }

    pub fn from_entries(cols: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut indices: Vec<usize> = entries.into_iter().map(|(r, c)| r * cols + c).collect();
        indices.sort_unstable();
        indices.dedup();
        HoldoutSet { cols, indices }
    }
}

/// Deletes each observed entry independently with probability `rate` (MCAR).
pub fn inject_mcar<R: Rng + ?Sized>(
    data: &DataMatrix,
    mask: &MaskMatrix,
    rate: f64,
    rng: &mut R,
) -> Result<(DataMatrix, MaskMatrix)> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(SeganError::Config(format!(
            "missing rate must lie strictly between 0 and 1, got {rate}"
        )));
    }
    data.ensure_same_shape(mask, "data vs mask")?;
    let mut out = mask.clone();
    for r in 0..mask.rows() {
        for c in 0..mask.cols() {
            if mask.is_observed(r, c) && rng.random::<f64>() < rate {
                out.set(r, c, false);
            }
        }
    }
    let corrupted = DataMatrix::new(data.as_matrix().clone(), &out)?;
    Ok((corrupted, out))
}

/// Hides a uniformly random `fraction` of the observed entries.
///
/// Returns the training mask (original minus holdout) and the holdout set.
/// At least one entry is always held out.
pub fn holdout_known<R: Rng + ?Sized>(
    mask: &MaskMatrix,
    fraction: f64,
    rng: &mut R,
) -> Result<(MaskMatrix, HoldoutSet)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(SeganError::Config(format!(
            "holdout fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let cols = mask.cols();
    let observed: Vec<usize> = mask
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 1.0)
        .map(|(i, _)| i)
        .collect();
    if observed.is_empty() {
        return Err(SeganError::DatasetTooSmall(
            "no observed entries to hold out".into(),
        ));
    }
    let count = ((fraction * observed.len() as f64).round() as usize).clamp(1, observed.len());
    let mut indices: Vec<usize> = index::sample(rng, observed.len(), count)
        .into_iter()
        .map(|k| observed[k])
        .collect();
    indices.sort_unstable();
    let mut training = mask.clone();
    for &i in &indices {
        training.set(i / cols, i % cols, false);
    }
    Ok((training, HoldoutSet { cols, indices }))
}

/// Keeps a uniformly random `label_rate` fraction of the present labels.
pub fn mask_labels<R: Rng + ?Sized>(
    labels: &LabelVector,
    label_rate: f64,
    rng: &mut R,
) -> Result<LabelVector> {
    if !(label_rate > 0.0 && label_rate <= 1.0) {
        return Err(SeganError::Config(format!(
            "label rate must lie in (0, 1], got {label_rate}"
        )));
    }
    if label_rate == 1.0 {
        return Ok(labels.clone());
    }
    let present: Vec<usize> = (0..labels.len())
        .filter(|&i| labels.get(i).is_some())
        .collect();
    let keep = (label_rate * present.len() as f64).round() as usize;
    let mut drop = vec![true; present.len()];
    for k in index::sample(rng, present.len(), keep) {
        drop[k] = false;
    }
    let mut out = labels.clone();
    for (&i, _) in present.iter().zip(&drop).filter(|(_, &d)| d) {
        out.set(i, None);
    }
    Ok(out)
}
