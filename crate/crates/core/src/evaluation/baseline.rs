//! Column-wise reference imputers.

use crate::data::Dataset;
use crate::numerics::Matrix;

/// Fills each missing entry with its feature's mean over observed entries
/// (0 for a feature with nothing observed).
pub fn column_mean_impute(dataset: &Dataset) -> Matrix {
    fill_rows(dataset, |observed| {
        if observed.is_empty() {
            0.0
        } else {
            observed.iter().sum::<f64>() / observed.len() as f64
        }
    })
}

/// Fills each missing entry with its feature's most frequent observed value;
/// ties go to the smallest value.
pub fn column_mode_impute(dataset: &Dataset) -> Matrix {
    fill_rows(dataset, |observed| {
        let mut sorted = observed.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (mut best, mut best_run) = (0.0, 0);
        let mut i = 0;
        while i < sorted.len() {
            let run = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
            if run > best_run {
                best = sorted[i];
                best_run = run;
            }
            i += run;
        }
        best
    })
}

fn fill_rows(dataset: &Dataset, fill: impl Fn(&[f64]) -> f64) -> Matrix {
    let mut out = dataset.data.as_matrix().clone();
    for r in 0..out.rows() {
        let observed: Vec<f64> = (0..out.cols())
            .filter(|&c| dataset.mask.is_observed(r, c))
            .map(|c| out.get(r, c))
            .collect();
        let value = fill(&observed);
        for c in 0..out.cols() {
            if !dataset.mask.is_observed(r, c) {
                out.set(r, c, value);
            }
        }
    }
    out
}
