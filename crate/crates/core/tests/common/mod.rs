//! Central finite-difference oracle shared by the integration tests.
#![allow(dead_code)]

pub mod suite;

use segan::numerics::{GradientStore, MlpLayer};

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor for the relative error of near-zero gradients.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

pub fn param_count(layers: &[MlpLayer]) -> usize {
    layers.iter().map(MlpLayer::parameter_count).sum()
}

/// Reads or writes parameter `k`, counting weights (row-major) then biases, layer by layer.
pub fn param(layers: &mut [MlpLayer], mut k: usize, value: Option<f64>) -> f64 {
    for layer in layers.iter_mut() {
        let (rows, cols) = layer.weight.shape();
        if k < rows * cols {
            let old = layer.weight.get(k / cols, k % cols);
            if let Some(v) = value {
                layer.weight.set(k / cols, k % cols, v);
            }
            return old;
        }
        k -= rows * cols;
        if k < rows {
            let old = layer.bias[k];
            if let Some(v) = value {
                layer.bias[k] = v;
            }
            return old;
        }
        k -= rows;
    }
    panic!("parameter index out of range");
}

pub fn flatten(grads: &GradientStore) -> Vec<f64> {
    grads
        .layers
        .iter()
        .flat_map(|g| {
            g.weight
                .values()
                .iter()
                .chain(&g.bias)
                .copied()
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Outcome of comparing analytic gradients against central differences.
#[derive(Debug)]
pub struct FdReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates skipped because the loss has a kink within one step.
    pub kinks: usize,
}

/// Compares `analytic` with central differences of `loss` over every
/// parameter of the layers exposed by `layers_of`.
///
/// A coordinate is treated as sitting on a kink (ReLU or absolute value) when
/// its forward and backward one-sided differences disagree far beyond the
/// curvature a smooth loss could produce over one step.
pub fn check_gradient<M>(
    model: &mut M,
    layers_of: impl Fn(&mut M) -> &mut [MlpLayer],
    loss: impl Fn(&M) -> f64,
    analytic: &[f64],
) -> FdReport {
    let n = param_count(layers_of(model));
    assert_eq!(n, analytic.len(), "gradient length");
    let f0 = loss(model);
    let mut report = FdReport {
        max_rel_error: 0.0,
        checked: 0,
        kinks: 0,
    };
    for (k, &a) in analytic.iter().enumerate() {
        let original = param(layers_of(model), k, None);
        param(layers_of(model), k, Some(original + FD_STEP));
        let plus = loss(model);
        param(layers_of(model), k, Some(original - FD_STEP));
        let minus = loss(model);
        param(layers_of(model), k, Some(original));

        let forward = (plus - f0) / FD_STEP;
        let backward = (f0 - minus) / FD_STEP;
        if (forward - backward).abs() > 1e-2 * forward.abs().max(backward.abs()).max(1e-2) {
            report.kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        report.max_rel_error = report.max_rel_error.max(relative_error(a, numeric));
        report.checked += 1;
    }
    report
}
