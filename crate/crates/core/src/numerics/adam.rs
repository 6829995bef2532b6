use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::mlp::{GradientStore, LayerGradient, MlpLayer};
use crate::error::{Result, SeganError};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Moments {
    weight_m: Matrix,
    weight_v: Matrix,
    bias_m: Vec<f64>,
    bias_v: Vec<f64>,
}

/// Bias-corrected Adam state for an ordered list of layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    moments: Vec<Moments>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(layers: &[&MlpLayer]) -> Self {
        Self::with_constants(layers, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON)
    }

    pub fn with_constants(layers: &[&MlpLayer], beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let moments = layers
            .iter()
            .map(|l| Moments {
                weight_m: Matrix::zeros(l.out_dim(), l.in_dim()),
                weight_v: Matrix::zeros(l.out_dim(), l.in_dim()),
                bias_m: vec![0.0; l.out_dim()],
                bias_v: vec![0.0; l.out_dim()],
            })
            .collect();
        AdamState {
            moments,
            step: 0,
            beta1,
            beta2,
            epsilon,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

fn check_finite(grad: &LayerGradient, layer: usize) -> Result<()> {
    if let Some(pos) = grad.weight.values().iter().position(|v| !v.is_finite()) {
        return Err(SeganError::Divergence(format!(
            "non-finite gradient in layer {layer} weight entry {pos}"
        )));
    }
    if let Some(pos) = grad.bias.iter().position(|v| !v.is_finite()) {
        return Err(SeganError::Divergence(format!(
            "non-finite gradient in layer {layer} bias entry {pos}"
        )));
    }
    Ok(())
}

#[inline]
fn update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    state: (f64, f64, f64),
    correction: (f64, f64),
) {
    let (b1, b2, eps) = state;
    let (c1, c2) = correction;
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m).zip(v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Applies one Adam update in place. Nothing is modified when any gradient
/// entry is non-finite.
pub fn adam_step(
    layers: &mut [&mut MlpLayer],
    grads: &GradientStore,
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<()> {
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(SeganError::Config(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    if layers.len() != grads.layers.len() || layers.len() != state.moments.len() {
        return Err(SeganError::Shape(format!(
            "{} layers, {} gradients, {} optimizer slots",
            layers.len(),
            grads.layers.len(),
            state.moments.len()
        )));
    }
    for (i, (layer, grad)) in layers.iter().zip(&grads.layers).enumerate() {
        grad.weight
            .ensure_shape(layer.out_dim(), layer.in_dim(), "weight gradient")?;
        if grad.bias.len() != layer.out_dim() {
            return Err(SeganError::Shape(format!("bias gradient of layer {i}")));
        }
        state.moments[i].weight_m.ensure_shape(
            layer.out_dim(),
            layer.in_dim(),
            "optimizer moment",
        )?;
        check_finite(grad, i)?;
    }

    state.step += 1;
    let t = state.step as i32;
    let correction = (1.0 - state.beta1.powi(t), 1.0 - state.beta2.powi(t));
    let constants = (state.beta1, state.beta2, state.epsilon);
    for ((layer, grad), mom) in layers.iter_mut().zip(&grads.layers).zip(&mut state.moments) {
        update(
            layer.weight.values_mut(),
            grad.weight.values(),
            mom.weight_m.values_mut(),
            mom.weight_v.values_mut(),
            learning_rate,
            constants,
            correction,
        );
        update(
            &mut layer.bias,
            &grad.bias,
            &mut mom.bias_m,
            &mut mom.bias_v,
            learning_rate,
            constants,
            correction,
        );
    }
    Ok(())
}
