use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{gemm_nn, gemm_nt, gemm_tn, Matrix};
use crate::error::{Result, SeganError};

/// Largest `f64` strictly below one; keeps sigmoid outputs inside (0, 1).
const SIGMOID_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    /// Softmax over each column (sample).
    Softmax,
    Identity,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, SIGMOID_CEIL)
}

impl Activation {
    pub fn apply(self, pre: &Matrix) -> Matrix {
        match self {
            Activation::Relu => pre.map(|z| z.max(0.0)),
            Activation::Sigmoid => pre.map(sigmoid),
            Activation::Identity => pre.clone(),
            Activation::Softmax => {
                let mut out = pre.clone();
                for c in 0..pre.cols() {
                    let max = (0..pre.rows())
                        .map(|r| pre.get(r, c))
                        .fold(f64::NEG_INFINITY, f64::max);
                    let mut total = 0.0;
                    for r in 0..pre.rows() {
                        let e = (pre.get(r, c) - max).exp();
                        out.set(r, c, e);
                        total += e;
                    }
                    for r in 0..pre.rows() {
                        out.set(r, c, out.get(r, c) / total);
                    }
                }
                out
            }
        }
    }

    /// Pulls `grad` (w.r.t. the activation output) back to the pre-activation.
    fn backward(self, grad: &Matrix, pre: &Matrix, out: &Matrix) -> Matrix {
        match self {
            Activation::Relu => grad.zip_map(pre, |g, z| if z > 0.0 { g } else { 0.0 }),
            Activation::Sigmoid => grad.zip_map(out, |g, s| g * s * (1.0 - s)),
            Activation::Identity => grad.clone(),
            Activation::Softmax => {
                let mut dz = Matrix::zeros(grad.rows(), grad.cols());
                for c in 0..grad.cols() {
                    let dot: f64 = (0..grad.rows())
                        .map(|r| grad.get(r, c) * out.get(r, c))
                        .sum();
                    for r in 0..grad.rows() {
                        dz.set(r, c, out.get(r, c) * (grad.get(r, c) - dot));
                    }
                }
                dz
            }
        }
    }
}

/// One fully connected layer: `activation(weight · input + bias)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl MlpLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(SeganError::Shape(format!(
                "bias has {} entries for a layer with {} outputs",
                bias.len(),
                weight.rows()
            )));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(SeganError::Shape("non-finite bias".into()));
        }
        Ok(MlpLayer {
            weight,
            bias,
            activation,
        })
    }

    /// Uniform initialization in ±sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn init<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weight = Matrix::from_fn(out_dim, in_dim, |_, _| rng.random_range(-limit..=limit));
        MlpLayer {
            weight,
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn zero(&mut self) {
        self.weight = Matrix::zeros(self.out_dim(), self.in_dim());
        self.bias.iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn pre_activation(&self, input: &Matrix) -> Matrix {
        let mut z = gemm_nn(&self.weight, input);
        for (r, &b) in self.bias.iter().enumerate() {
            z.row_mut(r).iter_mut().for_each(|v| *v += b);
        }
        z
    }
}

/// Intermediate values of one forward pass, consumed by [`mlp_backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    out: Vec<Matrix>,
    dropout: Vec<Option<Matrix>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.out.last().expect("cache of a non-empty network")
    }
}

fn check_chain(layers: &[&MlpLayer], input: &Matrix) -> Result<()> {
    let first = layers
        .first()
        .ok_or_else(|| SeganError::Shape("network has no layers".into()))?;
    if input.rows() != first.in_dim() {
        return Err(SeganError::Shape(format!(
            "input has {} rows but layer 0 expects {}",
            input.rows(),
            first.in_dim()
        )));
    }
    for (i, pair) in layers.windows(2).enumerate() {
        if pair[0].out_dim() != pair[1].in_dim() {
            return Err(SeganError::Shape(format!(
                "layer {i} emits {} values but layer {} expects {}",
                pair[0].out_dim(),
                i + 1,
                pair[1].in_dim()
            )));
        }
    }
    Ok(())
}

fn forward_impl(
    layers: &[&MlpLayer],
    input: &Matrix,
    mut dropout: Option<(f64, &mut dyn rand::RngCore)>,
) -> Result<(Matrix, ForwardCache)> {
    check_chain(layers, input)?;
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(layers.len()),
        pre: Vec::with_capacity(layers.len()),
        out: Vec::with_capacity(layers.len()),
        dropout: Vec::with_capacity(layers.len()),
    };
    let mut current = input.clone();
    for (i, layer) in layers.iter().enumerate() {
        let z = layer.pre_activation(&current);
        let a = layer.activation.apply(&z);
        let hidden = i + 1 < layers.len();
        let (next, mask) = match dropout.as_mut() {
            Some((rate, rng)) if hidden && *rate > 0.0 => {
                let mask = dropout_mask(a.rows(), a.cols(), *rate, &mut **rng)?;
                (a.hadamard(&mask), Some(mask))
            }
            _ => (a.clone(), None),
        };
        cache.inputs.push(std::mem::replace(&mut current, next));
        cache.pre.push(z);
        cache.out.push(a);
        cache.dropout.push(mask);
    }
    Ok((current, cache))
}

/// Inference-mode forward pass (no dropout).
pub fn mlp_forward(layers: &[&MlpLayer], input: &Matrix) -> Result<(Matrix, ForwardCache)> {
    forward_impl(layers, input, None)
}

/// Training-mode forward pass with inverted dropout after every hidden layer.
pub fn mlp_forward_train<R: rand::RngCore>(
    layers: &[&MlpLayer],
    input: &Matrix,
    dropout_rate: f64,
    rng: &mut R,
) -> Result<(Matrix, ForwardCache)> {
    forward_impl(layers, input, Some((dropout_rate, rng)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl LayerGradient {
    pub fn zeros_like(layer: &MlpLayer) -> Self {
        LayerGradient {
            weight: Matrix::zeros(layer.out_dim(), layer.in_dim()),
            bias: vec![0.0; layer.out_dim()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weight.values().iter().all(|&v| v == 0.0) && self.bias.iter().all(|&v| v == 0.0)
    }

    pub fn add_assign(&mut self, other: &LayerGradient) {
        self.weight.add_assign(&other.weight);
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }
}

/// Per-layer gradients, in the same order as the layers they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientStore {
    pub layers: Vec<LayerGradient>,
}

impl GradientStore {
    pub fn zeros_like(layers: &[&MlpLayer]) -> Self {
        GradientStore {
            layers: layers
                .iter()
                .map(|l| LayerGradient::zeros_like(l))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(LayerGradient::is_zero)
    }
}

/// Gradients of one backward pass: parameters plus the network input.
#[derive(Debug, Clone)]
pub struct Backward {
    pub grads: GradientStore,
    pub input: Matrix,
}

pub fn mlp_backward(
    layers: &[&MlpLayer],
    cache: &ForwardCache,
    output_gradient: &Matrix,
) -> Result<Backward> {
    if cache.pre.len() != layers.len() {
        return Err(SeganError::Internal(format!(
            "cache holds {} layers, network has {}",
            cache.pre.len(),
            layers.len()
        )));
    }
    output_gradient.ensure_same_shape(cache.output(), "output gradient")?;
    let mut grads = Vec::with_capacity(layers.len());
    let mut grad = output_gradient.clone();
    for (i, layer) in layers.iter().enumerate().rev() {
        if cache.pre[i].rows() != layer.out_dim() || cache.inputs[i].rows() != layer.in_dim() {
            return Err(SeganError::Internal(format!(
                "cached activations of layer {i} do not match its parameters"
            )));
        }
        if let Some(mask) = &cache.dropout[i] {
            grad = grad.hadamard(mask);
        }
        let dz = layer
            .activation
            .backward(&grad, &cache.pre[i], &cache.out[i]);
        grads.push(LayerGradient {
            weight: gemm_nt(&dz, &cache.inputs[i]),
            bias: dz.row_sums(),
        });
        grad = gemm_tn(&layer.weight, &dz);
    }
    grads.reverse();
    Ok(Backward {
        grads: GradientStore { layers: grads },
        input: grad,
    })
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else `1 / (1 - rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut R,
) -> Result<Matrix> {
    if !(0.0..1.0).contains(&rate) {
        return Err(SeganError::Config(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    if rate == 0.0 {
        return Ok(Matrix::filled(rows, cols, 1.0));
    }
    let keep = 1.0 / (1.0 - rate);
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            keep
        }
    }))
}
