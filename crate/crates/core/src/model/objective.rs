//! Per-batch objectives with their parameter gradients.
//!
//! Each objective only differentiates the parameters its optimizer step owns:
//! the discriminator and classifier objectives treat `X̂` as a constant, and
//! the generator objective runs the discriminator and classifier in inference
//! mode and returns generator gradients only.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::loss::{
    adversarial_loss, adversarial_loss_grad, classifier_loss, classifier_loss_grad,
    discriminator_loss, discriminator_loss_grad, reconstruction_grad, reconstruction_loss,
};
use super::{impute_combine, SeganModel};
use crate::error::{Result, SeganError};
use crate::numerics::{mlp_backward, mlp_forward, mlp_forward_train, GradientStore, Matrix};

/// One mini-batch with its random draws already made.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// Observed values; missing slots hold 0.
    pub x: Matrix,
    pub mask: Matrix,
    /// `x` with noise in the missing slots (generator input).
    pub x_noisy: Matrix,
    /// Hint matrix `R`.
    pub hint: Matrix,
    /// True and pseudo labels.
    pub labels: Vec<Option<usize>>,
}

impl Batch {
    pub fn samples(&self) -> usize {
        self.x.cols()
    }

    fn has_labels(&self) -> bool {
        self.labels.iter().any(Option::is_some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorLoss {
    /// Masked absolute error divided by the batch size.
    pub reconstruction: f64,
    /// Mean `log(1 − D)` over missing entries (before weighting by α).
    pub adversarial: f64,
    /// Cross-entropy over labeled samples (before weighting by β).
    pub classifier: f64,
    pub total: f64,
}

fn hint_free(x_hat: &Matrix) -> Result<Matrix> {
    x_hat.vstack(&Matrix::filled(x_hat.rows(), x_hat.cols(), 0.5))
}

fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SeganError::Divergence(format!("{what} is {value}")))
    }
}

/// Value of the generator objective for already computed `X̄` and `X̂`.
pub fn generator_loss(
    model: &SeganModel,
    x: &Matrix,
    x_bar: &Matrix,
    x_hat: &Matrix,
    mask: &Matrix,
    hint: &Matrix,
    labels: &[Option<usize>],
) -> Result<GeneratorLoss> {
    let n = x.cols().max(1) as f64;
    let reconstruction = reconstruction_loss(x, x_bar, mask)? / n;
    let adversarial = if model.uses_discriminator() {
        let d = super::discriminator_forward(model, x_hat, hint)?;
        adversarial_loss(mask, &d)?
    } else {
        0.0
    };
    let classifier = if model.uses_classifier() && labels.iter().any(Option::is_some) {
        let probs = super::classifier_forward(model, x_hat)?;
        classifier_loss(labels, &probs)?
    } else {
        0.0
    };
    let total = reconstruction + model.alpha * adversarial + model.beta * classifier;
    Ok(GeneratorLoss {
        reconstruction,
        adversarial,
        classifier,
        total: finite(total, "generator loss")?,
    })
}

/// Generator objective and its gradient with respect to the generator parameters.
pub fn generator_objective<R: RngCore>(
    model: &SeganModel,
    batch: &Batch,
    dropout_rate: f64,
    rng: &mut R,
) -> Result<(GeneratorLoss, GradientStore)> {
    model.check_input(&batch.x, "batch")?;
    let n = batch.samples().max(1) as f64;
    let layers = model.generator_layers();
    let input = batch.x_noisy.vstack(&batch.mask)?;
    let (x_bar, cache) = mlp_forward_train(&layers, &input, dropout_rate, rng)?;
    let x_hat = impute_combine(&batch.x, &x_bar, &batch.mask)?;

    let reconstruction = reconstruction_loss(&batch.x, &x_bar, &batch.mask)? / n;
    let mut grad_x_bar = reconstruction_grad(&batch.x, &x_bar, &batch.mask).scale(1.0 / n);
    let mut grad_x_hat = Matrix::zeros(x_hat.rows(), x_hat.cols());
    let d = model.features;

    let mut adversarial = 0.0;
    if model.uses_discriminator() {
        let critic = model.discriminator_layers();
        let (d_out, d_cache) = mlp_forward(&critic, &x_hat.vstack(&batch.hint)?)?;
        adversarial = adversarial_loss(&batch.mask, &d_out)?;
        let g = adversarial_loss_grad(&batch.mask, &d_out).scale(model.alpha);
        let back = mlp_backward(&critic, &d_cache, &g)?;
        grad_x_hat.add_assign(&back.input.top_rows(d));
    }

    let mut classifier = 0.0;
    if model.uses_classifier() && batch.has_labels() {
        let head = model.classifier_layers()?;
        let (probs, c_cache) = mlp_forward(&head, &hint_free(&x_hat)?)?;
        classifier = classifier_loss(&batch.labels, &probs)?;
        let g = classifier_loss_grad(&batch.labels, &probs).scale(model.beta);
        let back = mlp_backward(&head, &c_cache, &g)?;
        grad_x_hat.add_assign(&back.input.top_rows(d));
    }

    // X̂ depends on X̄ only through the missing entries.
    grad_x_bar.add_assign(&grad_x_hat.zip_map(&batch.mask, |g, m| g * (1.0 - m)));
    let back = mlp_backward(&layers, &cache, &grad_x_bar)?;

    let total = reconstruction + model.alpha * adversarial + model.beta * classifier;
    let loss = GeneratorLoss {
        reconstruction,
        adversarial,
        classifier,
        total: finite(total, "generator loss")?,
    };
    Ok((loss, back.grads))
}

/// Discriminator loss on a fixed `X̂`; gradients cover `[trunk, disc_head]`.
pub fn discriminator_objective<R: RngCore>(
    model: &SeganModel,
    batch: &Batch,
    x_hat: &Matrix,
    dropout_rate: f64,
    rng: &mut R,
) -> Result<(f64, GradientStore)> {
    model.check_input(x_hat, "discriminator input")?;
    let layers = model.discriminator_layers();
    let (m_hat, cache) =
        mlp_forward_train(&layers, &x_hat.vstack(&batch.hint)?, dropout_rate, rng)?;
    let loss = finite(
        discriminator_loss(&batch.mask, &m_hat)?,
        "discriminator loss",
    )?;
    let g = discriminator_loss_grad(&batch.mask, &m_hat);
    let back = mlp_backward(&layers, &cache, &g)?;
    Ok((loss, back.grads))
}

/// Classifier loss on a fixed `X̂`; gradients cover `[trunk, class_head]`.
/// `None` when the batch has no labeled sample.
pub fn classifier_objective<R: RngCore>(
    model: &SeganModel,
    batch: &Batch,
    x_hat: &Matrix,
    dropout_rate: f64,
    rng: &mut R,
) -> Result<Option<(f64, GradientStore)>> {
    if !batch.has_labels() {
        return Ok(None);
    }
    model.check_input(x_hat, "classifier input")?;
    let layers = model.classifier_layers()?;
    let (probs, cache) = mlp_forward_train(&layers, &hint_free(x_hat)?, dropout_rate, rng)?;
    let loss = finite(classifier_loss(&batch.labels, &probs)?, "classifier loss")?;
    let g = classifier_loss_grad(&batch.labels, &probs);
    let back = mlp_backward(&layers, &cache, &g)?;
    Ok(Some((loss, back.grads)))
}
