//! The alternating minimax loop and inference-time imputation.
//!
//! Per mini-batch the discriminator is updated first, then the classifier
//! (sharing the discriminator's trunk), then the generator. Pseudo-labels are
//! refreshed once per epoch after the warm-up.

mod config;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use config::TrainConfig;

use crate::data::{mask_labels, DataMatrix, Dataset};
use crate::error::{Result, SeganError};
use crate::model::{
    classifier_forward, classifier_objective, discriminator_objective, generator_forward,
    generator_objective, impute_combine, noise_fill, pseudo_label, sample_hint, Batch,
    GeneratorLoss, SeganModel, Variant,
};
use crate::numerics::{adam_step, AdamState, GradientStore, Matrix};
use crate::rng::{seeded, Stream};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean generator objective over the epoch's batches.
    pub generator_loss: f64,
    /// Mean reconstruction term (already divided by batch size).
    pub reconstruction_loss: f64,
    pub discriminator_loss: Option<f64>,
    pub classifier_loss: Option<f64>,
    /// Unlabeled samples carrying a pseudo-label after this epoch.
    pub pseudo_labels: usize,
    pub wall_clock_secs: f64,
}

// Timing is excluded: two runs with the same seed compare equal.
impl PartialEq for EpochRecord {
    fn eq(&self, other: &Self) -> bool {
        self.epoch == other.epoch
            && self.generator_loss.to_bits() == other.generator_loss.to_bits()
            && self.reconstruction_loss.to_bits() == other.reconstruction_loss.to_bits()
            && self.discriminator_loss.map(f64::to_bits)
                == other.discriminator_loss.map(f64::to_bits)
            && self.classifier_loss.map(f64::to_bits) == other.classifier_loss.map(f64::to_bits)
            && self.pseudo_labels == other.pseudo_labels
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
}

impl TrainReport {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

/// Optimizer state: one group for the generator, one for the shared trunk and heads.
#[derive(Debug, Clone)]
pub struct Optimizers {
    generator: AdamState,
    trunk: AdamState,
    disc_head: AdamState,
    class_head: Option<AdamState>,
}

impl Optimizers {
    pub fn new(model: &SeganModel) -> Self {
        Optimizers {
            generator: AdamState::new(&model.generator_layers()),
            trunk: AdamState::new(&[&model.trunk]),
            disc_head: AdamState::new(&[&model.disc_head]),
            class_head: model.class_head.as_ref().map(|h| AdamState::new(&[h])),
        }
    }
}

fn split_trunk(grads: GradientStore) -> (GradientStore, GradientStore) {
    let mut layers = grads.layers.into_iter();
    let trunk = GradientStore {
        layers: layers.next().into_iter().collect(),
    };
    let head = GradientStore {
        layers: layers.collect(),
    };
    (trunk, head)
}

/// Model scaffold for the requested variant.
pub fn build_variant<R: rand::Rng + ?Sized>(
    config: &TrainConfig,
    variant: Variant,
    features: usize,
    classes: Option<usize>,
    rng: &mut R,
) -> Result<SeganModel> {
    SeganModel::new(features, classes, config, variant, rng)
}

/// Completed matrix `X̂` for the current generator (inference mode).
fn complete_batch(model: &SeganModel, batch: &Batch) -> Result<Matrix> {
    let x_bar = generator_forward(model, &batch.x_noisy, &batch.mask)?;
    impute_combine(&batch.x, &x_bar, &batch.mask)
}

/// One discriminator update; returns the loss. Touches only trunk and discriminator head.
pub fn discriminator_step<R: RngCore>(
    model: &mut SeganModel,
    opt: &mut Optimizers,
    batch: &Batch,
    rng: &mut R,
) -> Result<f64> {
    let x_hat = complete_batch(model, batch)?;
    let lr = model.config.learning_rate;
    let (loss, grads) =
        discriminator_objective(model, batch, &x_hat, model.config.dropout_rate, rng)?;
    let (trunk, head) = split_trunk(grads);
    adam_step(&mut [&mut model.trunk], &trunk, &mut opt.trunk, lr)?;
    adam_step(&mut [&mut model.disc_head], &head, &mut opt.disc_head, lr)?;
    Ok(loss)
}

/// One classifier update on labeled and pseudo-labeled samples.
/// Touches only trunk and classifier head; `None` if the batch has no label.
pub fn classifier_step<R: RngCore>(
    model: &mut SeganModel,
    opt: &mut Optimizers,
    batch: &Batch,
    rng: &mut R,
) -> Result<Option<f64>> {
    let x_hat = complete_batch(model, batch)?;
    let lr = model.config.learning_rate;
    let Some((loss, grads)) =
        classifier_objective(model, batch, &x_hat, model.config.dropout_rate, rng)?
    else {
        return Ok(None);
    };
    let (trunk, head) = split_trunk(grads);
    let head_opt = opt
        .class_head
        .as_mut()
        .ok_or_else(|| SeganError::Internal("classifier optimizer missing".into()))?;
    let head_layer = model
        .class_head
        .as_mut()
        .ok_or_else(|| SeganError::Internal("classifier head missing".into()))?;
    adam_step(&mut [head_layer], &head, head_opt, lr)?;
    adam_step(&mut [&mut model.trunk], &trunk, &mut opt.trunk, lr)?;
    Ok(Some(loss))
}

/// One generator update; discriminator and classifier stay frozen.
pub fn generator_step<R: RngCore>(
    model: &mut SeganModel,
    opt: &mut Optimizers,
    batch: &Batch,
    rng: &mut R,
) -> Result<GeneratorLoss> {
    let lr = model.config.learning_rate;
    let (loss, grads) = generator_objective(model, batch, model.config.dropout_rate, rng)?;
    let mut layers: Vec<_> = model.generator.iter_mut().collect();
    adam_step(&mut layers, &grads, &mut opt.generator, lr)?;
    Ok(loss)
}

fn make_batch<R: RngCore>(
    model: &SeganModel,
    dataset: &Dataset,
    labels: &[Option<usize>],
    columns: &[usize],
    rng: &mut R,
) -> Result<Batch> {
    let x = dataset.data.select_columns(columns);
    let mask = dataset.mask.select_columns(columns);
    let x_noisy = noise_fill(&x, &mask, rng);
    let hint = sample_hint(&mask, model.hint_rate, rng)?.r;
    Ok(Batch {
        x,
        mask: mask.as_matrix().clone(),
        x_noisy,
        hint,
        labels: columns.iter().map(|&i| labels[i]).collect(),
    })
}

fn with_context(err: SeganError, epoch: usize, batch: usize) -> SeganError {
    match err {
        SeganError::Divergence(msg) => {
            SeganError::Divergence(format!("epoch {epoch}, batch {batch}: {msg}"))
        }
        other => other,
    }
}

struct BatchLosses {
    generator: GeneratorLoss,
    discriminator: Option<f64>,
    classifier: Option<f64>,
}

fn run_batch<R: RngCore>(
    model: &mut SeganModel,
    opt: &mut Optimizers,
    batch: &Batch,
    rng: &mut R,
) -> Result<BatchLosses> {
    let discriminator = if model.uses_discriminator() {
        Some(discriminator_step(model, opt, batch, rng)?)
    } else {
        None
    };
    let classifier = if model.uses_classifier() {
        classifier_step(model, opt, batch, rng)?
    } else {
        None
    };
    let generator = generator_step(model, opt, batch, rng)?;
    Ok(BatchLosses {
        generator,
        discriminator,
        classifier,
    })
}

/// Trains the full model.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(SeganModel, TrainReport)> {
    train_variant(dataset, config, Variant::Full)
}

/// Builds the given variant from `config.seed` and trains it.
pub fn train_variant(
    dataset: &Dataset,
    config: &TrainConfig,
    variant: Variant,
) -> Result<(SeganModel, TrainReport)> {
    config.validate()?;
    if dataset.samples() == 0 || dataset.features() == 0 {
        return Err(SeganError::DatasetTooSmall("dataset is empty".into()));
    }
    let classes = dataset.labels.as_ref().map(|l| l.classes());
    if config.beta > 0.0 && variant != Variant::NoClassifier && classes.is_none() {
        return Err(SeganError::Config(
            "beta > 0 needs class labels; set beta to 0 for unsupervised training".into(),
        ));
    }
    let mut init_rng = seeded(config.seed, Stream::Init);
    let mut model = build_variant(config, variant, dataset.features(), classes, &mut init_rng)?;
    model.schema_fingerprint = dataset.schema_fingerprint.clone();
    let report = fit(&mut model, dataset)?;
    Ok((model, report))
}

/// Runs the training loop on an initialized model.
pub fn fit(model: &mut SeganModel, dataset: &Dataset) -> Result<TrainReport> {
    let config = model.config.clone();
    model.check_input(&dataset.data, "dataset")?;
    let n = dataset.samples();
    let mut rng = seeded(config.seed, Stream::Training);

    let true_labels: Vec<Option<usize>> = match &dataset.labels {
        Some(l) => mask_labels(
            l,
            config.label_rate,
            &mut seeded(config.seed, Stream::Labels),
        )?
        .as_slice()
        .to_vec(),
        None => vec![None; n],
    };
    let mut labels = true_labels.clone();
    let mut opt = Optimizers::new(model);
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = TrainReport::default();

    for epoch in 0..config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let (mut sum_g, mut sum_rec, mut sum_d, mut sum_c) = (0.0, 0.0, 0.0, 0.0);
        let (mut batches, mut c_batches) = (0usize, 0usize);
        for (b, columns) in order.chunks(config.batch_size).enumerate() {
            let losses = make_batch(model, dataset, &labels, columns, &mut rng)
                .and_then(|batch| run_batch(model, &mut opt, &batch, &mut rng))
                .map_err(|e| with_context(e, epoch, b))?;
            sum_g += losses.generator.total;
            sum_rec += losses.generator.reconstruction;
            sum_d += losses.discriminator.unwrap_or(0.0);
            if let Some(lc) = losses.classifier {
                sum_c += lc;
                c_batches += 1;
            }
            batches += 1;
        }

        let mut pseudo = 0;
        if model.uses_classifier() && epoch + 1 >= config.warmup_epochs {
            let x_hat = impute_matrix(model, dataset, &mut rng)?;
            let probs = classifier_forward(model, &x_hat)?;
            labels = pseudo_label(&probs, model.pseudo_label_threshold, &true_labels)?;
            pseudo = labels
                .iter()
                .zip(&true_labels)
                .filter(|(l, t)| l.is_some() && t.is_none())
                .count();
        }

        let denom = batches.max(1) as f64;
        report.epochs.push(EpochRecord {
            epoch,
            generator_loss: sum_g / denom,
            reconstruction_loss: sum_rec / denom,
            discriminator_loss: model.uses_discriminator().then(|| sum_d / denom),
            classifier_loss: model.uses_classifier().then(|| {
                if c_batches > 0 {
                    sum_c / c_batches as f64
                } else {
                    0.0
                }
            }),
            pseudo_labels: pseudo,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        });
        log::debug!(
            "epoch {epoch}: L_G {:.5} L_D {:?} L_C {:?} pseudo {pseudo}",
            sum_g / denom,
            report.epochs.last().and_then(|r| r.discriminator_loss),
            report.epochs.last().and_then(|r| r.classifier_loss),
        );
    }
    Ok(report)
}

fn impute_matrix<R: RngCore>(model: &SeganModel, dataset: &Dataset, rng: &mut R) -> Result<Matrix> {
    let x_noisy = noise_fill(&dataset.data, &dataset.mask, rng);
    let x_bar = generator_forward(model, &x_noisy, &dataset.mask)?;
    impute_combine(&dataset.data, &x_bar, &dataset.mask)
}

/// Completes a dataset with the model's own seed.
pub fn impute(model: &SeganModel, dataset: &Dataset) -> Result<DataMatrix> {
    impute_with_seed(model, dataset, model.config.seed)
}

/// Completes a dataset; observed entries pass through untouched.
pub fn impute_with_seed(model: &SeganModel, dataset: &Dataset, seed: u64) -> Result<DataMatrix> {
    if let (Some(expected), Some(actual)) = (&model.schema_fingerprint, &dataset.schema_fingerprint)
    {
        if expected != actual {
            return Err(SeganError::Config(format!(
                "dataset schema {actual} does not match the model's schema {expected}"
            )));
        }
    }
    if dataset.features() != model.features {
        return Err(SeganError::Config(format!(
            "dataset has {} encoded features, model was trained on {}",
            dataset.features(),
            model.features
        )));
    }
    let mut rng = seeded(seed, Stream::Imputation);
    Ok(DataMatrix::complete(impute_matrix(
        model, dataset, &mut rng,
    )?))
}
