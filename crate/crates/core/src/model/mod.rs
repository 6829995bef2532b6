//! The generator / discriminator / classifier triad.
//!
//! The generator is an independent two-layer network over `[X̃; M]`. The
//! discriminator and classifier share a hidden trunk over `[X̂; R]` and differ
//! only in their output heads; the classifier feeds the trunk a constant 0.5
//! in the hint slots, which carries no mask information.

mod loss;
mod objective;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use loss::{
    adversarial_loss, adversarial_loss_grad, classifier_loss, classifier_loss_grad,
    discriminator_loss, discriminator_loss_grad, reconstruction_grad, reconstruction_loss,
    PROB_FLOOR,
};
pub use objective::{
    classifier_objective, discriminator_objective, generator_loss, generator_objective, Batch,
    GeneratorLoss,
};

use crate::data::MaskMatrix;
use crate::error::{Result, SeganError};
use crate::numerics::{mlp_forward, Activation, Matrix, MlpLayer};
use crate::training::TrainConfig;

/// Upper bound of the uniform noise placed in missing slots before the generator runs.
pub const NOISE_SCALE: f64 = 0.01;

/// Model variants: the full model and its three ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    /// Classifier removed (β = 0).
    NoClassifier,
    /// Discriminator removed (α = 0, no adversarial step).
    NoDiscriminator,
    /// Hint matrix fixed at 0.5 everywhere.
    NoHint,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::NoClassifier,
        Variant::NoDiscriminator,
        Variant::NoHint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoClassifier => "no_classifier",
            Variant::NoDiscriminator => "no_discriminator",
            Variant::NoHint => "no_hint",
        }
    }

    /// Short name used in tables (`S-no-C` and friends).
    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "SEGAN",
            Variant::NoClassifier => "S-no-C",
            Variant::NoDiscriminator => "S-no-D",
            Variant::NoHint => "S-no-R",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = SeganError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "SEGAN" => Ok(Variant::Full),
            "no_classifier" | "no-classifier" | "S-no-C" => Ok(Variant::NoClassifier),
            "no_discriminator" | "no-discriminator" | "S-no-D" => Ok(Variant::NoDiscriminator),
            "no_hint" | "no-hint" | "S-no-R" => Ok(Variant::NoHint),
            other => Err(SeganError::Config(format!("unknown variant {other:?}"))),
        }
    }
}

/// Partially revealed mask: `R = K⊙M + 0.5·(1 − K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HintMatrix {
    pub r: Matrix,
    /// Reveal indicator: 1 where `R` shows the mask.
    pub k: Matrix,
}

impl HintMatrix {
    /// A hint that reveals nothing (`K = 0`).
    pub fn uninformative(rows: usize, cols: usize) -> Self {
        HintMatrix {
            r: Matrix::filled(rows, cols, 0.5),
            k: Matrix::zeros(rows, cols),
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> HintMatrix {
        HintMatrix {
            r: self.r.select_columns(columns),
            k: self.k.select_columns(columns),
        }
    }
}

/// Draws `K ~ Bernoulli(hint_rate)` entrywise and forms the hint matrix.
pub fn sample_hint<R: Rng + ?Sized>(
    mask: &MaskMatrix,
    hint_rate: f64,
    rng: &mut R,
) -> Result<HintMatrix> {
    if !(0.0..=1.0).contains(&hint_rate) {
        return Err(SeganError::Config(format!(
            "hint rate must lie in [0, 1], got {hint_rate}"
        )));
    }
    let k = Matrix::from_fn(mask.rows(), mask.cols(), |_, _| {
        if rng.random::<f64>() < hint_rate {
            1.0
        } else {
            0.0
        }
    });
    let r = k.zip_map(mask, |k, m| k * m + 0.5 * (1.0 - k));
    Ok(HintMatrix { r, k })
}

/// Fills missing slots with independent `U[0, NOISE_SCALE]` noise.
pub fn noise_fill<R: Rng + ?Sized>(x: &Matrix, mask: &Matrix, rng: &mut R) -> Matrix {
    Matrix::from_fn(x.rows(), x.cols(), |r, c| {
        if mask.get(r, c) == 1.0 {
            x.get(r, c)
        } else {
            rng.random::<f64>() * NOISE_SCALE
        }
    })
}

/// `X̂ = M⊙X + (1 − M)⊙X̄`, taking observed entries from `x` verbatim.
pub fn impute_combine(x: &Matrix, x_bar: &Matrix, mask: &Matrix) -> Result<Matrix> {
    x.ensure_same_shape(x_bar, "reconstruction")?;
    x.ensure_same_shape(mask, "mask")?;
    Ok(Matrix::from_fn(x.rows(), x.cols(), |r, c| {
        if mask.get(r, c) == 1.0 {
            x.get(r, c)
        } else {
            x_bar.get(r, c)
        }
    }))
}

/// Assigns argmax pseudo-labels to unlabeled samples whose top probability
/// reaches `threshold`. Samples in `known` keep their label.
pub fn pseudo_label(
    probs: &Matrix,
    threshold: f64,
    known: &[Option<usize>],
) -> Result<Vec<Option<usize>>> {
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(SeganError::Config(format!(
            "pseudo-label threshold must lie in (0.5, 1), got {threshold}"
        )));
    }
    if known.len() != probs.cols() {
        return Err(SeganError::Shape(format!(
            "{} labels for {} probability columns",
            known.len(),
            probs.cols()
        )));
    }
    Ok(known
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            y.or_else(|| {
                let (best, p) = (0..probs.rows()).map(|k| (k, probs.get(k, i))).fold(
                    (0, f64::NEG_INFINITY),
                    |acc, cur| if cur.1 > acc.1 { cur } else { acc },
                );
                (p >= threshold).then_some(best)
            })
        })
        .collect())
}

/// Trained (or freshly initialized) parameters plus the settings that shaped them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeganModel {
    pub variant: Variant,
    pub features: usize,
    pub classes: Option<usize>,
    /// `[2d → h, relu]`, `[h → d, sigmoid]`.
    pub generator: Vec<MlpLayer>,
    /// Shared hidden layer `[2d → h, relu]`.
    pub trunk: MlpLayer,
    /// `[h → d, sigmoid]`.
    pub disc_head: MlpLayer,
    /// `[h → q, softmax]`, absent without labels.
    pub class_head: Option<MlpLayer>,
    /// Adversarial weight.
    pub alpha: f64,
    /// Classifier weight.
    pub beta: f64,
    pub hint_rate: f64,
    pub pseudo_label_threshold: f64,
    pub schema_fingerprint: Option<String>,
    pub config: TrainConfig,
}

const MODEL_FORMAT: &str = "segan-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: SeganModel,
}

impl SeganModel {
    /// Randomly initialized model for `features` encoded features and an
    /// optional class count.
    pub fn new<R: Rng + ?Sized>(
        features: usize,
        classes: Option<usize>,
        config: &TrainConfig,
        variant: Variant,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if features == 0 {
            return Err(SeganError::Config(
                "model needs at least one feature".into(),
            ));
        }
        if let Some(q) = classes {
            if q < 2 {
                return Err(SeganError::Config(format!(
                    "classifier needs at least 2 classes, got {q}"
                )));
            }
        }
        let (alpha, beta, hint_rate) = match variant {
            Variant::Full => (config.alpha, config.beta, config.hint_rate),
            Variant::NoClassifier => (config.alpha, 0.0, config.hint_rate),
            Variant::NoDiscriminator => (0.0, config.beta, config.hint_rate),
            Variant::NoHint => (config.alpha, config.beta, 0.0),
        };
        let beta = if classes.is_some() { beta } else { 0.0 };
        let h = config.hidden_width;
        let d = features;
        let generator = vec![
            MlpLayer::init(2 * d, h, Activation::Relu, rng),
            MlpLayer::init(h, d, Activation::Sigmoid, rng),
        ];
        let trunk = MlpLayer::init(2 * d, h, Activation::Relu, rng);
        let disc_head = MlpLayer::init(h, d, Activation::Sigmoid, rng);
        let class_head = classes.map(|q| MlpLayer::init(h, q, Activation::Softmax, rng));
        Ok(SeganModel {
            variant,
            features,
            classes,
            generator,
            trunk,
            disc_head,
            class_head,
            alpha,
            beta,
            hint_rate,
            pseudo_label_threshold: config.pseudo_label_threshold,
            schema_fingerprint: None,
            config: config.clone(),
        })
    }

    pub fn uses_discriminator(&self) -> bool {
        self.variant != Variant::NoDiscriminator && self.alpha > 0.0
    }

    pub fn uses_classifier(&self) -> bool {
        self.class_head.is_some() && self.beta > 0.0
    }

    pub fn generator_layers(&self) -> Vec<&MlpLayer> {
        self.generator.iter().collect()
    }

    pub fn discriminator_layers(&self) -> [&MlpLayer; 2] {
        [&self.trunk, &self.disc_head]
    }

    pub fn classifier_layers(&self) -> Result<[&MlpLayer; 2]> {
        let head = self
            .class_head
            .as_ref()
            .ok_or_else(|| SeganError::Config("model has no classifier head".into()))?;
        Ok([&self.trunk, head])
    }

    pub(crate) fn check_input(&self, x: &Matrix, what: &str) -> Result<()> {
        if x.rows() != self.features {
            return Err(SeganError::Shape(format!(
                "{what} has {} features, model expects {}",
                x.rows(),
                self.features
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        let json = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, json + "\n").map_err(|e| SeganError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SeganError::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(SeganError::Config(format!(
                "{}: unsupported model format {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        Ok(file.model)
    }
}

/// Reconstruction `X̄` of a noise-filled matrix (inference mode).
pub fn generator_forward(model: &SeganModel, x_noisy: &Matrix, mask: &Matrix) -> Result<Matrix> {
    model.check_input(x_noisy, "generator input")?;
    x_noisy.ensure_same_shape(mask, "mask")?;
    let input = x_noisy.vstack(mask)?;
    Ok(mlp_forward(&model.generator_layers(), &input)?.0)
}

/// Entrywise probability that each value of `x_hat` was observed.
pub fn discriminator_forward(model: &SeganModel, x_hat: &Matrix, hint: &Matrix) -> Result<Matrix> {
    model.check_input(x_hat, "discriminator input")?;
    x_hat.ensure_same_shape(hint, "hint")?;
    let input = x_hat.vstack(hint)?;
    Ok(mlp_forward(&model.discriminator_layers(), &input)?.0)
}

/// Class probabilities, one column per sample.
pub fn classifier_forward(model: &SeganModel, x_hat: &Matrix) -> Result<Matrix> {
    model.check_input(x_hat, "classifier input")?;
    let layers = model.classifier_layers()?;
    let input = x_hat.vstack(&Matrix::filled(x_hat.rows(), x_hat.cols(), 0.5))?;
    Ok(mlp_forward(&layers, &input)?.0)
}
