use serde::{Deserialize, Serialize};

use crate::error::{Result, SeganError};

/// Training hyperparameters. Unknown keys are rejected when deserializing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    /// Probability that a mask entry is revealed through the hint matrix.
    pub hint_rate: f64,
    /// Fraction of present labels kept for training.
    pub label_rate: f64,
    /// Weight of the adversarial term in the generator objective.
    pub alpha: f64,
    /// Weight of the classifier term in the generator objective.
    pub beta: f64,
    pub pseudo_label_threshold: f64,
    /// Epochs completed before pseudo-labeling starts.
    pub warmup_epochs: usize,
    pub hidden_width: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 30,
            batch_size: 128,
            dropout_rate: 0.5,
            hint_rate: 0.8,
            label_rate: 1.0,
            alpha: 0.1,
            beta: 1.0,
            pseudo_label_threshold: 0.9,
            warmup_epochs: 5,
            hidden_width: 128,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SeganError::Config(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.epochs == 0 {
            return fail("epochs must be positive".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        if !(0.0..=1.0).contains(&self.hint_rate) {
            return fail(format!(
                "hint_rate must lie in [0, 1], got {}",
                self.hint_rate
            ));
        }
        if !(self.label_rate > 0.0 && self.label_rate <= 1.0) {
            return fail(format!(
                "label_rate must lie in (0, 1], got {}",
                self.label_rate
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite())
            || !(self.beta >= 0.0 && self.beta.is_finite())
        {
            return fail("alpha and beta must be non-negative".into());
        }
        if !(self.pseudo_label_threshold > 0.5 && self.pseudo_label_threshold < 1.0) {
            return fail(format!(
                "pseudo_label_threshold must lie in (0.5, 1), got {}",
                self.pseudo_label_threshold
            ));
        }
        if self.hidden_width == 0 {
            return fail("hidden_width must be positive".into());
        }
        Ok(())
    }
}
