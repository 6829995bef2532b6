//! Missing-data imputation with a semi-supervised generative adversarial
//! network.
//!
//! A generator fills missing entries of a normalized feature matrix. A
//! discriminator, guided by a hint matrix, tries to tell observed entries from
//! imputed ones, and a classifier sharing the discriminator's hidden layer
//! predicts class labels from the imputed data. Unlabeled samples receive
//! confident pseudo-labels once the classifier has warmed up.

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod synthetic;
pub mod training;

pub use data::{DataMatrix, Dataset, LabelVector, MaskMatrix};
pub use error::{Result, SeganError};
pub use model::{SeganModel, Variant};
pub use numerics::Matrix;
pub use training::{impute, train, train_variant, TrainConfig, TrainReport};
