//! Dense matrices, fully connected layers with analytic gradients, and Adam.

mod adam;
mod matrix;
mod mlp;

pub use adam::{adam_step, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use matrix::Matrix;
pub use mlp::{
    dropout_mask, mlp_backward, mlp_forward, mlp_forward_train, sigmoid, Activation, Backward,
    ForwardCache, GradientStore, LayerGradient, MlpLayer,
};
