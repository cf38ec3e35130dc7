//! Dense feed-forward networks with analytic backpropagation, the diagonal
//! Gaussian exploration head, and the Adam optimizer.

mod adam;
mod dense;
mod gaussian;
mod policy;

pub use adam::{Adam, AdamConfig};
pub use dense::{Activation, DenseLayer, DenseNet, ForwardCache, GradientSet, LayerGrad};
pub use gaussian::{GaussianHead, LOG_STD_MAX, LOG_STD_MIN};
pub use policy::PolicyNet;
