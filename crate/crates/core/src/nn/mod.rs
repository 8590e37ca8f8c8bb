//! Fully connected networks with manual reverse-mode (and forward-mode)
//! differentiation, the Adam optimizer, diagonal Gaussian densities and flat
//! parameter checkpoints.

mod adam;
pub mod checkpoint;
mod gaussian;
mod mlp;

pub use adam::Adam;
pub use gaussian::{gaussian_log_density, gaussian_score, LOG_SQRT_2PI};
pub use mlp::{Activation, ForwardCache, Mlp};
