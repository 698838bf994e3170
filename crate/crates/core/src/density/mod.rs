//! Diagonal Gaussian densities, divergences and the thresholded penalty.

mod divergence;
mod gaussian;

pub use divergence::{
    divergence, divergence_with_grad, kl, neg_log_elk, penalty, penalty_with_grad, renyi, Alpha,
    DivergenceKind, GradPair, GradSink, PenaltyConfig,
};
pub(crate) use divergence::eval as eval_divergence;
pub use gaussian::{log_det_volume, variance, DiagGaussian, GaussianView, VARIANCE_FLOOR};
