//! Gaussian density order embeddings.
//!
//! Concepts in a hierarchy are embedded as diagonal Gaussians and trained so
//! that a specific concept's density sits inside its ancestors' densities,
//! measured by a thresholded divergence penalty.

pub mod density;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod hierarchy;
pub mod io;
pub mod oracle;
pub mod training;

pub use error::{Error, Result};
