//! Numerical laboratory for self-supervised representation dynamics.
//!
//! - [`spectrum`]: eigen/singular spectra, effective rank, entropies, matrix
//!   mutual information, uniformity.
//! - [`gaussian`]: blob generation, PCA, closed-form Gaussian information
//!   quantities and the feature/variance sweeps built on them.
//! - [`toyssl`]: a small MLP with analytic InfoNCE and VICReg gradients,
//!   Adam, the adaptive α schedule and a logged training loop.
//! - [`cli`]: experiment configs, orchestration and CSV artifacts.

pub mod error;
pub mod io;
pub mod linalg;
pub mod gaussian;
pub mod spectrum;
pub mod toyssl;
pub mod cli;

pub use error::{Error, Result};
pub use spectrum::{FeatureMatrix, GramMatrix, Spectrum, SpectrumMode};
