//! Gaussian blob data, PCA projection and the closed-form information
//! quantities of jointly Gaussian representations.

mod blobs;
mod info;
mod pca;
mod sweep;

pub use blobs::{generate_blobs, generate_labeled_blobs, BlobConfig, Blobs};
pub use info::{
    bound_decomposition, empirical_block_covariance, gaussian_entropy, gaussian_mutual_info, schur_terms,
    BlockCovariance, BoundTerms, SchurTerms, DEFAULT_RIDGE_SCALE, SCHUR_AGREEMENT_REL,
};
pub use pca::{fit_pca, project, PcaProjector};
pub use sweep::{evaluate_pipeline, sweep_features, sweep_variance, RepeatSample, SweepCurve, SweepPoint};
