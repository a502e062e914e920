//! Convex tensor decomposition with structured Schatten norms.
//!
//! * [`tensor`]: dense K-way tensors, unfolding/folding, mode products.
//! * [`spectral`]: SVD, Schatten norms, singular value thresholding.
//! * [`norms`]: overlapped and latent structured Schatten norms.
//! * [`solvers`]: overlapped and latent denoising estimators.
//! * [`experiments`]: synthetic data, complexity measures and the λ-sweep harness.

pub mod error;
pub mod experiments;
pub mod norms;
pub mod solvers;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, Method, RankVector, TrialRecord};
pub use norms::{
    latent_lower_bound, latent_s1, latent_spectral_upper_bound, overlapped_norm,
    overlapped_spectral, LatentDecomposition, LatentNorm, NormConfig,
};
pub use solvers::{
    check_lambda_condition, latent_denoise, latent_denoise_constrained, overlapped_denoise,
    LatentSolution, OverlappedSolution, SolverConfig, SolverDiagnostics,
};
pub use spectral::{numerical_rank, schatten_norm, spectral_clip, svt, thin_svd, SvdResult};
pub use tensor::{DenseMatrix, DenseTensor};
