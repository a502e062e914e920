//! Convex tensor denoising estimators.
//!
//! All solvers minimize a squared loss against the observation `y` plus a
//! structured Schatten-1 penalty:
//!
//! * [`overlapped_denoise`]: `½‖y − W‖² + λ Σ_k ‖unfold(W,k)‖_{S_1}` (ADMM).
//! * [`latent_denoise`]: `½‖y − Σ_k W^(k)‖² + λ Σ_k ‖unfold(W^(k),k)‖_{S_1}`
//!   (exact block-coordinate descent).
//! * [`latent_denoise_constrained`]: the latent problem with
//!   `‖unfold(W^(k),l)‖_{S_∞} ≤ α` for every `l ≠ k` (ADMM).
//!
//! Every problem is positively homogeneous in `(y, λ, α)`, so the solvers
//! iterate on `y / ‖y‖_F` and rescale; tolerances are therefore relative.

mod latent;
mod overlapped;

pub use latent::{latent_denoise, latent_denoise_constrained, LatentSolution};
pub use overlapped::{overlapped_denoise, OverlappedSolution};

use crate::error::{Error, Result};
use crate::norms::{overlapped_norm, overlapped_spectral, LatentDecomposition};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Regularization constant λ.
    pub lambda: f64,
    /// Spectral bound α on cross-mode unfoldings; `f64::INFINITY` disables it.
    pub alpha: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Initial ADMM penalty for a unit-norm observation.
    pub penalty: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha: f64::INFINITY,
            max_iter: 2000,
            rel_tol: 1e-8,
            penalty: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda = {} must be finite and >= 0",
                self.lambda
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must be >= 0 or infinite",
                self.alpha
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be > 0".into()));
        }
        if !(self.penalty > 0.0) || !self.penalty.is_finite() {
            return Err(Error::InvalidParameter("penalty must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Objective after each iteration (or sweep), on the caller's scale.
    pub objective_history: Vec<f64>,
    /// Exact objective of the returned solution.
    pub objective: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl SolverDiagnostics {
    fn trivial(objective: f64) -> Self {
        Self {
            objective,
            objective_history: vec![objective],
            converged: true,
            ..Self::default()
        }
    }
}

/// `½‖y − w‖_F² + λ ‖w‖_{overlapped S_1/1}`
pub fn overlapped_objective(y: &DenseTensor, w: &DenseTensor, lambda: f64) -> Result<f64> {
    let d = y.distance(w)?;
    Ok(0.5 * d * d + lambda * overlapped_norm(w, 1.0, 1.0)?)
}

/// `½‖y − Σ_k W^(k)‖_F² + λ Σ_k ‖unfold(W^(k),k)‖_{S_1}`
pub fn latent_objective(y: &DenseTensor, d: &LatentDecomposition, lambda: f64) -> Result<f64> {
    let dist = y.distance(&d.sum())?;
    Ok(0.5 * dist * dist + lambda * d.trace_norm_sum()?)
}

/// Whether `λ ≥ 2‖E‖_{S_∞/∞} + α(K − 1)`, the regularization condition under
/// which the constrained latent estimator obeys its deterministic error bound.
pub fn check_lambda_condition(e: &DenseTensor, alpha: f64, order: usize, lambda: f64) -> Result<bool> {
    Ok(lambda >= lambda_threshold(e, alpha, order)?)
}

/// `2‖E‖_{S_∞/∞} + α(K − 1)`
pub fn lambda_threshold(e: &DenseTensor, alpha: f64, order: usize) -> Result<f64> {
    let cross = if alpha == 0.0 || order <= 1 {
        0.0
    } else {
        alpha * (order - 1) as f64
    };
    Ok(2.0 * overlapped_spectral(e)? + cross)
}
