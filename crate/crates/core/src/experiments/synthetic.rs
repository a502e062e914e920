//! Synthetic truths, noise, error and complexity measures.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::rng::{gaussian_vec, rng_from_seed};
use crate::error::{Error, Result};
use crate::tensor::{DenseMatrix, DenseTensor};

/// Per-mode ranks: a Tucker rank `(r_1, ..., r_K)` or a latent rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankVector(pub Vec<usize>);

impl RankVector {
    pub fn new(ranks: Vec<usize>) -> Self {
        Self(ranks)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if self.0.len() != dims.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} ranks for a {}-way tensor",
                self.0.len(),
                dims.len()
            )));
        }
        for (mode, (&rank, &dim)) in self.0.iter().zip(dims).enumerate() {
            if rank > dim {
                return Err(Error::RankExceedsDim { mode, rank, dim });
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for RankVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// `n × r` matrix with Haar-distributed orthonormal columns.
///
/// QR of a standard Gaussian matrix with the signs of `R`'s diagonal folded
/// into `Q`, so the distribution is exactly Haar rather than QR-biased.
pub fn haar_orthonormal(n: usize, r: usize, rng: &mut rand_chacha::ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_vec(n, r, gaussian_vec(rng, n * r));
    let qr = g.qr();
    let mut q = qr.q();
    let rmat = qr.r();
    for j in 0..r {
        if rmat[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random tensor of the given Tucker rank: a standard normal core multiplied
/// on every mode by a Haar-distributed orthonormal factor.
///
/// Draw order on the seeded stream: the core (storage order), then the
/// factors for modes 1..K.
pub fn generate_low_rank(dims: &[usize], ranks: &RankVector, seed: u64) -> Result<DenseTensor> {
    ranks.validate(dims)?;
    if ranks.0.iter().any(|&r| r == 0) {
        return DenseTensor::zeros(dims);
    }
    let mut rng = rng_from_seed(seed);
    let core_len = ranks.0.iter().product();
    let mut t = DenseTensor::new(ranks.0.clone(), gaussian_vec(&mut rng, core_len))?;
    for (mode, (&n, &r)) in dims.iter().zip(&ranks.0).enumerate() {
        let factor = DenseMatrix::wrap(haar_orthonormal(n, r, &mut rng));
        t = t.mode_product(&factor, mode)?;
    }
    Ok(t)
}

/// `t + E` with `E` i.i.d. `N(0, σ²)` in storage order.
pub fn add_noise(t: &DenseTensor, sigma: f64, seed: u64) -> Result<DenseTensor> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("noise level {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(t.clone());
    }
    let noise = gaussian_vec(&mut rng_from_seed(seed), t.len());
    DenseTensor::new(
        t.dims().to_vec(),
        t.data().iter().zip(noise).map(|(x, e)| x + sigma * e).collect(),
    )
}

/// `‖a − b‖_F² / N`
pub fn mse(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    let d = a.distance(b)?;
    Ok(d * d / a.len() as f64)
}

/// Tucker-rank complexity `(mean_k sqrt(1/n_k))² · (mean_k sqrt(r_k))²`,
/// which predicts the MSE scaling of the overlapped estimator.
pub fn tr_complexity(dims: &[usize], tucker_rank: &RankVector) -> Result<f64> {
    tucker_rank.validate(dims)?;
    let k = dims.len() as f64;
    let size: f64 = dims.iter().map(|&n| (1.0 / n as f64).sqrt()).sum::<f64>() / k;
    let rank: f64 = tucker_rank.0.iter().map(|&r| (r as f64).sqrt()).sum::<f64>() / k;
    Ok(size * size * rank * rank)
}

/// Latent-rank complexity `(Σ_k r̄_k) / min_k n_k`, which predicts the MSE
/// scaling of the latent estimator.
pub fn lr_complexity(dims: &[usize], latent_rank: &RankVector) -> Result<f64> {
    latent_rank.validate(dims)?;
    let smallest = *dims.iter().min().expect("validated non-empty");
    Ok(latent_rank.sum() as f64 / smallest as f64)
}

/// Regularization constant that dominates twice the noise's overlapped
/// spectral norm with high probability:
/// `c0 σ (sqrt(N/n_K) + sqrt(n_1) + sqrt(ln K)) + α(K − 1)`
/// with dims sorted so that `n_1 ≥ ... ≥ n_K`.
pub fn theoretical_lambda(dims: &[usize], sigma: f64, alpha: f64, c0: f64) -> Result<f64> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidDims(format!("{dims:?}")));
    }
    if !(c0 > 0.0) || !(sigma >= 0.0) || !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need c0 > 0, sigma >= 0, alpha >= 0 (got {c0}, {sigma}, {alpha})"
        )));
    }
    let n: f64 = dims.iter().map(|&d| d as f64).product();
    let largest = *dims.iter().max().unwrap() as f64;
    let smallest = *dims.iter().min().unwrap() as f64;
    let k = dims.len() as f64;
    let cross = if alpha == 0.0 { 0.0 } else { alpha * (k - 1.0) };
    Ok(c0 * sigma * ((n / smallest).sqrt() + largest.sqrt() + k.ln().sqrt()) + cross)
}

/// `10^(log10(lo) + i (log10(hi) − log10(lo)) / (count − 1))` for `i = 0..count`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}
