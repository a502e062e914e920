//! Shared fixtures for the benchmarks.

use schatten_core::experiments::{add_noise, generate_low_rank, RankVector};
use schatten_core::DenseTensor;

/// Noisy `(r, r, 3)` observation in the given shape.
pub fn noisy_low_rank(dims: &[usize], r: usize, seed: u64) -> DenseTensor {
    let mut ranks = vec![r; dims.len()];
    if let Some(last) = ranks.last_mut() {
        *last = 3.min(dims[dims.len() - 1]);
    }
    let truth = generate_low_rank(dims, &RankVector::new(ranks), seed).expect("valid ranks");
    add_noise(&truth, 0.1, seed + 1).expect("sigma >= 0")
}
