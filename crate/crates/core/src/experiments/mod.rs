//! Synthetic experiments: data generation, complexity measures, latent-rank
//! estimation, the identifiability witness and the λ-sweep harness.

mod decomposition;
mod rng;
mod stats;
mod sweep;
mod synthetic;

pub use decomposition::{estimate_latent_rank, perturb_decomposition, tucker_rank, LatentRankEstimate};
pub use rng::{derive_seed, rng_from_seed};
pub use stats::{linear_fit, LinearFit};
pub use sweep::{
    aggregate, best_fixed_lambda, best_per_rank, cell_seeds, read_csv, run_sweep, run_sweep_with_workers,
    write_csv, AggregateRow, ExperimentConfig, Method, SolverSettings, TrialRecord, CSV_HEADER,
};
pub use synthetic::{
    add_noise, generate_low_rank, haar_orthonormal, log_grid, lr_complexity, mse, theoretical_lambda,
    tr_complexity, RankVector,
};
