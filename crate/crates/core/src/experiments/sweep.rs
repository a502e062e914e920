//! The λ-sweep harness: truth generation, denoising and per-trial records.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decomposition::estimate_latent_rank;
use super::rng::derive_seed;
use super::synthetic::{add_noise, generate_low_rank, lr_complexity, mse, tr_complexity, RankVector};
use crate::error::{Error, Result};
use crate::norms::NormConfig;
use crate::solvers::{latent_denoise, overlapped_denoise, SolverConfig};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Overlapped,
    Latent,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Overlapped => "overlapped",
            Method::Latent => "latent",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlapped" => Ok(Method::Overlapped),
            "latent" => Ok(Method::Latent),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

/// Solver settings shared by every cell; λ comes from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// `None` means no cross-mode spectral constraint.
    pub alpha: Option<f64>,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub penalty: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let base = SolverConfig::default();
        Self {
            alpha: None,
            max_iter: base.max_iter,
            rel_tol: base.rel_tol,
            penalty: base.penalty,
        }
    }
}

impl SolverSettings {
    pub fn with_lambda(&self, lambda: f64) -> SolverConfig {
        SolverConfig {
            lambda,
            alpha: self.alpha.unwrap_or(f64::INFINITY),
            max_iter: self.max_iter,
            rel_tol: self.rel_tol,
            penalty: self.penalty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub rank_grid: Vec<RankVector>,
    pub sigma: f64,
    /// λ candidates used by every method without an entry in `method_lambdas`.
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    /// Per-method λ candidates, overriding `lambda_grid`.
    #[serde(default)]
    pub method_lambdas: BTreeMap<Method, Vec<f64>>,
    pub trials: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub solver: SolverSettings,
    /// Run the latent-rank estimate on each truth (needed for LR complexity).
    #[serde(default = "default_true")]
    pub latent_rank: bool,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn lambdas(&self, method: Method) -> &[f64] {
        self.method_lambdas.get(&method).map_or(&self.lambda_grid, |v| v.as_slice())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::InvalidDims(format!("{:?}", self.dims)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma = {} must be >= 0", self.sigma)));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        if self.rank_grid.is_empty() {
            return Err(Error::InvalidParameter("empty rank grid".into()));
        }
        for r in &self.rank_grid {
            r.validate(&self.dims)?;
        }
        for &m in &self.methods {
            let grid = self.lambdas(m);
            if grid.is_empty() {
                return Err(Error::InvalidParameter(format!("no lambda candidates for {m}")));
            }
            if let Some(bad) = grid.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
                return Err(Error::InvalidParameter(format!("lambda {bad} must be > 0")));
            }
        }
        self.solver.with_lambda(1.0).validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub dims: Vec<usize>,
    pub tucker_rank: RankVector,
    pub latent_rank_sum: usize,
    pub method: Method,
    pub lambda: f64,
    pub sigma: f64,
    /// Seed of the (rank, trial) cell; truth and noise derive from it.
    pub seed: u64,
    pub trial: usize,
    pub mse: f64,
    pub tr_complexity: f64,
    pub lr_complexity: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
}

struct Cell {
    rank_idx: usize,
    trial: usize,
    seed: u64,
    truth: DenseTensor,
    obs: DenseTensor,
    latent_rank_sum: usize,
    lr: f64,
}

/// Seeds of the truth and the noise of cell (rank_idx, trial).
pub fn cell_seeds(base_seed: u64, rank_idx: usize, trial: usize) -> (u64, u64, u64) {
    let cell = derive_seed(base_seed, &[rank_idx as u64, trial as u64]);
    (cell, derive_seed(cell, &[0]), derive_seed(cell, &[1]))
}

/// Runs every (rank, trial, method, λ) cell on the current rayon pool.
///
/// Every method and λ in a (rank, trial) cell sees the same truth and noise.
/// Records come back ordered by rank, trial, method (as listed) and λ (as
/// listed), independent of scheduling. A solver that stops at `max_iter`
/// still yields a record with `converged = false`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let latent_cfg = NormConfig {
        rel_tol: 1e-6,
        ..NormConfig::default()
    };

    let coords: Vec<(usize, usize)> = (0..cfg.rank_grid.len())
        .flat_map(|r| (0..cfg.trials).map(move |t| (r, t)))
        .collect();
    let cells: Vec<Cell> = coords
        .par_iter()
        .map(|&(rank_idx, trial)| {
            let (seed, truth_seed, noise_seed) = cell_seeds(cfg.base_seed, rank_idx, trial);
            let ranks = &cfg.rank_grid[rank_idx];
            let truth = generate_low_rank(&cfg.dims, ranks, truth_seed)?;
            let obs = add_noise(&truth, cfg.sigma, noise_seed)?;
            let (latent_rank_sum, lr) = if cfg.latent_rank {
                let est = estimate_latent_rank(&truth, &latent_cfg, 1e-6)?;
                (est.ranks.sum(), lr_complexity(&cfg.dims, &est.ranks)?)
            } else {
                (0, f64::NAN)
            };
            Ok(Cell {
                rank_idx,
                trial,
                seed,
                truth,
                obs,
                latent_rank_sum,
                lr,
            })
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(&Cell, Method, f64)> = cells
        .iter()
        .flat_map(|c| {
            cfg.methods
                .iter()
                .flat_map(move |&m| cfg.lambdas(m).iter().map(move |&l| (c, m, l)))
        })
        .collect();

    jobs.par_iter()
        .map(|&(cell, method, lambda)| {
            let solver = cfg.solver.with_lambda(lambda);
            let start = Instant::now();
            let (estimate, diag) = match method {
                Method::Overlapped => {
                    let s = overlapped_denoise(&cell.obs, &solver)?;
                    (s.estimate, s.diagnostics)
                }
                Method::Latent => {
                    let s = latent_denoise(&cell.obs, &solver)?;
                    (s.estimate(), s.diagnostics)
                }
            };
            let wall_time_s = start.elapsed().as_secs_f64();
            let ranks = &cfg.rank_grid[cell.rank_idx];
            Ok(TrialRecord {
                dims: cfg.dims.clone(),
                tucker_rank: ranks.clone(),
                latent_rank_sum: cell.latent_rank_sum,
                method,
                lambda,
                sigma: cfg.sigma,
                seed: cell.seed,
                trial: cell.trial,
                mse: mse(&estimate, &cell.truth)?,
                tr_complexity: tr_complexity(&cfg.dims, ranks)?,
                lr_complexity: cell.lr,
                iterations: diag.iterations,
                converged: diag.converged,
                wall_time_s,
            })
        })
        .collect()
}

/// [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<TrialRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(cfg))
}

pub const CSV_HEADER: &str = "dims;tucker_rank;latent_rank_sum;method;lambda;sigma;seed;trial;mse;\
tr_complexity;lr_complexity;iterations;converged;wall_time_s";

/// Writes records as `;`-separated text under [`CSV_HEADER`] (schema v1).
/// Shapes are written as `50x50x20`, floats with 17 significant digits.
pub fn write_csv<W: Write>(mut out: W, records: &[TrialRecord]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{};{};{};{};{:.16e};{:.16e};{};{};{:.16e};{:.16e};{:.16e};{};{};{:.16e}",
            RankVector::new(r.dims.clone()),
            r.tucker_rank,
            r.latent_rank_sum,
            r.method,
            r.lambda,
            r.sigma,
            r.seed,
            r.trial,
            r.mse,
            r.tr_complexity,
            r.lr_complexity,
            r.iterations,
            r.converged,
            r.wall_time_s,
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: "unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let f: Vec<&str> = line.trim().split(';').collect();
        if f.len() != 14 {
            return Err(err(format!("expected 14 fields, found {}", f.len())));
        }
        let shape = |s: &str| -> Result<Vec<usize>> {
            s.split('x')
                .map(|p| p.parse().map_err(|_| err(format!("bad shape {s:?}"))))
                .collect()
        };
        fn num<T: std::str::FromStr>(s: &str, name: &str, lineno: usize) -> Result<T> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad {name} {s:?}"),
            })
        }
        out.push(TrialRecord {
            dims: shape(f[0])?,
            tucker_rank: RankVector::new(shape(f[1])?),
            latent_rank_sum: num(f[2], "latent_rank_sum", lineno)?,
            method: f[3].parse().map_err(|_| err(format!("bad method {:?}", f[3])))?,
            lambda: num(f[4], "lambda", lineno)?,
            sigma: num(f[5], "sigma", lineno)?,
            seed: num(f[6], "seed", lineno)?,
            trial: num(f[7], "trial", lineno)?,
            mse: num(f[8], "mse", lineno)?,
            tr_complexity: num(f[9], "tr_complexity", lineno)?,
            lr_complexity: num(f[10], "lr_complexity", lineno)?,
            iterations: num(f[11], "iterations", lineno)?,
            converged: num(f[12], "converged", lineno)?,
            wall_time_s: num(f[13], "wall_time_s", lineno)?,
        });
    }
    Ok(out)
}

/// Trial average of one (shape, rank, method, λ) group.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub dims: Vec<usize>,
    pub tucker_rank: RankVector,
    pub method: Method,
    pub lambda: f64,
    pub trials: usize,
    pub mean_mse: f64,
    pub mean_latent_rank_sum: f64,
    pub tr_complexity: f64,
    pub mean_lr_complexity: f64,
    pub all_converged: bool,
}

/// Averages records over trials. Groups keep their first-seen order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut rows: Vec<AggregateRow> = Vec::new();
    let mut index: BTreeMap<(Vec<usize>, RankVector, Method, u64), usize> = BTreeMap::new();
    for r in records {
        let key = (r.dims.clone(), r.tucker_rank.clone(), r.method, r.lambda.to_bits());
        let i = *index.entry(key).or_insert_with(|| {
            rows.push(AggregateRow {
                dims: r.dims.clone(),
                tucker_rank: r.tucker_rank.clone(),
                method: r.method,
                lambda: r.lambda,
                trials: 0,
                mean_mse: 0.0,
                mean_latent_rank_sum: 0.0,
                tr_complexity: r.tr_complexity,
                mean_lr_complexity: 0.0,
                all_converged: true,
            });
            rows.len() - 1
        });
        let row = &mut rows[i];
        row.trials += 1;
        row.mean_mse += r.mse;
        row.mean_latent_rank_sum += r.latent_rank_sum as f64;
        row.mean_lr_complexity += r.lr_complexity;
        row.all_converged &= r.converged;
    }
    for row in &mut rows {
        let n = row.trials as f64;
        row.mean_mse /= n;
        row.mean_latent_rank_sum /= n;
        row.mean_lr_complexity /= n;
    }
    rows
}

/// For each (shape, rank, method), the λ with the smallest trial-averaged MSE.
pub fn best_per_rank(rows: &[AggregateRow]) -> Vec<AggregateRow> {
    let mut best: Vec<AggregateRow> = Vec::new();
    for row in rows {
        match best
            .iter_mut()
            .find(|b| b.dims == row.dims && b.tucker_rank == row.tucker_rank && b.method == row.method)
        {
            Some(b) if row.mean_mse < b.mean_mse => *b = row.clone(),
            Some(_) => {}
            None => best.push(row.clone()),
        }
    }
    best
}

/// The single λ minimizing the total trial-averaged MSE of `method` across
/// all ranks of one shape, or `None` if the method has no rows.
pub fn best_fixed_lambda(rows: &[AggregateRow], dims: &[usize], method: Method) -> Option<f64> {
    let mut totals: Vec<(f64, f64)> = Vec::new();
    for row in rows.iter().filter(|r| r.method == method && r.dims == dims) {
        match totals.iter_mut().find(|(l, _)| *l == row.lambda) {
            Some((_, t)) => *t += row.mean_mse,
            None => totals.push((row.lambda, row.mean_mse)),
        }
    }
    totals
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(l, _)| l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            dims: vec![6, 5, 4],
            rank_grid: vec![RankVector::new(vec![2, 2, 1]), RankVector::new(vec![3, 3, 2])],
            sigma: 0.1,
            lambda_grid: vec![0.1, 0.5],
            method_lambdas: BTreeMap::new(),
            trials: 2,
            base_seed: 11,
            methods: vec![Method::Overlapped, Method::Latent],
            solver: SolverSettings::default(),
            latent_rank: true,
        }
    }

    #[test]
    fn cardinality_and_order() {
        let cfg = small_config();
        let recs = run_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 2 * 2);
        assert_eq!(recs[0].tucker_rank, cfg.rank_grid[0]);
        assert_eq!((recs[0].trial, recs[0].method, recs[0].lambda), (0, Method::Overlapped, 0.1));
        assert_eq!((recs[3].method, recs[3].lambda), (Method::Latent, 0.5));
        assert_eq!(recs[4].trial, 1);
        assert!(recs.iter().all(|r| r.mse >= 0.0 && r.tr_complexity >= 0.0 && r.lr_complexity >= 0.0));
    }

    #[test]
    fn single_cell_yields_one_record_per_method() {
        let mut cfg = small_config();
        cfg.rank_grid.truncate(1);
        cfg.trials = 1;
        cfg.lambda_grid = vec![0.3];
        assert_eq!(run_sweep(&cfg).unwrap().len(), 2);
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let cfg = small_config();
        let a = run_sweep_with_workers(&cfg, 1).unwrap();
        let b = run_sweep_with_workers(&cfg, 3).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mse.to_bits(), y.mse.to_bits());
            assert_eq!((x.seed, x.iterations), (y.seed, y.iterations));
        }
    }

    #[test]
    fn non_convergence_is_flagged_not_dropped() {
        let mut cfg = small_config();
        cfg.solver.max_iter = 1;
        let recs = run_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 16);
        assert!(recs.iter().any(|r| !r.converged));
    }

    #[test]
    fn method_override_and_validation() {
        let mut cfg = small_config();
        cfg.methods = vec![Method::Latent];
        cfg.method_lambdas.insert(Method::Latent, vec![0.2, 0.3, 0.4]);
        assert_eq!(cfg.lambdas(Method::Latent), &[0.2, 0.3, 0.4]);
        assert_eq!(cfg.lambdas(Method::Overlapped), &[0.1, 0.5]);

        let mut bad = small_config();
        bad.trials = 0;
        assert!(bad.validate().is_err());
        let mut bad = small_config();
        bad.lambda_grid = vec![0.0];
        assert!(bad.validate().is_err());
        let mut bad = small_config();
        bad.sigma = -1.0;
        assert!(bad.validate().is_err());
        let mut bad = small_config();
        bad.rank_grid.push(RankVector::new(vec![7, 1, 1]));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "dims": [6, 5, 4],
            "rank_grid": [[2, 2, 1]],
            "sigma": 0.1,
            "lambda_grid": [0.5],
            "method_lambdas": {"latent": [1.0]},
            "trials": 1,
            "base_seed": 3,
            "methods": ["overlapped", "latent"],
            "solver": {"rel_tol": 1e-6}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.solver.rel_tol, 1e-6);
        assert_eq!(cfg.solver.alpha, None);
        assert!(cfg.latent_rank);
        let again = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert!(ExperimentConfig::from_json(r#"{"dims": [2]}"#).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut cfg = small_config();
        cfg.trials = 1;
        let recs = run_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dims;tucker_rank;"));
        assert!(text.lines().nth(1).unwrap().starts_with("6x5x4;2x2x1;"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), recs);
        assert!(read_csv("a;b\n".as_bytes()).is_err());
    }

    fn record(rank: usize, lambda: f64, trial: usize, mse: f64) -> TrialRecord {
        TrialRecord {
            dims: vec![4, 4, 4],
            tucker_rank: RankVector::new(vec![rank; 3]),
            latent_rank_sum: rank,
            method: Method::Latent,
            lambda,
            sigma: 0.1,
            seed: 0,
            trial,
            mse,
            tr_complexity: 0.0,
            lr_complexity: rank as f64 / 4.0,
            iterations: 1,
            converged: trial == 0,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn aggregation_and_minima() {
        let recs = vec![
            record(1, 0.1, 0, 1.0),
            record(1, 0.1, 1, 3.0),
            record(1, 1.0, 0, 1.0),
            record(1, 1.0, 1, 1.0),
            record(2, 0.1, 0, 2.0),
            record(2, 0.1, 1, 2.0),
            record(2, 1.0, 0, 5.0),
            record(2, 1.0, 1, 5.0),
        ];
        let rows = aggregate(&recs);
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[0].trials, rows[0].mean_mse), (2, 2.0));
        assert!(!rows[0].all_converged);
        let best = best_per_rank(&rows);
        assert_eq!(best.len(), 2);
        assert_eq!(best[0].lambda, 1.0);
        assert_eq!(best[1].lambda, 0.1);
        // totals: λ=0.1 → 4, λ=1 → 6
        assert_eq!(best_fixed_lambda(&rows, &[4, 4, 4], Method::Latent), Some(0.1));
        assert_eq!(best_fixed_lambda(&rows, &[4, 4, 4], Method::Overlapped), None);
    }
}
