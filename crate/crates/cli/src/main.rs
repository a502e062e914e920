use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use schatten_core::experiments::{
    aggregate, best_per_rank, generate_low_rank, perturb_decomposition, run_sweep_with_workers,
    theoretical_lambda, write_csv, ExperimentConfig, RankVector,
};
use schatten_core::tensor::{read_tensor_file, write_tensor_file};
use schatten_core::{
    latent_denoise, latent_s1, numerical_rank, overlapped_denoise, overlapped_norm, overlapped_spectral,
    DenseTensor, Error, LatentDecomposition, NormConfig, SolverConfig, SolverDiagnostics,
};

const EXIT_BAD_ARGS: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "schatten", version, about = "Low-rank tensor denoising with structured Schatten norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a tensor with the overlapped or latent estimator.
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: DenoiseMethod,
        #[arg(long)]
        lambda: f64,
        /// Cross-mode spectral bound (latent method only).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        output: PathBuf,
        /// Write the latent components as component-<k>.tensor into this directory.
        #[arg(long)]
        components_out: Option<PathBuf>,
    },
    /// Evaluate a tensor norm.
    Norm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: NormKind,
    },
    /// Run a λ sweep described by a JSON config and write per-trial records.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Show that a latent decomposition can be moved without changing its sum or ranks.
    IdentifiabilityDemo {
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        scale: f64,
    },
    /// Print the theoretical regularization constant.
    Lambda {
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DenoiseMethod {
    Overlapped,
    Latent,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    OverlappedS1,
    OverlappedSinf,
    LatentS1,
    Frobenius,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Parse { .. } => EXIT_IO,
            _ => EXIT_BAD_ARGS,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            msg: e.to_string(),
        }
    }
}

fn bad_args(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_BAD_ARGS,
        msg: msg.into(),
    }
}

// any failure while loading a file is a file error, whatever the variant
fn io_context(path: &Path, e: Error) -> Failure {
    Failure {
        code: EXIT_IO,
        msg: format!("{}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_BAD_ARGS)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Denoise {
            input,
            method,
            lambda,
            alpha,
            tol,
            max_iter,
            output,
            components_out,
        } => {
            let mut cfg = SolverConfig::with_lambda(lambda);
            if let Some(a) = alpha {
                if matches!(method, DenoiseMethod::Overlapped) {
                    return Err(bad_args("--alpha applies to the latent method only"));
                }
                cfg.alpha = a;
            }
            if let Some(t) = tol {
                cfg.rel_tol = t;
            }
            if let Some(m) = max_iter {
                cfg.max_iter = m;
            }
            if components_out.is_some() && matches!(method, DenoiseMethod::Overlapped) {
                return Err(bad_args("--components-out applies to the latent method only"));
            }
            cfg.validate()?;
            let y = read_tensor_file(&input).map_err(|e| io_context(&input, e))?;
            let (estimate, diag) = match method {
                DenoiseMethod::Overlapped => {
                    let s = overlapped_denoise(&y, &cfg)?;
                    (s.estimate, s.diagnostics)
                }
                DenoiseMethod::Latent => {
                    let s = latent_denoise(&y, &cfg)?;
                    if let Some(dir) = &components_out {
                        write_components(dir, &s.decomposition)?;
                    }
                    (s.estimate(), s.diagnostics)
                }
            };
            write_tensor_file(&output, &estimate).map_err(|e| io_context(&output, e))?;
            report(&diag);
            Ok(if diag.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Norm { input, kind } => {
            let t = read_tensor_file(&input).map_err(|e| io_context(&input, e))?;
            let mut out = io::stdout().lock();
            match kind {
                NormKind::OverlappedS1 => writeln!(out, "value {:.16e}", overlapped_norm(&t, 1.0, 1.0)?)?,
                NormKind::OverlappedSinf => writeln!(out, "value {:.16e}", overlapped_spectral(&t)?)?,
                NormKind::Frobenius => writeln!(out, "value {:.16e}", t.frobenius_norm())?,
                NormKind::LatentS1 => {
                    let n = latent_s1(&t, &NormConfig::default())?;
                    writeln!(out, "value {:.16e}", n.value)?;
                    writeln!(out, "duality_gap {:.16e}", n.duality_gap)?;
                    writeln!(out, "lower_bound {:.16e}", n.lower_bound)?;
                    if !n.converged {
                        eprintln!("warning: latent norm stopped after {} iterations", n.iterations);
                    }
                }
            }
            Ok(0)
        }
        Command::Experiment { config, out, workers } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Failure::from(e).with_path(&config))?;
            let cfg = ExperimentConfig::from_json(&text).map_err(|e| {
                let mut f = Failure::from(e);
                f.code = EXIT_BAD_ARGS;
                f.with_path(&config)
            })?;
            let workers = match workers {
                Some(0) => return Err(bad_args("--workers must be >= 1")),
                Some(w) => w,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            };
            let records = run_sweep_with_workers(&cfg, workers)?;
            let file = fs::File::create(&out).map_err(|e| Failure::from(e).with_path(&out))?;
            write_csv(io::BufWriter::new(file), &records)?;

            let rows = aggregate(&records);
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "method\ttucker_rank\tbest_lambda\tmean_mse")?;
            for row in best_per_rank(&rows) {
                writeln!(
                    stdout,
                    "{}\t{}\t{:.4e}\t{:.6e}",
                    row.method, row.tucker_rank, row.lambda, row.mean_mse
                )?;
            }
            let unconverged = records.iter().filter(|r| !r.converged).count();
            if unconverged > 0 {
                eprintln!("warning: {unconverged} of {} solves did not converge", records.len());
            }
            Ok(0)
        }
        Command::IdentifiabilityDemo {
            dims,
            ranks,
            seed,
            scale,
        } => identifiability_demo(&dims, &ranks, seed, scale),
        Command::Lambda { dims, sigma, alpha, c0 } => {
            if dims.is_empty() {
                return Err(bad_args("--dims is required"));
            }
            println!("{:.16e}", theoretical_lambda(&dims, sigma, alpha, c0)?);
            Ok(0)
        }
    }
}

impl Failure {
    fn with_path(mut self, path: &Path) -> Self {
        self.msg = format!("{}: {}", path.display(), self.msg);
        self
    }
}

fn report(diag: &SolverDiagnostics) {
    eprintln!(
        "iterations {} objective {:.10e} converged {}",
        diag.iterations, diag.objective, diag.converged
    );
    for w in &diag.warnings {
        eprintln!("warning: {w}");
    }
}

fn write_components(dir: &Path, d: &LatentDecomposition) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::from(e).with_path(dir))?;
    for (k, c) in d.components().iter().enumerate() {
        let path = dir.join(format!("component-{}.tensor", k + 1));
        write_tensor_file(&path, c).map_err(|e| io_context(&path, e))?;
    }
    Ok(())
}

/// Component 1 has Tucker rank `ranks` and component 2 the same ranks from a
/// different draw; mass is moved between them along modes 1 and 2.
fn identifiability_demo(dims: &[usize], ranks: &[usize], seed: u64, scale: f64) -> Result<u8, Failure> {
    if dims.len() < 2 {
        return Err(bad_args("--dims needs at least two modes"));
    }
    let ranks = RankVector::new(ranks.to_vec());
    ranks.validate(dims)?;
    if ranks.as_slice().contains(&0) {
        return Err(bad_args("--ranks must be positive"));
    }
    let mut comps = vec![DenseTensor::zeros(dims)?; dims.len()];
    comps[0] = generate_low_rank(dims, &ranks, seed)?;
    comps[1] = generate_low_rank(dims, &ranks, seed.wrapping_add(1))?;
    let before = LatentDecomposition::new(comps)?;
    let after = perturb_decomposition(&before, 0, 1, scale, seed.wrapping_add(2))?;

    let sum_err = after.sum().distance(&before.sum())?;
    let mut out = io::stdout().lock();
    writeln!(out, "sum_error {sum_err:.3e}")?;
    writeln!(out, "component\tmode\trank_before\trank_after\tmoved")?;
    for k in 0..2 {
        let moved = after.component(k).distance(before.component(k))?;
        for mode in 0..dims.len() {
            let rb = numerical_rank(&before.component(k).unfold(mode)?, 1e-8)?;
            let ra = numerical_rank(&after.component(k).unfold(mode)?, 1e-8)?;
            writeln!(out, "{}\t{}\t{rb}\t{ra}\t{moved:.3e}", k + 1, mode + 1)?;
        }
    }
    Ok(0)
}
