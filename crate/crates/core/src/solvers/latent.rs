use super::{latent_objective, SolverConfig, SolverDiagnostics};
use crate::error::Result;
use crate::norms::LatentDecomposition;
use crate::spectral;
use crate::tensor::{sum_tensors, DenseTensor};

#[derive(Debug, Clone)]
pub struct LatentSolution {
    pub decomposition: LatentDecomposition,
    pub diagnostics: SolverDiagnostics,
}

impl LatentSolution {
    /// The denoised tensor `Σ_k Ŵ^(k)`.
    pub fn estimate(&self) -> DenseTensor {
        self.decomposition.sum()
    }
}

/// Minimizes `½‖y − Σ_k W^(k)‖² + λ Σ_k ‖unfold(W^(k),k)‖_{S_1}`.
///
/// Cyclic exact block-coordinate descent: each sweep replaces
/// `W^(k) ← fold(svt(unfold(y − Σ_{l≠k} W^(l), k), λ), k)`. Every block
/// update is an exact minimization, so the objective never increases.
///
/// A finite `cfg.alpha` delegates to [`latent_denoise_constrained`].
pub fn latent_denoise(y: &DenseTensor, cfg: &SolverConfig) -> Result<LatentSolution> {
    cfg.validate()?;
    if cfg.alpha.is_finite() {
        return latent_denoise_constrained(y, cfg);
    }
    let scale = y.frobenius_norm();
    if scale == 0.0 || cfg.lambda == 0.0 {
        // the first sweep puts all of y in component 0 and nothing elsewhere
        return Ok(LatentSolution {
            decomposition: LatentDecomposition::singleton(y, 0)?,
            diagnostics: SolverDiagnostics::trivial(0.0),
        });
    }

    let order = y.order();
    let obs = y.scale(1.0 / scale);
    let lambda = cfg.lambda / scale;
    let sq = scale * scale;

    let mut comps = vec![DenseTensor::zeros(y.dims())?; order];
    let mut trace_norms = vec![0.0; order];
    // residual r = y − Σ_k W^(k)
    let mut residual = obs.clone();
    let mut diag = SolverDiagnostics::default();
    let mut prev_obj = 0.5;

    for sweep in 1..=cfg.max_iter {
        diag.iterations = sweep;
        let mut change_sq = 0.0;
        let before = residual.clone();
        for k in 0..order {
            let mut partial = residual.clone();
            partial.axpy(1.0, &comps[k]);
            let (m, s) = spectral::svt_raw(&partial.unfold_raw(k), lambda)?;
            let next = DenseTensor::fold_raw(&m, k, y.dims());
            change_sq += next.distance(&comps[k])?.powi(2);
            residual = partial.sub(&next)?;
            trace_norms[k] = s.iter().sum();
            comps[k] = next;
        }
        let fit = residual.frobenius_norm();
        let obj = 0.5 * fit * fit + lambda * trace_norms.iter().sum::<f64>();
        diag.objective_history.push(obj * sq);
        diag.primal_residual = change_sq.sqrt();
        diag.dual_residual = residual.distance(&before)?;

        let obj_change = (prev_obj - obj).abs();
        prev_obj = obj;
        if obj_change <= cfg.rel_tol * obj.max(f64::MIN_POSITIVE)
            && diag.primal_residual <= cfg.rel_tol
        {
            diag.converged = true;
            break;
        }
    }

    finish(y, cfg, comps, scale, diag, "latent block-coordinate descent")
}

/// Minimizes the latent objective subject to `‖unfold(W^(k),l)‖_{S_∞} ≤ α`
/// for all `l ≠ k`.
///
/// ADMM with one copy `Z^(k,l)` of each component per mode: `Z^(k,k)` takes
/// the trace-norm prox on mode k, and `Z^(k,l)` for `l ≠ k` the spectral
/// clip on mode l. The `W` step has a closed form because the loss couples
/// the components only through their sum. With `α = ∞` only the diagonal
/// copies are kept, which solves the unconstrained latent problem.
pub fn latent_denoise_constrained(y: &DenseTensor, cfg: &SolverConfig) -> Result<LatentSolution> {
    cfg.validate()?;
    let order = y.order();
    let scale = y.frobenius_norm();
    let mut warnings = Vec::new();
    if cfg.alpha == 0.0 && order > 1 && scale > 0.0 {
        warnings.push(format!(
            "alpha = 0 forces every component to zero{}",
            if cfg.lambda == 0.0 {
                "; the lambda = 0 fit is infeasible"
            } else {
                ""
            }
        ));
    }
    if scale == 0.0 {
        return Ok(LatentSolution {
            decomposition: LatentDecomposition::zeros(y.dims())?,
            diagnostics: SolverDiagnostics {
                warnings,
                ..SolverDiagnostics::trivial(0.0)
            },
        });
    }

    let obs = y.scale(1.0 / scale);
    let lambda = cfg.lambda / scale;
    let alpha = cfg.alpha / scale;
    let sq = scale * scale;
    let constrained = cfg.alpha.is_finite() && order > 1;
    // active (component, mode) pairs
    let pairs: Vec<(usize, usize)> = (0..order)
        .flat_map(|k| (0..order).map(move |l| (k, l)))
        .filter(|&(k, l)| k == l || constrained)
        .collect();
    let copies = if constrained { order } else { 1 } as f64;

    let zero = DenseTensor::zeros(y.dims())?;
    let mut comps = vec![zero.clone(); order];
    let mut aux = vec![zero.clone(); pairs.len()];
    let mut duals = vec![zero.clone(); pairs.len()];
    let mut rho = cfg.penalty;
    let mut diag = SolverDiagnostics {
        warnings,
        ..SolverDiagnostics::default()
    };
    let mut prev_obj = f64::INFINITY;

    for it in 1..=cfg.max_iter {
        diag.iterations = it;

        // W step: W^(k) = c_k + (y − S)/(ρ m), S = (Σ c_k + h y)/(1 + h), h = K/(ρ m)
        let mut centers = vec![zero.clone(); order];
        for ((k, _), (z, u)) in pairs.iter().zip(aux.iter().zip(&duals)) {
            centers[*k].axpy(1.0 / copies, z);
            centers[*k].axpy(-1.0 / copies, u);
        }
        let h = order as f64 / (rho * copies);
        let mut total = sum_tensors(&centers).expect("same dims");
        total.axpy(h, &obs);
        let total = total.scale(1.0 / (1.0 + h));
        let misfit = obs.sub(&total)?;
        for (k, c) in centers.iter().enumerate() {
            let mut w = c.clone();
            w.axpy(1.0 / (rho * copies), &misfit);
            comps[k] = w;
        }

        // Z step and dual update
        let mut penalty = 0.0;
        let mut primal_sq = 0.0;
        let mut dual_sq = 0.0;
        for (p, &(k, l)) in pairs.iter().enumerate() {
            let arg = comps[k].add(&duals[p])?;
            let unfolded = arg.unfold_raw(l);
            let m = if k == l {
                let (m, s) = spectral::svt_raw(&unfolded, lambda / rho)?;
                penalty += s.iter().sum::<f64>();
                m
            } else {
                spectral::clip_raw(&unfolded, alpha)?
            };
            let z = DenseTensor::fold_raw(&m, l, y.dims());
            dual_sq += z.distance(&aux[p])?.powi(2);
            let gap = comps[k].sub(&z)?;
            primal_sq += gap.inner(&gap)?;
            duals[p].axpy(1.0, &gap);
            aux[p] = z;
        }

        let sum = sum_tensors(&comps).expect("same dims");
        let fit = obs.distance(&sum)?;
        let obj = 0.5 * fit * fit + lambda * penalty;
        diag.objective_history.push(obj * sq);
        diag.primal_residual = primal_sq.sqrt();
        diag.dual_residual = rho * dual_sq.sqrt();

        let obj_change = (prev_obj - obj).abs();
        prev_obj = obj;
        if obj_change <= cfg.rel_tol * obj.max(f64::MIN_POSITIVE)
            && diag.primal_residual <= cfg.rel_tol
            && diag.dual_residual <= cfg.rel_tol
        {
            diag.converged = true;
            break;
        }
        if it % 10 == 0 {
            let factor = if diag.primal_residual > 10.0 * diag.dual_residual {
                2.0
            } else if diag.dual_residual > 10.0 * diag.primal_residual {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                for u in duals.iter_mut() {
                    *u = u.scale(1.0 / factor);
                }
            }
        }
    }

    // Report the low-rank copies Z^(k,k) when unconstrained; they are exact
    // prox outputs. With active constraints W^(k) is the consensus point.
    if !constrained {
        for (p, &(k, _)) in pairs.iter().enumerate() {
            comps[k] = aux[p].clone();
        }
    }
    diag.primal_residual *= scale;
    diag.dual_residual *= scale;
    finish(y, cfg, comps, scale, diag, "constrained latent ADMM")
}

fn finish(
    y: &DenseTensor,
    cfg: &SolverConfig,
    comps: Vec<DenseTensor>,
    scale: f64,
    mut diag: SolverDiagnostics,
    name: &str,
) -> Result<LatentSolution> {
    let decomposition =
        LatentDecomposition::new(comps.iter().map(|c| c.scale(scale)).collect())?;
    diag.objective = latent_objective(y, &decomposition, cfg.lambda)?;
    if !diag.converged {
        diag.warnings.push(format!(
            "{name} stopped at max_iter = {} before reaching rel_tol = {}",
            cfg.max_iter, cfg.rel_tol
        ));
    }
    Ok(LatentSolution {
        decomposition,
        diagnostics: diag,
    })
}
