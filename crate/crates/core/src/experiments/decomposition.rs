//! Latent-rank estimation and the non-uniqueness witness for latent
//! decompositions.

use nalgebra::DMatrix;

use super::rng::{gaussian_vec, rng_from_seed};
use super::synthetic::RankVector;
use crate::error::{Error, Result};
use crate::norms::{latent_s1, LatentDecomposition, NormConfig};
use crate::spectral::{self, rank_from_values};
use crate::tensor::{DenseMatrix, DenseTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct LatentRankEstimate {
    pub ranks: RankVector,
    /// Mode of the minimum-rank singleton decomposition when it won.
    pub singleton_mode: Option<usize>,
    /// Whether the latent-norm evaluation met its tolerance.
    pub converged: bool,
}

/// Estimates the latent rank of `t`.
///
/// Evaluates the latent Schatten-1 norm of the noiseless tensor and reads the
/// mode-k rank of each witness component. If the minimum-rank singleton
/// decomposition (all of `t` in the mode with the smallest Tucker rank) has a
/// strictly smaller rank sum, that decomposition is returned instead.
pub fn estimate_latent_rank(t: &DenseTensor, cfg: &NormConfig, rank_tol: f64) -> Result<LatentRankEstimate> {
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("rank tolerance {rank_tol} must be > 0")));
    }
    let order = t.order();
    if t.is_zero() {
        return Ok(LatentRankEstimate {
            ranks: RankVector::new(vec![0; order]),
            singleton_mode: None,
            converged: true,
        });
    }
    let norm = latent_s1(t, cfg)?;
    let ranks = norm.witness.component_ranks(rank_tol)?;

    let tucker = tucker_rank(t, rank_tol)?;
    let (best_mode, best_rank) = tucker
        .as_slice()
        .iter()
        .copied()
        .enumerate()
        .min_by_key(|&(_, r)| r)
        .expect("order >= 1");
    if best_rank < ranks.iter().sum() {
        let mut single = vec![0; order];
        single[best_mode] = best_rank;
        return Ok(LatentRankEstimate {
            ranks: RankVector::new(single),
            singleton_mode: Some(best_mode),
            converged: norm.converged,
        });
    }
    Ok(LatentRankEstimate {
        ranks: RankVector::new(ranks),
        singleton_mode: None,
        converged: norm.converged,
    })
}

/// Numerical rank of every unfolding.
pub fn tucker_rank(t: &DenseTensor, rank_tol: f64) -> Result<RankVector> {
    (0..t.order())
        .map(|k| Ok(rank_from_values(&spectral::singular_values_raw(&t.unfold_raw(k))?, rank_tol)))
        .collect::<Result<Vec<_>>>()
        .map(RankVector::new)
}

/// Moves mass between components `k` and `l` without changing the sum or the
/// per-component mode ranks.
///
/// Writing `W^(k) = C^(k) ×_k U_k` and `W^(l) = C^(l) ×_l U_l` with `U_k`,
/// `U_l` orthonormal bases of the respective mode-k / mode-l column spaces,
/// any core `D` with mode k of size `r̄_k` and mode l of size `r̄_l` gives
///
/// ```text
/// W̃^(k) = (C^(k) + D ×_l U_l) ×_k U_k = W^(k) + D ×_l U_l ×_k U_k
/// W̃^(l) = (C^(l) − D ×_k U_k) ×_l U_l = W^(l) − D ×_l U_l ×_k U_k
/// ```
///
/// `D` is drawn as the projection of an i.i.d. `N(0, scale²)` tensor from the
/// seeded stream onto those bases, so the perturbation depends only on the
/// column spaces and not on the basis chosen for them; applying `−scale`
/// with the same seed undoes it.
pub fn perturb_decomposition(
    decomp: &LatentDecomposition,
    k: usize,
    l: usize,
    scale: f64,
    seed: u64,
) -> Result<LatentDecomposition> {
    let order = decomp.dims().len();
    if k == l || k >= order || l >= order {
        return Err(Error::InvalidParameter(format!(
            "need two distinct modes below {order}, got {k} and {l}"
        )));
    }
    if !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("scale {scale} must be finite")));
    }
    for m in [k, l] {
        if decomp.component(m).is_zero() {
            return Err(Error::ZeroComponent(m));
        }
    }
    let basis_k = column_basis(decomp.component(k), k)?;
    let basis_l = column_basis(decomp.component(l), l)?;

    let dims = decomp.dims();
    let raw = DenseTensor::new(
        dims.to_vec(),
        gaussian_vec(&mut rng_from_seed(seed), dims.iter().product())
            .into_iter()
            .map(|x| scale * x)
            .collect(),
    )?;
    // D = raw ×_k U_kᵀ ×_l U_lᵀ, then lifted back: D ×_l U_l ×_k U_k
    let core = raw
        .mode_product(&basis_k.transpose(), k)?
        .mode_product(&basis_l.transpose(), l)?;
    let shift = core.mode_product(&basis_l, l)?.mode_product(&basis_k, k)?;

    let mut comps = decomp.components().to_vec();
    comps[k] = comps[k].add(&shift)?;
    comps[l] = comps[l].sub(&shift)?;
    LatentDecomposition::new(comps)
}

/// Orthonormal basis of the column space of `unfold(t, mode)`.
fn column_basis(t: &DenseTensor, mode: usize) -> Result<DenseMatrix> {
    let (u, s, _) = spectral::svd_raw(&t.unfold_raw(mode))?;
    let rank = rank_from_values(&s, spectral::DEFAULT_RANK_TOL);
    let basis: DMatrix<f64> = u.columns(0, rank).into_owned();
    Ok(DenseMatrix::wrap(basis))
}
