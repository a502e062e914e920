//! Matrix spectral primitives: thin SVD, Schatten norms, singular value
//! soft-thresholding, spectral-norm ball projection and numerical rank.
//!
//! `svt` and `spectral_clip` apply a function to the singular values without
//! forming `V`. For an `m x n` matrix with `m <= n` they diagonalize the small
//! Gram matrix `A Aᵀ = Q diag(σ²) Qᵀ` and return `Q diag(f(σ)/σ) Qᵀ A`, which
//! equals `U diag(f(σ)) Vᵀ`. Singular values at or below the threshold map to
//! zero, so the squared-value rounding of the Gram route never reaches them.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Relative threshold used by [`numerical_rank`] when callers have no better choice.
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// rows × r, orthonormal columns
    pub u: DenseMatrix,
    /// r = min(rows, cols) values, nonincreasing
    pub s: Vec<f64>,
    /// cols × r, orthonormal columns
    pub v: DenseMatrix,
}

impl SvdResult {
    /// `u · diag(s) · vᵀ`
    pub fn recompose(&self) -> DenseMatrix {
        let mut us = self.u.as_nalgebra().clone();
        for (j, s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        DenseMatrix::wrap(us * self.v.as_nalgebra().transpose())
    }
}

pub fn thin_svd(m: &DenseMatrix) -> Result<SvdResult> {
    let (u, s, v) = svd_raw(m.as_nalgebra())?;
    Ok(SvdResult {
        u: DenseMatrix::wrap(u),
        s,
        v: DenseMatrix::wrap(v),
    })
}

pub(crate) fn svd_raw(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, cols) = a.shape();
    if rows < cols {
        let (u, s, v) = svd_raw(&a.transpose())?;
        return Ok((v, s, u));
    }
    // Tall: reduce to the cols × cols triangular factor first.
    let (q, r) = if rows > cols {
        let qr = a.clone().qr();
        (Some(qr.q()), qr.r())
    } else {
        (None, a.clone())
    };
    let svd = r
        .try_svd(true, true, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::SvdNotConverged)?;
    let small_u = svd.u.ok_or(Error::SvdNotConverged)?;
    let v_t = svd.v_t.ok_or(Error::SvdNotConverged)?;

    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = order
        .iter()
        .map(|&j| svd.singular_values[j].max(0.0))
        .collect();
    let small_u = small_u.select_columns(&order);
    let v = v_t.transpose().select_columns(&order);
    let u = match q {
        Some(q) => q * small_u,
        None => small_u,
    };
    Ok((u, s, v))
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    singular_values_raw(m.as_nalgebra())
}

pub(crate) fn singular_values_raw(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (rows, cols) = a.shape();
    let small = if rows >= 2 * cols {
        a.clone().qr().r()
    } else if cols >= 2 * rows {
        a.transpose().qr().r()
    } else {
        a.clone()
    };
    let mut s: Vec<f64> = small
        .try_svd(false, false, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::SvdNotConverged)?
        .singular_values
        .iter()
        .map(|x| x.max(0.0))
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `(Σ σ_j^p)^{1/p}` for `p ∈ [1, ∞)`, the spectral norm for `p = ∞`.
pub fn schatten_norm(m: &DenseMatrix, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(schatten_from_values(&singular_values(m)?, p))
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "Schatten exponent {p} is not a norm (need p >= 1)"
        )));
    }
    Ok(())
}

pub(crate) fn schatten_from_values(s: &[f64], p: f64) -> f64 {
    let top = s.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        top
    } else if p == 1.0 {
        s.iter().sum()
    } else {
        // scaled to avoid overflow for large p
        top * s.iter().map(|x| (x / top).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Singular value soft-thresholding, the proximal operator of `τ‖·‖_{S_1}`.
pub fn svt(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold {tau} must be >= 0")));
    }
    Ok(DenseMatrix::wrap(svt_raw(m.as_nalgebra(), tau)?.0))
}

/// Projection onto the spectral-norm ball of radius `alpha`.
pub fn spectral_clip(m: &DenseMatrix, alpha: f64) -> Result<DenseMatrix> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("radius {alpha} must be >= 0")));
    }
    Ok(DenseMatrix::wrap(clip_raw(m.as_nalgebra(), alpha)?))
}

/// Number of singular values strictly above `rel_tol · σ_1`.
pub fn numerical_rank(m: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("rank tolerance {rel_tol} must be > 0")));
    }
    Ok(rank_from_values(&singular_values(m)?, rel_tol))
}

pub(crate) fn rank_from_values(s: &[f64], rel_tol: f64) -> usize {
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

/// Soft-thresholds the singular values of `a` by `tau`.
///
/// Returns the result together with its singular values (the shrunk values,
/// nonincreasing, zeros dropped), so callers get the trace norm for free.
pub(crate) fn svt_raw(a: &DMatrix<f64>, tau: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if tau == 0.0 {
        let s = singular_values_raw(a)?;
        return Ok((a.clone(), s));
    }
    let (out, sigma) = apply_gain(a, |s| if s > tau { 1.0 - tau / s } else { 0.0 })?;
    let mut shrunk: Vec<f64> = sigma
        .into_iter()
        .filter(|&s| s > tau)
        .map(|s| s - tau)
        .collect();
    shrunk.sort_by(|a, b| b.total_cmp(a));
    Ok((out, shrunk))
}

pub(crate) fn clip_raw(a: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    let (out, _) = apply_gain(a, |s| if s > alpha { alpha / s } else { 1.0 })?;
    Ok(out)
}

/// Largest singular value via the Gram route.
pub(crate) fn spectral_norm_raw(a: &DMatrix<f64>) -> Result<f64> {
    let (_, s) = gram_eigen(a)?;
    Ok(s.iter().copied().fold(0.0, f64::max))
}

/// Computes `U diag(gain(σ)·σ) Vᵀ` through the smaller Gram matrix.
/// Returns the input unchanged when every gain is exactly one.
fn apply_gain(
    a: &DMatrix<f64>,
    gain: impl Fn(f64) -> f64,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (q, sigma) = gram_eigen(a)?;
    let gains: Vec<f64> = sigma.iter().map(|&s| gain(s)).collect();
    if gains.iter().all(|&g| g == 1.0) {
        return Ok((a.clone(), sigma));
    }
    let mut qg = q.clone();
    for (j, g) in gains.iter().enumerate() {
        qg.column_mut(j).scale_mut(*g);
    }
    let projector = qg * q.transpose();
    let out = if a.nrows() <= a.ncols() {
        projector * a
    } else {
        a * projector
    };
    Ok((out, sigma))
}

/// Eigenvectors and singular values from the Gram matrix on the short side.
fn gram_eigen(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let gram = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    let eig = gram
        .try_symmetric_eigen(f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::SvdNotConverged)?;
    let sigma = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok((eig.eigenvectors, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        DenseMatrix::from_column_major(rows, cols, data).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn assert_orthonormal(m: &DenseMatrix) {
        let g = m.transpose().matmul(m).unwrap();
        let eye = DenseMatrix::identity(m.cols());
        assert!(g.max_abs_diff(&eye) < 1e-10);
    }

    #[test]
    fn svd_diagonal() {
        let r = thin_svd(&DenseMatrix::diagonal(&[3.0, 4.0]).unwrap()).unwrap();
        assert!(close(r.s[0], 4.0, 1e-14) && close(r.s[1], 3.0, 1e-14));
    }

    #[test]
    fn svd_zero_and_permutation() {
        let r = thin_svd(&DenseMatrix::zeros(2, 3)).unwrap();
        assert_eq!(r.s, vec![0.0, 0.0]);
        let m = DenseMatrix::from_rows(&[&[0.0, 2.0], &[2.0, 0.0]]).unwrap();
        let r = thin_svd(&m).unwrap();
        assert!(close(r.s[0], 2.0, 1e-14) && close(r.s[1], 2.0, 1e-14));
    }

    #[test]
    fn svd_contract_on_all_aspects() {
        for (i, &(rows, cols)) in [(5, 5), (7, 3), (3, 7), (20, 2), (1, 6), (6, 1)]
            .iter()
            .enumerate()
        {
            let m = random_matrix(rows, cols, i as u64);
            let r = thin_svd(&m).unwrap();
            let k = rows.min(cols);
            assert_eq!(r.s.len(), k);
            assert_eq!(r.u.shape(), (rows, k));
            assert_eq!(r.v.shape(), (cols, k));
            assert!(r.s.windows(2).all(|w| w[0] >= w[1]));
            assert_orthonormal(&r.u);
            assert_orthonormal(&r.v);
            let err = r.recompose().sub(&m).unwrap().frobenius_norm();
            assert!(err <= 1e-10 * m.frobenius_norm());
        }
    }

    #[test]
    fn vector_shaped_matrices() {
        let row = DenseMatrix::from_rows(&[&[3.0, 0.0, 4.0]]).unwrap();
        assert!(close(schatten_norm(&row, 1.0).unwrap(), 5.0, 1e-14));
        assert!(close(schatten_norm(&row.transpose(), f64::INFINITY).unwrap(), 5.0, 1e-14));
        let shrunk = svt(&row, 1.0).unwrap();
        assert!(close(shrunk.get(0, 2), 3.2, 1e-14));
    }

    #[test]
    fn schatten_diagonal() {
        let d = DenseMatrix::diagonal(&[3.0, 4.0]).unwrap();
        assert!(close(schatten_norm(&d, 1.0).unwrap(), 7.0, 1e-14));
        assert!(close(schatten_norm(&d, 2.0).unwrap(), 5.0, 1e-14));
        assert!(close(schatten_norm(&d, f64::INFINITY).unwrap(), 4.0, 1e-14));
        assert!(schatten_norm(&d, 0.5).is_err());
        assert_eq!(schatten_norm(&DenseMatrix::zeros(2, 2), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn schatten_two_is_frobenius() {
        let m = random_matrix(6, 4, 9);
        assert!(close(schatten_norm(&m, 2.0).unwrap(), m.frobenius_norm(), 1e-13));
    }

    #[test]
    fn schatten_counting_matrix() {
        // M·Mᵀ = [[84,100],[100,120]]; σ² = 102 ± sqrt(18² + 100²)
        let m = DenseMatrix::from_rows(&[&[1.0, 3.0, 5.0, 7.0], &[2.0, 4.0, 6.0, 8.0]]).unwrap();
        let disc = (18.0f64 * 18.0 + 100.0 * 100.0).sqrt();
        let oracle = (102.0 + disc).sqrt() + (102.0 - disc).sqrt();
        assert!(close(schatten_norm(&m, 1.0).unwrap(), oracle, 1e-13));
        assert!((oracle - 14.896).abs() < 1e-3);
    }

    #[test]
    fn svt_diagonal_cases() {
        let out = svt(&DenseMatrix::diagonal(&[3.0, 1.0]).unwrap(), 2.0).unwrap();
        assert!(out.max_abs_diff(&DenseMatrix::diagonal(&[1.0, 0.0]).unwrap()) < 1e-12);
        let m = DenseMatrix::from_rows(&[&[0.0, 2.0], &[2.0, 0.0]]).unwrap();
        let out = svt(&m, 1.0).unwrap();
        let expected = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-12);
        assert!(svt(&m, -0.1).is_err());
    }

    #[test]
    fn svt_zero_threshold_is_identity() {
        let m = random_matrix(4, 9, 3);
        assert!(svt(&m, 0.0).unwrap().max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn svt_subgradient_condition() {
        // m − Z ∈ τ ∂‖Z‖_{S1}: residual shares Z's singular subspaces with
        // singular values exactly τ there, and is bounded by τ elsewhere.
        let tau = 0.5;
        let m = random_matrix(4, 3, 11);
        let z = svt(&m, tau).unwrap();
        let r = m.sub(&z).unwrap();
        let zs = thin_svd(&z).unwrap();
        let rank = rank_from_values(&zs.s, 1e-9);
        assert!(rank >= 1);
        assert!(schatten_norm(&r, f64::INFINITY).unwrap() <= tau + 1e-12);
        // restricted to the support: Uᵀ R = τ Vᵀ and R V = τ U
        let take = |m: &DenseMatrix| {
            DenseMatrix::wrap(m.as_nalgebra().columns(0, rank).into_owned())
        };
        let (u, v) = (take(&zs.u), take(&zs.v));
        let left = u.transpose().matmul(&r).unwrap().sub(&v.transpose().scale(tau)).unwrap();
        let right = r.matmul(&v).unwrap().sub(&u.scale(tau)).unwrap();
        assert!(left.frobenius_norm() < 1e-10 && right.frobenius_norm() < 1e-10);
    }

    #[test]
    fn svt_matches_full_svd_route() {
        for (seed, &(rows, cols)) in [(4, 9), (9, 4), (6, 6)].iter().enumerate() {
            let m = random_matrix(rows, cols, 100 + seed as u64);
            let tau = 0.4;
            let r = thin_svd(&m).unwrap();
            let shrunk = SvdResult {
                s: r.s.iter().map(|s| (s - tau).max(0.0)).collect(),
                ..r
            };
            let reference = shrunk.recompose();
            assert!(svt(&m, tau).unwrap().max_abs_diff(&reference) < 1e-12);
        }
    }

    #[test]
    fn clip_cases() {
        let d = DenseMatrix::diagonal(&[3.0, 1.0]).unwrap();
        let out = spectral_clip(&d, 2.0).unwrap();
        assert!(out.max_abs_diff(&DenseMatrix::diagonal(&[2.0, 1.0]).unwrap()) < 1e-12);
        let small = DenseMatrix::diagonal(&[0.5, -0.25]).unwrap();
        assert_eq!(spectral_clip(&small, 1.0).unwrap(), small);
        let m = random_matrix(3, 5, 2);
        assert!(spectral_clip(&m, 0.0).unwrap().frobenius_norm() == 0.0);
        assert!(spectral_clip(&m, -1.0).is_err());
    }

    #[test]
    fn rank_cases() {
        let d = DenseMatrix::diagonal(&[1.0, 1e-12]).unwrap();
        assert_eq!(numerical_rank(&d, 1e-8).unwrap(), 1);
        assert_eq!(numerical_rank(&DenseMatrix::zeros(3, 4), 1e-8).unwrap(), 0);
        let a = random_matrix(5, 1, 5);
        let b = random_matrix(1, 7, 6);
        let outer = a.matmul(&b).unwrap();
        assert_eq!(numerical_rank(&outer, DEFAULT_RANK_TOL).unwrap(), 1);
        assert!(numerical_rank(&outer, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn svt_is_nonexpansive(seed in 0u64..1000, tau in 0.0f64..2.0) {
            let a = random_matrix(5, 7, seed);
            let b = random_matrix(5, 7, seed + 5000);
            let lhs = svt(&a, tau).unwrap().sub(&svt(&b, tau).unwrap()).unwrap().frobenius_norm();
            prop_assert!(lhs <= a.sub(&b).unwrap().frobenius_norm() + 1e-10);
        }

        #[test]
        fn schatten_decreasing_in_p(seed in 0u64..1000, p in 1.0f64..6.0, dq in 0.0f64..6.0) {
            let m = random_matrix(4, 6, seed);
            let lo = schatten_norm(&m, p).unwrap();
            let hi = schatten_norm(&m, p + dq).unwrap();
            prop_assert!(hi <= lo * (1.0 + 1e-12));
            prop_assert!(schatten_norm(&m, f64::INFINITY).unwrap() <= hi * (1.0 + 1e-12));
        }

        #[test]
        fn clip_is_idempotent(seed in 0u64..1000, alpha in 0.0f64..2.0) {
            let m = random_matrix(6, 3, seed);
            let once = spectral_clip(&m, alpha).unwrap();
            let twice = spectral_clip(&once, alpha).unwrap();
            prop_assert!(twice.max_abs_diff(&once) <= 1e-12);
            prop_assert!(schatten_norm(&once, f64::INFINITY).unwrap() <= alpha * (1.0 + 1e-12) + 1e-15);
        }
    }
}
