//! Jacobi eigensolver for Hermitian matrices and a one-sided Jacobi SVD.
//!
//! Jacobi is slow compared to tridiagonalization but is simple, accurate to
//! machine precision, fully deterministic, and more than fast enough at the
//! matrix sizes this crate works with.

use num_complex::Complex;

use super::{re, CMat, Real};
use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian matrix: `M = U diag(eigenvalues) U^*`
/// with real eigenvalues in ascending order and orthonormal columns in
/// `eigenvectors`.
#[derive(Clone, Debug)]
pub struct HermEig<T: Real> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: CMat<T>,
}

impl<T: Real> HermEig<T> {
    pub fn min(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> T {
        *self.eigenvalues.last().unwrap()
    }

    /// Operator norm of the decomposed matrix.
    pub fn op_norm(&self) -> T {
        self.eigenvalues
            .iter()
            .fold(T::zero(), |m, &l| m.max(l.abs()))
    }

    /// Applies `f` to the spectrum: `U diag(f(lambda)) U^*`.
    pub fn map_spectrum(&self, mut f: impl FnMut(T) -> T) -> CMat<T> {
        let n = self.eigenvalues.len();
        let u = &self.eigenvectors;
        let d = CMat::diag(
            &self
                .eigenvalues
                .iter()
                .map(|&l| Complex::new(f(l), T::zero()))
                .collect::<Vec<_>>(),
        );
        let _ = n;
        &(u * &d) * &u.adjoint()
    }

    pub fn reconstruct(&self) -> CMat<T> {
        self.map_spectrum(|l| l)
    }
}

const MAX_SWEEPS: usize = 64;

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// The input must satisfy `||M - M^*|| <= herm_tol * ||M||` (Frobenius);
/// computation proceeds on the Hermitian part. Eigenvalues come out
/// ascending and each eigenvector has its first non-negligible component
/// rotated to the positive real axis, so the output is deterministic up to
/// degenerate clusters.
pub fn herm_eig<T: Real>(m: &CMat<T>, herm_tol: T) -> Result<HermEig<T>> {
    let n = m.require_square()?;
    let scale = m.fro_norm();
    if m.herm_residual() > herm_tol * scale.max(T::one()) {
        return Err(Error::NotHermitian(
            m.herm_residual().to_f64().unwrap_or(f64::NAN),
        ));
    }
    let mut a = m.herm_part();
    let mut v = CMat::identity(n);
    if n <= 1 || scale == T::zero() {
        let eigenvalues = (0..n).map(|i| a[(i, i)].re).collect();
        return Ok(HermEig {
            eigenvalues,
            eigenvectors: v,
        });
    }

    let stop = re::<T>(1e-30) * scale * scale;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a[(p, q)].norm_sqr();
            }
        }
        if off <= stop {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= re::<T>(1e-300) {
                    continue;
                }
                let alpha = a[(p, p)].re;
                let gamma = a[(q, q)].re;
                let sigma = apq / Complex::new(mag, T::zero());
                let tau = (gamma - alpha) / (re::<T>(2.0) * mag);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // Unitary 2x2 block [[c, s*sigma], [-s*conj(sigma), c]]
                // applied as A <- U^* A U on rows/cols (p, q).
                let u_pq = sigma.scale(s);
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp.scale(c) - akq * u_pq.conj();
                    a[(k, q)] = akq.scale(c) + akp * u_pq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk.scale(c) - aqk * u_pq;
                    a[(q, k)] = aqk.scale(c) + apk * u_pq.conj();
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp.scale(c) - vkq * u_pq.conj();
                    v[(k, q)] = vkq.scale(c) + vkp * u_pq;
                }
            }
        }
    }
    if !converged {
        // One more check: the final sweep may have finished the job.
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a[(p, q)].norm_sqr();
            }
        }
        if off > re::<T>(1e-24) * scale * scale {
            return Err(Error::NoConvergence(format!(
                "jacobi eigensolver: off-diagonal {:?} after {MAX_SWEEPS} sweeps",
                off.sqrt()
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigenvalues: Vec<T> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        let col = v.column(old);
        let col = fix_phase(&col);
        vectors.set_block(0, new, &col);
    }
    Ok(HermEig {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Rotates a unit column so its first non-negligible entry is real positive.
fn fix_phase<T: Real>(col: &CMat<T>) -> CMat<T> {
    let tol = re::<T>(1e-8);
    for i in 0..col.rows() {
        let z = col[(i, 0)];
        if z.norm() > tol {
            let phase = z.conj() / Complex::new(z.norm(), T::zero());
            return col.scale(phase);
        }
    }
    col.clone()
}

/// Singular value decomposition `A = U diag(sigma) V^*` with `sigma`
/// descending, `V` unitary and the columns of `U` orthonormal wherever the
/// corresponding singular value is nonzero.
#[derive(Clone, Debug)]
pub struct Svd<T: Real> {
    pub u: CMat<T>,
    pub sigma: Vec<T>,
    pub v: CMat<T>,
}

impl<T: Real> Svd<T> {
    pub fn sigma_max(&self) -> T {
        self.sigma.first().copied().unwrap_or(T::zero())
    }

    pub fn sigma_min(&self) -> T {
        self.sigma.last().copied().unwrap_or(T::zero())
    }

    pub fn rank(&self, rel_tol: T) -> usize {
        let cut = self.sigma_max() * rel_tol;
        self.sigma.iter().filter(|&&s| s > cut).count()
    }
}

/// One-sided Jacobi SVD: orthogonalizes the columns of `A` by right
/// rotations. Accurate for small singular values, which is what the
/// null-space and rank machinery relies on.
pub fn svd<T: Real>(m: &CMat<T>) -> Result<Svd<T>> {
    let rows = m.rows();
    let n = m.cols();
    let mut a = m.clone();
    let mut v = CMat::identity(n);
    let scale = m.fro_norm();
    if n == 0 || scale == T::zero() {
        return Ok(finish_svd(a, v));
    }
    // The relative threshold sits a little above machine precision so the
    // cyclic sweep cannot oscillate at the roundoff boundary; relative
    // accuracy of small singular values is preserved. Columns whose norm
    // has collapsed to the roundoff floor of the whole matrix carry no
    // resolvable direction and are excluded from rotations.
    let eps = re::<T>(1e-13);
    let floor = re::<T>(1e-15) * scale;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                // 2x2 Gram block of columns (p, q).
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = Complex::new(T::zero(), T::zero());
                for k in 0..rows {
                    let xp = a[(k, p)];
                    let xq = a[(k, q)];
                    app = app + xp.norm_sqr();
                    aqq = aqq + xq.norm_sqr();
                    apq = apq + xp.conj() * xq;
                }
                if app.sqrt() <= floor || aqq.sqrt() <= floor {
                    continue;
                }
                let mag = apq.norm();
                if mag <= eps * (app.sqrt() * aqq.sqrt()).max(re::<T>(1e-300)) {
                    continue;
                }
                rotated = true;
                let sigma = apq / Complex::new(mag, T::zero());
                let tau = (aqq - app) / (re::<T>(2.0) * mag);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let u_pq = sigma.scale(s);
                for k in 0..rows {
                    let xp = a[(k, p)];
                    let xq = a[(k, q)];
                    a[(k, p)] = xp.scale(c) - xq * u_pq.conj();
                    a[(k, q)] = xq.scale(c) + xp * u_pq;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp.scale(c) - vq * u_pq.conj();
                    v[(k, q)] = vq.scale(c) + vp * u_pq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("one-sided jacobi svd".into()));
    }
    Ok(finish_svd(a, v))
}

fn finish_svd<T: Real>(a: CMat<T>, v: CMat<T>) -> Svd<T> {
    let rows = a.rows();
    let n = a.cols();
    let norms: Vec<T> = (0..n).map(|j| a.column(j).fro_norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = CMat::zeros(rows, n);
    let mut vv = CMat::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (new, &old) in order.iter().enumerate() {
        let s = norms[old];
        sigma.push(s);
        if s > T::zero() {
            u.set_block(0, new, &a.column(old).scale_re(T::one() / s));
        }
        vv.set_block(0, new, &v.column(old));
    }
    Svd { u, sigma, v: vv }
}
