//! Matrix functions: exponential, spectral logarithm/square root, polar
//! factorization, null spaces and Hilbert-Schmidt projections.
//!
//! Functions of Hermitian arguments all route through the Jacobi
//! eigendecomposition (spectral calculus); the general exponential uses
//! scaling-and-squaring with a Taylor evaluation at scaled norm < 1/2.

use num_complex::Complex;

use super::{herm_eig, re, svd, CMat, Real};
use crate::error::{Error, Result};

/// Default relative tolerance for rank and positivity decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Hermiticity gate used by the spectral-calculus entry points.
pub const HERM_TOL: f64 = 1e-8;

/// Matrix exponential by scaling-and-squaring with a Taylor series.
pub fn mat_exp<T: Real>(m: &CMat<T>) -> CMat<T> {
    let n = m.rows();
    assert!(m.is_square(), "mat_exp requires a square matrix");
    if n == 0 {
        return m.clone();
    }
    let norm = m.one_norm();
    let half = re::<T>(0.5);
    let mut s = 0u32;
    let mut scaled = m.clone();
    if norm > half {
        s = (norm / half).log2().ceil().to_u32().unwrap_or(0).max(1);
        scaled = m.scale_re(T::one() / re::<T>(2f64.powi(s as i32)));
    }
    let mut sum = CMat::identity(n);
    let mut term = CMat::identity(n);
    let tol = re::<T>(1e-18) * (T::one() + norm.exp().min(re::<T>(10.0)));
    for k in 1..=40u32 {
        term = term.matmul(&scaled).scale_re(T::one() / re::<T>(k as f64));
        sum = &sum + &term;
        if term.fro_norm() < tol {
            break;
        }
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

/// Logarithm of a Hermitian positive-definite matrix via the spectrum.
pub fn mat_log_pd<T: Real>(m: &CMat<T>, pos_tol: T) -> Result<CMat<T>> {
    let e = herm_eig(m, re(HERM_TOL))?;
    let floor = pos_tol * e.op_norm().max(T::min_positive_value());
    if e.min() <= floor {
        return Err(Error::NotPositiveDefinite(
            e.min().to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(e.map_spectrum(|l| l.ln()).herm_part())
}

/// Square root of a Hermitian positive-semidefinite matrix; eigenvalues in
/// `[-pos_tol * ||m||, 0)` are clamped to zero.
pub fn mat_sqrt_psd<T: Real>(m: &CMat<T>, pos_tol: T) -> Result<CMat<T>> {
    let e = herm_eig(m, re(HERM_TOL))?;
    let floor = pos_tol * e.op_norm().max(T::min_positive_value());
    if e.min() < -floor {
        return Err(Error::NotPsd(e.min().to_f64().unwrap_or(f64::NAN)));
    }
    Ok(e.map_spectrum(|l| l.max(T::zero()).sqrt()).herm_part())
}

/// Polar decomposition `m = unitary * positive` of an invertible matrix.
///
/// Computed from the one-sided Jacobi SVD, so the unitarity of the first
/// factor is at roundoff level regardless of conditioning.
pub fn polar_factor<T: Real>(m: &CMat<T>, rank_tol: T) -> Result<(CMat<T>, CMat<T>)> {
    m.require_square()?;
    let s = svd(m)?;
    if s.sigma_min() <= rank_tol * s.sigma_max().max(T::min_positive_value()) {
        return Err(Error::Singular(s.sigma_min().to_f64().unwrap_or(0.0)));
    }
    let unitary = s.u.matmul(&s.v.adjoint());
    let d = CMat::diag(
        &s.sigma
            .iter()
            .map(|&x| Complex::new(x, T::zero()))
            .collect::<Vec<_>>(),
    );
    let positive = (&(&s.v * &d) * &s.v.adjoint()).herm_part();
    Ok((unitary, positive))
}

/// Orthonormal basis of the kernel of a linear map presented as a matrix
/// over the vectorized space. `rank_tol` is relative to the largest
/// singular value.
pub fn null_space<T: Real>(l: &CMat<T>, rank_tol: T) -> Result<Vec<CMat<T>>> {
    let s = svd(l)?;
    let smax = s.sigma_max();
    let mut out = Vec::new();
    for (j, &sig) in s.sigma.iter().enumerate() {
        if smax == T::zero() || sig <= rank_tol * smax {
            out.push(s.v.column(j));
        }
    }
    Ok(out)
}

/// Principal logarithm of a general matrix close to the identity
/// (Mercator series). Used only by finite-difference charts, where the
/// argument is within O(1e-3) of `I`.
pub fn mat_log_near_identity<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    let n = m.require_square()?;
    let nmat = m - &CMat::identity(n);
    let r = nmat.fro_norm();
    if r > re::<T>(0.5) {
        return Err(Error::NoConvergence(format!(
            "matrix too far from identity for the series logarithm (distance {r:?})"
        )));
    }
    let mut sum = CMat::zeros(n, n);
    let mut pow = CMat::identity(n);
    let tol = re::<T>(1e-18);
    for k in 1..=120u32 {
        pow = pow.matmul(&nmat);
        let sign = if k % 2 == 1 { T::one() } else { -T::one() };
        let term = pow.scale_re(sign / re::<T>(k as f64));
        sum = &sum + &term;
        if term.fro_norm() < tol {
            break;
        }
    }
    Ok(sum)
}

/// Orthogonal projection of `m` onto the span of an orthonormal family of
/// matrices under the Hilbert-Schmidt pairing `<X, Y> = trace(Y^* X)`.
pub fn hs_project<T: Real>(m: &CMat<T>, basis: &[CMat<T>]) -> Result<CMat<T>> {
    let mut worst = T::zero();
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let g = a.hs_inner(b);
            let want = if i == j { T::one() } else { T::zero() };
            let dev = (g - Complex::new(want, T::zero())).norm();
            worst = worst.max(dev);
        }
    }
    if worst > re::<T>(1e-8) {
        return Err(Error::BasisNotOrthonormal(
            worst.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(super::project_span(m, basis))
}
