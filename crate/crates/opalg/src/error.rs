//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive definite (min eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("matrix is singular or too ill-conditioned (smallest singular value {0:.3e})")]
    Singular(f64),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("basis is not orthonormal (residual {0:.3e})")]
    BasisNotOrthonormal(f64),
    #[error("element is not an idempotent (residual {0:.3e})")]
    NotIdempotent(f64),
    #[error("element is not a self-adjoint projection (residual {0:.3e})")]
    NotProjection(f64),
    #[error("algebra closure exceeded the ambient dimension bound")]
    DimensionOverflow,
    #[error("not a subalgebra: {0}")]
    NotSubalgebra(String),
    #[error("not a state: {0}")]
    NotState(String),
    #[error("map is not completely positive (witness eigenvalue {0:.3e})")]
    NotCp(f64),
    #[error("map is not unital (residual {0:.3e})")]
    NotUnital(f64),
    #[error("incompatible data: {0}")]
    IncompatibleData(String),
    #[error("coset points live in different contexts")]
    ContextMismatch,
    #[error("map is not gauge invariant (residual {0:.3e})")]
    NotGaugeInvariant(f64),
    #[error("sample gram matrix is too ill-conditioned (ratio {0:.3e})")]
    IllConditionedGram(f64),
    #[error("vector does not lie in the fiber subspace (residual {0:.3e})")]
    VectorNotInFiber(f64),
    #[error("bundle elements are based at incompatible points")]
    BaseMismatch,
    #[error("expected a positive element: {0}")]
    NotPositive(String),
}
