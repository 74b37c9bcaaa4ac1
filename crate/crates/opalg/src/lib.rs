//! A finite-dimensional laboratory for operator-algebra geometry.
//!
//! The crate builds unital star-subalgebras of `M_n(C)`, conditional
//! expectations, completely positive maps and their GNS/Stinespring
//! dilations, and then exercises the geometry that lives on top of them:
//! cosets of invertible groups, the `z -> z^{-*}` involution, the
//! `u * exp(iX) * b` polar decomposition relative to an expectation,
//! homogeneous vector bundles with reproducing kernels, Grassmannian
//! tautological kernels, and circle-action spectral decompositions.
//!
//! Everything is dense, deterministic and sized for desk-scale
//! verification (ambient dimension <= 6 or so). The numeric kernel in
//! [`linalg`] is generic over the real scalar; all higher layers use the
//! `f64` aliases exported at the crate root.

pub mod algebra;
pub mod bundle;
pub mod cpmap;
pub mod dilation;
pub mod error;
pub mod gauge;
pub mod geometry;
pub mod grassmann;
pub mod linalg;
pub mod rng;

pub use error::{Error, Result};

/// Complex scalar used by the concrete (non-generic) layers.
pub type C64 = num_complex::Complex<f64>;

/// Dense complex matrix over `f64`, the universal carrier type.
pub type Mat = linalg::CMat<f64>;

/// Hermitian eigendecomposition over `f64`.
pub type HermEig = linalg::HermEig<f64>;

/// Singular value decomposition over `f64`.
pub type Svd = linalg::Svd<f64>;
