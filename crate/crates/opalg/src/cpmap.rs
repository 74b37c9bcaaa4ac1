//! Completely positive maps between matrix algebras: Choi and Kraus forms,
//! amplification, Schwarz gaps, conjugation orbits, and isotropy Lie
//! algebras of linear maps.

use num_complex::Complex64;

use crate::algebra::StarAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, mat_exp, null_space, span_residual, HERM_TOL};
use crate::{Mat, C64};

/// Eigenvalue cutoff (relative) when deriving a Kraus family from a Choi
/// matrix.
pub const KRAUS_CUTOFF: f64 = 1e-10;

/// A linear map `M_n -> M_m` stored canonically as its Choi matrix
/// `C[(i,s),(j,t)] = Phi(E_ij)[s,t]` (block `(i,j)` of size `m x m` holds
/// the image of the matrix unit `E_ij`).
#[derive(Clone, Debug)]
pub struct CpMap {
    in_dim: usize,
    out_dim: usize,
    choi: Mat,
}

impl CpMap {
    pub fn from_choi(in_dim: usize, out_dim: usize, choi: Mat) -> Result<Self> {
        if choi.rows() != in_dim * out_dim || choi.cols() != in_dim * out_dim {
            return Err(Error::ShapeMismatch("choi matrix dimension".into()));
        }
        Ok(CpMap {
            in_dim,
            out_dim,
            choi,
        })
    }

    /// Builds the map from its action on matrix units.
    pub fn from_action(in_dim: usize, out_dim: usize, mut f: impl FnMut(&Mat) -> Mat) -> Self {
        let mut choi = Mat::zeros(in_dim * out_dim, in_dim * out_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let img = f(&Mat::matrix_unit(in_dim, i, j));
                assert_eq!((img.rows(), img.cols()), (out_dim, out_dim));
                choi.set_block(i * out_dim, j * out_dim, &img);
            }
        }
        CpMap {
            in_dim,
            out_dim,
            choi,
        }
    }

    /// `choi_of`: assembles the map `X -> sum_k K_k X K_k^*`.
    pub fn from_kraus(in_dim: usize, out_dim: usize, kraus: &[Mat]) -> Result<Self> {
        let nm = in_dim * out_dim;
        let mut choi = Mat::zeros(nm, nm);
        for k in kraus {
            if k.rows() != out_dim || k.cols() != in_dim {
                return Err(Error::ShapeMismatch("kraus operator dimension".into()));
            }
            let mut w = Mat::zeros(nm, 1);
            for i in 0..in_dim {
                for s in 0..out_dim {
                    w[(i * out_dim + s, 0)] = k[(s, i)];
                }
            }
            choi = &choi + &w.matmul(&w.adjoint());
        }
        Ok(CpMap {
            in_dim,
            out_dim,
            choi,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_action(n, n, |x| x.clone())
    }

    /// The transpose map, the canonical positive-but-not-CP example.
    pub fn transpose(n: usize) -> Self {
        Self::from_action(n, n, |x| x.transpose())
    }

    /// Wraps a state `phi(a) = trace(rho a)` as a map into `M_1`.
    pub fn from_density(rho: &Mat) -> Self {
        let n = rho.rows();
        Self::from_action(n, 1, |x| {
            let v = rho.matmul(x).trace();
            Mat::from_fn(1, 1, |_, _| v)
        })
    }

    /// The vector state `a -> (a x | x)` as a map into `M_1`.
    pub fn vector_state(x: &Mat) -> Self {
        Self::from_density(&x.matmul(&x.adjoint()))
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn choi(&self) -> &Mat {
        &self.choi
    }

    pub fn apply(&self, x: &Mat) -> Mat {
        assert_eq!((x.rows(), x.cols()), (self.in_dim, self.in_dim));
        let mut out = Mat::zeros(self.out_dim, self.out_dim);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let c = x[(i, j)];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let block = self.choi.block(
                    i * self.out_dim,
                    j * self.out_dim,
                    self.out_dim,
                    self.out_dim,
                );
                out = &out + &block.scale(c);
            }
        }
        out
    }

    pub fn unital_residual(&self) -> f64 {
        (&self.apply(&Mat::identity(self.in_dim)) - &Mat::identity(self.out_dim)).fro_norm()
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.unital_residual() <= tol
    }

    pub fn trace_preserving_residual(&self) -> f64 {
        // trace(Phi(E_ij)) must equal delta_ij.
        let mut r: f64 = 0.0;
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let t = self
                    .choi
                    .block(
                        i * self.out_dim,
                        j * self.out_dim,
                        self.out_dim,
                        self.out_dim,
                    )
                    .trace();
                let want = if i == j { 1.0 } else { 0.0 };
                r = r.max((t - Complex64::new(want, 0.0)).norm());
            }
        }
        r
    }

    /// Composition `self . other` (apply `other` first).
    pub fn compose(&self, other: &CpMap) -> CpMap {
        assert_eq!(other.out_dim, self.in_dim);
        CpMap::from_action(other.in_dim, self.out_dim, |x| self.apply(&other.apply(x)))
    }

    /// Choi-matrix distance.
    pub fn distance(&self, other: &CpMap) -> f64 {
        assert_eq!((self.in_dim, self.out_dim), (other.in_dim, other.out_dim));
        (&self.choi - &other.choi).fro_norm()
    }

    /// `kraus_of`: derives a Kraus family from the Choi eigendecomposition,
    /// dropping eigenvalues below `KRAUS_CUTOFF` relative; errors if a
    /// meaningfully negative eigenvalue is present.
    pub fn kraus(&self) -> Result<Vec<Mat>> {
        let e = herm_eig(&self.choi, HERM_TOL)?;
        let scale = e.op_norm().max(f64::MIN_POSITIVE);
        if e.min() < -KRAUS_CUTOFF * scale {
            return Err(Error::NotCp(e.min()));
        }
        let mut out = Vec::new();
        for (idx, &l) in e.eigenvalues.iter().enumerate() {
            if l <= KRAUS_CUTOFF * scale {
                continue;
            }
            let w = e.eigenvectors.column(idx);
            let mut k = Mat::zeros(self.out_dim, self.in_dim);
            for i in 0..self.in_dim {
                for s in 0..self.out_dim {
                    k[(s, i)] = w[(i * self.out_dim + s, 0)].scale(l.sqrt());
                }
            }
            out.push(k);
        }
        Ok(out)
    }

    /// Complete-positivity verdict with the most negative Choi eigenpair as
    /// a witness when it fails.
    ///
    /// Maps that are not Hermitian-preserving (non-Hermitian Choi matrix,
    /// e.g. similarity conjugates by non-unitary elements) are reported as
    /// not CP, with the witness drawn from the Hermitian part.
    pub fn is_completely_positive(&self, tol: f64) -> Result<CpVerdict> {
        let herm_defect = self.choi.herm_residual();
        let e = herm_eig(&self.choi.herm_part(), HERM_TOL)?;
        let scale = e.op_norm().max(f64::MIN_POSITIVE);
        let min = e.min();
        if min >= -tol * scale && herm_defect <= tol * scale {
            Ok(CpVerdict {
                is_cp: true,
                witness_eigenvalue: min,
                witness: None,
            })
        } else {
            Ok(CpVerdict {
                is_cp: false,
                witness_eigenvalue: min,
                witness: Some(e.eigenvectors.column(0)),
            })
        }
    }

    /// The amplification `Phi (x) id_{M_k}` acting blockwise on `M_k(M_n)`.
    pub fn amplify(&self, k: usize) -> CpMap {
        assert!(k >= 1);
        let n = self.in_dim;
        let m = self.out_dim;
        CpMap::from_action(k * n, k * m, |x| {
            let mut out = Mat::zeros(k * m, k * m);
            for a in 0..k {
                for b in 0..k {
                    let block = x.block(a * n, b * n, n, n);
                    out.set_block(a * m, b * m, &self.apply(&block));
                }
            }
            out
        })
    }

    /// Conjugation orbit point `Phi_g : a -> g Phi(g^{-1} a g) g^{-1}`.
    /// Requires an endomorphism-shaped map.
    pub fn conjugate(&self, g: &Mat) -> Result<CpMap> {
        if self.in_dim != self.out_dim {
            return Err(Error::ShapeMismatch(
                "conjugation needs matching input and output dimensions".into(),
            ));
        }
        let ginv = g.inverse()?;
        Ok(CpMap::from_action(self.in_dim, self.out_dim, |x| {
            g.matmul(&self.apply(&ginv.matmul(x).matmul(g)))
                .matmul(&ginv)
        }))
    }

    /// Schwarz gap `Phi(a^* a) - Phi(a)^* Phi(a)` of a unital CP map;
    /// positive semidefinite by the Schwarz inequality.
    pub fn schwarz_gap(&self, a: &Mat, tol: f64) -> Result<Mat> {
        if !self.is_unital(tol) {
            return Err(Error::NotUnital(self.unital_residual()));
        }
        let verdict = self.is_completely_positive(tol)?;
        if !verdict.is_cp {
            return Err(Error::NotCp(verdict.witness_eigenvalue));
        }
        let pa = self.apply(a);
        Ok((&self.apply(&a.adjoint().matmul(a)) - &pa.adjoint().matmul(&pa)).herm_part())
    }
}

#[derive(Clone, Debug)]
pub struct CpVerdict {
    pub is_cp: bool,
    pub witness_eigenvalue: f64,
    /// Choi eigenvector for the most negative eigenvalue, when not CP.
    pub witness: Option<Mat>,
}

/// Tests positivity of the amplified map on probe inputs: seeded random PSD
/// matrices of `M_k(M_n)` plus the maximally entangled projector when
/// `k = n`. Returns the most negative output eigenvalue seen, relative to
/// the input scale.
pub fn amplified_positivity_floor(phi: &CpMap, k: usize, samples: usize, seed: u64) -> Result<f64> {
    let amp = phi.amplify(k);
    let dim = k * phi.in_dim();
    let mut rng = crate::rng::check_rng(seed, "amplified-positivity");
    let mut probes: Vec<Mat> = (0..samples)
        .map(|_| {
            let g = crate::rng::random_matrix(&mut rng, dim, dim);
            g.matmul(&g.adjoint())
        })
        .collect();
    if k == phi.in_dim() {
        let n = phi.in_dim();
        let mut omega = Mat::zeros(dim, 1);
        for i in 0..n {
            omega[(i * n + i, 0)] = Complex64::new(1.0, 0.0);
        }
        probes.push(omega.matmul(&omega.adjoint()));
    }
    let mut floor = f64::INFINITY;
    for x in &probes {
        let y = amp.apply(x);
        let e = herm_eig(&y.herm_part(), 1e-6)?;
        let scale = x.fro_norm().max(1.0);
        floor = floor.min(e.min() / scale);
    }
    Ok(floor)
}

/// Basis of the isotropy Lie algebra
/// `g(Phi) = { X in A : Phi([a, X]) = [Phi(a), X] for all a in A }`,
/// computed as a null space over the coefficient space of `A`.
pub fn isotropy_lie_algebra(phi: &CpMap, a: &StarAlgebra) -> Result<Vec<Mat>> {
    let n = a.ambient_dim();
    if phi.in_dim() != n || phi.out_dim() != n {
        return Err(Error::ShapeMismatch(
            "isotropy lie algebra needs an endomorphism-shaped map on the ambient algebra".into(),
        ));
    }
    let d = a.dim();
    let mut l = Mat::zeros(d * n * n, d);
    for (col, x) in a.basis().iter().enumerate() {
        for (row, base) in a.basis().iter().enumerate() {
            let lhs = phi.apply(&base.commutator(x));
            let rhs = phi.apply(base).commutator(x);
            l.set_block(row * n * n, col, &(&lhs - &rhs).vectorize());
        }
    }
    let kernel = null_space(&l, 1e-9)?;
    Ok(kernel
        .iter()
        .map(|coef| {
            let c: Vec<C64> = (0..d).map(|i| coef[(i, 0)]).collect();
            a.from_coefficients(&c)
        })
        .collect())
}

/// Residual of `X` against the isotropy condition, scaled by the basis.
pub fn isotropy_residual(phi: &CpMap, a: &StarAlgebra, x: &Mat) -> f64 {
    let mut r: f64 = 0.0;
    for base in a.basis() {
        let lhs = phi.apply(&base.commutator(x));
        let rhs = phi.apply(base).commutator(x);
        r = r.max((&lhs - &rhs).fro_norm());
    }
    r / x.fro_norm().max(1.0)
}

/// Exponentiated-membership check: for `X` in the isotropy Lie algebra,
/// `Phi(e^{tX} a e^{-tX}) = e^{tX} Phi(a) e^{-tX}` along the `t` grid.
pub fn exp_membership_check(phi: &CpMap, a: &StarAlgebra, x: &Mat, t_grid: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let g = mat_exp(&x.scale_re(t));
        let ginv = mat_exp(&x.scale_re(-t));
        for base in a.basis() {
            let lhs = phi.apply(&g.matmul(base).matmul(&ginv));
            let rhs = g.matmul(&phi.apply(base)).matmul(&ginv);
            worst = worst.max((&lhs - &rhs).fro_norm());
        }
    }
    worst
}

/// Closure residual of a computed isotropy basis: adjoints and brackets
/// `[X, Y]` must project back into the span.
pub fn bracket_closure_residual(basis: &[Mat]) -> f64 {
    let ortho = crate::linalg::orthonormalize(basis, 1e-12);
    let mut worst: f64 = 0.0;
    for x in basis {
        worst = worst.max(span_residual(&x.adjoint(), &ortho) / x.fro_norm().max(1.0));
        for y in basis {
            let b = x.commutator(y);
            worst = worst.max(span_residual(&b, &ortho) / b.fro_norm().max(1.0));
        }
    }
    worst
}
