//! Dense complex matrices and the decompositions the rest of the crate
//! consumes.
//!
//! The scalar is generic: any [`Real`] type (`f32`, `f64`) works, with
//! entries in `Complex<T>`. Matrices are immutable-by-convention: every
//! operation returns a fresh value, so concurrent use is safe.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

mod eig;
mod funcs;

pub use eig::{herm_eig, svd, HermEig, Svd};
pub use funcs::{
    hs_project, mat_exp, mat_log_near_identity, mat_log_pd, mat_sqrt_psd, null_space, polar_factor,
    HERM_TOL, RANK_TOL,
};

/// Real scalar types the numeric kernel is generic over.
pub trait Real:
    Float + FromPrimitive + Sum + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}
impl<T> Real for T where
    T: Float + FromPrimitive + Sum + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

pub(crate) fn re<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must convert into the scalar type")
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> fmt::Debug for CMat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:?}+{:?}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows of `(re, im)` pairs. Rows must be equal length.
    pub fn from_rows(rows: &[Vec<(T, T)>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &(a, b)) in row.iter().enumerate() {
                m[(i, j)] = Complex::new(a, b);
            }
        }
        Ok(m)
    }

    pub fn diag(entries: &[Complex<T>]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Column vector from complex entries.
    pub fn col_vec(entries: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(entries.len(), 1);
        m.data.copy_from_slice(entries);
        m
    }

    /// Standard basis column vector `e_k` in dimension `n`.
    pub fn basis_vec(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, 1);
        m[(k, 0)] = Complex::new(T::one(), T::zero());
        m
    }

    /// Matrix unit `E_{ij}` in `M_n`.
    pub fn matrix_unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = Complex::new(T::one(), T::zero());
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn require_square(&self) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "expected square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.rows)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, z: Complex<T>) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = *v * z;
        }
        out
    }

    pub fn scale_re(&self, x: T) -> Self {
        self.scale(Complex::new(x, T::zero()))
    }

    pub fn trace(&self) -> Complex<T> {
        let mut t = Complex::new(T::zero(), T::zero());
        for i in 0..self.rows.min(self.cols) {
            t = t + self[(i, i)];
        }
        t
    }

    /// Hilbert-Schmidt pairing `<self, other> = trace(other^* self)`.
    pub fn hs_inner(&self, other: &Self) -> Complex<T> {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut acc = Complex::new(T::zero(), T::zero());
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            acc = acc + *a * b.conj();
        }
        acc
    }

    pub fn fro_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Maximum column sum of moduli.
    pub fn one_norm(&self) -> T {
        let mut best = T::zero();
        for j in 0..self.cols {
            let mut s = T::zero();
            for i in 0..self.rows {
                s = s + self[(i, j)].norm();
            }
            if s > best {
                best = s;
            }
        }
        best
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `||self - self^*||_F`, zero for Hermitian matrices.
    pub fn herm_residual(&self) -> T {
        (self - &self.adjoint()).fro_norm()
    }

    /// Hermitian part `(self + self^*)/2`.
    pub fn herm_part(&self) -> Self {
        (self + &self.adjoint()).scale_re(re(0.5))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Extracts the `r0..r0+nr, c0..c0+nc` block.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn column(&self, j: usize) -> Self {
        self.block(0, j, self.rows, 1)
    }

    /// Horizontal concatenation of column blocks.
    pub fn hcat(blocks: &[Self]) -> Self {
        assert!(!blocks.is_empty());
        let rows = blocks[0].rows;
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c = 0;
        for b in blocks {
            assert_eq!(b.rows, rows);
            out.set_block(0, c, b);
            c += b.cols;
        }
        out
    }

    /// Flattens to a column vector, row-major.
    pub fn vectorize(&self) -> Self {
        CMat {
            rows: self.rows * self.cols,
            cols: 1,
            data: self.data.clone(),
        }
    }

    /// Inverse of [`CMat::vectorize`].
    pub fn unvectorize(v: &Self, rows: usize, cols: usize) -> Self {
        assert_eq!(v.cols, 1);
        assert_eq!(v.rows, rows * cols);
        CMat {
            rows,
            cols,
            data: v.data.clone(),
        }
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.require_square()?;
        if rhs.rows != n {
            return Err(Error::ShapeMismatch("solve rhs row count".into()));
        }
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = self.max_abs().max(T::min_positive_value());
        for col in 0..n {
            let mut piv = col;
            let mut piv_val = a[(col, col)].norm();
            for r in col + 1..n {
                let v = a[(r, col)].norm();
                if v > piv_val {
                    piv = r;
                    piv_val = v;
                }
            }
            if piv_val < re::<T>(1e-14) * scale {
                return Err(Error::Singular(piv_val.to_f64().unwrap_or(0.0)));
            }
            if piv != col {
                for j in 0..n {
                    let t = a[(col, j)];
                    a[(col, j)] = a[(piv, j)];
                    a[(piv, j)] = t;
                }
                for j in 0..m {
                    let t = b[(col, j)];
                    b[(col, j)] = b[(piv, j)];
                    b[(piv, j)] = t;
                }
            }
            let p = a[(col, col)];
            for r in col + 1..n {
                let f = a[(r, col)] / p;
                if f.norm_sqr() == T::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] = a[(r, j)] - f * v;
                }
                for j in 0..m {
                    let v = b[(col, j)];
                    b[(r, j)] = b[(r, j)] - f * v;
                }
            }
        }
        let mut x = Self::zeros(n, m);
        for col in (0..n).rev() {
            for j in 0..m {
                let mut s = b[(col, j)];
                for k in col + 1..n {
                    s = s - a[(col, k)] * x[(k, j)];
                }
                x[(col, j)] = s / a[(col, col)];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.rows))
    }

    /// `(self^{-1})^*`, the involution underlying the coset geometry.
    pub fn inv_adjoint(&self) -> Result<Self> {
        Ok(self.inverse()?.adjoint())
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a, T: Real> Add for &'a CMat<T> {
    type Output = CMat<T>;
    fn add(self, other: &'a CMat<T>) -> CMat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(other.data.iter()) {
            *v = *v + *w;
        }
        out
    }
}

impl<'a, T: Real> Sub for &'a CMat<T> {
    type Output = CMat<T>;
    fn sub(self, other: &'a CMat<T>) -> CMat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(other.data.iter()) {
            *v = *v - *w;
        }
        out
    }
}

impl<'a, T: Real> Mul for &'a CMat<T> {
    type Output = CMat<T>;
    fn mul(self, other: &'a CMat<T>) -> CMat<T> {
        self.matmul(other)
    }
}

impl<T: Real> Neg for &CMat<T> {
    type Output = CMat<T>;
    fn neg(self) -> CMat<T> {
        self.scale_re(-T::one())
    }
}

/// Modified Gram-Schmidt over the Hilbert-Schmidt pairing.
///
/// Returns an orthonormal basis of the span; inputs with residual norm below
/// `drop_tol` (relative to their own norm plus the running scale) are dropped.
pub fn orthonormalize<T: Real>(items: &[CMat<T>], drop_tol: T) -> Vec<CMat<T>> {
    let mut basis: Vec<CMat<T>> = Vec::new();
    let scale = items.iter().fold(T::zero(), |m, x| m.max(x.fro_norm()));
    if scale == T::zero() {
        return basis;
    }
    for x in items {
        let mut v = x.clone();
        // Re-orthogonalize twice for numerical cleanliness.
        for _ in 0..2 {
            for b in &basis {
                let c = v.hs_inner(b);
                v = &v - &b.scale(c);
            }
        }
        if v.fro_norm() > drop_tol * scale {
            let n = v.fro_norm();
            basis.push(v.scale_re(T::one() / n));
        }
    }
    basis
}

/// Projection of `x` onto the orthonormal family `basis` (HS pairing).
pub fn project_span<T: Real>(x: &CMat<T>, basis: &[CMat<T>]) -> CMat<T> {
    let mut out = CMat::zeros(x.rows(), x.cols());
    for b in basis {
        let c = x.hs_inner(b);
        out = &out + &b.scale(c);
    }
    out
}

/// Distance from `x` to the span of the orthonormal family `basis`.
pub fn span_residual<T: Real>(x: &CMat<T>, basis: &[CMat<T>]) -> T {
    (x - &project_span(x, basis)).fro_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type M = CMat<f64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_and_adjoint() {
        let a = M::from_fn(2, 2, |i, j| c((i + 1) as f64, j as f64));
        let id = M::identity(2);
        assert!((&a.matmul(&id) - &a).fro_norm() < 1e-15);
        let aa = a.adjoint();
        assert_eq!(aa[(0, 1)], a[(1, 0)].conj());
    }

    #[test]
    fn solve_recovers_inverse() {
        let a =
            M::from_rows(&[vec![(2.0, 0.0), (1.0, 1.0)], vec![(0.0, -1.0), (3.0, 0.0)]]).unwrap();
        let inv = a.inverse().unwrap();
        let r = (&a.matmul(&inv) - &M::identity(2)).fro_norm();
        assert!(r < 1e-14, "residual {r}");
    }

    #[test]
    fn solve_rejects_singular() {
        let a =
            M::from_rows(&[vec![(1.0, 0.0), (2.0, 0.0)], vec![(2.0, 0.0), (4.0, 0.0)]]).unwrap();
        assert!(matches!(a.solve(&M::identity(2)), Err(Error::Singular(_))));
    }

    #[test]
    fn from_rows_rejects_ragged() {
        let r = M::from_rows(&[vec![(1.0, 0.0)], vec![(1.0, 0.0), (2.0, 0.0)]]);
        assert!(matches!(r, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn kron_shapes_and_values() {
        let a = M::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let b = M::identity(3);
        let k = a.kron(&b);
        assert_eq!((k.rows(), k.cols()), (6, 6));
        assert_eq!(k[(5, 5)], c(2.0, 0.0));
        assert_eq!(k[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn gram_schmidt_orthonormalizes_and_drops() {
        let x1 = M::matrix_unit(2, 0, 0);
        let x2 = &M::matrix_unit(2, 0, 0) + &M::matrix_unit(2, 1, 1);
        let x3 = x1.scale_re(3.0); // dependent
        let basis = orthonormalize(&[x1, x2, x3], 1e-10);
        assert_eq!(basis.len(), 2);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let g = a.hs_inner(b);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn generic_kernel_works_at_f32() {
        type Mf = CMat<f32>;
        let a = Mf::from_rows(&[
            vec![(2.0f32, 0.0), (1.0, 0.0)],
            vec![(1.0, 0.0), (3.0, 0.0)],
        ])
        .unwrap();
        let inv = a.inverse().unwrap();
        let r = (&a.matmul(&inv) - &Mf::identity(2)).fro_norm();
        assert!(r < 1e-5, "residual {r}");
    }
}
