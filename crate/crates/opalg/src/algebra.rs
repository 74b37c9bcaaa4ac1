//! Unital star-subalgebras of `M_n(C)`, their commutants, idempotent
//! geometry, and conditional expectations.

#[cfg(test)]
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, hs_project, null_space, orthonormalize, span_residual};
use crate::{Mat, C64};

/// Relative membership tolerance: `x` counts as an element of a subalgebra
/// when its projection residual is below `MEMBER_TOL * ||x||`.
pub const MEMBER_TOL: f64 = 1e-9;

/// A unital, adjoint-closed, product-closed subspace of `M_n(C)`, carried
/// by an orthonormal basis under the Hilbert-Schmidt pairing.
#[derive(Clone, Debug)]
pub struct StarAlgebra {
    ambient_dim: usize,
    basis: Vec<Mat>,
}

impl StarAlgebra {
    /// Wraps an orthonormal basis without running the closure iteration.
    /// The caller asserts closure; [`StarAlgebra::closure_residual`] checks it.
    pub fn from_orthonormal_basis(ambient_dim: usize, basis: Vec<Mat>) -> Result<Self> {
        for b in &basis {
            if b.rows() != ambient_dim || b.cols() != ambient_dim {
                return Err(Error::ShapeMismatch("basis element dimension".into()));
            }
        }
        let alg = StarAlgebra { ambient_dim, basis };
        let eye = Mat::identity(ambient_dim);
        if alg.membership_residual(&eye) > MEMBER_TOL * eye.fro_norm() {
            return Err(Error::NotSubalgebra("identity not in span".into()));
        }
        Ok(alg)
    }

    /// The full matrix algebra `M_n`, with the matrix-unit basis.
    pub fn full(n: usize) -> Self {
        let basis = (0..n)
            .flat_map(|i| (0..n).map(move |j| Mat::matrix_unit(n, i, j)))
            .collect();
        StarAlgebra {
            ambient_dim: n,
            basis,
        }
    }

    /// The scalar multiples of the identity.
    pub fn scalars(n: usize) -> Self {
        let basis = vec![Mat::identity(n).scale_re(1.0 / (n as f64).sqrt())];
        StarAlgebra {
            ambient_dim: n,
            basis,
        }
    }

    /// Smallest unital, adjoint-closed, product-closed subspace of `M_n`
    /// containing the generators, with an orthonormalized basis.
    pub fn from_generators(n: usize, gens: &[Mat]) -> Result<Self> {
        for g in gens {
            if g.rows() != n || g.cols() != n {
                return Err(Error::ShapeMismatch("generator dimension".into()));
            }
        }
        let mut seed: Vec<Mat> = vec![Mat::identity(n)];
        seed.extend(gens.iter().cloned());
        seed.extend(gens.iter().map(Mat::adjoint));
        let mut basis = orthonormalize(&seed, 1e-12);
        // Dimension grows strictly on every productive round, so n^2 rounds
        // suffice.
        for _ in 0..=n * n {
            let mut new_items = Vec::new();
            for a in &basis {
                let adj = a.adjoint();
                if span_residual(&adj, &basis) > 1e-10 {
                    new_items.push(adj);
                }
                for b in &basis {
                    let prod = a.matmul(b);
                    if span_residual(&prod, &basis) > 1e-10 * prod.fro_norm().max(1.0) {
                        new_items.push(prod);
                    }
                }
            }
            if new_items.is_empty() {
                return Ok(StarAlgebra {
                    ambient_dim: n,
                    basis,
                });
            }
            let mut all = basis.clone();
            all.extend(new_items);
            basis = orthonormalize(&all, 1e-12);
            if basis.len() > n * n {
                return Err(Error::DimensionOverflow);
            }
        }
        Err(Error::DimensionOverflow)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }

    pub fn identity(&self) -> Mat {
        Mat::identity(self.ambient_dim)
    }

    /// Hilbert-Schmidt orthogonal projection onto the span.
    pub fn project(&self, x: &Mat) -> Mat {
        crate::linalg::project_span(x, &self.basis)
    }

    pub fn membership_residual(&self, x: &Mat) -> f64 {
        span_residual(x, &self.basis)
    }

    pub fn contains(&self, x: &Mat) -> bool {
        self.membership_residual(x) <= MEMBER_TOL * x.fro_norm().max(1.0)
    }

    /// Coefficients of `x` in the orthonormal basis.
    pub fn coefficients(&self, x: &Mat) -> Vec<C64> {
        self.basis.iter().map(|b| x.hs_inner(b)).collect()
    }

    pub fn from_coefficients(&self, c: &[C64]) -> Mat {
        let mut acc = Mat::zeros(self.ambient_dim, self.ambient_dim);
        for (b, &z) in self.basis.iter().zip(c.iter()) {
            acc = &acc + &b.scale(z);
        }
        acc
    }

    /// Worst residual of products and adjoints of basis elements against the
    /// span; near zero iff the span is an adjoint-closed algebra.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.basis {
            worst = worst.max(span_residual(&a.adjoint(), &self.basis));
            for b in &self.basis {
                worst = worst.max(span_residual(&a.matmul(b), &self.basis));
            }
        }
        worst
    }

    /// True when `other` is a unital subalgebra of `self` within tolerance.
    pub fn contains_algebra(&self, other: &StarAlgebra) -> bool {
        other.ambient_dim == self.ambient_dim && other.basis.iter().all(|b| self.contains(b))
    }
}

/// Computes the commutant `{x in A : xs = sx for all s in S}` inside `A`,
/// via the null space of the stacked vectorized commutator map.
pub fn commutant(s: &[Mat], a: &StarAlgebra) -> Result<StarAlgebra> {
    let n = a.ambient_dim();
    let d = a.dim();
    for m in s {
        if m.rows() != n || m.cols() != n {
            return Err(Error::ShapeMismatch("commutant argument dimension".into()));
        }
    }
    if s.is_empty() {
        return Ok(a.clone());
    }
    let mut l = Mat::zeros(s.len() * n * n, d);
    for (k, basis_elem) in a.basis().iter().enumerate() {
        for (j, m) in s.iter().enumerate() {
            let com = m.commutator(basis_elem).vectorize();
            l.set_block(j * n * n, k, &com);
        }
    }
    let kernel = null_space(&l, crate::linalg::RANK_TOL)?;
    let basis: Vec<Mat> = kernel
        .iter()
        .map(|coef| {
            let c: Vec<C64> = (0..d).map(|i| coef[(i, 0)]).collect();
            a.from_coefficients(&c)
        })
        .collect();
    // Coefficient vectors are orthonormal and the basis is orthonormal, so
    // the images are orthonormal as well.
    Ok(StarAlgebra {
        ambient_dim: n,
        basis,
    })
}

/// An idempotent `p^2 = p`, optionally a self-adjoint projection.
#[derive(Clone, Debug)]
pub struct Idempotent {
    pub matrix: Mat,
}

impl Idempotent {
    pub fn new(matrix: Mat, tol: f64) -> Result<Self> {
        let r = idempotent_residual(&matrix);
        if r > tol * matrix.fro_norm().max(1.0) {
            return Err(Error::NotIdempotent(r));
        }
        Ok(Idempotent { matrix })
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.matrix.herm_residual() <= tol * self.matrix.fro_norm().max(1.0)
    }

    pub fn complement(&self) -> Mat {
        &Mat::identity(self.matrix.rows()) - &self.matrix
    }
}

pub fn idempotent_residual(p: &Mat) -> f64 {
    (&p.matmul(p) - p).fro_norm()
}

/// `p ~ q` in the Grassmannian sense: `pq = q` and `qp = p`.
pub fn idempotent_equivalent(p: &Idempotent, q: &Idempotent, tol: f64) -> bool {
    let pq = p.matrix.matmul(&q.matrix);
    let qp = q.matrix.matmul(&p.matrix);
    (&pq - &q.matrix).fro_norm() <= tol && (&qp - &p.matrix).fro_norm() <= tol
}

/// Membership of `g` in the isotropy group of the class `[p]` under the
/// collineation action: `p g^{-1} p = g^{-1} p` and `p g p = g p`.
pub fn isotropy_class_member(g: &Mat, p: &Idempotent, tol: f64) -> Result<bool> {
    let ginv = g.inverse()?;
    let pm = &p.matrix;
    let r1 = (&pm.matmul(&ginv).matmul(pm) - &ginv.matmul(pm)).fro_norm();
    let r2 = (&pm.matmul(g).matmul(pm) - &g.matmul(pm)).fro_norm();
    let scale = g.fro_norm().max(ginv.fro_norm()).max(1.0);
    Ok(r1 <= tol * scale && r2 <= tol * scale)
}

/// Basis of `A^p = { a in A : (1-p) a p = 0 }`.
pub fn ap_space(p: &Idempotent, a: &StarAlgebra) -> Result<Vec<Mat>> {
    if !p.is_projection(1e-9) {
        return Err(Error::NotProjection(p.matrix.herm_residual()));
    }
    let n = a.ambient_dim();
    let d = a.dim();
    let phat = p.complement();
    let mut l = Mat::zeros(n * n, d);
    for (k, b) in a.basis().iter().enumerate() {
        let img = phat.matmul(b).matmul(&p.matrix).vectorize();
        l.set_block(0, k, &img);
    }
    let kernel = null_space(&l, crate::linalg::RANK_TOL)?;
    Ok(kernel
        .iter()
        .map(|coef| {
            let c: Vec<C64> = (0..d).map(|i| coef[(i, 0)]).collect();
            a.from_coefficients(&c)
        })
        .collect())
}

/// A conditional expectation `E : A -> B`, stored as the images of the
/// source basis. `apply` first projects its argument onto `A`, so the map
/// is defined on all of `M_n` but only meaningful on the source.
#[derive(Clone, Debug)]
pub struct ConditionalExpectation {
    pub source: StarAlgebra,
    pub target: StarAlgebra,
    images: Vec<Mat>,
}

impl ConditionalExpectation {
    pub fn from_images(source: StarAlgebra, target: StarAlgebra, images: Vec<Mat>) -> Self {
        assert_eq!(images.len(), source.dim());
        ConditionalExpectation {
            source,
            target,
            images,
        }
    }

    pub fn apply(&self, x: &Mat) -> Mat {
        let coeffs = self.source.coefficients(x);
        let mut acc = Mat::zeros(x.rows(), x.cols());
        for (img, &c) in self.images.iter().zip(coeffs.iter()) {
            acc = &acc + &img.scale(c);
        }
        acc
    }

    pub fn images(&self) -> &[Mat] {
        &self.images
    }

    /// `||E(I) - I||`.
    pub fn unital_residual(&self) -> f64 {
        let eye = self.source.identity();
        (&self.apply(&eye) - &eye).fro_norm()
    }

    /// `max ||E(E(a)) - E(a)||` over the source basis.
    pub fn idempotent_residual(&self) -> f64 {
        self.source
            .basis()
            .iter()
            .map(|a| {
                let ea = self.apply(a);
                (&self.apply(&ea) - &ea).fro_norm()
            })
            .fold(0.0, f64::max)
    }
}

/// The expectation `E_p(T) = p T p + (1-p) T (1-p)` onto the commutant of a
/// self-adjoint projection `p` in `A`.
pub fn expectation_ep(p: &Idempotent, a: &StarAlgebra) -> Result<ConditionalExpectation> {
    if !p.is_projection(1e-9) {
        return Err(Error::NotProjection(p.matrix.herm_residual()));
    }
    if !a.contains(&p.matrix) {
        return Err(Error::NotSubalgebra("projection not in the algebra".into()));
    }
    let phat = p.complement();
    let images: Vec<Mat> = a
        .basis()
        .iter()
        .map(|t| &p.matrix.matmul(t).matmul(&p.matrix) + &phat.matmul(t).matmul(&phat))
        .collect();
    let target = commutant(std::slice::from_ref(&p.matrix), a)?;
    Ok(ConditionalExpectation::from_images(
        a.clone(),
        target,
        images,
    ))
}

/// The trace-orthogonal expectation: the Hilbert-Schmidt projection of `A`
/// onto a unital star-subalgebra `B`.
pub fn expectation_trace(a: &StarAlgebra, b: &StarAlgebra) -> Result<ConditionalExpectation> {
    if !a.contains_algebra(b) {
        return Err(Error::NotSubalgebra(
            "target basis does not lie in the source".into(),
        ));
    }
    if !b.contains(&b.identity()) {
        return Err(Error::NotSubalgebra("target is not unital".into()));
    }
    let images: Vec<Mat> = a
        .basis()
        .iter()
        .map(|x| hs_project(x, b.basis()))
        .collect::<Result<_>>()?;
    Ok(ConditionalExpectation::from_images(
        a.clone(),
        b.clone(),
        images,
    ))
}

/// Residual report for the Tomiyama properties of a candidate expectation.
#[derive(Clone, Debug)]
pub struct TomiyamaReport {
    pub unital_residual: f64,
    pub idempotent_residual: f64,
    pub adjoint_residual: f64,
    pub bimodule_residual: f64,
    /// Most negative eigenvalue of `E(a^* a) - E(a)^* E(a)` over the samples
    /// (nonnegative gap means the Schwarz inequality holds).
    pub schwarz_min_eig: f64,
    pub range_in_target_residual: f64,
}

impl TomiyamaReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.unital_residual <= tol
            && self.idempotent_residual <= tol
            && self.adjoint_residual <= tol
            && self.bimodule_residual <= tol
            && self.range_in_target_residual <= tol
            && self.schwarz_min_eig >= -tol
    }
}

/// Samples random elements and verifies `E(a^*) = E(a)^*`, the bimodule
/// property `E(b1 a b2) = b1 E(a) b2`, and the Schwarz inequality.
pub fn tomiyama_check(e: &ConditionalExpectation, samples: usize, seed: u64) -> TomiyamaReport {
    let mut rng = crate::rng::check_rng(seed, "tomiyama");
    let mut adjoint_residual: f64 = 0.0;
    let mut bimodule_residual: f64 = 0.0;
    let mut schwarz_min_eig: f64 = f64::INFINITY;
    let mut range_residual: f64 = 0.0;
    for img in e.images() {
        range_residual = range_residual.max(e.target.membership_residual(img));
    }
    for _ in 0..samples {
        let a = crate::rng::random_in_span(&mut rng, e.source.basis());
        let scale = a.fro_norm().max(1.0);
        let ea = e.apply(&a);
        adjoint_residual =
            adjoint_residual.max((&e.apply(&a.adjoint()) - &ea.adjoint()).fro_norm() / scale);

        let b1 = crate::rng::random_in_span(&mut rng, e.target.basis());
        let b2 = crate::rng::random_in_span(&mut rng, e.target.basis());
        let lhs = e.apply(&b1.matmul(&a).matmul(&b2));
        let rhs = b1.matmul(&ea).matmul(&b2);
        let bscale = (b1.fro_norm() * b2.fro_norm() * a.fro_norm()).max(1.0);
        bimodule_residual = bimodule_residual.max((&lhs - &rhs).fro_norm() / bscale);

        let gap = &e.apply(&a.adjoint().matmul(&a)) - &ea.adjoint().matmul(&ea);
        if let Ok(eig) = herm_eig(&gap.herm_part(), 1e-6) {
            schwarz_min_eig = schwarz_min_eig.min(eig.min() / (scale * scale));
        }
    }
    if !schwarz_min_eig.is_finite() {
        schwarz_min_eig = 0.0;
    }
    TomiyamaReport {
        unital_residual: e.unital_residual(),
        idempotent_residual: e.idempotent_residual(),
        adjoint_residual,
        bimodule_residual,
        schwarz_min_eig,
        range_in_target_residual: range_residual,
    }
}

/// Diagonal subalgebra of `M_n` (a convenience used all over the tests).
pub fn diagonal_algebra(n: usize) -> StarAlgebra {
    let basis = (0..n).map(|i| Mat::matrix_unit(n, i, i)).collect();
    StarAlgebra {
        ambient_dim: n,
        basis,
    }
}

#[cfg(test)]
pub(crate) fn pauli_x() -> Mat {
    Mat::from_rows(&[vec![(0.0, 0.0), (1.0, 0.0)], vec![(1.0, 0.0), (0.0, 0.0)]]).unwrap()
}

#[cfg(test)]
pub(crate) fn pauli_z() -> Mat {
    Mat::diag(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
}
