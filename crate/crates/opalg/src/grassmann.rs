//! The Grassmannian of subspaces of `C^d`, its tautological bundle
//! `(S, x), x in S`, the universal reproducing kernel
//! `Q(S1, S2) = p_{S1}|_{S2}`, and the identification with classes
//! `[(u, f)]` over a reference subspace.

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, orthonormalize, HERM_TOL};
use crate::Mat;

/// A point of the Grassmannian: a subspace of `C^d` carried by an
/// orthonormal column basis.
#[derive(Clone, Debug)]
pub struct SubspacePoint {
    basis: Mat,
}

impl SubspacePoint {
    /// Orthonormalizes the given spanning columns.
    pub fn from_columns(cols: &Mat) -> Result<Self> {
        let items: Vec<Mat> = (0..cols.cols()).map(|j| cols.column(j)).collect();
        let ortho = orthonormalize(&items, 1e-12);
        if ortho.is_empty() {
            return Err(Error::ShapeMismatch("subspace must be nonzero".into()));
        }
        Ok(SubspacePoint {
            basis: Mat::hcat(&ortho),
        })
    }

    /// The reference subspace: the span of the first `k` coordinates.
    pub fn coordinate_subspace(ambient: usize, k: usize) -> Self {
        let mut basis = Mat::zeros(ambient, k);
        for j in 0..k {
            basis[(j, j)] = num_complex::Complex64::new(1.0, 0.0);
        }
        SubspacePoint { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    /// The orthogonal projection `p_S = B B^*`.
    pub fn projector(&self) -> Mat {
        self.basis.matmul(&self.basis.adjoint())
    }

    pub fn orthogonal_complement(&self) -> Result<Self> {
        let d = self.ambient_dim();
        let p = self.projector();
        let mut items = Vec::new();
        for j in 0..d {
            let e = Mat::basis_vec(d, j);
            items.push(&e - &p.matmul(&e));
        }
        let ortho = orthonormalize(&items, 1e-10);
        if ortho.len() != d - self.dim() {
            return Err(Error::ShapeMismatch("complement dimension".into()));
        }
        let basis = if ortho.is_empty() {
            Mat::zeros(d, 0)
        } else {
            Mat::hcat(&ortho)
        };
        Ok(SubspacePoint { basis })
    }

    /// Residual of `x` against membership in the subspace.
    pub fn membership_residual(&self, x: &Mat) -> f64 {
        (x - &self.projector().matmul(x)).fro_norm()
    }

    /// The image subspace `g S` under an invertible map.
    pub fn map_by(&self, g: &Mat) -> Result<Self> {
        SubspacePoint::from_columns(&g.matmul(&self.basis))
    }

    pub fn equal(&self, other: &SubspacePoint, tol: f64) -> bool {
        self.ambient_dim() == other.ambient_dim()
            && (&self.projector() - &other.projector()).fro_norm() <= tol
    }
}

/// The universal kernel `Q(S1, S2) x = p_{S1} x` for `x in S2`.
pub fn grassmann_kernel(s1: &SubspacePoint, s2: &SubspacePoint, x: &Mat) -> Result<Mat> {
    let res = s2.membership_residual(x);
    if res > 1e-9 * x.fro_norm().max(1.0) {
        return Err(Error::VectorNotInFiber(res));
    }
    Ok(s1.projector().matmul(x))
}

/// Gram certificate of positivity for the universal kernel over samples
/// `(S_j, x_j in S_j)`: entries `(Q(S_l, S_j) x_j | x_l)`.
pub fn grassmann_gram(samples: &[(SubspacePoint, Mat)]) -> Result<(Mat, f64)> {
    let n = samples.len();
    let mut g = Mat::zeros(n, n);
    for (l, (sl, xl)) in samples.iter().enumerate() {
        for (j, (_, xj)) in samples.iter().enumerate() {
            let v = grassmann_kernel(sl, &samples[j].0, xj)?;
            g[(l, j)] = xl.adjoint().matmul(&v)[(0, 0)];
        }
    }
    let min = herm_eig(&g.herm_part(), HERM_TOL)?.min();
    Ok((g, min))
}

/// The tautological identification `[(u, f)] -> (u S0, u f)`.
pub fn tautological_lift(u: &Mat, f: &Mat, s0: &SubspacePoint) -> Result<(SubspacePoint, Mat)> {
    let res = s0.membership_residual(f);
    if res > 1e-9 * f.fro_norm().max(1.0) {
        return Err(Error::VectorNotInFiber(res));
    }
    Ok((s0.map_by(u)?, u.matmul(f)))
}

/// Inverse of the lift: from `(S, x)` recovers a representative pair
/// `(u', f')` with `u' S0 = S` and `u' f' = x`, unitary `u'` assembled
/// from orthonormal bases of `S` and its complement.
pub fn tautological_lift_inv(s: &SubspacePoint, x: &Mat, s0: &SubspacePoint) -> Result<(Mat, Mat)> {
    if s.dim() != s0.dim() {
        return Err(Error::ShapeMismatch("subspace dimensions differ".into()));
    }
    let res = s.membership_residual(x);
    if res > 1e-9 * x.fro_norm().max(1.0) {
        return Err(Error::VectorNotInFiber(res));
    }
    let comp = s.orthogonal_complement()?;
    let comp0 = s0.orthogonal_complement()?;
    // u' maps the orthonormal basis of S0 onto that of S and complement
    // onto complement.
    let u =
        &s.basis().matmul(&s0.basis().adjoint()) + &comp.basis().matmul(&comp0.basis().adjoint());
    let f = u.adjoint().matmul(x);
    Ok((u, f))
}

/// Class equality of `(u1, f1)` and `(u2, f2)` over the isotropy of the
/// reference subspace: the transition `w = u1^* u2` must commute with the
/// reference projector and carry `f2` back to `f1`.
pub fn class_distance((u1, f1): (&Mat, &Mat), (u2, f2): (&Mat, &Mat), s0: &SubspacePoint) -> f64 {
    let w = u1.adjoint().matmul(u2);
    let p0 = s0.projector();
    let commute = (&w.matmul(&p0) - &p0.matmul(&w)).fro_norm();
    let fiber = (&w.matmul(f2) - f1).fro_norm();
    commute.max(fiber)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use num_complex::Complex64;

    #[test]
    fn kernel_on_equal_and_orthogonal_subspaces() {
        let s0 = SubspacePoint::coordinate_subspace(4, 2);
        let mut r = rng::check_rng(91, "grassmann-basic");
        let mut x = Mat::zeros(4, 1);
        x[(0, 0)] = rng::random_complex(&mut r);
        x[(1, 0)] = rng::random_complex(&mut r);
        // S1 = S2: identity on the subspace.
        let k = grassmann_kernel(&s0, &s0, &x).unwrap();
        assert!((&k - &x).fro_norm() < 1e-12);
        // Orthogonal subspaces: zero.
        let comp = s0.orthogonal_complement().unwrap();
        let k = grassmann_kernel(&comp, &s0, &x).unwrap();
        assert!(k.fro_norm() < 1e-12);
        // Membership precondition.
        let y = Mat::basis_vec(4, 3);
        assert!(matches!(
            grassmann_kernel(&s0, &s0, &y),
            Err(Error::VectorNotInFiber(_))
        ));
    }

    #[test]
    fn gram_positivity_over_random_subspaces() {
        let mut r = rng::check_rng(92, "grassmann-gram");
        let mut samples = Vec::new();
        for _ in 0..5 {
            let cols = rng::random_matrix(&mut r, 5, 2);
            let s = SubspacePoint::from_columns(&cols).unwrap();
            let x = s.projector().matmul(&rng::random_vector(&mut r, 5));
            samples.push((s, x));
        }
        let (_, min) = grassmann_gram(&samples).unwrap();
        assert!(min >= -1e-10, "min eigenvalue {min}");
    }

    #[test]
    fn tautological_lift_round_trip() {
        let s0 = SubspacePoint::coordinate_subspace(4, 2);
        let mut r = rng::check_rng(93, "taut-roundtrip");
        // u = I: (S0, f).
        let f = s0.projector().matmul(&rng::random_vector(&mut r, 4));
        let (s, x) = tautological_lift(&Mat::identity(4), &f, &s0).unwrap();
        assert!(s.equal(&s0, 1e-10));
        assert!((&x - &f).fro_norm() < 1e-12);
        // Random unitary: inverse recovers the class, fiber norms agree.
        let u = rng::random_unitary(&mut r, 4);
        let (s, x) = tautological_lift(&u, &f, &s0).unwrap();
        assert_eq!(s.dim(), s0.dim());
        assert_eq!(
            s.orthogonal_complement().unwrap().dim(),
            s0.orthogonal_complement().unwrap().dim()
        );
        let (u2, f2) = tautological_lift_inv(&s, &x, &s0).unwrap();
        assert!(class_distance((&u, &f), (&u2, &f2), &s0) < 1e-10);
        assert!((f.fro_norm() - f2.fro_norm()).abs() < 1e-10);
    }

    #[test]
    fn full_subspace_has_empty_complement() {
        let s = SubspacePoint::coordinate_subspace(3, 3);
        let comp = s.orthogonal_complement().unwrap();
        assert_eq!(comp.dim(), 0);
        assert!(comp.projector().fro_norm() < 1e-15);
    }

    #[test]
    fn complement_of_image_under_invertibles() {
        // (g S0)^perp = (g^*)^{-1} (S0^perp) for non-unitary invertible g.
        let s0 = SubspacePoint::coordinate_subspace(5, 2);
        let mut r = rng::check_rng(94, "complement");
        for _ in 0..5 {
            let g = rng::random_invertible(&mut r, 5, 30.0);
            let lhs = s0.map_by(&g).unwrap().orthogonal_complement().unwrap();
            let rhs = s0
                .orthogonal_complement()
                .unwrap()
                .map_by(&g.inv_adjoint().unwrap())
                .unwrap();
            assert!(lhs.equal(&rhs, 1e-10));
        }
    }

    #[test]
    fn tautological_realization_intertwines() {
        // The section gamma(h): S -> p_S h satisfies
        // gamma(u h)(S) = u gamma(h)(u^{-1} S) for unitary u.
        let mut r = rng::check_rng(95, "taut-intertwine");
        let h = rng::random_vector(&mut r, 4);
        let u = rng::random_unitary(&mut r, 4);
        for _ in 0..6 {
            let s = SubspacePoint::from_columns(&rng::random_matrix(&mut r, 4, 2)).unwrap();
            let lhs = s.projector().matmul(&u.matmul(&h));
            let spulled = s.map_by(&u.adjoint()).unwrap();
            let rhs = u.matmul(&spulled.projector()).matmul(&h);
            assert!((&lhs - &rhs).fro_norm() < 1e-9);
        }
        let _ = Complex64::new(0.0, 0.0);
    }
}
