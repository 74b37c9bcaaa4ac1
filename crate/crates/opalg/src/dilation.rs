//! GNS and Stinespring dilations of completely positive maps, and the
//! compatibility data relating the dilations of `Phi` and `Phi|_B` through
//! a conditional expectation.
//!
//! The dilation space is the column space of the Gram matrix
//! `G[(i,s),(j,t)] = Phi(a_i^* a_j)[s,t]` over basis tensors `a_i (x) e_s`,
//! coordinatized by the kept eigenpairs: classes map through
//! `kappa = Lambda^{1/2} W^*`, so the quotient inner product becomes the
//! standard one. Left multiplication conjugates to the representation.

use num_complex::Complex64;

use crate::algebra::{ConditionalExpectation, StarAlgebra};
use crate::cpmap::CpMap;
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, svd, RANK_TOL};
use crate::Mat;

/// Conditioning ratio below which the representation conjugation is flagged.
pub const COND_WARN: f64 = 1e-12;

/// A minimal dilation of a unital CP map `Phi : A -> M_{h0}`:
/// a unital star-representation `pi` of `A` on `C^{space_dim}` and an
/// isometry `V` with `Phi(a) = V^* pi(a) V`.
#[derive(Clone, Debug)]
pub struct DilationResult {
    pub algebra: StarAlgebra,
    pub space_dim: usize,
    pub h0_dim: usize,
    /// Images `pi(a_k)` of the algebra basis.
    pub rep: Vec<Mat>,
    /// The isometry `V : C^{h0} -> C^{space_dim}`.
    pub isometry_v: Mat,
    /// Class coordinates `kappa : A (x) H_0 -> C^{space_dim}`.
    kappa: Mat,
    /// Right inverse of `kappa` on the range (`W Lambda^{-1/2}`).
    lift: Mat,
    pub gram_rank_tol: f64,
    /// Ratio of smallest to largest kept Gram eigenvalue.
    pub condition_ratio: f64,
}

impl DilationResult {
    /// Kept-eigenvalue conditioning warning.
    pub fn is_ill_conditioned(&self) -> bool {
        self.condition_ratio < COND_WARN
    }

    /// Class-coordinate map from the coefficient space of `A (x) H_0`.
    pub(crate) fn class_matrix(&self) -> &Mat {
        &self.kappa
    }

    /// Right inverse of the class-coordinate map on the dilation space.
    pub(crate) fn class_lift(&self) -> &Mat {
        &self.lift
    }

    /// Linear extension of the representation to arbitrary elements of `A`.
    pub fn rep_of(&self, a: &Mat) -> Mat {
        let coeffs = self.algebra.coefficients(a);
        let mut out = Mat::zeros(self.space_dim, self.space_dim);
        for (img, &c) in self.rep.iter().zip(coeffs.iter()) {
            out = &out + &img.scale(c);
        }
        out
    }

    /// Class of the elementary tensor `a (x) xi` in the dilation space.
    pub fn class_of(&self, a: &Mat, xi: &Mat) -> Mat {
        let coeffs = self.algebra.coefficients(a);
        let h0 = self.h0_dim;
        let mut vec = Mat::zeros(coeffs.len() * h0, 1);
        for (i, &c) in coeffs.iter().enumerate() {
            for s in 0..h0 {
                vec[(i * h0 + s, 0)] = c * xi[(s, 0)];
            }
        }
        self.kappa.matmul(&vec)
    }

    /// `max ||pi(a_i a_j) - pi(a_i) pi(a_j)||` over the basis.
    pub fn multiplicativity_residual(&self) -> f64 {
        let basis = self.algebra.basis().to_vec();
        let mut worst: f64 = 0.0;
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let lhs = self.rep_of(&a.matmul(b));
                let rhs = self.rep[i].matmul(&self.rep[j]);
                worst = worst.max((&lhs - &rhs).fro_norm());
            }
        }
        worst
    }

    /// `max ||pi(a^*) - pi(a)^*||` over the basis.
    pub fn star_residual(&self) -> f64 {
        let basis = self.algebra.basis().to_vec();
        let mut worst: f64 = 0.0;
        for (i, a) in basis.iter().enumerate() {
            let lhs = self.rep_of(&a.adjoint());
            worst = worst.max((&lhs - &self.rep[i].adjoint()).fro_norm());
        }
        worst
    }

    pub fn unital_residual(&self) -> f64 {
        (&self.rep_of(&self.algebra.identity()) - &Mat::identity(self.space_dim)).fro_norm()
    }

    pub fn isometry_residual(&self) -> f64 {
        (&self.isometry_v.adjoint().matmul(&self.isometry_v) - &Mat::identity(self.h0_dim))
            .fro_norm()
    }

    /// Rank of `span { pi(a_k) V e_t }`; equals `space_dim` by minimality.
    pub fn minimality_rank(&self) -> usize {
        let mut cols = Vec::new();
        for img in &self.rep {
            let block = img.matmul(&self.isometry_v);
            for t in 0..self.h0_dim {
                cols.push(block.column(t));
            }
        }
        let stacked = Mat::hcat(&cols);
        svd(&stacked).map(|s| s.rank(RANK_TOL)).unwrap_or(0)
    }
}

fn stinespring_gram(alg: &StarAlgebra, phi: &CpMap) -> Mat {
    let d = alg.dim();
    let h0 = phi.out_dim();
    let mut g = Mat::zeros(d * h0, d * h0);
    for (i, a) in alg.basis().iter().enumerate() {
        for (j, b) in alg.basis().iter().enumerate() {
            let block = phi.apply(&a.adjoint().matmul(b));
            g.set_block(i * h0, j * h0, &block);
        }
    }
    g
}

/// Stinespring dilation of a unital completely positive map defined on the
/// ambient algebra of `alg` (the map is restricted to `alg` by only ever
/// evaluating it on products of basis elements).
pub fn stinespring(alg: &StarAlgebra, phi: &CpMap, rank_tol: f64) -> Result<DilationResult> {
    if phi.in_dim() != alg.ambient_dim() {
        return Err(Error::ShapeMismatch(
            "map domain must match the ambient algebra".into(),
        ));
    }
    if !phi.is_unital(1e-9) {
        return Err(Error::NotUnital(phi.unital_residual()));
    }
    let verdict = phi.is_completely_positive(1e-9)?;
    if !verdict.is_cp {
        return Err(Error::NotCp(verdict.witness_eigenvalue));
    }
    let d = alg.dim();
    let h0 = phi.out_dim();
    let g = stinespring_gram(alg, phi);
    let e = herm_eig(&g, 1e-8)?;
    let lmax = e.max().max(f64::MIN_POSITIVE);
    let kept: Vec<usize> = (0..d * h0)
        .filter(|&k| e.eigenvalues[k] > rank_tol * lmax)
        .collect();
    let r = kept.len();
    if r == 0 {
        return Err(Error::IncompatibleData(
            "gram matrix has no positive part".into(),
        ));
    }
    let mut kappa = Mat::zeros(r, d * h0);
    let mut lift = Mat::zeros(d * h0, r);
    for (row, &k) in kept.iter().enumerate() {
        let l = e.eigenvalues[k];
        let w = e.eigenvectors.column(k);
        let wr = w.adjoint().scale_re(l.sqrt());
        kappa.set_block(row, 0, &wr);
        lift.set_block(0, row, &w.scale_re(1.0 / l.sqrt()));
    }
    let condition_ratio = e.eigenvalues[kept[0]] / lmax;

    // Left multiplication on coefficient space: L_a = M(a) (x) I_{h0},
    // with M(a)_{ij} = <a a_j, a_i>_HS.
    let basis = alg.basis().to_vec();
    let mut rep = Vec::with_capacity(d);
    for a in &basis {
        let mut m = Mat::zeros(d, d);
        for (j, b) in basis.iter().enumerate() {
            let prod = a.matmul(b);
            for (i, c) in basis.iter().enumerate() {
                m[(i, j)] = prod.hs_inner(c);
            }
        }
        let l = m.kron(&Mat::identity(h0));
        rep.push(kappa.matmul(&l).matmul(&lift));
    }

    let unit_coeffs = alg.coefficients(&alg.identity());
    let mut v = Mat::zeros(r, h0);
    for t in 0..h0 {
        let mut vec = Mat::zeros(d * h0, 1);
        for (i, &c) in unit_coeffs.iter().enumerate() {
            vec[(i * h0 + t, 0)] = c;
        }
        v.set_block(0, t, &kappa.matmul(&vec));
    }

    Ok(DilationResult {
        algebra: alg.clone(),
        space_dim: r,
        h0_dim: h0,
        rep,
        isometry_v: v,
        kappa,
        lift,
        gram_rank_tol: rank_tol,
        condition_ratio,
    })
}

/// GNS construction from a state, as the one-dimensional-output case of
/// the Stinespring machinery.
pub fn gns(alg: &StarAlgebra, state: &CpMap) -> Result<DilationResult> {
    if state.out_dim() != 1 {
        return Err(Error::NotState("output dimension must be 1".into()));
    }
    let unit = state.apply(&alg.identity())[(0, 0)];
    if (unit - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::NotState(format!("state of the identity is {unit}")));
    }
    let verdict = state.is_completely_positive(1e-9)?;
    if !verdict.is_cp {
        return Err(Error::NotState("functional is not positive".into()));
    }
    stinespring(alg, state, RANK_TOL)
}

/// `max ||Phi(a) - V^* pi(a) V|| / ||a||` over seeded random elements.
pub fn dilation_residual(phi: &CpMap, d: &DilationResult, samples: usize, seed: u64) -> f64 {
    let mut rng = crate::rng::check_rng(seed, "dilation-residual");
    let mut worst: f64 = 0.0;
    let mut items: Vec<Mat> = d.algebra.basis().to_vec();
    for _ in 0..samples {
        items.push(crate::rng::random_in_span(&mut rng, d.algebra.basis()));
    }
    for a in &items {
        let lhs = phi.apply(a);
        let rhs = d
            .isometry_v
            .adjoint()
            .matmul(&d.rep_of(a))
            .matmul(&d.isometry_v);
        worst = worst.max((&lhs - &rhs).fro_norm() / a.fro_norm().max(1.0));
    }
    worst
}

/// The two commuting squares tying the dilations of `Phi` and `Phi|_B`:
/// `H_B` embeds isometrically into `H_A` via `embed`, the projection is
/// `embed^*`, and `P pi_A(b) = pi_B(b) P` together with the induced
/// expectation coinciding with `P`.
#[derive(Clone, Debug)]
pub struct CompatiblePair {
    pub dil_a: DilationResult,
    pub dil_b: DilationResult,
    /// Isometry `J : H_B -> H_A`.
    pub embed: Mat,
    pub expectation: ConditionalExpectation,
    pub phi: CpMap,
}

impl CompatiblePair {
    /// The orthogonal projection `P : H_A -> H_B` (as `J^*`).
    pub fn projection(&self) -> Mat {
        self.embed.adjoint()
    }

    pub fn embed_isometry_residual(&self) -> f64 {
        let r_b = self.dil_b.space_dim;
        (&self.embed.adjoint().matmul(&self.embed) - &Mat::identity(r_b)).fro_norm()
    }

    /// `max ||P pi_A(b) - pi_B(b) P||` over the basis of `B`.
    pub fn intertwining_residual(&self) -> f64 {
        let p = self.projection();
        let mut worst: f64 = 0.0;
        for b in self.dil_b.algebra.basis() {
            let lhs = p.matmul(&self.dil_a.rep_of(b));
            let rhs = self.dil_b.rep_of(b).matmul(&p);
            worst = worst.max((&lhs - &rhs).fro_norm());
        }
        worst
    }

    /// Left square: classes of `E(a) (x) h0` in `H_B` against the projected
    /// classes of `a (x) h0`.
    pub fn expectation_square_residual(&self) -> f64 {
        let p = self.projection();
        let h0 = self.dil_a.h0_dim;
        let mut worst: f64 = 0.0;
        for a in self.dil_a.algebra.basis() {
            let ea = self.expectation.apply(a);
            for t in 0..h0 {
                let xi = Mat::basis_vec(h0, t);
                let lhs = self.dil_b.class_of(&ea, &xi);
                let rhs = p.matmul(&self.dil_a.class_of(a, &xi));
                worst = worst.max((&lhs - &rhs).fro_norm());
            }
        }
        worst
    }

    /// The operator on `H_A` induced by `E` on classes, which must equal
    /// the orthogonal projection `J J^*` onto the embedded copy of `H_B`.
    pub fn induced_expectation_residual(&self) -> f64 {
        let h0 = self.dil_a.h0_dim;
        let jj = self.embed.matmul(&self.embed.adjoint());
        let mut worst: f64 = 0.0;
        // Spanning set: classes of a_i (x) e_t.
        for a in self.dil_a.algebra.basis() {
            let ea = self.expectation.apply(a);
            for t in 0..h0 {
                let xi = Mat::basis_vec(h0, t);
                let x = self.dil_a.class_of(a, &xi);
                let ex = self.dil_a.class_of(&ea, &xi);
                worst = worst.max((&ex - &jj.matmul(&x)).fro_norm());
            }
        }
        worst
    }

    /// Rank of `span pi_A(U_A) H_B` over seeded sample unitaries; equals
    /// `dim H_A` (the generation property).
    pub fn generation_rank(&self, samples: usize, seed: u64) -> usize {
        let mut rng = crate::rng::check_rng(seed, "generation");
        let mut cols = Vec::new();
        for b in 0..self.dil_b.space_dim {
            cols.push(self.embed.column(b));
        }
        for _ in 0..samples {
            let u = crate::rng::random_unitary_in_span(&mut rng, self.dil_a.algebra.basis());
            let pu = self.dil_a.rep_of(&u);
            for b in 0..self.dil_b.space_dim {
                cols.push(pu.matmul(&self.embed.column(b)));
            }
        }
        let stacked = Mat::hcat(&cols);
        svd(&stacked).map(|s| s.rank(RANK_TOL)).unwrap_or(0)
    }
}

/// Builds the compatible pair of dilations for `B <= A`, a conditional
/// expectation `E : A -> B`, and a unital CP map with `Phi . E = Phi`.
pub fn compatible_pair(
    a: &StarAlgebra,
    b: &StarAlgebra,
    e: &ConditionalExpectation,
    phi: &CpMap,
) -> Result<CompatiblePair> {
    if !a.contains_algebra(b) {
        return Err(Error::NotSubalgebra("B is not a subalgebra of A".into()));
    }
    let mut proj_res: f64 = 0.0;
    for x in a.basis() {
        let diff = &phi.apply(&e.apply(x)) - &phi.apply(x);
        proj_res = proj_res.max(diff.fro_norm());
    }
    if proj_res > 1e-9 {
        return Err(Error::IncompatibleData(format!(
            "Phi . E differs from Phi on the basis (residual {proj_res:.3e})"
        )));
    }
    let dil_a = stinespring(a, phi, RANK_TOL)?;
    let dil_b = stinespring(b, phi, RANK_TOL)?;
    // J maps the B-class of b_k (x) e_t to the A-class of the same tensor.
    // In kappa_B coordinates the B-classes of basis tensors are exactly the
    // columns of kappa_B, whose right inverse is the lift, so J = X_A lift_B.
    let h0 = phi.out_dim();
    let mut xa = Mat::zeros(dil_a.space_dim, dil_b.algebra.dim() * h0);
    for (k, bk) in dil_b.algebra.basis().iter().enumerate() {
        for t in 0..h0 {
            let xi = Mat::basis_vec(h0, t);
            xa.set_block(0, k * h0 + t, &dil_a.class_of(bk, &xi));
        }
    }
    let embed = xa.matmul(&dil_b.lift);
    Ok(CompatiblePair {
        dil_a,
        dil_b,
        embed,
        expectation: e.clone(),
        phi: phi.clone(),
    })
}
