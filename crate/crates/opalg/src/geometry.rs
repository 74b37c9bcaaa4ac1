//! Cosets of `G_A / G_B`, the `z -> z^{-*}` involution and its fixed
//! points, and the polar decomposition `a = u exp(iX) b` relative to a
//! conditional expectation (`u` unitary, `X` anti-Hermitian with
//! `E(X) = 0`, `b` positive in `B`), together with the chart `Psi^E` and
//! the multiplicative-involution identity `a^{-*} = a_+ a b_+`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{ConditionalExpectation, StarAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, mat_exp, mat_log_near_identity, mat_log_pd, mat_sqrt_psd, svd, HERM_TOL,
};
use crate::Mat;

/// Residual target on `||E(log(b^{-1} c b^{-1}))||` for the polar solver.
pub const POLAR_TARGET: f64 = 1e-10;

/// Iteration budget of the damped fixed-point loop.
pub const POLAR_MAX_ITER: usize = 500;

/// Shared data a family of cosets lives over: the ambient algebra, the
/// subalgebra, and the expectation tying them together.
#[derive(Debug)]
pub struct PolarContext {
    pub alg_a: StarAlgebra,
    pub alg_b: StarAlgebra,
    pub expectation: ConditionalExpectation,
}

impl PolarContext {
    pub fn new(
        alg_a: StarAlgebra,
        alg_b: StarAlgebra,
        expectation: ConditionalExpectation,
    ) -> Result<Arc<Self>> {
        if !alg_a.contains_algebra(&alg_b) {
            return Err(Error::NotSubalgebra("B must be a subalgebra of A".into()));
        }
        Ok(Arc::new(PolarContext {
            alg_a,
            alg_b,
            expectation,
        }))
    }

    fn e(&self, x: &Mat) -> Mat {
        self.expectation.apply(x)
    }

    fn e_complement(&self, x: &Mat) -> Mat {
        x - &self.e(x)
    }
}

/// A point of `G_A / G_B`, carried by one invertible representative.
#[derive(Clone, Debug)]
pub struct CosetPoint {
    pub rep: Mat,
    pub context: Arc<PolarContext>,
}

impl CosetPoint {
    pub fn new(rep: Mat, context: Arc<PolarContext>) -> Result<Self> {
        let s = svd(&rep)?;
        if s.sigma_min() <= 1e-12 * s.sigma_max().max(f64::MIN_POSITIVE) {
            return Err(Error::Singular(s.sigma_min()));
        }
        let res = context.alg_a.membership_residual(&rep);
        if res > crate::algebra::MEMBER_TOL * rep.fro_norm() {
            return Err(Error::NotSubalgebra(format!(
                "representative not in the ambient algebra (residual {res:.3e})"
            )));
        }
        Ok(CosetPoint { rep, context })
    }

    pub fn same_context(&self, other: &CosetPoint) -> bool {
        Arc::ptr_eq(&self.context, &other.context)
    }

    /// The involuted point `z^{-*}`, represented by `(rep^{-1})^*`.
    pub fn involution(&self) -> Result<CosetPoint> {
        Ok(CosetPoint {
            rep: self.rep.inv_adjoint()?,
            context: Arc::clone(&self.context),
        })
    }

    /// Left translation `g . z`.
    pub fn translate(&self, g: &Mat) -> Result<CosetPoint> {
        CosetPoint::new(g.matmul(&self.rep), Arc::clone(&self.context))
    }
}

/// Coset equality: `rep1^{-1} rep2` lies in `B` (within the membership
/// tolerance) and is invertible.
pub fn coset_equal(z1: &CosetPoint, z2: &CosetPoint) -> Result<bool> {
    if !z1.same_context(z2) {
        return Err(Error::ContextMismatch);
    }
    let w = z1.rep.inverse()?.matmul(&z2.rep);
    let res = z1.context.alg_b.membership_residual(&w);
    Ok(res <= 1e-9 * w.fro_norm().max(1.0))
}

/// The polar factors of an invertible element relative to the expectation:
/// `a = u * exp(iX) * b`.
#[derive(Clone, Debug)]
pub struct PolarTriple {
    pub u: Mat,
    pub x: Mat,
    pub b: Mat,
    pub iterations: usize,
    pub used_fallback: bool,
}

impl PolarTriple {
    pub fn reconstruct(&self) -> Mat {
        let eix = mat_exp(&self.x.scale(Complex64::new(0.0, 1.0)));
        self.u.matmul(&eix).matmul(&self.b)
    }

    /// Worst violation of the structural constraints: `u` unitary,
    /// `X` anti-Hermitian with `E(X) = 0`, `b` positive definite and in `B`.
    pub fn structure_residual(&self, ctx: &PolarContext) -> f64 {
        let n = self.u.rows();
        let unit = (&self.u.adjoint().matmul(&self.u) - &Mat::identity(n)).fro_norm();
        let anti = (&self.x + &self.x.adjoint()).fro_norm();
        let ker = ctx.e(&self.x).fro_norm();
        let herm = self.b.herm_residual();
        let memb = ctx.alg_b.membership_residual(&self.b);
        let pd = match herm_eig(&self.b.herm_part(), 1.0) {
            Ok(e) if e.min() > 0.0 => 0.0,
            Ok(e) => -e.min() + f64::MIN_POSITIVE,
            Err(_) => f64::INFINITY,
        };
        unit.max(anti).max(ker).max(herm).max(memb).max(pd)
    }
}

fn hermitian_real_basis(b: &StarAlgebra) -> Vec<Mat> {
    let mut items = Vec::new();
    for e in b.basis() {
        items.push(e.herm_part());
        items.push((e - &e.adjoint()).scale(Complex64::new(0.0, -0.5)));
    }
    // Hermitian matrices have real HS pairings, so Gram-Schmidt keeps the
    // family Hermitian.
    crate::linalg::orthonormalize(&items, 1e-10)
}

fn polar_objective(ctx: &PolarContext, c: &Mat, beta: &Mat) -> Result<(f64, Mat)> {
    let b = mat_exp(beta).herm_part();
    let binv = b.inverse()?;
    let m = binv.matmul(c).matmul(&binv).herm_part();
    let l = mat_log_pd(&m, 1e-12)?;
    let d = ctx.e(&l).herm_part();
    Ok((d.fro_norm(), d))
}

/// Solves the polar decomposition `a = u exp(iX) b` by a damped
/// fixed-point iteration on the positive factor in `B` (additive in the
/// logarithm chart of the positive cone), with a derivative-free compass
/// search as fallback.
///
/// The positive factor is characterized by `E(log(b^{-1} a^* a b^{-1})) = 0`:
/// from `a^* a = b e^{2iX} b`, the inner logarithm is `2iX`, which `E`
/// kills exactly when `X` lies in `ker E`.
pub fn porta_recht(a: &Mat, context: &Arc<PolarContext>) -> Result<PolarTriple> {
    porta_recht_from(a, context, None)
}

/// Same as [`porta_recht`] but starting from a caller-supplied initial
/// Hermitian log-coordinate (used by the multi-restart agreement checks).
pub fn porta_recht_from(
    a: &Mat,
    context: &Arc<PolarContext>,
    beta0: Option<Mat>,
) -> Result<PolarTriple> {
    let ctx = context.as_ref();
    let n = a.rows();
    let s = svd(a)?;
    if s.sigma_min() <= 1e-12 * s.sigma_max().max(f64::MIN_POSITIVE) {
        return Err(Error::Singular(s.sigma_min()));
    }
    let c = a.adjoint().matmul(a).herm_part();
    let log_c = mat_log_pd(&c, 1e-12)?;
    let mut beta = match beta0 {
        Some(b0) => b0,
        None => ctx.e(&log_c).scale_re(0.5).herm_part(),
    };
    let mut iterations = 0;
    let mut used_fallback = false;
    let mut converged = false;
    // Damped update: the base step is (theta/2) * E(log(...)) with
    // theta = 1/2. The damping adapts to the local contraction rate:
    // grow while progress is slow, halve and retry when the objective
    // increases.
    let mut tau = 0.25f64;
    let (mut norm, mut d) = polar_objective(ctx, &c, &beta)?;
    for k in 1..=POLAR_MAX_ITER {
        iterations = k;
        if norm <= POLAR_TARGET {
            converged = true;
            break;
        }
        let cand = (&beta + &d.scale_re(tau)).herm_part();
        match polar_objective(ctx, &c, &cand) {
            Ok((cand_norm, cand_d)) if cand_norm < norm => {
                let rate = cand_norm / norm;
                beta = cand;
                norm = cand_norm;
                d = cand_d;
                if rate > 0.5 {
                    tau = (tau * 1.5).min(1.0);
                }
            }
            _ => {
                tau *= 0.5;
                if tau < 1e-8 {
                    break;
                }
            }
        }
    }
    if !converged {
        // Derivative-free fallback: compass search over the coefficients of
        // beta in a Hermitian basis of B.
        used_fallback = true;
        let dirs = hermitian_real_basis(&ctx.alg_b);
        let mut best = beta.clone();
        let mut best_val = polar_objective(ctx, &c, &best)?.0;
        let mut step = 0.25f64;
        let mut evals = 0usize;
        while step > 1e-13 && evals < 4000 && best_val > POLAR_TARGET {
            let mut improved = false;
            for h in &dirs {
                for sign in [1.0f64, -1.0] {
                    let cand = (&best + &h.scale_re(sign * step)).herm_part();
                    evals += 1;
                    if let Ok((v, _)) = polar_objective(ctx, &c, &cand) {
                        if v < best_val {
                            best_val = v;
                            best = cand;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best_val > 1e-8 {
            return Err(Error::NoConvergence(format!(
                "polar solver stalled at objective {best_val:.3e}"
            )));
        }
        beta = best;
    }

    let b = mat_exp(&beta).herm_part();
    let binv = b.inverse()?;
    let m = binv.matmul(&c).matmul(&binv).herm_part();
    let l = mat_log_pd(&m, 1e-12)?;
    // 2iX = log(b^{-1} c b^{-1}).
    let x = l.scale(Complex64::new(0.0, -0.5));
    let exp_minus_ix = mat_exp(&l.scale_re(-0.5));
    let u = a.matmul(&binv).matmul(&exp_minus_ix);
    let _ = n;
    Ok(PolarTriple {
        u,
        x,
        b,
        iterations,
        used_fallback,
    })
}

/// `Psi^E`: the class of `(u, X)` realized as the coset of `u exp(iX)`.
pub fn psi_e(u: &Mat, x: &Mat, context: &Arc<PolarContext>) -> Result<CosetPoint> {
    let rep = u.matmul(&mat_exp(&x.scale(Complex64::new(0.0, 1.0))));
    CosetPoint::new(rep, Arc::clone(context))
}

/// Inverse of `Psi^E` through the polar solver: recovers the class
/// `[(u, X)]` of the representative.
pub fn psi_e_inv(z: &CosetPoint) -> Result<PolarTriple> {
    porta_recht(&z.rep, &z.context)
}

/// Distance between the classes `[(u1, X1)]` and `[(u2, X2)]` modulo the
/// `U_B` action `(u, X) -> (u v, v^{-1} X v)`: solves for the aligning
/// unitary `v = u1^* u2`, checks it lies in `U_B`, and measures the
/// conjugated mismatch of the `X` components.
pub fn class_distance(ctx: &PolarContext, (u1, x1): (&Mat, &Mat), (u2, x2): (&Mat, &Mat)) -> f64 {
    let v = u1.adjoint().matmul(u2);
    let n = v.rows();
    let unitary_res = (&v.adjoint().matmul(&v) - &Mat::identity(n)).fro_norm();
    let member_res = ctx.alg_b.membership_residual(&v);
    let conj = (&v.adjoint().matmul(x1).matmul(&v) - x2).fro_norm();
    unitary_res.max(member_res).max(conj)
}

/// Fixed-point test for the involution, with the unitary representative
/// `rep * q^{-1/2}` (where `q` is the `B`-part of `rep^* rep`) on success.
pub fn is_fixed_point(z: &CosetPoint) -> Result<Option<Mat>> {
    let inv = z.involution()?;
    if !coset_equal(z, &inv)? {
        return Ok(None);
    }
    // rep^{-1} rep^{-*} = (rep^* rep)^{-1} is in B, hence so is rep^* rep;
    // its positive square root stays in B and trims rep to a unitary in the
    // same coset.
    let q = z
        .context
        .alg_b
        .project(&z.rep.adjoint().matmul(&z.rep))
        .herm_part();
    let sq = mat_sqrt_psd(&q, 1e-10)?;
    let u = z.rep.matmul(&sq.inverse()?);
    Ok(Some(u))
}

/// Report of the finite-difference tangent check of `Psi^E` at the base
/// point: the derivative along `(Z, Y)` must be `(1-E)Z + iY` in the
/// quotient chart.
#[derive(Clone, Debug)]
pub struct TangentReport {
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
    pub pass: bool,
}

/// Chart of `G_A/G_B` near the identity coset with values in `ker E`:
/// Newton iteration for `W` with `exp(-W) rep` in `G_B`.
fn quotient_chart(ctx: &PolarContext, rep: &Mat) -> Result<Mat> {
    let n = rep.rows();
    let mut w = Mat::zeros(n, n);
    for _ in 0..40 {
        let g = mat_exp(&w.scale_re(-1.0)).matmul(rep);
        let l = mat_log_near_identity(&g)?;
        let d = ctx.e_complement(&l);
        if d.fro_norm() <= 1e-14 {
            return Ok(w);
        }
        w = &w + &d;
    }
    Err(Error::NoConvergence("quotient chart newton".into()))
}

/// Central finite differences of `Psi^E` along `(Z, Y)` on a halving
/// epsilon grid, compared against the closed-form tangent `(1-E)Z + iY`.
pub fn tangent_check_psi(
    context: &Arc<PolarContext>,
    z_dir: &Mat,
    y_dir: &Mat,
    eps_grid: &[f64],
) -> Result<TangentReport> {
    let ctx = context.as_ref();
    let target = &ctx.e_complement(z_dir) + &y_dir.scale(Complex64::new(0.0, 1.0));
    let curve = |t: f64| -> Result<Mat> {
        let rep =
            mat_exp(&z_dir.scale_re(t)).matmul(&mat_exp(&y_dir.scale(Complex64::new(0.0, t))));
        quotient_chart(ctx, &rep)
    };
    let mut residuals = Vec::new();
    for &eps in eps_grid {
        let plus = curve(eps)?;
        let minus = curve(-eps)?;
        let diff = (&plus - &minus).scale_re(1.0 / (2.0 * eps));
        residuals.push((&diff - &target).fro_norm());
    }
    let floor = 1e-12;
    let mut ratios = Vec::new();
    let mut pass = true;
    for k in 0..residuals.len().saturating_sub(1) {
        if residuals[k] < floor && residuals[k + 1] < floor {
            ratios.push(f64::NAN);
            continue;
        }
        let ratio = residuals[k] / residuals[k + 1].max(1e-300);
        ratios.push(ratio);
        if !(2.0..=8.0).contains(&ratio) {
            pass = false;
        }
    }
    Ok(TangentReport {
        residuals,
        ratios,
        pass,
    })
}

/// The multiplicative form of the involution: `a^{-*} = a_+ a b_+` with
/// `b_+ = E(a^* a)` and `a_+ = a^{-*} b_+^{-1} a^{-1}`, after rescaling
/// the input so that `||a^*|| < sqrt(2)`.
#[derive(Clone, Debug)]
pub struct MrFactorization {
    pub a_plus: Mat,
    pub b_plus: Mat,
    /// The applied rescale: the factors belong to `scale * a`.
    pub scale: f64,
}

pub fn mr_factorization(a: &Mat, context: &Arc<PolarContext>) -> Result<MrFactorization> {
    let ctx = context.as_ref();
    let s = svd(a)?;
    if s.sigma_min() <= 1e-12 * s.sigma_max().max(f64::MIN_POSITIVE) {
        return Err(Error::Singular(s.sigma_min()));
    }
    let limit = 0.99 * std::f64::consts::SQRT_2;
    let scale = if s.sigma_max() >= limit {
        limit / s.sigma_max()
    } else {
        1.0
    };
    let a_s = a.scale_re(scale);
    let b_plus = ctx.e(&a_s.adjoint().matmul(&a_s)).herm_part();
    let eig = herm_eig(&b_plus, HERM_TOL)?;
    if eig.min() <= 1e-12 * eig.op_norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositive(format!(
            "E(a^* a) has min eigenvalue {:.3e}; E is not a faithful expectation here",
            eig.min()
        )));
    }
    let a_inv = a_s.inverse()?;
    let a_invadj = a_inv.adjoint();
    let a_plus = a_invadj
        .matmul(&b_plus.inverse()?)
        .matmul(&a_inv)
        .herm_part();
    Ok(MrFactorization {
        a_plus,
        b_plus,
        scale,
    })
}

impl MrFactorization {
    /// `||a^{-*} - a_+ a b_+|| / ||a^{-*}||` for the rescaled input.
    pub fn identity_residual(&self, a: &Mat) -> Result<f64> {
        let a_s = a.scale_re(self.scale);
        let lhs = a_s.inv_adjoint()?;
        let rhs = self.a_plus.matmul(&a_s).matmul(&self.b_plus);
        Ok((&lhs - &rhs).fro_norm() / lhs.fro_norm().max(f64::MIN_POSITIVE))
    }

    pub fn positivity_floor(&self) -> Result<f64> {
        let ea = herm_eig(&self.a_plus, HERM_TOL)?;
        let eb = herm_eig(&self.b_plus, HERM_TOL)?;
        Ok(ea.min().min(eb.min()))
    }
}

/// Standard desk-scale context: `A = M_n`, `B` the diagonal subalgebra,
/// `E` the trace-orthogonal expectation (entrywise diagonal restriction).
pub fn diagonal_context(n: usize) -> Arc<PolarContext> {
    let a = StarAlgebra::full(n);
    let b = crate::algebra::diagonal_algebra(n);
    let e = crate::algebra::expectation_trace(&a, &b).expect("diagonal expectation");
    PolarContext::new(a, b, e).expect("diagonal context")
}
