//! Homogeneous vector bundles `G_A x_{G_B} H_B -> G_A/G_B` carrying the
//! duality pairing between fibers at `z` and `z^{-*}`, their reproducing
//! kernels, realization operators, and the finite-difference holomorphy
//! checks.
//!
//! All fiber computations route through the basic map
//! `[(u, f)] -> pi_A(u) J f`, which is independent of the representative
//! and turns class identities into concrete vector identities in `H_A`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::dilation::CompatiblePair;
use crate::error::{Error, Result};
use crate::geometry::{coset_equal, CosetPoint, PolarContext};
use crate::linalg::{herm_eig, mat_exp, svd, HERM_TOL, RANK_TOL};
use crate::{Mat, C64};

/// Conditioning floor for coordinatized sample Gram matrices.
pub const GRAM_COND_FLOOR: f64 = 1e-12;

/// The representation data a bundle lives over: star-representations of
/// `A` on `H_A` and of `B` on `H_B`, with the isometric embedding
/// `J : H_B -> H_A` satisfying `pi_A(b) J = J pi_B(b)`.
#[derive(Debug)]
pub struct BundleData {
    pub context: Arc<PolarContext>,
    rep_a_images: Vec<Mat>,
    rep_b_images: Vec<Mat>,
    embed: Mat,
}

impl BundleData {
    pub fn new(
        context: Arc<PolarContext>,
        rep_a_images: Vec<Mat>,
        rep_b_images: Vec<Mat>,
        embed: Mat,
    ) -> Result<Arc<Self>> {
        if rep_a_images.len() != context.alg_a.dim() || rep_b_images.len() != context.alg_b.dim() {
            return Err(Error::ShapeMismatch("representation image counts".into()));
        }
        let data = BundleData {
            context,
            rep_a_images,
            rep_b_images,
            embed,
        };
        let iso =
            (&data.embed.adjoint().matmul(&data.embed) - &Mat::identity(data.dim_b())).fro_norm();
        if iso > 1e-8 {
            return Err(Error::IncompatibleData(format!(
                "embedding is not an isometry (residual {iso:.3e})"
            )));
        }
        let mut worst: f64 = 0.0;
        for b in data.context.alg_b.basis() {
            let lhs = data.rep_a(b).matmul(&data.embed);
            let rhs = data.embed.matmul(&data.rep_b(b));
            worst = worst.max((&lhs - &rhs).fro_norm());
        }
        if worst > 1e-8 {
            return Err(Error::IncompatibleData(format!(
                "embedding does not intertwine the representations (residual {worst:.3e})"
            )));
        }
        Ok(Arc::new(data))
    }

    /// Bundle data of a compatible pair of Stinespring dilations.
    pub fn from_pair(pair: &CompatiblePair) -> Result<Arc<Self>> {
        let context = PolarContext::new(
            pair.dil_a.algebra.clone(),
            pair.dil_b.algebra.clone(),
            pair.expectation.clone(),
        )?;
        BundleData::new(
            context,
            pair.dil_a.rep.clone(),
            pair.dil_b.rep.clone(),
            pair.embed.clone(),
        )
    }

    pub fn dim_a(&self) -> usize {
        self.rep_a_images[0].rows()
    }

    pub fn dim_b(&self) -> usize {
        self.embed.cols()
    }

    pub fn embed(&self) -> &Mat {
        &self.embed
    }

    /// `P = J^* : H_A -> H_B`.
    pub fn projection(&self) -> Mat {
        self.embed.adjoint()
    }

    pub fn rep_a(&self, m: &Mat) -> Mat {
        let coeffs = self.context.alg_a.coefficients(m);
        linear_combination(&self.rep_a_images, &coeffs, self.dim_a())
    }

    pub fn rep_b(&self, m: &Mat) -> Mat {
        let coeffs = self.context.alg_b.coefficients(m);
        linear_combination(&self.rep_b_images, &coeffs, self.dim_b())
    }

    pub fn coset(self: &Arc<Self>, rep: Mat) -> Result<CosetPoint> {
        CosetPoint::new(rep, Arc::clone(&self.context))
    }
}

fn linear_combination(images: &[Mat], coeffs: &[C64], dim: usize) -> Mat {
    let mut out = Mat::zeros(dim, dim);
    for (img, &c) in images.iter().zip(coeffs.iter()) {
        out = &out + &img.scale(c);
    }
    out
}

/// A point of the bundle: the class `[(u, f)]` carried by the coset
/// representative of `base` and a fiber vector in `H_B`.
#[derive(Clone, Debug)]
pub struct BundleElement {
    pub base: CosetPoint,
    pub fiber: Mat,
    pub data: Arc<BundleData>,
}

impl BundleElement {
    pub fn new(base: CosetPoint, fiber: Mat, data: Arc<BundleData>) -> Result<Self> {
        if fiber.rows() != data.dim_b() || fiber.cols() != 1 {
            return Err(Error::ShapeMismatch("fiber vector dimension".into()));
        }
        Ok(BundleElement { base, fiber, data })
    }

    /// The same class written over the representative `base.rep * w`.
    pub fn change_representative(&self, w: &Mat) -> Result<BundleElement> {
        let new_base = CosetPoint::new(self.base.rep.matmul(w), Arc::clone(&self.base.context))?;
        let winv = w.inverse()?;
        let new_fiber = self.data.rep_b(&winv).matmul(&self.fiber);
        Ok(BundleElement {
            base: new_base,
            fiber: new_fiber,
            data: Arc::clone(&self.data),
        })
    }

    /// Re-expresses the class over the representative carried by `point`,
    /// which must lie in the same coset.
    pub fn at_representative(&self, point: &CosetPoint) -> Result<BundleElement> {
        if !coset_equal(&self.base, point)? {
            return Err(Error::BaseMismatch);
        }
        let w = point.rep.inverse()?.matmul(&self.base.rep);
        // (point.rep, rep_b(w) fiber) ~ (point.rep * w, fiber) = self.
        let fiber = self.data.rep_b(&w).matmul(&self.fiber);
        Ok(BundleElement {
            base: point.clone(),
            fiber,
            data: Arc::clone(&self.data),
        })
    }

    /// Left action `v . [(u, f)] = [(v u, f)]`.
    pub fn translate(&self, v: &Mat) -> Result<BundleElement> {
        Ok(BundleElement {
            base: self.base.translate(v)?,
            fiber: self.fiber.clone(),
            data: Arc::clone(&self.data),
        })
    }
}

/// The basic map `Theta([(u, f)]) = pi_A(u) J f`, a vector in `H_A`;
/// independent of the representative.
pub fn basic_map(xi: &BundleElement) -> Mat {
    xi.data
        .rep_a(&xi.base.rep)
        .matmul(xi.data.embed())
        .matmul(&xi.fiber)
}

/// The duality pairing `(xi | eta)_{z, z^{-*}}` of elements based at a
/// point and its involution: `(Theta xi | Theta eta)` in `H_A`, linear in
/// the first slot. Errors unless the base points are so related.
pub fn bundle_pair(xi: &BundleElement, eta: &BundleElement) -> Result<C64> {
    let zinv = xi.base.involution()?;
    if !coset_equal(&zinv, &eta.base)? {
        return Err(Error::BaseMismatch);
    }
    let tx = basic_map(xi);
    let ty = basic_map(eta);
    Ok(ty.adjoint().matmul(&tx)[(0, 0)])
}

/// The reproducing kernel of the homogeneous bundle:
/// `K(s, t) [(v, f)] = [(u, P pi_A(u^{-1} v) J f)]` based at `s`.
pub fn kernel_eval(
    s: &CosetPoint,
    t: &CosetPoint,
    eta: &BundleElement,
    data: &Arc<BundleData>,
) -> Result<BundleElement> {
    let eta_t = eta.at_representative(t)?;
    let w = s.rep.inverse()?.matmul(&t.rep);
    let fiber = data
        .projection()
        .matmul(&data.rep_a(&w))
        .matmul(data.embed())
        .matmul(&eta_t.fiber);
    BundleElement::new(s.clone(), fiber, Arc::clone(data))
}

/// The Gram certificate of `(-*)`-positive definiteness on a sample:
/// points `t_j` with fiber vectors `eta_j` based at `t_j^{-*}`.
#[derive(Clone, Debug)]
pub struct KernelSample {
    pub gram: Mat,
    pub min_eigenvalue: f64,
    pub hermitian_residual: f64,
    /// Distance to the Gram of the vectors `Theta(eta_j)` in `H_A`.
    pub ha_gram_residual: f64,
}

pub fn kernel_gram(
    points: &[CosetPoint],
    vectors: &[BundleElement],
    data: &Arc<BundleData>,
) -> Result<KernelSample> {
    if points.len() != vectors.len() {
        return Err(Error::ShapeMismatch(
            "points and vectors must pair up".into(),
        ));
    }
    let n = points.len();
    for (t, eta) in points.iter().zip(vectors.iter()) {
        if !coset_equal(&t.involution()?, &eta.base)? {
            return Err(Error::BaseMismatch);
        }
    }
    let mut gram = Mat::zeros(n, n);
    for l in 0..n {
        for j in 0..n {
            let k = kernel_eval(&points[l], &points[j].involution()?, &vectors[j], data)?;
            gram[(l, j)] = bundle_pair(&k, &vectors[l])?;
        }
    }
    let hermitian_residual = gram.herm_residual();
    let min_eigenvalue = herm_eig(&gram.herm_part(), HERM_TOL)?.min();
    // Independent route: the ordinary Gram of Theta(eta_j) in H_A.
    let thetas: Vec<Mat> = vectors.iter().map(basic_map).collect();
    let mut gram2 = Mat::zeros(n, n);
    for l in 0..n {
        for j in 0..n {
            gram2[(l, j)] = thetas[l].adjoint().matmul(&thetas[j])[(0, 0)];
        }
    }
    let ha_gram_residual = (&gram - &gram2).fro_norm();
    Ok(KernelSample {
        gram,
        min_eigenvalue,
        hermitian_residual,
        ha_gram_residual,
    })
}

/// A section handle `gamma(h)`: evaluates to
/// `[(u, P pi_A(u^{-1}) h)]` at the coset of `u`.
#[derive(Clone, Debug)]
pub struct Section {
    pub h: Mat,
    pub data: Arc<BundleData>,
}

/// The realization operator `gamma`.
pub fn realization(h: &Mat, data: &Arc<BundleData>) -> Section {
    Section {
        h: h.clone(),
        data: Arc::clone(data),
    }
}

impl Section {
    pub fn eval(&self, z: &CosetPoint) -> Result<BundleElement> {
        let uinv = z.rep.inverse()?;
        let fiber = self
            .data
            .projection()
            .matmul(&self.data.rep_a(&uinv))
            .matmul(&self.h);
        BundleElement::new(z.clone(), fiber, Arc::clone(&self.data))
    }
}

/// Dimensions governing the kernel of `gamma`: the rank of
/// `span pi_A(G_A) H_B` over sampled group elements and the dimension of
/// its orthogonal complement (`= dim ker gamma`).
pub fn realization_kernel(data: &Arc<BundleData>, samples: usize, seed: u64) -> (usize, usize) {
    let mut rng = crate::rng::check_rng(seed, "realization-kernel");
    let mut cols = Vec::new();
    for k in 0..data.dim_b() {
        cols.push(data.embed().column(k));
    }
    for _ in 0..samples {
        let g = {
            let h = crate::rng::random_in_span(&mut rng, data.context.alg_a.basis());
            mat_exp(&h.scale_re(0.5))
        };
        let pg = data.rep_a(&g);
        for k in 0..data.dim_b() {
            cols.push(pg.matmul(&data.embed().column(k)));
        }
    }
    let rank = svd(&Mat::hcat(&cols))
        .map(|s| s.rank(RANK_TOL))
        .unwrap_or(0);
    (rank, data.dim_a() - rank)
}

/// Equivariance of the realization: `gamma(pi_A(v) h) = mu(v) gamma(h)`
/// pointwise, compared through the basic map with independently chosen
/// representatives on the two sides.
pub fn intertwine_check(
    v: &Mat,
    h: &Mat,
    data: &Arc<BundleData>,
    sample_points: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = crate::rng::check_rng(seed, "intertwine");
    let ctx = &data.context;
    let vinv = v.inverse()?;
    let lhs_section = realization(&data.rep_a(v).matmul(h), data);
    let rhs_section = realization(h, data);
    let mut worst: f64 = 0.0;
    for _ in 0..sample_points {
        let g = crate::rng::random_invertible(&mut rng, ctx.alg_a.ambient_dim(), 20.0);
        let z = data.coset(g)?;
        let lhs = basic_map(&lhs_section.eval(&z)?);
        // Right side: evaluate at v^{-1} z written over a *different*
        // representative (a random right translate), then translate back.
        let w = crate::rng::random_unitary_in_span(&mut rng, ctx.alg_b.basis());
        let z_shifted = data.coset(vinv.matmul(&z.rep).matmul(&w))?;
        let rhs = basic_map(&rhs_section.eval(&z_shifted)?.translate(v)?);
        worst = worst.max((&lhs - &rhs).fro_norm() / h.fro_norm().max(1.0));
    }
    Ok(worst)
}

/// Verifies the reproducing property of the realization on sample data:
/// `gamma(Theta(eta)) agrees with K(., t) eta` at the sampled points.
pub fn reproducing_check(
    t: &CosetPoint,
    eta: &BundleElement,
    data: &Arc<BundleData>,
    sample_points: &[CosetPoint],
) -> Result<f64> {
    let h = basic_map(eta);
    let section = realization(&h, data);
    let mut worst: f64 = 0.0;
    for s in sample_points {
        let via_gamma = basic_map(&section.eval(s)?);
        let via_kernel = basic_map(&kernel_eval(s, t, eta, data)?);
        worst = worst.max((&via_gamma - &via_kernel).fro_norm());
    }
    Ok(worst)
}

/// Operator-level check of `K(s, t^{-*}) = ev_s . (ev_t)^{-*}`, with both
/// evaluation operators assembled on a coordinatized finite sample.
///
/// The sample is the involution-closed set `{s, t, s^{-*}, t^{-*}}` plus
/// the supplied extra points, each carrying a full fiber basis. The kernel
/// space is coordinatized by Gram factorization; the `(-*)`-adjoint of
/// `ev_t` is solved from the duality-pairing linear system.
pub fn evaluation_identity_check(
    s: &CosetPoint,
    t: &CosetPoint,
    extra: &[CosetPoint],
    data: &Arc<BundleData>,
) -> Result<f64> {
    let r_b = data.dim_b();
    let mut points: Vec<CosetPoint> = vec![s.clone(), t.clone()];
    points.extend(extra.iter().cloned());
    // Close the sample under the involution.
    let snapshot: Vec<CosetPoint> = points.clone();
    for z in &snapshot {
        points.push(z.involution()?);
    }

    // Theta-coordinates of the spanning sections K_{[(z, e_k)]}.
    let mut cols = Vec::new();
    for z in &points {
        let pz = data.rep_a(&z.rep).matmul(data.embed());
        for k in 0..r_b {
            cols.push(pz.column(k));
        }
    }
    let x = Mat::hcat(&cols);
    let gram = x.adjoint().matmul(&x);
    let e = herm_eig(&gram, 1e-8)?;
    let lmax = e.max().max(f64::MIN_POSITIVE);
    let kept: Vec<usize> = (0..e.eigenvalues.len())
        .filter(|&k| e.eigenvalues[k] > RANK_TOL * lmax)
        .collect();
    let ratio = e.eigenvalues[kept[0]] / lmax;
    if ratio < GRAM_COND_FLOOR {
        return Err(Error::IllConditionedGram(ratio));
    }
    let rho = kept.len();
    let nn = points.len() * r_b;
    let mut kappa = Mat::zeros(rho, nn);
    let mut lift = Mat::zeros(nn, rho);
    for (row, &k) in kept.iter().enumerate() {
        let l = e.eigenvalues[k];
        let w = e.eigenvectors.column(k);
        kappa.set_block(row, 0, &w.adjoint().scale_re(l.sqrt()));
        lift.set_block(0, row, &w.scale_re(1.0 / l.sqrt()));
    }

    // Fiber values at a point z of all spanning sections:
    // column (w, k) of values(z) is the fiber of K(z, w)[(w.rep, e_k)].
    let values = |z: &CosetPoint| -> Result<Mat> {
        let mut v = Mat::zeros(r_b, nn);
        let zinv_rep = z.rep.inverse()?;
        for (col_block, w) in points.iter().enumerate() {
            let block = data
                .projection()
                .matmul(&data.rep_a(&zinv_rep.matmul(&w.rep)))
                .matmul(data.embed());
            v.set_block(0, col_block * r_b, &block);
        }
        Ok(v)
    };

    // ev_s in kappa-coordinates.
    let ev_s = values(s)?.matmul(&lift);
    // Theta . ev_t, used to assemble the (-*)-adjoint of ev_t from the
    // pairing system (h | S y)_{H^K} = (ev_t h | y)_{t, t^{-*}}.
    let m_t = data
        .rep_a(&t.rep)
        .matmul(data.embed())
        .matmul(&values(t)?)
        .matmul(&lift);
    let t_inv = t.involution()?;
    let theta_fibers = data.rep_a(&t_inv.rep).matmul(data.embed());
    let s_t = m_t.adjoint().matmul(&theta_fibers);

    // Direct kernel operator K(s, t^{-*}) on fiber coordinates.
    let direct = data
        .projection()
        .matmul(&data.rep_a(&s.rep.inverse()?.matmul(&t_inv.rep)))
        .matmul(data.embed());

    Ok((&ev_s.matmul(&s_t) - &direct).fro_norm())
}

/// Cauchy-Riemann finite-difference report for the fiber map
/// `g -> P pi_A(g^{-1}) h` along a direction in the Lie algebra.
#[derive(Clone, Debug)]
pub struct HolomorphyReport {
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
    pub pass: bool,
}

/// Central-difference Cauchy-Riemann test at `z0` along `dir`: the
/// difference quotient along `i * dir` must equal `i` times the quotient
/// along `dir`, with residual `O(eps^2)`. With `conjugated = true` the
/// fiber values are conjugated entrywise first, which breaks the test and
/// serves as the negative control.
pub fn holomorphy_check(
    h: &Mat,
    z0: &CosetPoint,
    dir: &Mat,
    eps_grid: &[f64],
    conjugated: bool,
    data: &Arc<BundleData>,
) -> Result<HolomorphyReport> {
    let fiber_at = |step: &Mat| -> Result<Mat> {
        let g = z0.rep.matmul(&mat_exp(step));
        let raw = data
            .projection()
            .matmul(&data.rep_a(&g.inverse()?))
            .matmul(h);
        Ok(if conjugated { raw.conj() } else { raw })
    };
    let i = Complex64::new(0.0, 1.0);
    let mut residuals = Vec::new();
    for &eps in eps_grid {
        let d_v = (&fiber_at(&dir.scale_re(eps))? - &fiber_at(&dir.scale_re(-eps))?)
            .scale_re(1.0 / (2.0 * eps));
        let d_iv = (&fiber_at(&dir.scale(i.scale(eps)))? - &fiber_at(&dir.scale(i.scale(-eps)))?)
            .scale_re(1.0 / (2.0 * eps));
        residuals.push((&d_v.scale(i) - &d_iv).fro_norm());
    }
    let floor = 1e-12 * h.fro_norm().max(1.0);
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
    Ok(HolomorphyReport {
        residuals,
        ratios,
        pass,
    })
}

/// Restriction to the unitary sub-bundle: on fixed points of the
/// involution the pairing is an ordinary Hermitian inner product, and the
/// restricted realization agrees with the full one pointwise.
#[derive(Clone, Debug)]
pub struct UnitaryRestrictionReport {
    pub min_diagonal_pairing: f64,
    pub agreement_residual: f64,
}

pub fn unitary_restriction_check(
    h: &Mat,
    data: &Arc<BundleData>,
    samples: usize,
    seed: u64,
) -> Result<UnitaryRestrictionReport> {
    let mut rng = crate::rng::check_rng(seed, "unitary-restriction");
    let ctx = &data.context;
    let section = realization(h, data);
    let mut min_pairing = f64::INFINITY;
    let mut agreement: f64 = 0.0;
    for _ in 0..samples {
        let u = crate::rng::random_unitary_in_span(&mut rng, ctx.alg_a.basis());
        let z_unitary = data.coset(u.clone())?;
        // Diagonal pairing at the fixed point z = z^{-*}.
        let xi = section.eval(&z_unitary)?;
        let pairing = bundle_pair(&xi, &xi)?;
        min_pairing = min_pairing.min(pairing.re);
        agreement = agreement.max(pairing.im.abs());
        // gamma^U against gamma . lambda: same coset through a non-unitary
        // representative.
        let b = crate::rng::random_pd_in_span(&mut rng, ctx.alg_b.basis(), 0.5);
        let z_skew = data.coset(u.matmul(&b))?;
        let eta = section.eval(&z_skew)?;
        agreement = agreement.max((&basic_map(&xi) - &basic_map(&eta)).fro_norm());
    }
    Ok(UnitaryRestrictionReport {
        min_diagonal_pairing: min_pairing,
        agreement_residual: agreement,
    })
}
