//! Circle actions with integer weights on matrix algebras: spectral
//! expectations onto weight components, gauge invariance of CP maps, and
//! the Fourier decomposition of the dilation space into weight subspaces.
//!
//! A weight vector `k` acts by `tau_lambda(x)_{ij} = lambda^{k_i - k_j} x_{ij}`;
//! the weight-`m` component of a matrix is the entry mask over index pairs
//! with `k_i - k_j = m`, and equals the circle average
//! `int lambda^{-m} tau_lambda(x) dlambda` (discretized exactly once the
//! point count clears the weight spread).

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::algebra::{ConditionalExpectation, StarAlgebra};
use crate::cpmap::CpMap;
use crate::dilation::{compatible_pair, CompatiblePair};
use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::{Mat, C64};

/// A circle action on `M_n` given by integer weights.
#[derive(Clone, Debug)]
pub struct CircleAction {
    weights: Vec<i64>,
}

impl CircleAction {
    pub fn new(weights: Vec<i64>) -> Self {
        assert!(!weights.is_empty());
        CircleAction { weights }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    /// Largest minus smallest weight.
    pub fn spread(&self) -> i64 {
        let max = *self.weights.iter().max().unwrap();
        let min = *self.weights.iter().min().unwrap();
        max - min
    }

    /// Default quadrature point count: odd and safely above the Nyquist
    /// bound `2 * spread` for exactness.
    pub fn quadrature_points(&self) -> usize {
        (2 * self.spread() + 3) as usize
    }

    /// The weight of the entry `(i, j)`.
    pub fn entry_weight(&self, i: usize, j: usize) -> i64 {
        self.weights[i] - self.weights[j]
    }

    pub fn weight_range(&self) -> std::ops::RangeInclusive<i64> {
        -self.spread()..=self.spread()
    }

    /// `tau_lambda(x)` for `lambda` on the unit circle.
    pub fn act(&self, lambda: C64, x: &Mat) -> Mat {
        Mat::from_fn(self.dim(), self.dim(), |i, j| {
            x[(i, j)] * circle_power(lambda, self.entry_weight(i, j))
        })
    }

    /// The spectral expectation `E^(m)`: entry mask over weight `m`.
    pub fn spectral_expectation(&self, m: i64, x: &Mat) -> Mat {
        Mat::from_fn(self.dim(), self.dim(), |i, j| {
            if self.entry_weight(i, j) == m {
                x[(i, j)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Discretized circle average `(1/K) sum_r lambda_r^{-m} tau_{lambda_r}(x)`.
    pub fn fourier_average(&self, m: i64, x: &Mat, points: usize) -> Mat {
        let mut acc = Mat::zeros(self.dim(), self.dim());
        for r in 0..points {
            let theta = 2.0 * std::f64::consts::PI * r as f64 / points as f64;
            let lambda = Complex64::new(theta.cos(), theta.sin());
            let phase = circle_power(lambda, -m);
            acc = &acc + &self.act(lambda, x).scale(phase);
        }
        acc.scale_re(1.0 / points as f64)
    }

    /// Worst deviation of `tau_lambda` from a star-automorphism at a
    /// sampled parameter: multiplicativity and adjoint compatibility.
    pub fn automorphism_residual(&self, lambda: C64, x: &Mat, y: &Mat) -> f64 {
        let mult = (&self.act(lambda, &x.matmul(y))
            - &self.act(lambda, x).matmul(&self.act(lambda, y)))
            .fro_norm();
        let star = (&self.act(lambda, &x.adjoint()) - &self.act(lambda, x).adjoint()).fro_norm();
        mult.max(star)
    }

    /// The fixed-point subalgebra of the action: matrix units of weight 0.
    pub fn weight_zero_algebra(&self) -> StarAlgebra {
        let n = self.dim();
        let basis: Vec<Mat> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.entry_weight(i, j) == 0)
            .map(|(i, j)| Mat::matrix_unit(n, i, j))
            .collect();
        StarAlgebra::from_orthonormal_basis(n, basis).expect("weight-zero algebra is unital")
    }

    /// `E^(0)` as a conditional expectation onto the weight-zero algebra.
    pub fn weight_zero_expectation(&self) -> ConditionalExpectation {
        let n = self.dim();
        let a = StarAlgebra::full(n);
        let b = self.weight_zero_algebra();
        let images = a
            .basis()
            .iter()
            .map(|x| self.spectral_expectation(0, x))
            .collect();
        ConditionalExpectation::from_images(a, b, images)
    }

    /// Weight-homogeneous basis elements of `M_n` at weight `m`.
    pub fn weight_basis(&self, m: i64) -> Vec<Mat> {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.entry_weight(i, j) == m)
            .map(|(i, j)| Mat::matrix_unit(n, i, j))
            .collect()
    }
}

fn circle_power(lambda: C64, k: i64) -> C64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let base = if k >= 0 { lambda } else { lambda.conj() };
    for _ in 0..k.unsigned_abs() {
        acc *= base;
    }
    acc
}

/// Both gauge-invariance criteria for a map on `M_n`: factorization through
/// `E^(0)` and pointwise invariance under sampled circle parameters. The
/// two verdicts agree (each residual is reported).
#[derive(Clone, Debug)]
pub struct GaugeInvarianceReport {
    pub expectation_residual: f64,
    pub action_residual: f64,
    pub invariant_via_expectation: bool,
    pub invariant_via_action: bool,
}

impl GaugeInvarianceReport {
    pub fn verdicts_agree(&self) -> bool {
        self.invariant_via_expectation == self.invariant_via_action
    }
}

pub fn gauge_invariance_equiv(
    phi: &CpMap,
    action: &CircleAction,
    lambda_samples: usize,
    seed: u64,
) -> GaugeInvarianceReport {
    use rand::Rng;
    let n = action.dim();
    assert_eq!(phi.in_dim(), n);
    let mut rng = crate::rng::check_rng(seed, "gauge-invariance");
    let mut expectation_residual: f64 = 0.0;
    let mut action_residual: f64 = 0.0;
    let lambdas: Vec<C64> = (0..lambda_samples)
        .map(|_| {
            let theta: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            let unit = Mat::matrix_unit(n, i, j);
            let base = phi.apply(&unit);
            let masked = phi.apply(&action.spectral_expectation(0, &unit));
            expectation_residual = expectation_residual.max((&masked - &base).fro_norm());
            for &lambda in &lambdas {
                let turned = phi.apply(&action.act(lambda, &unit));
                action_residual = action_residual.max((&turned - &base).fro_norm());
            }
        }
    }
    let tol = 1e-9;
    GaugeInvarianceReport {
        expectation_residual,
        action_residual,
        invariant_via_expectation: expectation_residual <= tol,
        invariant_via_action: action_residual <= tol,
    }
}

/// Builds the compatible dilation pair over the weight-zero subalgebra for
/// a gauge-invariant unital CP map.
pub fn weight_zero_pair(action: &CircleAction, phi: &CpMap) -> Result<CompatiblePair> {
    let report = gauge_invariance_equiv(phi, action, 3, 0x6761756765);
    if !report.invariant_via_expectation {
        return Err(Error::NotGaugeInvariant(report.expectation_residual));
    }
    let a = StarAlgebra::full(action.dim());
    let b = action.weight_zero_algebra();
    let e = action.weight_zero_expectation();
    compatible_pair(&a, &b, &e, phi)
}

/// The weight decomposition of the dilation space of a gauge-invariant
/// map: `H^(m) = span pi(A^(m)) V H_0`, pairwise orthogonal with
/// projections summing to the identity, and each projection equal to the
/// discretized circle average of the induced unitaries.
#[derive(Debug)]
pub struct FourierDecomposition {
    /// Orthonormal spanning columns per weight (absent weights omitted).
    pub components: BTreeMap<i64, Mat>,
    space_dim: usize,
    induced: Vec<(C64, Mat)>,
}

pub fn fourier_decompose(
    pair: &CompatiblePair,
    action: &CircleAction,
) -> Result<FourierDecomposition> {
    let report = gauge_invariance_equiv(&pair.phi, action, 3, 0x666f7572);
    if !report.invariant_via_expectation {
        return Err(Error::NotGaugeInvariant(report.expectation_residual));
    }
    let dil = &pair.dil_a;
    let r = dil.space_dim;
    let h0 = dil.h0_dim;
    let mut components = BTreeMap::new();
    for m in action.weight_range() {
        let mut cols = Vec::new();
        for x in action.weight_basis(m) {
            let px = dil.rep_of(&x);
            for t in 0..h0 {
                cols.push(px.matmul(&dil.isometry_v.column(t)));
            }
        }
        if cols.is_empty() {
            continue;
        }
        let ortho = crate::linalg::orthonormalize(&cols, 1e-10);
        if ortho.is_empty() {
            continue;
        }
        components.insert(m, Mat::hcat(&ortho));
    }

    // Unitaries induced on the dilation space by the circle action,
    // evaluated on the quadrature grid.
    let points = action.quadrature_points();
    let alg = &dil.algebra;
    let mut induced = Vec::with_capacity(points);
    for k in 0..points {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
        let lambda = Complex64::new(theta.cos(), theta.sin());
        // Matrix of tau_lambda on the coefficient space of A.
        let d = alg.dim();
        let mut m_tau = Mat::zeros(d, d);
        for (j, b) in alg.basis().iter().enumerate() {
            let img = action.act(lambda, b);
            for (i, c) in alg.basis().iter().enumerate() {
                m_tau[(i, j)] = img.hs_inner(c);
            }
        }
        let l = m_tau.kron(&Mat::identity(h0));
        let u = dil.class_matrix().matmul(&l).matmul(dil.class_lift());
        induced.push((lambda, u));
    }
    let _ = r;
    Ok(FourierDecomposition {
        components,
        space_dim: r,
        induced,
    })
}

impl FourierDecomposition {
    pub fn weights(&self) -> Vec<i64> {
        self.components.keys().copied().collect()
    }

    /// Orthogonal projection onto the weight-`m` component.
    pub fn projection(&self, m: i64) -> Mat {
        match self.components.get(&m) {
            Some(q) => q.matmul(&q.adjoint()),
            None => Mat::zeros(self.space_dim, self.space_dim),
        }
    }

    /// `max_{m != n} || Q_m^* Q_n ||`.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&m, qm) in &self.components {
            for (&n, qn) in &self.components {
                if m == n {
                    continue;
                }
                worst = worst.max(qm.adjoint().matmul(qn).fro_norm());
            }
        }
        worst
    }

    /// `|| sum_m P^(m) - I ||`.
    pub fn completeness_residual(&self) -> f64 {
        let mut acc = Mat::zeros(self.space_dim, self.space_dim);
        for &m in self.components.keys() {
            acc = &acc + &self.projection(m);
        }
        (&acc - &Mat::identity(self.space_dim)).fro_norm()
    }

    pub fn idempotent_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &m in self.components.keys() {
            let p = self.projection(m);
            worst = worst.max((&p.matmul(&p) - &p).fro_norm());
        }
        worst
    }

    /// The projection computed the other way: the circle average
    /// `(1/K) sum_r lambda_r^{-m} U(lambda_r)` of the induced unitaries.
    pub fn circle_average_projection(&self, m: i64) -> Mat {
        let mut acc = Mat::zeros(self.space_dim, self.space_dim);
        for (lambda, u) in &self.induced {
            acc = &acc + &u.scale(circle_power(*lambda, -m));
        }
        acc.scale_re(1.0 / self.induced.len() as f64)
    }

    /// Worst disagreement between the span projections and the circle
    /// averages over all present weights.
    pub fn route_agreement_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &m in self.components.keys() {
            let p = self.projection(m);
            let q = self.circle_average_projection(m);
            worst = worst.max((&p - &q).fro_norm());
        }
        worst
    }

    /// Residual of the induced maps being unitary.
    pub fn induced_unitary_residual(&self) -> f64 {
        let id = Mat::identity(self.space_dim);
        self.induced
            .iter()
            .map(|(_, u)| (&u.adjoint().matmul(u) - &id).fro_norm())
            .fold(0.0, f64::max)
    }

    /// Invariance of each component under the weight-zero algebra:
    /// `(1 - P^(m)) pi(b) Q_m = 0`.
    pub fn invariance_residual(&self, pair: &CompatiblePair) -> f64 {
        let mut worst: f64 = 0.0;
        let id = Mat::identity(self.space_dim);
        for &m in self.components.keys() {
            let p = self.projection(m);
            let off = &id - &p;
            for b in pair.dil_b.algebra.basis() {
                let pb = pair.dil_a.rep_of(b);
                worst = worst.max(
                    off.matmul(&pb)
                        .matmul(self.components.get(&m).unwrap())
                        .fro_norm(),
                );
            }
        }
        worst
    }
}

/// The Kraus-sum map `T -> sum_j v_j T v_j^*` with unitality and
/// trace-preservation flags.
#[derive(Clone, Debug)]
pub struct KrausSumMap {
    pub map: CpMap,
    pub unital: bool,
    pub trace_preserving: bool,
}

pub fn kraus_sum_map(family: &[Mat]) -> Result<KrausSumMap> {
    if family.is_empty() {
        return Err(Error::ShapeMismatch("empty kraus family".into()));
    }
    let m = family[0].rows();
    let n = family[0].cols();
    let map = CpMap::from_kraus(n, m, family)?;
    Ok(KrausSumMap {
        unital: map.unital_residual() <= 1e-9,
        trace_preserving: map.trace_preserving_residual() <= 1e-9,
        map,
    })
}

/// Rank of a spanning family of columns (weight-component dimension).
pub fn span_rank(cols: &[Mat]) -> usize {
    if cols.is_empty() {
        return 0;
    }
    svd(&Mat::hcat(cols))
        .map(|s| s.rank(crate::linalg::RANK_TOL))
        .unwrap_or(0)
}
