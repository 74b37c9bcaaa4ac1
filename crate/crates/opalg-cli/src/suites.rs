//! The verification suites the CLI orchestrates.
//!
//! Each suite runs deterministic seeded checks against the loaded instance
//! (with documented defaults filling in missing data) and reports one
//! residual per check. Sample counts here are sized for interactive runs;
//! the crate's acceptance tests pin the full counts.

use std::sync::Arc;
use std::time::Instant;

use opalg::algebra::{
    commutant, expectation_ep, expectation_trace, tomiyama_check, ConditionalExpectation,
    Idempotent, StarAlgebra,
};
use opalg::bundle::{
    basic_map, evaluation_identity_check, holomorphy_check, intertwine_check, kernel_gram,
    unitary_restriction_check, BundleData, BundleElement,
};
use opalg::cpmap::CpMap;
use opalg::dilation::{compatible_pair, dilation_residual, stinespring, CompatiblePair};
use opalg::error::Error;
use opalg::gauge::{fourier_decompose, gauge_invariance_equiv, kraus_sum_map, weight_zero_pair};
use opalg::geometry::{
    class_distance, coset_equal, is_fixed_point, mr_factorization, porta_recht, porta_recht_from,
    psi_e, tangent_check_psi, CosetPoint, PolarContext,
};
use opalg::linalg::RANK_TOL;
use opalg::rng;
use opalg::{Mat, C64};

use crate::instance::Instance;
use crate::report::{CheckResult, Report, ReportBody, SuiteResult, Timings};

pub const SUITE_NAMES: [&str; 5] = ["algebra", "dilation", "kernel", "polar", "gauge"];

#[derive(Debug)]
pub struct UnknownSuite(pub String);

impl std::fmt::Display for UnknownSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "unknown suite {:?} (expected one of {:?} or \"all\")",
            self.0, SUITE_NAMES
        )
    }
}

impl std::error::Error for UnknownSuite {}

pub fn resolve_suites(requested: &str) -> Result<Vec<&'static str>, UnknownSuite> {
    if requested == "all" {
        return Ok(SUITE_NAMES.to_vec());
    }
    SUITE_NAMES
        .iter()
        .find(|&&s| s == requested)
        .map(|&s| vec![s])
        .ok_or_else(|| UnknownSuite(requested.to_string()))
}

/// Runs the named suites and assembles the report.
pub fn run_suite(inst: &Instance, suites: &[&str], tol_override: Option<f64>) -> Report {
    let started = Instant::now();
    let mut results = Vec::new();
    let mut timings = Vec::new();
    for &name in suites {
        let t0 = Instant::now();
        let suite = match name {
            "algebra" => algebra_suite(inst, tol_override),
            "dilation" => dilation_suite(inst, tol_override),
            "kernel" => kernel_suite(inst, tol_override),
            "polar" => polar_suite(inst, tol_override),
            "gauge" => gauge_suite(inst, tol_override),
            other => SuiteResult::new(other, vec![]),
        };
        timings.push((name.to_string(), t0.elapsed().as_secs_f64() * 1e3));
        results.push(suite);
    }
    let pass = results.iter().all(|s| s.pass);
    Report {
        v: crate::report::REPORT_SCHEMA_VERSION,
        body: ReportBody {
            seed: inst.seed,
            tolerance_override: tol_override,
            warnings: inst.warnings.clone(),
            suites: results,
            pass,
        },
        timings: Timings {
            total_ms: started.elapsed().as_secs_f64() * 1e3,
            suites_ms: timings,
        },
    }
}

fn thr(base: f64, tol: Option<f64>) -> f64 {
    tol.unwrap_or(base)
}

/// The always-compatible two-squares setup: `p` from the instance (or the
/// default half-rank projection), `B = {p}'`, `E = E_p`, and the vector
/// state at a unit vector in the range of `p`.
fn two_squares_setup(
    inst: &Instance,
) -> Result<(StarAlgebra, StarAlgebra, ConditionalExpectation, CpMap), Error> {
    let a = StarAlgebra::full(inst.dim);
    let p = Idempotent::new(inst.projection_or_default(), 1e-8)?;
    let e = expectation_ep(&p, &a)?;
    let b = e.target.clone();
    // A unit vector in the range of p: the largest projected coordinate
    // column (norm at least 1/sqrt(n) for any nonzero projection).
    let mut best: Option<Mat> = None;
    for k in 0..inst.dim {
        let cand = p.matrix.matmul(&Mat::basis_vec(inst.dim, k));
        if best.as_ref().is_none_or(|b| cand.fro_norm() > b.fro_norm()) {
            best = Some(cand);
        }
    }
    let x = best.filter(|v| v.fro_norm() > 1e-6);
    let x = x.ok_or_else(|| Error::NotPositive("projection has trivial range".into()))?;
    let x = x.scale_re(1.0 / x.fro_norm());
    Ok((a, b, e, CpMap::vector_state(&x)))
}

fn polar_setup(inst: &Instance) -> Result<Arc<PolarContext>, Error> {
    // The coset geometry always runs over the full ambient algebra; a
    // restricted instance algebra is exercised by the algebra suite.
    let a = StarAlgebra::full(inst.dim);
    let b = inst.subalgebra_or_default();
    let e = expectation_trace(&a, &b)?;
    PolarContext::new(a, b, e)
}

fn algebra_suite(inst: &Instance, tol: Option<f64>) -> SuiteResult {
    let seed = inst.seed;
    let mut checks = Vec::new();
    checks.push(CheckResult::run(
        "algebra.closure",
        "products and adjoints of the algebra basis stay in its span",
        thr(1e-10, tol),
        || Ok(inst.algebra.closure_residual()),
    ));
    let sub = inst.subalgebra_or_default();
    checks.push(CheckResult::run(
        "algebra.subalgebra_closure",
        "the subalgebra basis is closed as well",
        thr(1e-10, tol),
        || Ok(sub.closure_residual()),
    ));
    let a = StarAlgebra::full(inst.dim);
    let p_mat = inst.projection_or_default();
    checks.push(CheckResult::run(
        "algebra.ap_dimension_identity",
        "dim A^p + dim A^{1-p} - dim {p}' equals dim A",
        0.5,
        || {
            let p = Idempotent::new(p_mat.clone(), 1e-8)?;
            let phat = Idempotent::new(p.complement(), 1e-8)?;
            let ap = opalg::algebra::ap_space(&p, &a)?.len() as f64;
            let aphat = opalg::algebra::ap_space(&phat, &a)?.len() as f64;
            let comm = commutant(std::slice::from_ref(&p.matrix), &a)?.dim() as f64;
            Ok((ap + aphat - comm - a.dim() as f64).abs())
        },
    ));
    checks.push(CheckResult::run(
        "algebra.ep_tomiyama",
        "E_p(T) = pTp + (1-p)T(1-p) passes adjoint, bimodule and Schwarz checks",
        thr(1e-10, tol),
        || {
            let p = Idempotent::new(p_mat.clone(), 1e-8)?;
            let e = expectation_ep(&p, &a)?;
            let rep = tomiyama_check(&e, 60, seed);
            Ok(tomiyama_worst(&rep))
        },
    ));
    checks.push(CheckResult::run(
        "algebra.trace_tomiyama",
        "the trace-orthogonal projection onto the subalgebra is a conditional expectation",
        thr(1e-10, tol),
        || {
            let e = expectation_trace(&a, &sub)?;
            let rep = tomiyama_check(&e, 60, seed.wrapping_add(1));
            Ok(tomiyama_worst(&rep))
        },
    ));
    checks.push(CheckResult::run(
        "algebra.ep_equals_trace_projection",
        "E_p coincides with the trace-orthogonal projection onto {p}'",
        thr(1e-10, tol),
        || {
            let p = Idempotent::new(p_mat.clone(), 1e-8)?;
            let ep = expectation_ep(&p, &a)?;
            let et = expectation_trace(&a, &ep.target)?;
            let mut worst: f64 = 0.0;
            for x in a.basis() {
                worst = worst.max((&ep.apply(x) - &et.apply(x)).fro_norm());
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "algebra.compression_flagged",
        "the non-unital compression T -> pTp is rejected by the unitality check",
        0.5,
        || {
            let p = Idempotent::new(p_mat.clone(), 1e-8)?;
            if (&p.matrix - &Mat::identity(inst.dim)).fro_norm() < 1e-12 {
                // p = 1 makes the compression the identity; nothing to flag.
                return Ok(0.0);
            }
            let images = a
                .basis()
                .iter()
                .map(|t| p.matrix.matmul(t).matmul(&p.matrix))
                .collect();
            let target = commutant(std::slice::from_ref(&p.matrix), &a)?;
            let comp = ConditionalExpectation::from_images(a.clone(), target, images);
            let rep = tomiyama_check(&comp, 10, seed.wrapping_add(2));
            Ok(if rep.unital_residual > 0.5 { 0.0 } else { 1.0 })
        },
    ));
    checks.push(CheckResult::run(
        "algebra.isotropy_commutation",
        "unitaries fixing both [p] and [1-p] commute with p",
        thr(1e-10, tol),
        || {
            let p = Idempotent::new(p_mat.clone(), 1e-8)?;
            let phat = Idempotent::new(p.complement(), 1e-8)?;
            let mut r = rng::check_rng(seed, "suite-isotropy");
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let h = rng::random_hermitian(&mut r, inst.dim);
                let hp = &p.matrix.matmul(&h).matmul(&p.matrix)
                    + &phat.matrix.matmul(&h).matmul(&phat.matrix);
                let u = opalg::linalg::mat_exp(&hp.scale(C64::new(0.0, 1.0)));
                if opalg::algebra::isotropy_class_member(&u, &p, 1e-8)?
                    && opalg::algebra::isotropy_class_member(&u, &phat, 1e-8)?
                {
                    worst = worst.max((&u.matmul(&p.matrix) - &p.matrix.matmul(&u)).fro_norm());
                }
            }
            Ok(worst)
        },
    ));
    SuiteResult::new("algebra", checks)
}

fn tomiyama_worst(rep: &opalg::algebra::TomiyamaReport) -> f64 {
    rep.unital_residual
        .max(rep.idempotent_residual)
        .max(rep.adjoint_residual)
        .max(rep.bimodule_residual)
        .max(rep.range_in_target_residual)
        .max((-rep.schwarz_min_eig).max(0.0))
}

fn dilation_suite(inst: &Instance, tol: Option<f64>) -> SuiteResult {
    let seed = inst.seed;
    let mut checks = Vec::new();
    let phi = inst.cp_map_or_default();
    let alg = StarAlgebra::full(inst.dim);
    let dil = stinespring(&alg, &phi, RANK_TOL);
    checks.push(CheckResult::run(
        "dilation.reconstruction",
        "the map factors through its dilation as V* pi(a) V",
        thr(1e-9, tol),
        || {
            let d = dil.as_ref().map_err(Clone::clone)?;
            Ok(dilation_residual(&phi, d, 20, seed))
        },
    ));
    checks.push(CheckResult::run(
        "dilation.multiplicativity",
        "pi respects products of basis elements",
        thr(1e-9, tol),
        || {
            Ok(dil
                .as_ref()
                .map_err(Clone::clone)?
                .multiplicativity_residual())
        },
    ));
    checks.push(CheckResult::run(
        "dilation.star",
        "pi respects adjoints",
        thr(1e-10, tol),
        || Ok(dil.as_ref().map_err(Clone::clone)?.star_residual()),
    ));
    checks.push(CheckResult::run(
        "dilation.isometry",
        "V* V is the identity on the reference space",
        thr(1e-10, tol),
        || Ok(dil.as_ref().map_err(Clone::clone)?.isometry_residual()),
    ));
    checks.push(CheckResult::run(
        "dilation.minimality",
        "pi(A) V spans the whole dilation space",
        0.5,
        || {
            let d = dil.as_ref().map_err(Clone::clone)?;
            Ok((d.minimality_rank() as f64 - d.space_dim as f64).abs())
        },
    ));
    let pair =
        two_squares_setup(inst).and_then(|(a, b, e, phi0)| compatible_pair(&a, &b, &e, &phi0));
    checks.push(CheckResult::run(
        "dilation.two_squares_intertwine",
        "P pi_A(b) = pi_B(b) P on the subalgebra basis",
        thr(1e-9, tol),
        || Ok(pair.as_ref().map_err(Clone::clone)?.intertwining_residual()),
    ));
    checks.push(CheckResult::run(
        "dilation.two_squares_expectation",
        "classes of E(a) tensors agree with projected classes",
        thr(1e-9, tol),
        || {
            Ok(pair
                .as_ref()
                .map_err(Clone::clone)?
                .expectation_square_residual())
        },
    ));
    checks.push(CheckResult::run(
        "dilation.induced_projection",
        "the operator induced by E on the dilation space is the orthogonal projection",
        thr(1e-9, tol),
        || {
            Ok(pair
                .as_ref()
                .map_err(Clone::clone)?
                .induced_expectation_residual())
        },
    ));
    checks.push(CheckResult::run(
        "dilation.generation",
        "unitary translates of the embedded subspace span the dilation space",
        0.5,
        || {
            let p = pair.as_ref().map_err(Clone::clone)?;
            Ok(
                (p.generation_rank(2 * inst.dim * inst.dim, seed) as f64
                    - p.dil_a.space_dim as f64)
                    .abs(),
            )
        },
    ));
    SuiteResult::new("dilation", checks)
}

fn build_bundle(inst: &Instance) -> Result<(CompatiblePair, Arc<BundleData>), Error> {
    let (a, b, e, phi0) = two_squares_setup(inst)?;
    let pair = compatible_pair(&a, &b, &e, &phi0)?;
    let data = BundleData::from_pair(&pair)?;
    Ok((pair, data))
}

fn kernel_suite(inst: &Instance, tol: Option<f64>) -> SuiteResult {
    let seed = inst.seed;
    let mut checks = Vec::new();
    let built = build_bundle(inst);
    let sample = |data: &Arc<BundleData>,
                  count: usize,
                  label: &str|
     -> Result<(Vec<CosetPoint>, Vec<BundleElement>), Error> {
        let mut r = rng::check_rng(seed, label);
        let mut points = Vec::new();
        let mut vectors = Vec::new();
        for _ in 0..count {
            let t = data.coset(rng::random_invertible(&mut r, inst.dim, 10.0))?;
            let f = rng::random_vector(&mut r, data.dim_b());
            vectors.push(BundleElement::new(t.involution()?, f, Arc::clone(data))?);
            points.push(t);
        }
        Ok((points, vectors))
    };
    checks.push(CheckResult::run(
        "kernel.gram_positive",
        "the kernel Gram over sampled coset points is positive semidefinite",
        thr(1e-8, tol),
        || {
            let (_, data) = built.as_ref().map_err(Clone::clone)?;
            let (points, vectors) = sample(data, 6.min(2 * inst.dim), "kernel-gram-suite")?;
            let s = kernel_gram(&points, &vectors, data)?;
            Ok((-s.min_eigenvalue).max(0.0).max(s.hermitian_residual))
        },
    ));
    checks.push(CheckResult::run(
        "kernel.gram_matches_ambient",
        "the kernel Gram equals the Gram of the lifted vectors upstairs",
        thr(1e-9, tol),
        || {
            let (_, data) = built.as_ref().map_err(Clone::clone)?;
            let (points, vectors) = sample(data, 6.min(2 * inst.dim), "kernel-gram-suite")?;
            Ok(kernel_gram(&points, &vectors, data)?.ha_gram_residual)
        },
    ));
    checks.push(CheckResult::run(
        "kernel.representative_independence",
        "the basic map does not depend on the chosen representative",
        thr(1e-10, tol),
        || {
            let (_, data) = built.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "kernel-rep-indep");
            let mut worst: f64 = 0.0;
            for _ in 0..5 {
                let z = data.coset(rng::random_invertible(&mut r, inst.dim, 10.0))?;
                let f = rng::random_vector(&mut r, data.dim_b());
                let xi = BundleElement::new(z, f, Arc::clone(data))?;
                let w = opalg::linalg::mat_exp(
                    &rng::random_in_span(&mut r, data.context.alg_b.basis()).scale_re(0.4),
                );
                let xi2 = xi.change_representative(&w)?;
                worst = worst.max((&basic_map(&xi) - &basic_map(&xi2)).fro_norm());
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "kernel.realization_intertwines",
        "gamma(pi(v) h) equals the translated section mu(v) gamma(h)",
        thr(1e-8, tol),
        || {
            let (_, data) = built.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "kernel-intertwine-suite");
            let mut worst: f64 = 0.0;
            for k in 0..4 {
                let h = rng::random_vector(&mut r, data.dim_a());
                let v = if k % 2 == 0 {
                    rng::random_unitary(&mut r, inst.dim)
                } else {
                    rng::random_invertible(&mut r, inst.dim, 10.0)
                };
                worst = worst.max(intertwine_check(&v, &h, data, 4, seed + k as u64)?);
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "kernel.evaluation_identity",
        "K(s, t^{-*}) factors as ev_s composed with the pairing-adjoint of ev_t",
        thr(1e-8, tol),
        || {
            let (_, data) = built.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "kernel-eval-suite");
            let mut worst: f64 = 0.0;
            for _ in 0..3 {
                let s = data.coset(rng::random_invertible(&mut r, inst.dim, 8.0))?;
                let t = data.coset(rng::random_invertible(&mut r, inst.dim, 8.0))?;
                let extra = vec![data.coset(rng::random_invertible(&mut r, inst.dim, 8.0))?];
                worst = worst.max(evaluation_identity_check(&s, &t, &extra, data)?);
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "kernel.holomorphy",
        "sections pass the Cauchy-Riemann ratio test and the conjugated control fails it",
        0.5,
        || {
            let (_, data) = built.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "kernel-holo-suite");
            let grid = [1e-3, 5e-4, 2.5e-4];
            let mut bad = 0usize;
            for _ in 0..3 {
                let z0 = data.coset(rng::random_invertible(&mut r, inst.dim, 8.0))?;
                let h = rng::random_vector(&mut r, data.dim_a());
                let dir = rng::random_matrix(&mut r, inst.dim, inst.dim);
                if !holomorphy_check(&h, &z0, &dir, &grid, false, data)?.pass {
                    bad += 1;
                }
                if holomorphy_check(&h, &z0, &dir, &grid, true, data)?.pass {
                    bad += 1;
                }
            }
            Ok(bad as f64)
        },
    ));
    checks.push(CheckResult::run(
        "kernel.unitary_restriction",
        "over unitary cosets the pairing is Hermitian and the restricted realization agrees",
        thr(1e-10, tol),
        || {
            let (_, data) = built.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "kernel-unitary-suite");
            let h = rng::random_vector(&mut r, data.dim_a());
            let rep = unitary_restriction_check(&h, data, 8, seed)?;
            Ok(rep
                .agreement_residual
                .max((-rep.min_diagonal_pairing).max(0.0)))
        },
    ));
    checks.push(CheckResult::run(
        "kernel.grassmann_gram",
        "the universal subspace kernel has positive sample Grams",
        thr(1e-10, tol),
        || {
            let mut r = rng::check_rng(seed, "kernel-grassmann-suite");
            let d = (inst.dim + 2).max(4);
            let mut samples = Vec::new();
            for _ in 0..5 {
                let s = opalg::grassmann::SubspacePoint::from_columns(&rng::random_matrix(
                    &mut r, d, 2,
                ))?;
                let x = s.projector().matmul(&rng::random_vector(&mut r, d));
                samples.push((s, x));
            }
            let (_, min) = opalg::grassmann::grassmann_gram(&samples)?;
            Ok((-min).max(0.0))
        },
    ));
    checks.push(CheckResult::run(
        "kernel.tautological_roundtrip",
        "the tautological identification and its inverse recover the class",
        thr(1e-10, tol),
        || {
            let mut r = rng::check_rng(seed, "kernel-taut-suite");
            let d = (inst.dim + 2).max(4);
            let s0 = opalg::grassmann::SubspacePoint::coordinate_subspace(d, 2);
            let mut worst: f64 = 0.0;
            for _ in 0..5 {
                let u = rng::random_unitary(&mut r, d);
                let f = s0.projector().matmul(&rng::random_vector(&mut r, d));
                let (s, x) = opalg::grassmann::tautological_lift(&u, &f, &s0)?;
                let (u2, f2) = opalg::grassmann::tautological_lift_inv(&s, &x, &s0)?;
                worst = worst.max(opalg::grassmann::class_distance((&u, &f), (&u2, &f2), &s0));
            }
            Ok(worst)
        },
    ));
    SuiteResult::new("kernel", checks)
}

fn polar_suite(inst: &Instance, tol: Option<f64>) -> SuiteResult {
    let seed = inst.seed;
    let mut checks = Vec::new();
    let ctx = polar_setup(inst);
    checks.push(CheckResult::run(
        "polar.reconstruction",
        "u exp(iX) b rebuilds the decomposed element",
        thr(1e-7, tol),
        || {
            let ctx = ctx.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "polar-suite-recon");
            let mut worst: f64 = 0.0;
            for _ in 0..8 {
                let a = rng::random_invertible(&mut r, inst.dim, 100.0);
                let t = porta_recht(&a, ctx)?;
                worst = worst.max((&t.reconstruct() - &a).fro_norm() / a.fro_norm());
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "polar.structure",
        "the factors satisfy u unitary, X anti-Hermitian in ker E, b positive in B",
        thr(1e-8, tol),
        || {
            let ctx = ctx.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "polar-suite-structure");
            let mut worst: f64 = 0.0;
            for _ in 0..8 {
                let a = rng::random_invertible(&mut r, inst.dim, 100.0);
                let t = porta_recht(&a, ctx)?;
                worst = worst.max(t.structure_residual(ctx));
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "polar.restart_agreement",
        "perturbed solver restarts land on the same factors after alignment",
        thr(1e-6, tol),
        || {
            let ctx = ctx.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "polar-suite-restarts");
            let a = rng::random_invertible(&mut r, inst.dim, 50.0);
            let base = porta_recht(&a, ctx)?;
            let mut worst: f64 = 0.0;
            for _ in 0..2 {
                let pert = rng::random_hermitian_in_span(&mut r, ctx.alg_b.basis()).scale_re(0.3);
                let t = porta_recht_from(&a, ctx, Some(pert))?;
                worst = worst.max(class_distance(ctx, (&base.u, &base.x), (&t.u, &t.x)));
                worst = worst.max((&base.b - &t.b).fro_norm());
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "polar.fixed_point_agreement",
        "the involution fixed-point test agrees with the vanishing of the X factor",
        0.5,
        || {
            let ctx = ctx.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "polar-suite-fixed");
            let mut disagreements = 0usize;
            for k in 0..10 {
                let rep = if k % 2 == 0 {
                    // Fixed by construction: unitary times positive in B.
                    let u = rng::random_unitary(&mut r, inst.dim);
                    let b = rng::random_pd_in_span(&mut r, ctx.alg_b.basis(), 0.6);
                    u.matmul(&b)
                } else {
                    rng::random_invertible(&mut r, inst.dim, 30.0)
                };
                let z = CosetPoint::new(rep.clone(), Arc::clone(ctx))?;
                let fixed = is_fixed_point(&z)?.is_some();
                let oracle = porta_recht(&rep, ctx)?.x.fro_norm() <= 1e-7;
                if fixed != oracle {
                    disagreements += 1;
                }
            }
            Ok(disagreements as f64)
        },
    ));
    checks.push(CheckResult::run(
        "polar.involution_equivariance",
        "translating then involuting matches involuting then translating by g^{-*}",
        0.5,
        || {
            let ctx = ctx.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "polar-suite-equivariance");
            let mut bad = 0usize;
            for _ in 0..6 {
                let g = rng::random_invertible(&mut r, inst.dim, 20.0);
                let z = CosetPoint::new(
                    rng::random_invertible(&mut r, inst.dim, 20.0),
                    Arc::clone(ctx),
                )?;
                let lhs = z.translate(&g)?.involution()?;
                let rhs = z.involution()?.translate(&g.inv_adjoint()?)?;
                if !coset_equal(&lhs, &rhs)? {
                    bad += 1;
                }
            }
            Ok(bad as f64)
        },
    ));
    checks.push(CheckResult::run(
        "polar.psi_roundtrip",
        "the chart and its inverse agree up to the isotropy action",
        thr(1e-7, tol),
        || {
            let ctx = ctx.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "polar-suite-psi");
            let u = rng::random_unitary(&mut r, inst.dim);
            let h = rng::random_hermitian(&mut r, inst.dim);
            let x = {
                let k = &h - &ctx.expectation.apply(&h).herm_part();
                k.scale(C64::new(0.0, 0.5))
            };
            let z = psi_e(&u, &x, ctx)?;
            let t = porta_recht(&z.rep, ctx)?;
            let back = psi_e(&t.u, &t.x, ctx)?;
            let mut worst = class_distance(ctx, (&u, &x), (&t.u, &t.x));
            if !coset_equal(&z, &back)? {
                worst = worst.max(1.0);
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "polar.tangent_chart",
        "finite differences of the chart recover (1-E)Z + iY",
        0.5,
        || {
            let ctx = ctx.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "polar-suite-tangent");
            let z = rng::random_antihermitian(&mut r, inst.dim);
            let y = {
                let h = rng::random_hermitian(&mut r, inst.dim);
                let k = &h - &ctx.expectation.apply(&h).herm_part();
                k.scale(C64::new(0.0, 1.0))
            };
            let rep = tangent_check_psi(ctx, &z, &y, &[1e-3, 5e-4, 2.5e-4])?;
            Ok(if rep.pass { 0.0 } else { 1.0 })
        },
    ));
    checks.push(CheckResult::run(
        "polar.mr_identity",
        "a^{-*} = a_+ a b_+ with b_+ = E(a^* a) after rescaling",
        thr(1e-9, tol),
        || {
            let ctx = ctx.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "polar-suite-mr");
            let mut worst: f64 = 0.0;
            for _ in 0..8 {
                let a = rng::random_invertible(&mut r, inst.dim, 60.0);
                let f = mr_factorization(&a, ctx)?;
                worst = worst.max(f.identity_residual(&a)?);
                if f.positivity_floor()? <= 0.0 {
                    worst = worst.max(1.0);
                }
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "polar.median_iterations",
        "the damped fixed-point solve typically converges quickly",
        50.0,
        || {
            let ctx = ctx.as_ref().map_err(Clone::clone)?;
            let mut r = rng::check_rng(seed, "polar-suite-iters");
            let mut iters = Vec::new();
            for _ in 0..9 {
                let a = rng::random_invertible(&mut r, inst.dim, 100.0);
                iters.push(porta_recht(&a, ctx)?.iterations);
            }
            iters.sort_unstable();
            Ok(iters[iters.len() / 2] as f64)
        },
    ));
    SuiteResult::new("polar", checks)
}

fn gauge_suite(inst: &Instance, tol: Option<f64>) -> SuiteResult {
    let seed = inst.seed;
    let mut checks = Vec::new();
    let action = inst.action_or_default();
    let n = inst.dim;
    checks.push(CheckResult::run(
        "gauge.mask_vs_quadrature",
        "the entry mask equals the discretized circle average for every weight",
        thr(1e-12, tol),
        || {
            let mut r = rng::check_rng(seed, "gauge-suite-quadrature");
            let x = rng::random_matrix(&mut r, n, n);
            let k = action.quadrature_points();
            let mut worst: f64 = 0.0;
            for m in action.weight_range() {
                let mask = action.spectral_expectation(m, &x);
                let avg = action.fourier_average(m, &x, k);
                worst = worst.max((&mask - &avg).fro_norm());
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "gauge.partition_of_identity",
        "the weight components reassemble the matrix exactly",
        0.0,
        || {
            let mut r = rng::check_rng(seed, "gauge-suite-partition");
            let x = rng::random_matrix(&mut r, n, n);
            let mut acc = Mat::zeros(n, n);
            for m in action.weight_range() {
                acc = &acc + &action.spectral_expectation(m, &x);
            }
            Ok((&acc - &x).fro_norm())
        },
    ));
    checks.push(CheckResult::run(
        "gauge.e0_tomiyama",
        "the weight-zero mask is a conditional expectation onto the fixed algebra",
        thr(1e-10, tol),
        || {
            let rep = tomiyama_check(&action.weight_zero_expectation(), 60, seed);
            Ok(tomiyama_worst(&rep))
        },
    ));
    checks.push(CheckResult::run(
        "gauge.grading",
        "weight components multiply into the summed weight and adjoints flip the sign",
        thr(1e-12, tol),
        || {
            let mut r = rng::check_rng(seed, "gauge-suite-grading");
            let x = rng::random_matrix(&mut r, n, n);
            let y = rng::random_matrix(&mut r, n, n);
            let mut worst: f64 = 0.0;
            for m in action.weight_range() {
                let xm = action.spectral_expectation(m, &x);
                worst = worst.max(
                    (&xm.adjoint() - &action.spectral_expectation(-m, &xm.adjoint())).fro_norm(),
                );
                for mm in action.weight_range() {
                    let yn = action.spectral_expectation(mm, &y);
                    let prod = xm.matmul(&yn);
                    worst =
                        worst.max((&prod - &action.spectral_expectation(m + mm, &prod)).fro_norm());
                }
            }
            Ok(worst)
        },
    ));
    checks.push(CheckResult::run(
        "gauge.invariance_verdicts_agree",
        "factoring through E0 and pointwise circle invariance give the same verdict",
        0.5,
        || {
            let mut r = rng::check_rng(seed, "gauge-suite-verdicts");
            let mut disagreements = 0usize;
            for k in 0..10u64 {
                let phi = if k % 2 == 0 {
                    // Gauge-invariant by construction.
                    let ks = rng::random_unital_kraus(&mut r, n, n, 2);
                    let raw = CpMap::from_kraus(n, n, &ks)?;
                    let e0 = CpMap::from_action(n, n, |x| action.spectral_expectation(0, x));
                    raw.compose(&e0)
                } else {
                    let ks = rng::random_unital_kraus(&mut r, n, n, 2);
                    CpMap::from_kraus(n, n, &ks)?
                };
                let rep = gauge_invariance_equiv(&phi, &action, 4, seed ^ k);
                if !rep.verdicts_agree() {
                    disagreements += 1;
                }
            }
            Ok(disagreements as f64)
        },
    ));
    let gauge_phi = {
        let base = inst.cp_map_or_default();
        if base.out_dim() == n {
            let e0 = CpMap::from_action(n, n, |x| action.spectral_expectation(0, x));
            base.compose(&e0)
        } else {
            // States: compose with E0 on the input side as well.
            let e0 = CpMap::from_action(n, n, |x| action.spectral_expectation(0, x));
            base.compose(&e0)
        }
    };
    let decomposition = weight_zero_pair(&action, &gauge_phi)
        .and_then(|pair| fourier_decompose(&pair, &action).map(|d| (pair, d)));
    checks.push(CheckResult::run(
        "gauge.fourier_orthogonality",
        "weight components of the dilation space are pairwise orthogonal",
        thr(1e-9, tol),
        || {
            Ok(decomposition
                .as_ref()
                .map_err(Clone::clone)?
                .1
                .orthogonality_residual())
        },
    ));
    checks.push(CheckResult::run(
        "gauge.fourier_completeness",
        "the weight projections sum to the identity and are idempotent",
        thr(1e-9, tol),
        || {
            let d = &decomposition.as_ref().map_err(Clone::clone)?.1;
            Ok(d.completeness_residual().max(d.idempotent_residual()))
        },
    ));
    checks.push(CheckResult::run(
        "gauge.fourier_routes",
        "span projections equal the circle-averaged induced unitaries",
        thr(1e-8, tol),
        || {
            Ok(decomposition
                .as_ref()
                .map_err(Clone::clone)?
                .1
                .route_agreement_residual())
        },
    ));
    checks.push(CheckResult::run(
        "gauge.fourier_invariance",
        "each weight component is invariant under the fixed-point algebra",
        thr(1e-9, tol),
        || {
            let (pair, d) = decomposition.as_ref().map_err(Clone::clone)?;
            Ok(d.invariance_residual(pair))
        },
    ));
    checks.push(CheckResult::run(
        "gauge.kraus_sum",
        "Kraus-sum maps are CP with consistent unitality and trace flags",
        thr(1e-9, tol),
        || {
            let mut r = rng::check_rng(seed, "gauge-suite-kraus");
            let fam = rng::random_unital_kraus(&mut r, n, n, 3);
            let k = kraus_sum_map(&fam)?;
            let verdict = k.map.is_completely_positive(1e-9)?;
            let mut worst = (-verdict.witness_eigenvalue).max(0.0);
            if !k.unital {
                worst = worst.max(1.0);
            }
            Ok(worst)
        },
    ));
    SuiteResult::new("gauge", checks)
}
