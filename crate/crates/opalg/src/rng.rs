//! Seeded randomness for the verification suites.
//!
//! Every check draws from a ChaCha stream keyed by `(seed, check id)`, so
//! results are reproducible per check and independent of the order in which
//! suites run.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{mat_exp, mat_sqrt_psd};
use crate::{Mat, C64};

/// Counter-based generator for one named check under a global seed.
pub fn check_rng(seed: u64, check_id: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(check_id));
    rng
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn random_complex(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Ginibre matrix: i.i.d. standard complex Gaussian entries.
pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> Mat {
    random_matrix(rng, n, 1)
}

pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> Mat {
    let v = random_vector(rng, n);
    let norm = v.fro_norm();
    v.scale_re(1.0 / norm)
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> Mat {
    random_matrix(rng, n, n).herm_part()
}

pub fn random_antihermitian(rng: &mut impl Rng, n: usize) -> Mat {
    let h = random_hermitian(rng, n);
    h.scale(Complex64::new(0.0, 1.0))
}

/// Haar-ish unitary: exponential of a random anti-Hermitian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> Mat {
    mat_exp(&random_antihermitian(rng, n))
}

/// Random positive semidefinite matrix of the given rank.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize) -> Mat {
    let g = random_matrix(rng, n, rank.max(1).min(n));
    g.matmul(&g.adjoint())
}

/// Random positive definite matrix (full rank, bounded condition).
pub fn random_pd(rng: &mut impl Rng, n: usize) -> Mat {
    let g = random_psd(rng, n, n);
    &g.scale_re(1.0 / g.fro_norm()) + &Mat::identity(n).scale_re(0.3)
}

/// Random invertible matrix with condition number at most `max_cond`.
pub fn random_invertible(rng: &mut impl Rng, n: usize, max_cond: f64) -> Mat {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let lo = 1.0 / max_cond.sqrt();
    let hi = max_cond.sqrt();
    let d = Mat::diag(
        &(0..n)
            .map(|k| {
                let t = if n == 1 {
                    0.5
                } else {
                    k as f64 / (n - 1) as f64
                };
                // Log-uniform grid in [lo, hi] with mild jitter.
                let jitter: f64 = rng.gen_range(-0.05..0.05);
                let x = lo * (hi / lo).powf((t + jitter).clamp(0.0, 1.0));
                Complex64::new(x, 0.0)
            })
            .collect::<Vec<_>>(),
    );
    (&(&u * &d) * &v).clone()
}

/// Random positive element of the span of an orthonormal matrix family
/// that is closed under products and adjoints: `exp` of a random Hermitian
/// combination, which stays in the algebra.
pub fn random_pd_in_span(rng: &mut impl Rng, basis: &[Mat], spread: f64) -> Mat {
    let h = random_hermitian_in_span(rng, basis).scale_re(spread);
    mat_exp(&h)
}

/// Random Hermitian element of the span of an orthonormal matrix family
/// assumed closed under adjoints.
pub fn random_hermitian_in_span(rng: &mut impl Rng, basis: &[Mat]) -> Mat {
    random_in_span(rng, basis).herm_part()
}

pub fn random_in_span(rng: &mut impl Rng, basis: &[Mat]) -> Mat {
    let mut acc = Mat::zeros(basis[0].rows(), basis[0].cols());
    for b in basis {
        acc = &acc + &b.scale(random_complex(rng));
    }
    acc
}

/// Random unitary inside the unitary group of a star-closed span:
/// `exp(i h)` for a Hermitian element `h` of the span.
pub fn random_unitary_in_span(rng: &mut impl Rng, basis: &[Mat]) -> Mat {
    let h = random_hermitian_in_span(rng, basis);
    mat_exp(&h.scale(Complex64::new(0.0, 1.0)))
}

/// Random Kraus family of `count` operators from `M_n` to `M_m`,
/// normalized so the resulting completely positive map is unital:
/// `sum_j K_j K_j^* = I_m`. Unitality needs `count * n >= m`, so the
/// family is grown to that size when necessary.
pub fn random_unital_kraus(rng: &mut impl Rng, n: usize, m: usize, count: usize) -> Vec<Mat> {
    let count = count.max(m.div_ceil(n));
    let raw: Vec<Mat> = (0..count).map(|_| random_matrix(rng, m, n)).collect();
    let mut s = Mat::zeros(m, m);
    for k in &raw {
        s = &s + &k.matmul(&k.adjoint());
    }
    // s is PD with probability one; normalize by s^{-1/2} on the left.
    let shalf = mat_sqrt_psd(&s, 1e-12).expect("kraus normalizer must be psd");
    let sinv = shalf
        .inverse()
        .expect("kraus normalizer must be invertible");
    raw.iter().map(|k| sinv.matmul(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_streams_are_reproducible_and_distinct() {
        let mut a1 = check_rng(42, "alpha");
        let mut a2 = check_rng(42, "alpha");
        let mut b = check_rng(42, "beta");
        let x1: f64 = a1.gen();
        let x2: f64 = a2.gen();
        let y: f64 = b.gen();
        assert_eq!(x1, x2);
        assert_ne!(x1, y);
    }

    #[test]
    fn unitary_and_kraus_normalization() {
        let mut rng = check_rng(1, "rng-sanity");
        let u = random_unitary(&mut rng, 4);
        assert!((&u.adjoint().matmul(&u) - &Mat::identity(4)).fro_norm() < 1e-10);
        let ks = random_unital_kraus(&mut rng, 3, 2, 4);
        let mut s = Mat::zeros(2, 2);
        for k in &ks {
            s = &s + &k.matmul(&k.adjoint());
        }
        assert!((&s - &Mat::identity(2)).fro_norm() < 1e-10);
    }
}
