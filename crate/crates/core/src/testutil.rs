//! Random instances shared by unit tests.

use crate::linalg::{dot, scale, DenseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_dense(n: usize, seed: u64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    m.data = random_vec(n * n, seed);
    m
}

/// Product of `n` random Householder reflectors.
pub fn random_orthogonal(n: usize, seed: u64) -> DenseMatrix {
    let mut q = DenseMatrix::identity(n);
    for k in 0..n {
        let v = random_vec(n, seed.wrapping_mul(31).wrapping_add(k as u64));
        let vv = dot(&v, &v);
        let mut h = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= 2.0 * v[i] * v[j] / vv;
            }
        }
        q = q.matmul(&h);
    }
    q
}

/// `Q diag(eigs) Qᵀ` with a random orthogonal `Q`.
pub fn with_spectrum(eigs: &[f64], seed: u64) -> DenseMatrix {
    let q = random_orthogonal(eigs.len(), seed);
    q.matmul(&DenseMatrix::from_diag(eigs)).matmul(&q.transpose())
}

/// Nonsymmetric `I·shift + G/sqrt(n)`; well conditioned for `shift` well above 1.
pub fn random_nonsymmetric(n: usize, shift: f64, seed: u64) -> DenseMatrix {
    let g = random_dense(n, seed);
    let mut a = DenseMatrix::identity(n);
    scale(shift, &mut a.data);
    a.add_scaled(1.0 / (n as f64).sqrt(), &g)
}
