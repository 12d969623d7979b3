//! Generators for the model systems: 2D Poisson, the driven cavity,
//! Hilbert matrices, an indefinite Kronecker sum and seeded random sparse
//! matrices.

use crate::error::{invalid, Result};
use crate::linalg::{apply, DenseMatrix};
use crate::sparse::{build, FormatTag, SparseMatrix, Triplets};

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub x_true: Option<Vec<f64>>,
    pub label: String,
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        self.a.n()
    }
}

/// Five-point stencil entries `4` / `-1` on an `N × N` grid, first index
/// fastest. `diag(i, j)` overrides the centre coefficient.
fn grid_laplacian(n_side: usize, diag: impl Fn(usize, usize) -> f64, scale: f64) -> Triplets {
    let n = n_side * n_side;
    let mut t = Triplets::new(n);
    for j in 0..n_side {
        for i in 0..n_side {
            let k = j * n_side + i;
            t.push(k, k, diag(i, j) * scale);
            if i > 0 {
                t.push(k, k - 1, -scale);
            }
            if i + 1 < n_side {
                t.push(k, k + 1, -scale);
            }
            if j > 0 {
                t.push(k, k - n_side, -scale);
            }
            if j + 1 < n_side {
                t.push(k, k + n_side, -scale);
            }
        }
    }
    t
}

/// `A = T_N ⊗ I + I ⊗ T_N`, `b_k = h³ (i + j)` with `h = 1/(N+1)`.
pub fn poisson_test(n_side: usize) -> ProblemInstance {
    assert!(n_side >= 1, "N must be positive");
    let h = 1.0 / (n_side as f64 + 1.0);
    let t = grid_laplacian(n_side, |_, _| 4.0, 1.0);
    let mut b = Vec::with_capacity(n_side * n_side);
    for j in 1..=n_side {
        for i in 1..=n_side {
            b.push(h.powi(3) * (i + j) as f64);
        }
    }
    ProblemInstance { a: build(&t, FormatTag::Diag), b, x_true: None, label: format!("poisson(N={n_side})") }
}

/// Outlet width index: `(1 - δ)(N + 1)` rounded, exact ties rounded down.
pub fn cavity_nu(n_side: usize, delta: f64) -> usize {
    let x = (1.0 - delta) * (n_side as f64 + 1.0);
    let r = x.round();
    if (r - x).abs() == 0.5 && r > x {
        (r - 1.0) as usize
    } else {
        r.max(0.0) as usize
    }
}

/// Pressure in the driven cavity, ghost values eliminated, scaled by `1/h²`.
///
/// Left face Dirichlet `p = 1`, bottom face `p = 0` for `i > ν`, Neumann
/// elsewhere.
pub fn cavity_laplace(n_side: usize, delta: f64) -> Result<ProblemInstance> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0,1), got {delta}")));
    }
    if n_side < 2 {
        return Err(invalid("cavity needs N >= 2"));
    }
    let nu = cavity_nu(n_side, delta);
    if nu < 1 || nu > n_side - 1 {
        return Err(invalid(format!("outlet index nu={nu} outside [1, {}]", n_side - 1)));
    }
    let h = 1.0 / (n_side as f64 + 1.0);
    let s = 1.0 / (h * h);
    let last = n_side - 1;
    let diag = |i: usize, j: usize| {
        let mut d = 4.0;
        // 0-based i here is grid index i+1
        if j == 0 && i < nu {
            d -= 1.0;
        }
        if j == last {
            d -= 1.0;
        }
        if i == last {
            d -= 1.0;
        }
        d
    };
    let t = grid_laplacian(n_side, diag, s);
    let mut b = vec![0.0; n_side * n_side];
    for j in 0..n_side {
        b[j * n_side] = s;
    }
    Ok(ProblemInstance {
        a: build(&t, FormatTag::Diag),
        b,
        x_true: None,
        label: format!("cavity(N={n_side},delta={delta})"),
    })
}

/// `a_ij = 1/(i+j-1) + shift·[i=j]`, dense, `b = A·1`.
pub fn hilbert(n: usize, shift: f64) -> ProblemInstance {
    assert!(n >= 1);
    let mut d = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] = 1.0 / (i + j + 1) as f64;
        }
        d[(i, i)] += shift;
    }
    let ones = vec![1.0; n];
    let b = d.matvec(&ones);
    ProblemInstance { a: SparseMatrix::Dense(d), b, x_true: Some(ones), label: format!("hilbert(n={n},shift={shift})") }
}

/// `T1 ⊗ I + I ⊗ T1` with `T1 = tridiag(-1, 1, -1)`: symmetric, indefinite.
pub fn indefinite_kron(n_side: usize) -> ProblemInstance {
    assert!(n_side >= 2);
    let t = grid_laplacian(n_side, |_, _| 2.0, 1.0);
    let a = build(&t, FormatTag::Diag);
    let ones = vec![1.0; n_side * n_side];
    let b = apply(&a, &ones);
    ProblemInstance { a, b, x_true: Some(ones), label: format!("indefinite(N={n_side})") }
}

/// 64-bit LCG (Knuth MMIX constants); uniforms use the top 53 bits.
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub const MUL: u64 = 6364136223846793005;
    pub const INC: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MUL).wrapping_add(Self::INC);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Seeded random pattern with values in `[-1, 1]`; the diagonal is the
/// row's absolute sum plus one, so `A` is strictly diagonally dominant.
/// `b = A·1`.
///
/// Scan order is row by row, column by column, skipping the diagonal; each
/// candidate draws one uniform for inclusion and, if kept, one for the value.
pub fn random_sparse(n: usize, density: f64, seed: u64) -> Result<ProblemInstance> {
    if !(density > 0.0 && density <= 1.0) || n == 0 {
        return Err(invalid(format!("need n >= 1 and density in (0,1], got n={n}, density={density}")));
    }
    let p_off = if n > 1 { ((density * n as f64 - 1.0) / (n as f64 - 1.0)).max(0.0) } else { 0.0 };
    let mut rng = Lcg64::new(seed);
    let mut t = Triplets::new(n);
    for i in 0..n {
        let mut abs_sum = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            if rng.next_f64() < p_off {
                let v = 2.0 * rng.next_f64() - 1.0;
                if v != 0.0 {
                    t.push(i, j, v);
                    abs_sum += v.abs();
                }
            }
        }
        t.push(i, i, abs_sum + 1.0);
    }
    let a = build(&t, FormatTag::Row);
    let ones = vec![1.0; n];
    let b = apply(&a, &ones);
    Ok(ProblemInstance { a, b, x_true: Some(ones), label: format!("random(n={n},density={density},seed={seed})") })
}
