//! Dense vectors and matrices, norms, Givens rotations, and the eigenvalue
//! primitives (Sturm bisection, power-growth spectral radius) used by the
//! solvers and by the test oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// A square linear map applied to dense vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Operators that can also apply their transpose.
pub trait TransposeOperator: LinearOperator {
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

impl<T: TransposeOperator + ?Sized> TransposeOperator for &T {
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_transpose(x, y)
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

pub fn apply<A: LinearOperator + ?Sized>(a: &A, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.dim()];
    a.apply(x, &mut y);
    y
}

pub fn apply_t<A: TransposeOperator + ?Sized>(a: &A, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.dim()];
    a.apply_transpose(x, &mut y);
    y
}

/// `b - A x`
pub fn residual<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = apply(a, x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    One,
    Two,
    Inf,
}

pub fn norm(v: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::One => v.iter().map(|x| x.abs()).sum(),
        NormKind::Two => dot(v, v).sqrt(),
        NormKind::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// y += a x
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Energy norm `sqrt(vᵀAv)`.
pub fn a_norm<A: LinearOperator + ?Sized>(v: &[f64], a: &A) -> Result<f64> {
    let q = dot(v, &apply(a, v));
    if q < 0.0 {
        return Err(Error::NotSpd);
    }
    Ok(q.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixNormKind {
    One,
    Inf,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Dense copy of any operator, one column at a time.
    pub fn from_operator<A: LinearOperator + ?Sized>(a: &A) -> Self {
        let n = a.dim();
        let mut m = Self::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            a.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += a * v;
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }
}

impl TransposeOperator for DenseMatrix {
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.rows {
            axpy(x[i], self.row(i), y);
        }
    }
}

/// Max absolute column sum (`One`) or row sum (`Inf`).
pub fn induced_matrix_norm(a: &DenseMatrix, kind: MatrixNormKind) -> f64 {
    match kind {
        MatrixNormKind::Inf => (0..a.rows).map(|i| norm(a.row(i), NormKind::One)).fold(0.0, f64::max),
        MatrixNormKind::One => (0..a.cols)
            .map(|j| (0..a.rows).map(|i| a[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max),
    }
}

/// Plane rotation `[c s; -s c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Givens {
    pub c: f64,
    pub s: f64,
}

impl Givens {
    pub const IDENTITY: Givens = Givens { c: 1.0, s: 0.0 };

    pub fn apply(&self, a: f64, b: f64) -> (f64, f64) {
        (self.c * a + self.s * b, -self.s * a + self.c * b)
    }
}

/// Rotation zeroing `beta` against `w`; `r = hypot(w, beta) >= 0`.
pub fn make_givens(w: f64, beta: f64) -> (Givens, f64) {
    let r = w.hypot(beta);
    if r == 0.0 {
        return (Givens::IDENTITY, 0.0);
    }
    (Givens { c: w / r, s: beta / r }, r)
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagSym {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl TridiagSym {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(offdiag.len() + 1, diag.len());
        Self { diag, offdiag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let m = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let mut r = 0.0;
            if i > 0 {
                r += self.offdiag[i - 1].abs();
            }
            if i + 1 < m {
                r += self.offdiag[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let e2 = if i == 0 { 0.0 } else { self.offdiag[i - 1] * self.offdiag[i - 1] };
            q = self.diag[i] - x - if i == 0 { 0.0 } else { e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn kth_eigenvalue(&self, k: usize, tol: f64) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * (lo.abs() + hi.abs() + 1.0);
        lo -= pad;
        hi += pad;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let m = self.len();
        let mut d = DenseMatrix::from_diag(&self.diag);
        for i in 0..m.saturating_sub(1) {
            d[(i, i + 1)] = self.offdiag[i];
            d[(i + 1, i)] = self.offdiag[i];
        }
        d
    }
}

pub const STURM_TOL: f64 = 1e-12;

/// Extreme eigenvalues of a symmetric tridiagonal matrix.
pub fn sturm_extreme_eigs(t: &TridiagSym, tol: f64) -> (f64, f64) {
    assert!(tol > 0.0);
    (t.kth_eigenvalue(0, tol), t.kth_eigenvalue(t.len() - 1, tol))
}

/// Householder reduction of a symmetric dense matrix to tridiagonal form.
pub fn householder_tridiagonalize(a: &DenseMatrix) -> TridiagSym {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| m[(i, k)]).collect();
        let alpha = norm2(&x);
        if alpha == 0.0 {
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x.clone();
        v[0] += sign * alpha;
        let vn = norm2(&v);
        if vn == 0.0 {
            continue;
        }
        scale(1.0 / vn, &mut v);
        // M <- H M H with H = I - 2 v vᵀ acting on rows/cols k+1..n
        let len = n - k - 1;
        let mut p = vec![0.0; n];
        for i in 0..n {
            p[i] = (0..len).map(|t| m[(i, k + 1 + t)] * v[t]).sum();
        }
        for i in 0..n {
            for t in 0..len {
                m[(i, k + 1 + t)] -= 2.0 * p[i] * v[t];
            }
        }
        let mut q = vec![0.0; n];
        for j in 0..n {
            q[j] = (0..len).map(|t| m[(k + 1 + t, j)] * v[t]).sum();
        }
        for t in 0..len {
            for j in 0..n {
                m[(k + 1 + t, j)] -= 2.0 * v[t] * q[j];
            }
        }
    }
    let diag = (0..n).map(|i| m[(i, i)]).collect();
    let off = (0..n.saturating_sub(1)).map(|i| 0.5 * (m[(i + 1, i)] + m[(i, i + 1)])).collect();
    TridiagSym::new(diag, off)
}

/// Extreme eigenvalues of a symmetric dense matrix.
pub fn symmetric_extreme_eigs(a: &DenseMatrix) -> (f64, f64) {
    let t = householder_tridiagonalize(a);
    let scale = a.max_abs().max(1.0);
    sturm_extreme_eigs(&t, STURM_TOL * scale)
}

/// All eigenvalues of a symmetric dense matrix, ascending.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let t = householder_tridiagonalize(a);
    let tol = STURM_TOL * a.max_abs().max(1.0);
    (0..t.len()).map(|k| t.kth_eigenvalue(k, tol)).collect()
}

const SPECTRAL_SEED: u64 = 0x5eed_0f_2ad1u64;

/// Spectral radius from the growth rate of `‖G^m v‖`, renormalising each
/// step. The rate is measured over the second half of the run so the
/// start-vector constant cancels.
pub fn spectral_radius_estimate<G: LinearOperator + ?Sized>(g: &G, n: usize, m_max: usize) -> f64 {
    assert!(m_max >= 100, "m_max must be at least 100");
    assert_eq!(g.dim(), n);
    let mut rng = ChaCha8Rng::seed_from_u64(SPECTRAL_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v0 = norm2(&v);
    scale(1.0 / v0, &mut v);
    let mut w = vec![0.0; n];
    let half = m_max / 2;
    let mut log_growth = 0.0;
    for m in 1..=m_max {
        g.apply(&v, &mut w);
        let nw = norm2(&w);
        if nw == 0.0 || !nw.is_finite() {
            return if nw == 0.0 { 0.0 } else { f64::INFINITY };
        }
        if m > half {
            log_growth += nw.ln();
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    (log_growth / (m_max - half) as f64).exp()
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pv <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> DenseMatrix {
        let n = self.lu.rows;
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 {
            return Err(Error::NotSpd);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}
