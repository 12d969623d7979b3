//! Preconditioned CG and the preconditioners: Jacobi, incomplete Cholesky
//! (plain and modified) for pentadiagonal Stieltjes matrices, the block
//! incomplete factorization, and the Chebyshev polynomial preconditioner.
//!
//! Every preconditioner is a [`LinearOperator`] computing `s = C r`,
//! with `C ≈ A⁻¹`.

use crate::chebyshev::{cheb_t, cheb_u};
use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot, norm2, residual, scale, DenseMatrix, LinearOperator, LuFactor};
use crate::krylov_spd::CgState;
use crate::report::{BreakdownKind, SolveReport, SolverOptions, Status};
use crate::sparse::SparseMatrix;

/// `C = I`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityPrecond(pub usize);

impl LinearOperator for IdentityPrecond {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// `C = diag(A)⁻¹`.
#[derive(Debug, Clone)]
pub struct JacobiPrecond {
    inv_diag: Vec<f64>,
}

impl JacobiPrecond {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let d = a.diagonal();
        if let Some(i) = d.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroDiagonal(i));
        }
        Ok(Self { inv_diag: d.iter().map(|v| 1.0 / v).collect() })
    }
}

impl LinearOperator for JacobiPrecond {
    fn dim(&self) -> usize {
        self.inv_diag.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..x.len() {
            y[i] = self.inv_diag[i] * x[i];
        }
    }
}

/// Incomplete factorization `M = (L̃D̃) D̃⁻¹ (L̃D̃)ᵀ` of a pentadiagonal
/// matrix with bands at `{-N, -1, 0, 1, N}`; the strict lower part of
/// `L̃D̃` is that of `A`, so only `d̃` is stored.
#[derive(Debug, Clone)]
pub struct IcFactors {
    pub band_offset: usize,
    /// `b_i = a_{i,i-1}` (`b_0 = 0`).
    pub b: Vec<f64>,
    /// `c_i = a_{i,i-N}` (zero for `i < N`).
    pub c: Vec<f64>,
    pub dt: Vec<f64>,
    pub modified: bool,
}

fn pentadiagonal_bands(a: &SparseMatrix, nb: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = a.n();
    if nb < 2 {
        return Err(invalid("band offset N must be at least 2"));
    }
    let mut d = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut up1 = vec![0.0; n];
    let mut upn = vec![0.0; n];
    for (i, j, v) in a.to_triplets().consolidated() {
        if i == j {
            d[i] = v;
        } else if j + 1 == i {
            b[i] = v;
        } else if j + nb == i {
            c[i] = v;
        } else if i + 1 == j {
            up1[j] = v;
        } else if i + nb == j {
            upn[j] = v;
        } else {
            return Err(invalid(format!("entry ({i},{j}) outside the bands {{0, ±1, ±{nb}}}")));
        }
    }
    if up1 != b || upn != c {
        return Err(invalid("pentadiagonal matrix is not symmetric"));
    }
    if d.iter().any(|&v| v <= 0.0) || b.iter().chain(&c).any(|&v| v > 0.0) {
        return Err(invalid("incomplete factorization needs diag > 0 and offdiag <= 0"));
    }
    Ok((d, b, c))
}

fn ic_build(a: &SparseMatrix, nb: usize, modified: bool) -> Result<IcFactors> {
    let (d, b, c) = pentadiagonal_bands(a, nb)?;
    let n = d.len();
    let get = |v: &[f64], k: isize| if k >= 0 && (k as usize) < n { v[k as usize] } else { 0.0 };
    let mut dt = vec![0.0; n];
    for i in 0..n {
        let ii = i as isize;
        let mut val = d[i];
        if i >= 1 {
            let extra = if modified { get(&c, ii + nb as isize - 1) } else { 0.0 };
            val -= b[i] * (b[i] + extra) / dt[i - 1];
        }
        if i >= nb {
            let extra = if modified { get(&b, ii - nb as isize + 1) } else { 0.0 };
            val -= c[i] * (c[i] + extra) / dt[i - nb];
        }
        if !(val > 0.0) {
            return Err(Error::IcPivot(i));
        }
        dt[i] = val;
    }
    Ok(IcFactors { band_offset: nb, b, c, dt, modified })
}

/// `d̃_i = a_i - b_i²/d̃_{i-1} - c_i²/d̃_{i-N}`.
pub fn ic0_pentadiagonal(a: &SparseMatrix, band_offset: usize) -> Result<IcFactors> {
    ic_build(a, band_offset, false)
}

/// `d̃_i = a_i - b_i(b_i + c_{i+N-1})/d̃_{i-1} - c_i(c_i + b_{i-N+1})/d̃_{i-N}`.
pub fn mic_pentadiagonal(a: &SparseMatrix, band_offset: usize) -> Result<IcFactors> {
    ic_build(a, band_offset, true)
}

impl IcFactors {
    pub fn n(&self) -> usize {
        self.dt.len()
    }

    /// Solves `M s = r`: forward sweep with `L̃D̃`, scaling by `D̃`, backward
    /// sweep with `(L̃D̃)ᵀ`.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n();
        let nb = self.band_offset;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = r[i];
            if i >= 1 {
                s -= self.b[i] * y[i - 1];
            }
            if i >= nb {
                s -= self.c[i] * y[i - nb];
            }
            y[i] = s / self.dt[i];
        }
        for i in 0..n {
            y[i] *= self.dt[i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= self.b[i + 1] * y[i + 1];
            }
            if i + nb < n {
                s -= self.c[i + nb] * y[i + nb];
            }
            y[i] = s / self.dt[i];
        }
        y
    }

    /// `M x`.
    pub fn m_apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let nb = self.band_offset;
        // w = (L̃D̃)ᵀ x
        let mut w = vec![0.0; n];
        for i in 0..n {
            w[i] = self.dt[i] * x[i];
            if i + 1 < n {
                w[i] += self.b[i + 1] * x[i + 1];
            }
            if i + nb < n {
                w[i] += self.c[i + nb] * x[i + nb];
            }
            w[i] /= self.dt[i];
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = self.dt[i] * w[i];
            if i >= 1 {
                y[i] += self.b[i] * w[i - 1];
            }
            if i >= nb {
                y[i] += self.c[i] * w[i - nb];
            }
        }
        y
    }
}

/// `s = M⁻¹ r`.
pub fn apply_ic_solve(f: &IcFactors, r: &[f64]) -> Vec<f64> {
    f.solve(r)
}

impl LinearOperator for IcFactors {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.solve(x));
    }
}

/// Approximate inverse used for `Σ_{i-1}` in `D̃_i = A_i - B_i Σ_{i-1} B_iᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaRule {
    /// Tridiagonal part of `D̃⁻¹`.
    Tridiagonal,
    /// The exact inverse; the factorization is then exact.
    Full,
}

/// Block incomplete factorization `M = L̃ D̃⁻¹ L̃ᵀ`, `L̃` with `D̃_i` on the
/// diagonal and `B_i` below it.
#[derive(Debug, Clone)]
pub struct BlockFactors {
    pub block_size: usize,
    pub d_blocks: Vec<LuFactor>,
    /// `B_i` for `i = 1 .. p-1` (`b_blocks[0]` couples blocks 1 and 0).
    pub b_blocks: Vec<DenseMatrix>,
}

pub fn block_precond(a: &SparseMatrix, block_size: usize, rule: SigmaRule) -> Result<BlockFactors> {
    let n = a.n();
    let nb = block_size;
    if nb == 0 || n % nb != 0 {
        return Err(invalid(format!("block size {nb} does not divide n={n}")));
    }
    let p = n / nb;
    let mut diag = vec![DenseMatrix::zeros(nb, nb); p];
    let mut sub = vec![DenseMatrix::zeros(nb, nb); p.saturating_sub(1)];
    for (i, j, v) in a.to_triplets().consolidated() {
        let (bi, bj) = (i / nb, j / nb);
        if bi == bj {
            diag[bi][(i % nb, j % nb)] = v;
        } else if bi == bj + 1 {
            sub[bj][(i % nb, j % nb)] = v;
        } else if bj == bi + 1 {
            // upper blocks must mirror the lower ones; checked below
        } else {
            return Err(invalid(format!("entry ({i},{j}) outside the block-tridiagonal band")));
        }
    }
    let mut d_blocks = Vec::with_capacity(p);
    let mut dt = diag[0].clone();
    for k in 0..p {
        if k > 0 {
            let lu_prev: &LuFactor = &d_blocks[k - 1];
            let sigma = approximate_inverse(lu_prev, nb, rule);
            let bk = &sub[k - 1];
            let corr = bk.matmul(&sigma).matmul(&bk.transpose());
            dt = diag[k].add_scaled(-1.0, &corr);
        }
        d_blocks.push(LuFactor::new(&dt).map_err(|_| Error::SingularBlock(k))?);
    }
    Ok(BlockFactors { block_size: nb, d_blocks, b_blocks: sub })
}

fn approximate_inverse(lu: &LuFactor, nb: usize, rule: SigmaRule) -> DenseMatrix {
    let mut s = DenseMatrix::zeros(nb, nb);
    let mut e = vec![0.0; nb];
    for j in 0..nb {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..nb {
            if rule == SigmaRule::Full || i.abs_diff(j) <= 1 {
                s[(i, j)] = col[i];
            }
        }
    }
    s
}

impl BlockFactors {
    pub fn n(&self) -> usize {
        self.block_size * self.d_blocks.len()
    }

    /// Forward `D̃_i w_i = r_i - B_i w_{i-1}`, backward
    /// `s_i = w_i - D̃_i⁻¹ B_{i+1}ᵀ s_{i+1}`.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let nb = self.block_size;
        let p = self.d_blocks.len();
        let mut w: Vec<Vec<f64>> = Vec::with_capacity(p);
        for k in 0..p {
            let mut rhs = r[k * nb..(k + 1) * nb].to_vec();
            if k > 0 {
                let bw = self.b_blocks[k - 1].matvec(&w[k - 1]);
                axpy(-1.0, &bw, &mut rhs);
            }
            w.push(self.d_blocks[k].solve(&rhs));
        }
        let mut s = vec![0.0; self.n()];
        for k in (0..p).rev() {
            let mut sk = w[k].clone();
            if k + 1 < p {
                let bt = self.b_blocks[k].transpose().matvec(&s[(k + 1) * nb..(k + 2) * nb]);
                axpy(-1.0, &self.d_blocks[k].solve(&bt), &mut sk);
            }
            s[k * nb..(k + 1) * nb].copy_from_slice(&sk);
        }
        s
    }
}

impl LinearOperator for BlockFactors {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.solve(x));
    }
}

/// Chebyshev polynomial preconditioner of degree `m` on `[λ_min, λ_max]`:
/// `p_m(λ) = 1 - T_m(μ(λ))/T_m(μ(0))`, `C_{m-1}(λ) = p_m(λ)/λ`, with
/// `μ(λ) = (λ_max + λ_min - 2λ)/(λ_max - λ_min)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPrecond {
    pub m: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `γ_0 .. γ_{m-1}` of `C_{m-1} = Σ γ_k U_{m-1-k}(μ)`.
    pub gammas: Vec<f64>,
    pub t_m_mu0: f64,
}

pub fn poly_precond_build(m: usize, lambda_min: f64, lambda_max: f64) -> Result<PolyPrecond> {
    if m == 0 {
        return Err(invalid("polynomial degree must be >= 1"));
    }
    if !(lambda_min > 0.0 && lambda_min < lambda_max) {
        return Err(invalid(format!("need 0 < lambda_min < lambda_max, got [{lambda_min}, {lambda_max}]")));
    }
    let width = lambda_max - lambda_min;
    let mu0 = (lambda_max + lambda_min) / width;
    // T_k(μ(0)) by recurrence, k = 0..m
    let mut t = vec![1.0, mu0];
    for k in 1..m {
        t.push(2.0 * mu0 * t[k] - t[k - 1]);
    }
    let tm = t[m];
    let mut gammas = vec![2.0 / (width * tm)];
    for tk in t.iter().take(m).skip(1) {
        gammas.push(4.0 * tk / (width * tm));
    }
    Ok(PolyPrecond { m, lambda_min, lambda_max, gammas, t_m_mu0: tm })
}

impl PolyPrecond {
    pub fn width(&self) -> f64 {
        self.lambda_max - self.lambda_min
    }

    pub fn mu(&self, lambda: f64) -> f64 {
        (self.lambda_max + self.lambda_min - 2.0 * lambda) / self.width()
    }

    /// `ε_m = 1/T_m(μ(0))`.
    pub fn eps(&self) -> f64 {
        1.0 / self.t_m_mu0
    }

    /// `e_m(λ) = T_m(μ(λ))/T_m(μ(0))`.
    pub fn e_m(&self, lambda: f64) -> f64 {
        cheb_t(self.m, self.mu(lambda)) / self.t_m_mu0
    }

    pub fn p_m(&self, lambda: f64) -> f64 {
        1.0 - self.e_m(lambda)
    }

    /// `C_{m-1}(λ)` by the scalar Clenshaw recurrence.
    pub fn c_eval(&self, lambda: f64) -> f64 {
        let two_mu = 2.0 * self.mu(lambda);
        let (mut ym2, mut ym1) = (0.0, self.gammas[0]);
        for g in &self.gammas[1..] {
            let y = two_mu * ym1 - ym2 + g;
            ym2 = ym1;
            ym1 = y;
        }
        ym1
    }

    /// `C_{m-1}(λ)` summed directly over second-kind polynomials.
    pub fn c_eval_direct(&self, lambda: f64) -> f64 {
        let mu = self.mu(lambda);
        (0..self.m).map(|k| self.gammas[k] * cheb_u(self.m - 1 - k, mu)).sum()
    }

    /// Power-basis coefficients `c_0 .. c_m` of `p_m(λ) = Σ c_i λ^{m-i}`.
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        let m = self.m;
        // μ(λ) = a0 + a1 λ, polynomials stored lowest degree first
        let a0 = (self.lambda_max + self.lambda_min) / self.width();
        let a1 = -2.0 / self.width();
        let mut prev = vec![1.0];
        let mut cur = vec![a0, a1];
        for _ in 1..m {
            let mut next = vec![0.0; cur.len() + 1];
            for (i, c) in cur.iter().enumerate() {
                next[i] += 2.0 * a0 * c;
                next[i + 1] += 2.0 * a1 * c;
            }
            for (i, c) in prev.iter().enumerate() {
                next[i] -= c;
            }
            prev = cur;
            cur = next;
        }
        let t_m = if m == 0 { prev } else { cur };
        let mut p: Vec<f64> = t_m.iter().map(|c| -c / self.t_m_mu0).collect();
        p[0] += 1.0;
        // exact zero constant term
        p[0] = 0.0;
        p.reverse();
        p
    }

    /// `v ↦ 2μ(A) v`.
    fn g_apply<A: LinearOperator + ?Sized>(&self, a: &A, v: &[f64], out: &mut [f64]) {
        a.apply(v, out);
        let w = self.width();
        let s = self.lambda_max + self.lambda_min;
        for i in 0..v.len() {
            out[i] = (2.0 * s * v[i] - 4.0 * out[i]) / w;
        }
    }

    /// `p_m(A) v = v - T_m(μ(A)) v / T_m(μ(0))`; exactly `m` products with `A`.
    pub fn apply_pm<A: LinearOperator + ?Sized>(&self, a: &A, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut y_prev = v.to_vec();
        let mut y = vec![0.0; n];
        self.g_apply(a, v, &mut y);
        scale(0.5, &mut y);
        let mut gy = vec![0.0; n];
        for _ in 1..self.m {
            self.g_apply(a, &y, &mut gy);
            for i in 0..n {
                let next = gy[i] - y_prev[i];
                y_prev[i] = y[i];
                y[i] = next;
            }
        }
        (0..n).map(|i| v[i] - y[i] / self.t_m_mu0).collect()
    }

    /// `C_{m-1}(A) b` by the vector Clenshaw recurrence; `m - 1` products.
    pub fn apply_cb<A: LinearOperator + ?Sized>(&self, a: &A, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut ym2 = vec![0.0; n];
        let mut ym1: Vec<f64> = b.iter().map(|v| self.gammas[0] * v).collect();
        let mut gy = vec![0.0; n];
        for g in &self.gammas[1..] {
            self.g_apply(a, &ym1, &mut gy);
            for i in 0..n {
                let y = gy[i] - ym2[i] + g * b[i];
                ym2[i] = ym1[i];
                ym1[i] = y;
            }
        }
        ym1
    }
}

pub fn poly_apply_pm_a<A: LinearOperator + ?Sized>(p: &PolyPrecond, a: &A, v: &[f64]) -> Vec<f64> {
    p.apply_pm(a, v)
}

pub fn poly_apply_cb<A: LinearOperator + ?Sized>(p: &PolyPrecond, a: &A, b: &[f64]) -> Vec<f64> {
    p.apply_cb(a, b)
}

/// `C_{m-1}(A)` as an operator.
pub struct PolyOperator<'a, A: ?Sized> {
    pub poly: &'a PolyPrecond,
    pub a: &'a A,
}

impl<A: LinearOperator + ?Sized> LinearOperator for PolyOperator<'_, A> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.poly.apply_cb(self.a, x));
    }
}

/// `p_m(A)` as an operator.
pub struct PmOperator<'a, A: ?Sized> {
    pub poly: &'a PolyPrecond,
    pub a: &'a A,
}

impl<A: LinearOperator + ?Sized> LinearOperator for PmOperator<'_, A> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.poly.apply_pm(self.a, x));
    }
}

fn check_dims<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64]) -> Result<()> {
    for v in [b, x0] {
        if v.len() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: v.len() });
        }
    }
    Ok(())
}

/// Preconditioned CG state: `s = C r`, `η = rᵀs`, `p_{i+1} = s_i + μ_i p_i`.
#[derive(Debug, Clone)]
pub struct PcgState {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub eta: f64,
    v: Vec<f64>,
}

impl PcgState {
    pub fn new<A, C>(a: &A, c: &C, b: &[f64], x0: &[f64]) -> Self
    where
        A: LinearOperator + ?Sized,
        C: LinearOperator + ?Sized,
    {
        let r = residual(a, b, x0);
        let mut s = vec![0.0; r.len()];
        c.apply(&r, &mut s);
        let eta = dot(&r, &s);
        Self { x: x0.to_vec(), p: s.clone(), r, s, eta, v: vec![0.0; x0.len()] }
    }

    pub fn step<A, C>(&mut self, a: &A, c: &C) -> std::result::Result<(), BreakdownKind>
    where
        A: LinearOperator + ?Sized,
        C: LinearOperator + ?Sized,
    {
        a.apply(&self.p, &mut self.v);
        let d_hat = dot(&self.p, &self.v);
        if d_hat <= 0.0 || !d_hat.is_finite() {
            return Err(BreakdownKind::NotSpd);
        }
        let lambda_hat = self.eta / d_hat;
        axpy(lambda_hat, &self.p, &mut self.x);
        axpy(-lambda_hat, &self.v, &mut self.r);
        c.apply(&self.r, &mut self.s);
        let eta = dot(&self.r, &self.s);
        if eta < 0.0 || !eta.is_finite() {
            return Err(BreakdownKind::PrecondNotSpd);
        }
        let mu = eta / self.eta;
        for (pi, si) in self.p.iter_mut().zip(&self.s) {
            *pi = si + mu * *pi;
        }
        self.eta = eta;
        Ok(())
    }
}

/// PCG. History holds `‖r_i‖₂`; `extra` holds the `C`-norm `sqrt(η_i)`.
pub fn pcg<A, C>(a: &A, b: &[f64], c: &C, x0: &[f64], opts: &SolverOptions) -> Result<SolveReport>
where
    A: LinearOperator + ?Sized,
    C: LinearOperator + ?Sized,
{
    check_dims(a, b, x0)?;
    if c.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: c.dim() });
    }
    let mut st = PcgState::new(a, c, b, x0);
    let r0 = norm2(&st.r);
    let thr = opts.tol.threshold(norm2(b), r0);
    let max_iter = opts.max_iter_or(a.dim());
    let mut history = vec![r0];
    let mut cnorm = vec![st.eta.max(0.0).sqrt()];
    let mut status = Status::MaxIter;
    if st.eta < 0.0 {
        status = Status::Breakdown(BreakdownKind::PrecondNotSpd);
    } else {
        loop {
            if *history.last().unwrap() <= thr || st.eta == 0.0 {
                status = Status::Converged;
                break;
            }
            if history.len() > max_iter {
                break;
            }
            if let Err(k) = st.step(a, c) {
                status = Status::Breakdown(k);
                break;
            }
            history.push(norm2(&st.r));
            cnorm.push(st.eta.sqrt());
        }
    }
    Ok(SolveReport::new(st.x, history, status).with_extra("c_norm", cnorm))
}

/// CG on `p_m(A) x = C_{m-1}(A) b`. Stops on the residual of the original
/// system `‖b - A x_i‖`, which costs one extra product per step; the
/// history holds that residual.
pub fn pcg_poly<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    poly: &PolyPrecond,
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let pm = PmOperator { poly, a };
    let cb = poly.apply_cb(a, b);
    let mut st = CgState::new(&pm, &cb, x0);
    let r0 = norm2(&residual(a, b, x0));
    let thr = opts.tol.threshold(norm2(b), r0);
    let max_iter = opts.max_iter_or(a.dim());
    let mut history = vec![r0];
    let mut status = Status::MaxIter;
    loop {
        if *history.last().unwrap() <= thr || st.eta == 0.0 {
            status = Status::Converged;
            break;
        }
        if history.len() > max_iter {
            break;
        }
        if let Err(k) = st.step(&pm) {
            status = Status::Breakdown(k);
            break;
        }
        history.push(norm2(&residual(a, b, &st.x)));
    }
    Ok(SolveReport::new(st.x, history, status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov_spd::cg;
    use crate::linalg::{cholesky, sub, symmetric_eigenvalues, symmetric_extreme_eigs};
    use crate::problems::{cavity_laplace, poisson_test};
    use crate::report::Tolerance;
    use crate::sparse::{build, FormatTag, Triplets};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        norm2(&sub(a, b)) / norm2(b)
    }

    fn tridiag_matrix(n: usize) -> SparseMatrix {
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.push(i, i, 2.5);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        build(&t, FormatTag::Diag)
    }

    fn m_dense(f: &IcFactors) -> DenseMatrix {
        let n = f.n();
        let mut m = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = f.m_apply(&e);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    #[test]
    fn tridiagonal_ic_is_exact() {
        let a = tridiag_matrix(12);
        for f in [ic0_pentadiagonal(&a, 4).unwrap(), mic_pentadiagonal(&a, 4).unwrap()] {
            let r = rand_vec(12, 1);
            let s = f.solve(&r);
            assert!(norm2(&residual(&a, &r, &s)) <= 1e-11 * norm2(&r));
            assert!(m_dense(&f).add_scaled(-1.0, &a.to_dense()).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn poisson_three_pivots() {
        let f = ic0_pentadiagonal(&poisson_test(3).a, 3).unwrap();
        assert_eq!(f.dt[0], 4.0);
        assert_eq!(f.dt[1], 4.0 - 0.25);
        assert_eq!(f.dt[2], 4.0 - 1.0 / 3.75);
        let expect3 = 4.0 - 1.0 / 4.0;
        assert!((f.dt[3] - expect3).abs() < 1e-15);
        let expect4 = 4.0 - 1.0 / f.dt[3] - 1.0 / f.dt[1];
        assert!((f.dt[4] - expect4).abs() < 1e-15);
    }

    #[test]
    fn ic_error_matrix_bands() {
        let nb = 4;
        let a = poisson_test(nb).a;
        let f = ic0_pentadiagonal(&a, nb).unwrap();
        let r = m_dense(&f).add_scaled(-1.0, &a.to_dense());
        let n = nb * nb;
        for i in 0..n {
            for j in 0..n {
                let expected = if i >= nb - 1 && j + nb - 1 == i {
                    // r_i = b_{i-N+1} c_i / d̃_{i-N}
                    if i >= nb { f.b[i - nb + 1] * f.c[i] / f.dt[i - nb] } else { 0.0 }
                } else if j >= nb - 1 && i + nb - 1 == j {
                    if j >= nb { f.b[j - nb + 1] * f.c[j] / f.dt[j - nb] } else { 0.0 }
                } else {
                    0.0
                };
                assert!((r[(i, j)] - expected).abs() <= 1e-12, "({i},{j})");
                assert!(expected >= 0.0);
            }
        }
    }

    #[test]
    fn ic_round_trip_and_symmetry() {
        let a = poisson_test(5).a;
        for f in [ic0_pentadiagonal(&a, 5).unwrap(), mic_pentadiagonal(&a, 5).unwrap()] {
            let r = rand_vec(25, 3);
            let q = rand_vec(25, 4);
            assert!(rel(&f.m_apply(&f.solve(&r)), &r) <= 1e-11);
            assert!((dot(&r, &f.solve(&q)) - dot(&q, &f.solve(&r))).abs() <= 1e-11 * norm2(&r) * norm2(&q));
        }
    }

    #[test]
    fn ic_rejects_bad_patterns() {
        let mut t = Triplets::new(4);
        for i in 0..4 {
            t.push(i, i, 4.0);
        }
        t.push(0, 3, -1.0);
        t.push(3, 0, -1.0);
        assert!(ic0_pentadiagonal(&build(&t, FormatTag::Row), 2).is_err());
        let mut pos = Triplets::new(2);
        pos.push(0, 0, 1.0);
        pos.push(1, 1, 1.0);
        pos.push(0, 1, 0.5);
        pos.push(1, 0, 0.5);
        assert!(ic0_pentadiagonal(&build(&pos, FormatTag::Row), 2).is_err());
        let mut weak = Triplets::new(2);
        weak.push(0, 0, 1.0);
        weak.push(1, 1, 1.0);
        weak.push(0, 1, -1.0);
        weak.push(1, 0, -1.0);
        assert!(matches!(ic0_pentadiagonal(&build(&weak, FormatTag::Row), 2), Err(Error::IcPivot(1))));
    }

    #[test]
    fn ic_pivots_dominate_exact_ldl() {
        let mats = [poisson_test(4).a, poisson_test(8).a, cavity_laplace(6, 0.3).unwrap().a, cavity_laplace(8, 0.5).unwrap().a];
        let nbs = [4, 8, 6, 8];
        for (a, nb) in mats.iter().zip(nbs) {
            let f = ic0_pentadiagonal(a, nb).unwrap();
            let l = cholesky(&a.to_dense()).unwrap();
            for i in 0..a.n() {
                let di = l[(i, i)] * l[(i, i)];
                assert!(f.dt[i] >= di * (1.0 - 1e-12) && di > 0.0);
            }
        }
    }

    #[test]
    fn mic_row_sums_and_error_sign() {
        for nb in [3, 6, 10] {
            let a = poisson_test(nb).a;
            let f = mic_pentadiagonal(&a, nb).unwrap();
            let ones = vec![1.0; nb * nb];
            assert!(norm2(&sub(&f.m_apply(&ones), &crate::linalg::apply(&a, &ones))) <= 1e-11);
            let r = m_dense(&f).add_scaled(-1.0, &a.to_dense());
            let eigs = symmetric_eigenvalues(&r);
            assert!(*eigs.last().unwrap() <= 1e-10);
        }
    }

    /// Eigenvalues of `M⁻¹A` via `K⁻¹ A K⁻ᵀ`, `M = K Kᵀ`.
    fn preconditioned_spectrum(f: &IcFactors, a: &SparseMatrix) -> Vec<f64> {
        let n = f.n();
        let nb = f.band_offset;
        let mut k = DenseMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = f.dt[i].sqrt();
            if i >= 1 {
                k[(i, i - 1)] = f.b[i] / f.dt[i - 1].sqrt();
            }
            if i >= nb {
                k[(i, i - nb)] = f.c[i] / f.dt[i - nb].sqrt();
            }
        }
        let kinv = LuFactor::new(&k).unwrap().inverse();
        let s = kinv.matmul(&a.to_dense()).matmul(&kinv.transpose());
        symmetric_eigenvalues(&s.add_scaled(1.0, &s.transpose()))
            .into_iter()
            .map(|e| 0.5 * e)
            .collect()
    }

    #[test]
    fn mic_smallest_eigenvalue_is_one() {
        let a = poisson_test(10).a;
        let f = mic_pentadiagonal(&a, 10).unwrap();
        let eigs = preconditioned_spectrum(&f, &a);
        assert!((eigs[0] - 1.0).abs() <= 1e-6, "{}", eigs[0]);
        let ic = preconditioned_spectrum(&ic0_pentadiagonal(&a, 10).unwrap(), &a);
        assert!(ic[0] < 1.0, "{}", ic[0]);
    }

    #[test]
    fn block_scalar_blocks_are_exact() {
        let a = tridiag_matrix(9);
        let f = block_precond(&a, 1, SigmaRule::Tridiagonal).unwrap();
        let r = rand_vec(9, 5);
        assert!(norm2(&residual(&a, &r, &f.solve(&r))) <= 1e-12);
    }

    #[test]
    fn block_full_sigma_is_exact() {
        let a = poisson_test(5).a;
        let f = block_precond(&a, 5, SigmaRule::Full).unwrap();
        let r = rand_vec(25, 6);
        assert!(norm2(&residual(&a, &r, &f.solve(&r))) <= 1e-11 * norm2(&r));
    }

    #[test]
    fn block_rejects_wide_band() {
        let mut t = Triplets::new(6);
        for i in 0..6 {
            t.push(i, i, 4.0);
        }
        t.push(5, 0, -1.0);
        t.push(0, 5, -1.0);
        assert!(block_precond(&build(&t, FormatTag::Row), 2, SigmaRule::Tridiagonal).is_err());
        assert!(block_precond(&poisson_test(3).a, 2, SigmaRule::Tridiagonal).is_err());
    }

    #[test]
    fn block_pcg_beats_cg() {
        let p = poisson_test(6);
        let opts = SolverOptions::new(Tolerance::abs(1e-10), 200);
        let f = block_precond(&p.a, 6, SigmaRule::Tridiagonal).unwrap();
        let with = pcg(&p.a, &p.b, &f, &[0.0; 36], &opts).unwrap();
        let without = cg(&p.a, &p.b, &[0.0; 36], &opts).unwrap();
        assert!(with.converged() && without.converged());
        assert!(with.iterations < without.iterations);
    }

    #[test]
    fn pcg_identity_matches_cg() {
        let p = poisson_test(6);
        for k in 1..=12 {
            let opts = SolverOptions::new(Tolerance::abs(0.0), k);
            let a = pcg(&p.a, &p.b, &IdentityPrecond(36), &[0.0; 36], &opts).unwrap();
            let b = cg(&p.a, &p.b, &[0.0; 36], &opts).unwrap();
            assert!(norm2(&sub(&a.x, &b.x)) <= 1e-12 * norm2(&b.x));
        }
    }

    #[test]
    fn pcg_jacobi_biorthogonality() {
        let p = poisson_test(6);
        let c = JacobiPrecond::new(&p.a).unwrap();
        let mut st = PcgState::new(&p.a, &c, &p.b, &[0.0; 36]);
        let mut rs = vec![st.r.clone()];
        let mut ss = vec![st.s.clone()];
        for _ in 0..10 {
            st.step(&p.a, &c).unwrap();
            rs.push(st.r.clone());
            ss.push(st.s.clone());
        }
        for i in 0..rs.len() {
            for j in 0..rs.len() {
                if i != j {
                    // sᵀr = rᵀ C r: the residuals are C-orthogonal
                    assert!(dot(&ss[j], &rs[i]).abs() <= 1e-8 * norm2(&ss[j]) * norm2(&rs[i]));
                }
            }
        }
        let rep = pcg(&p.a, &p.b, &c, &[0.0; 36], &SolverOptions::default()).unwrap();
        assert!(rep.converged());
        assert_eq!(rep.extra.as_ref().unwrap().values.len(), rep.history.len());
    }

    #[test]
    fn pcg_detects_indefinite_preconditioner() {
        let p = poisson_test(3);
        let c = DenseMatrix::from_diag(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
        let rep = pcg(&p.a, &vec![1.0; 9], &c, &[0.0; 9], &SolverOptions::default()).unwrap();
        assert!(matches!(rep.status, Status::Breakdown(_)));
    }

    #[test]
    fn ic_ladder_small() {
        for nb in [10, 20] {
            let p = poisson_test(nb);
            let n = nb * nb;
            let opts = SolverOptions::new(Tolerance::abs(1e-6), 10 * n);
            let x0 = vec![0.0; n];
            let plain = cg(&p.a, &p.b, &x0, &opts).unwrap().iterations;
            let ic = pcg(&p.a, &p.b, &ic0_pentadiagonal(&p.a, nb).unwrap(), &x0, &opts).unwrap().iterations;
            let mic = pcg(&p.a, &p.b, &mic_pentadiagonal(&p.a, nb).unwrap(), &x0, &opts).unwrap().iterations;
            assert!(mic < ic && ic < plain, "N={nb}: {mic} {ic} {plain}");
        }
    }

    #[test]
    fn poly_build_examples() {
        let p1 = poly_precond_build(1, 0.5, 3.5).unwrap();
        assert!((p1.gammas[0] - 2.0 / 4.0).abs() <= 1e-15);
        let p11 = poly_precond_build(11, 1e-3, 1.001).unwrap();
        assert!(p11.gammas.iter().all(|&g| g > 0.0 && g < 4.0));
        let mut prev = f64::INFINITY;
        for m in 1..=12 {
            let e = poly_precond_build(m, 1e-3, 1.001).unwrap().eps();
            assert!(e < prev);
            prev = e;
        }
        let mu0 = 1.002 / 1.0;
        assert!((poly_precond_build(1, 1e-3, 1.001).unwrap().eps() - 1.0 / mu0).abs() < 1e-12);
        assert!(poly_precond_build(0, 1.0, 2.0).is_err());
        assert!(poly_precond_build(3, 0.0, 2.0).is_err());
    }

    #[test]
    fn pm_on_diagonal_is_pointwise() {
        let lams: Vec<f64> = (0..8).map(|i| 0.2 + 0.4 * i as f64).collect();
        let d = DenseMatrix::from_diag(&lams);
        for m in [1, 2, 5, 9] {
            let p = poly_precond_build(m, 0.2, 3.0).unwrap();
            let v = rand_vec(8, m as u64);
            let out = p.apply_pm(&d, &v);
            for i in 0..8 {
                assert!((out[i] - p.p_m(lams[i]) * v[i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn pm_is_stable_up_to_forty() {
        let lams: Vec<f64> = (0..20).map(|i| 0.01 + 0.5 * i as f64).collect();
        let d = DenseMatrix::from_diag(&lams);
        let v = vec![1.0; 20];
        for m in 1..=40 {
            let p = poly_precond_build(m, 0.01, 9.51).unwrap();
            let out = p.apply_pm(&d, &v);
            let expect: Vec<f64> = lams.iter().map(|&l| p.p_m(l)).collect();
            assert!(norm2(&sub(&out, &expect)) <= 1e-10 * norm2(&expect), "m={m}");
        }
    }

    fn extremes(a: &SparseMatrix) -> (f64, f64) {
        symmetric_extreme_eigs(&a.to_dense())
    }

    #[test]
    fn pm_spectrum_within_eps_band() {
        let a = poisson_test(6).a;
        let (lo, hi) = extremes(&a);
        let (_, _) = (lo, hi);
        let kappa_a = hi / lo;
        for m in 1..=8 {
            let p = poly_precond_build(m, lo, hi).unwrap();
            let pm = DenseMatrix::from_operator(&PmOperator { poly: &p, a: &a });
            let pm = pm.add_scaled(1.0, &pm.transpose());
            let (plo, phi) = symmetric_extreme_eigs(&pm);
            let (plo, phi) = (0.5 * plo, 0.5 * phi);
            let eps = p.eps();
            assert!(plo >= 1.0 - eps - 1e-10 && phi <= 1.0 + eps + 1e-10);
            assert!(phi / plo <= (1.0 + eps) / (1.0 - eps) * (1.0 + 1e-10));
            if m >= 2 {
                assert!(phi / plo < kappa_a);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn eps_is_the_sampled_maximum(m in 1usize..15, lo in 0.01f64..1.0, w in 0.5f64..20.0) {
            let p = poly_precond_build(m, lo, lo + w).unwrap();
            let mut max = 0.0f64;
            for s in 0..=2000 {
                let lam = lo + w * s as f64 / 2000.0;
                max = max.max(p.e_m(lam).abs());
            }
            prop_assert!((max - p.eps()).abs() <= 1e-10);
        }

        #[test]
        fn clenshaw_matches_pm(m in 1usize..12, seed in 0u64..1000) {
            let a = poisson_test(5).a;
            let (lo, hi) = extremes(&a);
            let p = poly_precond_build(m, lo, hi).unwrap();
            let b = rand_vec(25, seed);
            let cb = p.apply_cb(&a, &b);
            let acb = crate::linalg::apply(&a, &cb);
            let pmb = p.apply_pm(&a, &b);
            prop_assert!(norm2(&sub(&acb, &pmb)) <= 1e-11 * norm2(&b));
            let lam = lo + (hi - lo) * (seed as f64 / 1000.0);
            prop_assert!((p.c_eval(lam) - p.c_eval_direct(lam)).abs() <= 1e-10 * p.c_eval(lam).abs().max(1.0));
        }
    }

    #[test]
    fn clenshaw_degree_one() {
        let p = poly_precond_build(1, 0.5, 1.5).unwrap();
        let a = DenseMatrix::identity(3);
        assert_eq!(p.apply_cb(&a, &[1.0, 2.0, 3.0]), vec![p.gammas[0], 2.0 * p.gammas[0], 3.0 * p.gammas[0]]);
    }

    const PUBLISHED: [f64; 12] = [
        1.6752660329527138e6,
        -9.2323911076024063e6,
        2.1975394326889034e7,
        -2.9566871007963315e7,
        2.4710334661370583e7,
        -1.3273250212561980e7,
        4.5826267022750815e6,
        -9.8775156863499968e5,
        1.2453502849456538e5,
        -8.1003898374282262e3,
        2.0914774360373008e2,
        0.0,
    ];

    #[test]
    fn monomial_expansion_matches_published_list() {
        let p = poly_precond_build(11, 1e-3, 1.001).unwrap();
        let c = p.monomial_coefficients();
        assert_eq!(c.len(), 12);
        for (got, want) in c.iter().zip(PUBLISHED) {
            if want == 0.0 {
                assert_eq!(*got, 0.0);
            } else {
                assert!(((got - want) / want).abs() <= 5e-7, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn monomial_evaluation_is_ill_conditioned() {
        let p = poly_precond_build(11, 1e-3, 1.001).unwrap();
        let c = p.monomial_coefficients();
        // C_{m-1}(λ) = p_m(λ)/λ = Σ_{i<m} c_i λ^{m-1-i}, Horner in the power basis
        let horner = |lam: f64| c[..11].iter().fold(0.0, |acc, ci| acc * lam + ci);
        let at_half = horner(0.5);
        assert!(((at_half - p.c_eval(0.5)) / p.c_eval(0.5)).abs() <= 1e-6);
        let near_one = 0.999;
        let diff = ((horner(near_one) - p.c_eval(near_one)) / p.c_eval(near_one)).abs();
        assert!(diff >= 1e-10, "{diff}");
    }

    #[test]
    fn poly_pcg_converges() {
        let p = poisson_test(10);
        let (lo, hi) = extremes(&p.a);
        let opts = SolverOptions::new(Tolerance::abs(1e-6), 1000);
        let plain = cg(&p.a, &p.b, &[0.0; 100], &opts).unwrap();
        for m in [9, 11] {
            let poly = poly_precond_build(m, lo, hi).unwrap();
            let rep = pcg_poly(&p.a, &p.b, &poly, &[0.0; 100], &opts).unwrap();
            assert!(rep.converged(), "m={m}");
            assert!(rep.iterations < plain.iterations);
            // the operator form of C_{m-1}(A) inside PCG reaches the same tolerance
            let op = PolyOperator { poly: &poly, a: &p.a };
            assert!(pcg(&p.a, &p.b, &op, &[0.0; 100], &opts).unwrap().converged());
        }
    }
}
