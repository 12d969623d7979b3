//! Krylov methods for nonsymmetric systems: Arnoldi/GMRES, nonsymmetric
//! Lanczos with Bi-CG and two QMR implementations, the bidiagonalization
//! solver, CGS and Bi-CGStab.
//!
//! Zero tests use `1e-14` times a running scale. Breakdowns are reported in
//! the status, never perturbed away.

use crate::error::{Error, Result};
use crate::linalg::{apply, apply_t, axpy, dot, make_givens, norm2, residual, DenseMatrix, Givens, LinearOperator, TransposeOperator};
use crate::report::{is_negligible, BreakdownKind, SolveReport, SolverOptions, Status};

fn check_dims<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64]) -> Result<()> {
    for v in [b, x0] {
        if v.len() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: v.len() });
        }
    }
    Ok(())
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// Orthonormal basis `U` and upper Hessenberg `H` with `A U_k = U_{k+1} Ĥ_k`.
#[derive(Debug, Clone)]
pub struct ArnoldiBasis {
    pub u: Vec<Vec<f64>>,
    /// Column `i` holds `h_{1,i} .. h_{i+1,i}`.
    pub h: Vec<Vec<f64>>,
    /// `h_{k+1,k}` vanished: the basis spans an invariant subspace.
    pub terminated: bool,
}

impl ArnoldiBasis {
    pub fn steps(&self) -> usize {
        self.h.len()
    }

    /// `Ĥ_k`, `(k+1)×k`, or `k×k` after termination.
    pub fn h_matrix(&self) -> DenseMatrix {
        let k = self.steps();
        let rows = if self.terminated { k } else { k + 1 };
        let mut m = DenseMatrix::zeros(rows, k);
        for (j, col) in self.h.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                if i < rows {
                    m[(i, j)] = *v;
                }
            }
        }
        m
    }
}

/// Arnoldi with modified Gram–Schmidt; `u1` is normalized here.
pub fn arnoldi<A: LinearOperator + ?Sized>(a: &A, u1: &[f64], steps: usize) -> Result<ArnoldiBasis> {
    let nu = norm2(u1);
    if u1.len() != a.dim() || nu == 0.0 {
        return Err(Error::InvalidArgument("Arnoldi start vector must be nonzero and of matching size".into()));
    }
    let mut u = vec![scaled(u1, 1.0 / nu)];
    let mut h = Vec::new();
    let mut scale = 0.0f64;
    let mut terminated = false;
    for i in 0..steps {
        let mut v = apply(a, &u[i]);
        scale = scale.max(norm2(&v));
        let mut col = Vec::with_capacity(i + 2);
        for uj in &u {
            let hji = dot(uj, &v);
            axpy(-hji, uj, &mut v);
            col.push(hji);
        }
        let hn = norm2(&v);
        col.push(hn);
        h.push(col);
        if hn <= 1e-14 * scale {
            terminated = true;
            break;
        }
        u.push(scaled(&v, 1.0 / hn));
    }
    Ok(ArnoldiBasis { u, h, terminated })
}

fn back_substitute(rcols: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    let k = rcols.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= rcols[j][i] * y[j];
        }
        y[i] = s / rcols[i][i];
    }
    y
}

/// GMRES with Givens-updated QR of `Ĥ_i`; the history holds `|g_i|`,
/// equal to `‖b - A x_i‖` in exact arithmetic. With `restart = Some(k)` the
/// basis is rebuilt from the current iterate every `k` steps.
pub fn gmres<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: &[f64],
    opts: &SolverOptions,
    restart: Option<usize>,
) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let n = a.dim();
    if restart == Some(0) {
        return Err(Error::InvalidArgument("restart length must be positive".into()));
    }
    let cycle = restart.unwrap_or(n).max(1);
    let max_iter = opts.max_iter_or(if restart.is_some() { 10 * n } else { n });
    let mut x = x0.to_vec();
    let r0 = residual(a, b, &x);
    let beta0 = norm2(&r0);
    let thr = opts.tol.threshold(norm2(b), beta0);
    let mut history = vec![beta0];
    let mut scale = 0.0f64;
    let mut total = 0;
    let status = 'outer: loop {
        let r = residual(a, b, &x);
        let beta = norm2(&r);
        if beta <= thr || beta == 0.0 {
            break Status::Converged;
        }
        let mut u = vec![scaled(&r, 1.0 / beta)];
        let mut rcols: Vec<Vec<f64>> = Vec::new();
        let mut rots: Vec<Givens> = Vec::new();
        let mut g = vec![beta];
        loop {
            if total >= max_iter {
                let y = back_substitute(&rcols, &g);
                for (yj, uj) in y.iter().zip(&u) {
                    axpy(*yj, uj, &mut x);
                }
                break 'outer Status::MaxIter;
            }
            let i = rcols.len();
            let mut v = apply(a, &u[i]);
            scale = scale.max(norm2(&v));
            let mut h = Vec::with_capacity(i + 2);
            for uj in &u {
                let hji = dot(uj, &v);
                axpy(-hji, uj, &mut v);
                h.push(hji);
            }
            let h_next = norm2(&v);
            for (k, rot) in rots.iter().enumerate() {
                let (p, q) = rot.apply(h[k], h[k + 1]);
                h[k] = p;
                h[k + 1] = q;
            }
            let (rot, rii) = make_givens(h[i], h_next);
            total += 1;
            if is_negligible(rii, scale) {
                let y = back_substitute(&rcols, &g);
                for (yj, uj) in y.iter().zip(&u) {
                    axpy(*yj, uj, &mut x);
                }
                history.push(g[i].abs());
                break 'outer Status::Breakdown(BreakdownKind::SingularR);
            }
            h[i] = rii;
            rcols.push(h);
            let (gi, gn) = rot.apply(g[i], 0.0);
            g[i] = gi;
            g.push(gn);
            rots.push(rot);
            history.push(gn.abs());
            let lucky = h_next <= 1e-14 * scale;
            let done = gn.abs() <= thr;
            if done || lucky || rcols.len() == cycle {
                let y = back_substitute(&rcols, &g);
                for (yj, uj) in y.iter().zip(&u) {
                    axpy(*yj, uj, &mut x);
                }
                if done {
                    break 'outer Status::Converged;
                }
                if lucky {
                    break 'outer Status::Breakdown(BreakdownKind::InvariantSubspace);
                }
                continue 'outer;
            }
            u.push(scaled(&v, 1.0 / h_next));
        }
    };
    Ok(SolveReport::new(x, history, status))
}

/// Nonsymmetric Lanczos state: `A u_i = α_i u_{i+1} + γ_i u_i + β_{i-1} u_{i-1}`,
/// `Aᵀ w_i = β_i w_{i+1} + γ_i w_i + α_{i-1} w_{i-1}`, `Wᵀ U = I`.
#[derive(Debug, Clone)]
pub struct BiLanczosState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub w_prev: Vec<f64>,
    pub w_curr: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl BiLanczosState {
    /// Needs `r0ᵀ r̂0 ≠ 0`; `r̂0 = r0` is the usual choice.
    pub fn new(r0: &[f64], rhat0: &[f64]) -> Result<Self> {
        let nr = norm2(r0);
        let u1 = scaled(r0, 1.0 / nr);
        let eta = dot(&u1, rhat0);
        if nr == 0.0 || is_negligible(eta, norm2(rhat0)) {
            return Err(Error::InvalidArgument("need r0ᵀ r̂0 ≠ 0".into()));
        }
        let n = r0.len();
        Ok(Self {
            u_prev: vec![0.0; n],
            w_prev: vec![0.0; n],
            w_curr: scaled(rhat0, 1.0 / eta),
            u_curr: u1,
            alpha: Vec::new(),
            beta: Vec::new(),
            gamma: Vec::new(),
        })
    }
}

/// One step. `Err(InvariantSubspace)` when `α_i` vanishes,
/// `Err(SeriousBreakdown)` when `β_i` vanishes with `û_i ≠ 0`.
pub fn bilanczos_step<A: TransposeOperator + ?Sized>(a: &A, st: &mut BiLanczosState) -> std::result::Result<(), BreakdownKind> {
    let v = apply(a, &st.u_curr);
    let gamma = dot(&st.w_curr, &v);
    let beta_prev = st.beta.last().copied().unwrap_or(0.0);
    let alpha_prev = st.alpha.last().copied().unwrap_or(0.0);
    let mut u_hat = v.clone();
    axpy(-gamma, &st.u_curr, &mut u_hat);
    axpy(-beta_prev, &st.u_prev, &mut u_hat);
    let atw = apply_t(a, &st.w_curr);
    let mut w_hat = atw.clone();
    axpy(-gamma, &st.w_curr, &mut w_hat);
    axpy(-alpha_prev, &st.w_prev, &mut w_hat);
    st.gamma.push(gamma);
    let alpha = norm2(&u_hat);
    if is_negligible(alpha, norm2(&v)) {
        st.alpha.push(alpha);
        return Err(BreakdownKind::InvariantSubspace);
    }
    let u_next = scaled(&u_hat, 1.0 / alpha);
    let beta = dot(&u_next, &w_hat);
    st.alpha.push(alpha);
    st.beta.push(beta);
    if is_negligible(beta, norm2(&atw).max(norm2(&w_hat))) {
        return Err(BreakdownKind::SeriousBreakdown);
    }
    st.u_prev = std::mem::replace(&mut st.u_curr, u_next);
    st.w_prev = std::mem::replace(&mut st.w_curr, scaled(&w_hat, 1.0 / beta));
    Ok(())
}

/// Bi-CG iteration state; `r̂_0 = r_0`.
#[derive(Debug, Clone)]
pub struct BicgState {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub p: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub eta: f64,
    pub lambda_hat: Vec<f64>,
    pub mu: Vec<f64>,
}

impl BicgState {
    pub fn new<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64]) -> Self {
        let r = residual(a, b, x0);
        Self {
            x: x0.to_vec(),
            eta: dot(&r, &r),
            r_hat: r.clone(),
            p: r.clone(),
            p_hat: r.clone(),
            r,
            lambda_hat: Vec::new(),
            mu: Vec::new(),
        }
    }

    /// `Err(SeriousBreakdown)` when `d̂_i = p̂_iᵀ A p_i` vanishes.
    pub fn step<A: TransposeOperator + ?Sized>(&mut self, a: &A) -> std::result::Result<(), BreakdownKind> {
        let v = apply(a, &self.p);
        let v_hat = apply_t(a, &self.p_hat);
        let d_hat = dot(&self.p_hat, &v);
        if is_negligible(d_hat, norm2(&self.p_hat) * norm2(&v)) {
            return Err(BreakdownKind::SeriousBreakdown);
        }
        let lambda_hat = self.eta / d_hat;
        axpy(lambda_hat, &self.p, &mut self.x);
        axpy(-lambda_hat, &v, &mut self.r);
        axpy(-lambda_hat, &v_hat, &mut self.r_hat);
        let eta = dot(&self.r_hat, &self.r);
        let mu = eta / self.eta;
        for i in 0..self.p.len() {
            self.p[i] = self.r[i] + mu * self.p[i];
            self.p_hat[i] = self.r_hat[i] + mu * self.p_hat[i];
        }
        self.eta = eta;
        self.lambda_hat.push(lambda_hat);
        self.mu.push(mu);
        Ok(())
    }
}

/// Bi-CG. History holds `‖r_i‖`; scalars `lambda_hat` and `mu` are recorded.
pub fn bicg<A: TransposeOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let mut st = BicgState::new(a, b, x0);
    let r0 = norm2(&st.r);
    let thr = opts.tol.threshold(norm2(b), r0);
    let max_iter = opts.max_iter_or(a.dim());
    let mut history = vec![r0];
    let status = loop {
        let rn = *history.last().unwrap();
        if rn <= thr || rn == 0.0 {
            break Status::Converged;
        }
        if is_negligible(st.eta, norm2(&st.r_hat) * rn) {
            break Status::Breakdown(BreakdownKind::SeriousBreakdown);
        }
        if history.len() > max_iter {
            break Status::MaxIter;
        }
        if let Err(k) = st.step(a) {
            break Status::Breakdown(k);
        }
        history.push(norm2(&st.r));
    };
    let mut rep = SolveReport::new(st.x, history, status);
    rep.scalars.insert("lambda_hat", st.lambda_hat);
    rep.scalars.insert("mu", st.mu);
    Ok(rep)
}

/// QMR on the nonsymmetric Lanczos basis (`r̂_0 = r_0`). History holds
/// `‖b - A x_i‖`; `extra` holds the quasi-residual `|g_i|`, which drives
/// the stopping test.
pub fn qmr<A: TransposeOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let n = a.dim();
    let mut x = x0.to_vec();
    let r0 = residual(a, b, x0);
    let beta0 = norm2(&r0);
    let thr = opts.tol.threshold(norm2(b), beta0);
    let max_iter = opts.max_iter_or(n);
    let mut history = vec![beta0];
    let mut quasi = vec![beta0];
    if beta0 <= thr || beta0 == 0.0 {
        return Ok(SolveReport::new(x, history, Status::Converged).with_extra("quasi_residual", quasi));
    }
    let mut u = scaled(&r0, 1.0 / beta0);
    let mut w = u.clone();
    let mut u_prev = vec![0.0; n];
    let mut w_prev = vec![0.0; n];
    let (mut beta_prev, mut alpha_prev) = (0.0, 0.0);
    let mut p1 = vec![0.0; n];
    let mut p2 = vec![0.0; n];
    let (mut g1, mut g2) = (Givens::IDENTITY, Givens::IDENTITY);
    let mut g = beta0;
    let mut status = Status::MaxIter;
    for i in 1..=max_iter {
        let v = apply(a, &u);
        let scale = norm2(&v);
        let gamma = dot(&w, &v);
        let mut u_hat = v;
        axpy(-gamma, &u, &mut u_hat);
        axpy(-beta_prev, &u_prev, &mut u_hat);
        let alpha = norm2(&u_hat);

        let mut p = u.clone();
        let mut r_im1 = beta_prev;
        let mut r_ii = gamma;
        if i > 2 {
            let (r_im2, r) = g2.apply(0.0, beta_prev);
            r_im1 = r;
            axpy(-r_im2, &p2, &mut p);
        }
        if i > 1 {
            let (r, d) = g1.apply(r_im1, gamma);
            r_im1 = r;
            r_ii = d;
            axpy(-r_im1, &p1, &mut p);
        }
        let (rot, rii) = make_givens(r_ii, alpha);
        if is_negligible(rii, scale) {
            status = Status::Breakdown(BreakdownKind::SingularR);
            break;
        }
        p.iter_mut().for_each(|v| *v /= rii);
        let (xi, g_new) = rot.apply(g, 0.0);
        g = g_new;
        axpy(xi, &p, &mut x);
        history.push(norm2(&residual(a, b, &x)));
        quasi.push(g.abs());
        let invariant = is_negligible(alpha, scale);
        if g.abs() <= thr || invariant {
            status = if g.abs() <= thr || *history.last().unwrap() <= thr {
                Status::Converged
            } else {
                Status::Breakdown(BreakdownKind::InvariantSubspace)
            };
            break;
        }
        let u_next = scaled(&u_hat, 1.0 / alpha);
        let atw = apply_t(a, &w);
        let mut w_hat = atw.clone();
        axpy(-gamma, &w, &mut w_hat);
        axpy(-alpha_prev, &w_prev, &mut w_hat);
        let beta = dot(&u_next, &w_hat);
        if is_negligible(beta, norm2(&atw).max(norm2(&w_hat))) {
            status = Status::Breakdown(BreakdownKind::SeriousBreakdown);
            break;
        }
        u_prev = std::mem::replace(&mut u, u_next);
        w_prev = std::mem::replace(&mut w, scaled(&w_hat, 1.0 / beta));
        beta_prev = beta;
        alpha_prev = alpha;
        p2 = std::mem::replace(&mut p1, p);
        g2 = g1;
        g1 = rot;
    }
    Ok(SolveReport::new(x, history, status).with_extra("quasi_residual", quasi))
}

/// QMR through the coupled factorization `A Q = U L`, `Aᵀ Z = V L`,
/// `Vᵀ U = F`, `T = L H`. Reports `lu_breakdown` when a pivot `ℓ_i`
/// vanishes and `serious_breakdown` when `f_{i+1}` does.
pub fn qmr_alt<A: TransposeOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let n = a.dim();
    let mut x = x0.to_vec();
    let r0 = residual(a, b, x0);
    let beta0 = norm2(&r0);
    let thr = opts.tol.threshold(norm2(b), beta0);
    let max_iter = opts.max_iter_or(n);
    let mut history = vec![beta0];
    let mut quasi = vec![beta0];
    if beta0 <= thr || beta0 == 0.0 {
        return Ok(SolveReport::new(x, history, Status::Converged).with_extra("quasi_residual", quasi));
    }
    let mut u = scaled(&r0, 1.0 / beta0);
    let mut v = u.clone();
    let mut q = u.clone();
    let mut z = u.clone();
    let mut f = 1.0;
    let mut g = beta0;
    let mut p1 = vec![0.0; n];
    let mut g1 = Givens::IDENTITY;
    let mut status = Status::MaxIter;
    for i in 1..=max_iter {
        let q_hat = apply(a, &q);
        let scale = norm2(&q_hat);
        let ell = dot(&z, &q_hat) / f;
        if is_negligible(ell * f, norm2(&z) * scale) {
            status = Status::Breakdown(BreakdownKind::LuBreakdown);
            break;
        }
        let mut u_hat = q_hat;
        axpy(-ell, &u, &mut u_hat);
        let alpha = norm2(&u_hat);
        let mut r_ii = ell;
        let mut p = q.clone();
        if i > 1 {
            let (r_im1, d) = g1.apply(0.0, ell);
            r_ii = d;
            axpy(-r_im1, &p1, &mut p);
        }
        let (rot, rii) = make_givens(r_ii, alpha);
        if is_negligible(rii, scale) {
            status = Status::Breakdown(BreakdownKind::SingularR);
            break;
        }
        p.iter_mut().for_each(|c| *c /= rii);
        let (xi, g_new) = rot.apply(g, 0.0);
        g = g_new;
        axpy(xi, &p, &mut x);
        history.push(norm2(&residual(a, b, &x)));
        quasi.push(g.abs());
        let invariant = is_negligible(alpha, scale);
        if g.abs() <= thr || invariant {
            status = if g.abs() <= thr || *history.last().unwrap() <= thr {
                Status::Converged
            } else {
                Status::Breakdown(BreakdownKind::InvariantSubspace)
            };
            break;
        }
        let u_next = scaled(&u_hat, 1.0 / alpha);
        let mut v_next = apply_t(a, &z);
        axpy(-ell, &v, &mut v_next);
        v_next.iter_mut().for_each(|c| *c /= alpha);
        let f_next = dot(&v_next, &u_next);
        if is_negligible(f_next, norm2(&v_next)) {
            status = Status::Breakdown(BreakdownKind::SeriousBreakdown);
            break;
        }
        let phi = alpha * f_next / (ell * f);
        let mut q_next = u_next.clone();
        axpy(-phi, &q, &mut q_next);
        let mut z_next = v_next.clone();
        axpy(-phi, &z, &mut z_next);
        u = u_next;
        v = v_next;
        q = q_next;
        z = z_next;
        f = f_next;
        p1 = p;
        g1 = rot;
    }
    Ok(SolveReport::new(x, history, status).with_extra("quasi_residual", quasi))
}

/// Bidiagonalization `A V = U L`, `Aᵀ U = V Lᵀ` with orthonormal `U`, `V`
/// and lower bidiagonal `L` (`α_i` diagonal, `β_i` below).
#[derive(Debug, Clone)]
pub struct Bidiagonalization {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `β_k` vanished.
    pub terminated: bool,
}

impl Bidiagonalization {
    /// `L_k`, `k×k`.
    pub fn l_matrix(&self) -> DenseMatrix {
        let k = self.alpha.len();
        let mut l = DenseMatrix::zeros(k, k);
        for i in 0..k {
            l[(i, i)] = self.alpha[i];
            if i + 1 < k {
                l[(i + 1, i)] = self.beta[i];
            }
        }
        l
    }
}

/// Up to `steps` bidiagonalization steps from `û_1`.
pub fn bidiagonalize<A: TransposeOperator + ?Sized>(a: &A, u_hat1: &[f64], steps: usize) -> Result<Bidiagonalization> {
    let nu = norm2(u_hat1);
    if nu == 0.0 || u_hat1.len() != a.dim() {
        return Err(Error::InvalidArgument("bidiagonalization start vector must be nonzero and of matching size".into()));
    }
    let n = a.dim();
    let mut bd = Bidiagonalization { u: vec![scaled(u_hat1, 1.0 / nu)], v: Vec::new(), alpha: Vec::new(), beta: Vec::new(), terminated: false };
    let mut v_prev = vec![0.0; n];
    let mut beta_prev = 0.0;
    for i in 0..steps.min(n) {
        let atu = apply_t(a, &bd.u[i]);
        let mut v_hat = atu.clone();
        axpy(-beta_prev, &v_prev, &mut v_hat);
        let alpha = norm2(&v_hat);
        if is_negligible(alpha, norm2(&atu)) {
            bd.terminated = true;
            break;
        }
        let vi = scaled(&v_hat, 1.0 / alpha);
        bd.alpha.push(alpha);
        bd.v.push(vi.clone());
        if i + 1 == n {
            break;
        }
        let av = apply(a, &vi);
        let mut u_hat = av.clone();
        axpy(-alpha, &bd.u[i], &mut u_hat);
        let beta = norm2(&u_hat);
        bd.beta.push(beta);
        if is_negligible(beta, norm2(&av)) {
            bd.terminated = true;
            break;
        }
        bd.u.push(scaled(&u_hat, 1.0 / beta));
        v_prev = vi;
        beta_prev = beta;
    }
    Ok(bd)
}

/// Galerkin solver on the bidiagonal factorization:
/// `x_i = x_{i-1} + ξ_i v_i`, `ξ_1 = ‖r_0‖/α_1`, `ξ_i = -ξ_{i-1}β_{i-1}/α_i`.
/// The residual is `-ξ_i β_i u_{i+1}`, so the history holds `|ξ_i β_i|`.
/// Equivalent to Lanczos on the normal equations, so convergence follows
/// `κ(A)²`.
pub fn bidiag_solve<A: TransposeOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let n = a.dim();
    let mut x = x0.to_vec();
    let r0 = residual(a, b, x0);
    let beta0 = norm2(&r0);
    let thr = opts.tol.threshold(norm2(b), beta0);
    let max_iter = opts.max_iter_or(n);
    let mut history = vec![beta0];
    if beta0 <= thr || beta0 == 0.0 {
        return Ok(SolveReport::new(x, history, Status::Converged));
    }
    let mut u = scaled(&r0, 1.0 / beta0);
    let mut v_prev = vec![0.0; n];
    let mut beta_prev = 0.0;
    let mut xi = 0.0;
    let mut status = Status::MaxIter;
    for i in 1..=max_iter {
        let atu = apply_t(a, &u);
        let mut v = atu.clone();
        axpy(-beta_prev, &v_prev, &mut v);
        let alpha = norm2(&v);
        if is_negligible(alpha, norm2(&atu)) {
            status = Status::Breakdown(BreakdownKind::InvariantSubspace);
            break;
        }
        v.iter_mut().for_each(|c| *c /= alpha);
        xi = if i == 1 { beta0 / alpha } else { -xi * beta_prev / alpha };
        axpy(xi, &v, &mut x);
        let av = apply(a, &v);
        let mut u_hat = av.clone();
        axpy(-alpha, &u, &mut u_hat);
        let beta = norm2(&u_hat);
        let rn = (xi * beta).abs();
        history.push(rn);
        if rn <= thr || is_negligible(beta, norm2(&av)) {
            status = Status::Converged;
            break;
        }
        u = scaled(&u_hat, 1.0 / beta);
        v_prev = v;
        beta_prev = beta;
    }
    Ok(SolveReport::new(x, history, status))
}

/// CGS (`r̂_0 = r_0`): residuals `φ_i(A)² r_0`, two products with `A` per
/// step and none with `Aᵀ`. Records `lambda_hat` and `mu`.
pub fn cgs<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let n = a.dim();
    let mut x = x0.to_vec();
    let mut r = residual(a, b, x0);
    let r_hat0 = r.clone();
    let mut p = r.clone();
    let mut g = r.clone();
    let mut eta = dot(&r_hat0, &r);
    let r0n = norm2(&r);
    let thr = opts.tol.threshold(norm2(b), r0n);
    let max_iter = opts.max_iter_or(n);
    let mut history = vec![r0n];
    let (mut lams, mut mus) = (Vec::new(), Vec::new());
    let status = loop {
        let rn = *history.last().unwrap();
        if rn <= thr || rn == 0.0 {
            break Status::Converged;
        }
        if is_negligible(eta, r0n * rn) {
            break Status::Breakdown(BreakdownKind::SeriousBreakdown);
        }
        if history.len() > max_iter {
            break Status::MaxIter;
        }
        let v = apply(a, &p);
        let d_hat = dot(&r_hat0, &v);
        if is_negligible(d_hat, r0n * norm2(&v)) {
            break Status::Breakdown(BreakdownKind::SeriousBreakdown);
        }
        let lambda_hat = eta / d_hat;
        let mut w = g.clone();
        axpy(-lambda_hat, &v, &mut w);
        let gw: Vec<f64> = g.iter().zip(&w).map(|(a, b)| a + b).collect();
        axpy(lambda_hat, &gw, &mut x);
        axpy(-lambda_hat, &apply(a, &gw), &mut r);
        let eta_new = dot(&r_hat0, &r);
        let mu = eta_new / eta;
        for k in 0..n {
            g[k] = r[k] + mu * w[k];
            p[k] = g[k] + mu * (w[k] + mu * p[k]);
        }
        eta = eta_new;
        lams.push(lambda_hat);
        mus.push(mu);
        history.push(norm2(&r));
    };
    let mut rep = SolveReport::new(x, history, status);
    rep.scalars.insert("lambda_hat", lams);
    rep.scalars.insert("mu", mus);
    Ok(rep)
}

/// Bi-CGStab (`r̂_0 = r_0`). History holds `‖r_i‖`; `extra` holds the
/// half-step residuals `‖r_{i-1/2}‖`. Both are tested against the
/// tolerance. Records `lambda_hat`, `omega`, `eta`, `mu`.
pub fn bicgstab<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let n = a.dim();
    let mut x = x0.to_vec();
    let mut r = residual(a, b, x0);
    let r_hat0 = r.clone();
    let mut p = r.clone();
    let mut eta = dot(&r_hat0, &r);
    let r0n = norm2(&r);
    let thr = opts.tol.threshold(norm2(b), r0n);
    let max_iter = opts.max_iter_or(n);
    let mut history = vec![r0n];
    let mut half = vec![r0n];
    let (mut lams, mut omegas, mut etas, mut mus) = (Vec::new(), Vec::new(), vec![eta], Vec::new());
    let status = loop {
        let rn = *history.last().unwrap();
        if rn <= thr || rn == 0.0 {
            break Status::Converged;
        }
        if is_negligible(eta, r0n * rn) {
            break Status::Breakdown(BreakdownKind::SeriousBreakdown);
        }
        if history.len() > max_iter {
            break Status::MaxIter;
        }
        let v = apply(a, &p);
        let d_hat = dot(&r_hat0, &v);
        if is_negligible(d_hat, r0n * norm2(&v)) {
            break Status::Breakdown(BreakdownKind::SeriousBreakdown);
        }
        let lambda_hat = eta / d_hat;
        axpy(lambda_hat, &p, &mut x);
        let mut r_half = r.clone();
        axpy(-lambda_hat, &v, &mut r_half);
        let hn = norm2(&r_half);
        lams.push(lambda_hat);
        if hn <= thr || hn == 0.0 {
            history.push(hn);
            half.push(hn);
            break Status::Converged;
        }
        let t = apply(a, &r_half);
        let tt = dot(&t, &t);
        let omega = dot(&t, &r_half) / tt.max(f64::MIN_POSITIVE);
        if tt == 0.0 || is_negligible(omega * tt.sqrt(), hn) {
            history.push(hn);
            half.push(hn);
            break Status::Breakdown(BreakdownKind::Stagnation);
        }
        axpy(omega, &r_half, &mut x);
        r = r_half;
        axpy(-omega, &t, &mut r);
        let eta_new = dot(&r_hat0, &r);
        let mu = (eta_new / eta) * (lambda_hat / omega);
        for k in 0..n {
            p[k] = r[k] + mu * (p[k] - omega * v[k]);
        }
        eta = eta_new;
        omegas.push(omega);
        etas.push(eta);
        mus.push(mu);
        history.push(norm2(&r));
        half.push(hn);
    };
    let mut rep = SolveReport::new(x, history, status).with_extra("half_step", half);
    rep.scalars.insert("lambda_hat", lams);
    rep.scalars.insert("omega", omegas);
    rep.scalars.insert("eta", etas);
    rep.scalars.insert("mu", mus);
    Ok(rep)
}

/// Left preconditioning by formal substitution `A ← C A`, `b ← C b`. The
/// transpose treats `C` as symmetric: `(C A)ᵀ = Aᵀ C`.
pub struct LeftPreconditioned<'a, A: ?Sized, C: ?Sized> {
    pub a: &'a A,
    pub c: &'a C,
}

impl<A: LinearOperator + ?Sized, C: LinearOperator + ?Sized> LinearOperator for LeftPreconditioned<'_, A, C> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let ax = apply(self.a, x);
        self.c.apply(&ax, y);
    }
}

impl<A: TransposeOperator + ?Sized, C: LinearOperator + ?Sized> TransposeOperator for LeftPreconditioned<'_, A, C> {
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let cx = apply(self.c, x);
        self.a.apply_transpose(&cx, y);
    }
}

/// `C b`.
pub fn precondition_rhs<C: LinearOperator + ?Sized>(c: &C, b: &[f64]) -> Vec<f64> {
    apply(c, b)
}
