//! Lanczos tridiagonalization and MINRES for symmetric, possibly
//! indefinite, systems. Only the last two basis vectors are kept.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, make_givens, norm2, residual, Givens, LinearOperator};
use crate::report::{is_negligible, BreakdownKind, SolveReport, SolverOptions, Status};

/// Lanczos recurrence `A u_i = β_i u_{i+1} + γ_i u_i + β_{i-1} u_{i-1}`.
#[derive(Debug, Clone)]
pub struct LanczosState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub terminated: bool,
    scale: f64,
}

/// Outcome of one Lanczos step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosStep {
    pub gamma: f64,
    pub beta: f64,
    /// `β_i` fell below `1e-14` times the running `‖A u‖` scale: the basis
    /// spans an invariant subspace.
    pub terminated: bool,
}

impl LanczosState {
    /// `u1` is normalized here.
    pub fn new(u1: &[f64]) -> Result<Self> {
        let nu = norm2(u1);
        if nu == 0.0 || !nu.is_finite() {
            return Err(Error::InvalidArgument("Lanczos start vector must be nonzero".into()));
        }
        Ok(Self {
            u_prev: vec![0.0; u1.len()],
            u_curr: u1.iter().map(|v| v / nu).collect(),
            gamma: Vec::new(),
            beta: Vec::new(),
            terminated: false,
            scale: 0.0,
        })
    }
}

pub fn lanczos_step<A: LinearOperator + ?Sized>(a: &A, st: &mut LanczosState) -> LanczosStep {
    let mut v = vec![0.0; st.u_curr.len()];
    a.apply(&st.u_curr, &mut v);
    st.scale = st.scale.max(norm2(&v));
    let gamma = dot(&st.u_curr, &v);
    let beta_prev = st.beta.last().copied().unwrap_or(0.0);
    axpy(-gamma, &st.u_curr, &mut v);
    axpy(-beta_prev, &st.u_prev, &mut v);
    let beta = norm2(&v);
    st.gamma.push(gamma);
    st.beta.push(beta);
    let terminated = beta <= 1e-14 * st.scale;
    if terminated {
        st.terminated = true;
    } else {
        let next: Vec<f64> = v.iter().map(|x| x / beta).collect();
        st.u_prev = std::mem::replace(&mut st.u_curr, next);
    }
    LanczosStep { gamma, beta, terminated }
}

/// Up to `steps` Lanczos steps from `u1`.
pub fn lanczos<A: LinearOperator + ?Sized>(a: &A, u1: &[f64], steps: usize) -> Result<LanczosState> {
    let mut st = LanczosState::new(u1)?;
    for _ in 0..steps {
        if lanczos_step(a, &mut st).terminated {
            break;
        }
    }
    Ok(st)
}

/// MINRES. The history holds `‖b - A x_i‖₂`; `extra` holds `|g_i|`.
/// Stops when `β_i` vanishes or `|g_i|` reaches the tolerance.
pub fn minres<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    minres_signed(a, b, x0, opts, &|_| 1.0)
}

/// MINRES with `β_i` multiplied by `sign(i)`, which flips the sign of the
/// basis vectors from `u_{i+1}` on.
fn minres_signed<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: &[f64],
    opts: &SolverOptions,
    sign: &dyn Fn(usize) -> f64,
) -> Result<SolveReport> {
    let n = a.dim();
    for v in [b, x0] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
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
    let mut u_prev = vec![0.0; n];
    let mut u: Vec<f64> = r0.iter().map(|v| v / beta0).collect();
    let mut beta_prev = 0.0;
    let mut p1 = vec![0.0; n];
    let mut p2 = vec![0.0; n];
    let (mut g1, mut g2) = (Givens::IDENTITY, Givens::IDENTITY);
    let mut g = beta0;
    let mut scale = 0.0f64;
    let mut v = vec![0.0; n];
    let mut status = Status::MaxIter;
    for i in 1..=max_iter {
        a.apply(&u, &mut v);
        scale = scale.max(norm2(&v));
        let gamma = dot(&u, &v);
        axpy(-gamma, &u, &mut v);
        axpy(-beta_prev, &u_prev, &mut v);
        let beta = sign(i) * norm2(&v);

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
        let (rot, rii) = make_givens(r_ii, beta);
        if is_negligible(rii, scale) {
            status = Status::Breakdown(BreakdownKind::SingularR);
            break;
        }
        for pk in p.iter_mut() {
            *pk /= rii;
        }
        let (xi, g_new) = rot.apply(g, 0.0);
        g = g_new;
        axpy(xi, &p, &mut x);
        history.push(norm2(&residual(a, b, &x)));
        quasi.push(g.abs());
        if is_negligible(beta, scale) || g.abs() <= thr {
            status = Status::Converged;
            break;
        }
        let next: Vec<f64> = v.iter().map(|x| x / beta).collect();
        u_prev = std::mem::replace(&mut u, next);
        beta_prev = beta;
        p2 = std::mem::replace(&mut p1, p);
        g2 = g1;
        g1 = rot;
    }
    Ok(SolveReport::new(x, history, status).with_extra("quasi_residual", quasi))
}
