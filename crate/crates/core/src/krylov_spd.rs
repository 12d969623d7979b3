//! Conjugate gradients for spd systems: the `AU = UT` factorization, the
//! two CG formulations, the tridiagonal `T̄` recovered from CG scalars,
//! stopping rules and the energy-norm convergence factor.

use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot, norm2, residual, sturm_extreme_eigs, LinearOperator, TridiagSym, STURM_TOL};
use crate::report::{is_negligible, BreakdownKind, SolveReport, SolverOptions, Status, Tolerance};

fn check_dims<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64]) -> Result<()> {
    for v in [b, x0] {
        if v.len() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: v.len() });
        }
    }
    Ok(())
}

/// `A U = U T`, `Uᵀ B U = D` with `T` unit-subdiagonal tridiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosLikeFactorization {
    /// `u_1 .. u_k`.
    pub u: Vec<Vec<f64>>,
    /// `u_{k+1}`; zero (to working precision) when an invariant subspace
    /// was found.
    pub u_next: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `β_1 .. β_{k-1}`, `β_i = d_{i+1}/d_i`.
    pub beta: Vec<f64>,
    pub d: Vec<f64>,
    pub terminated: bool,
}

/// Builds `u_{i+1} = A u_i - γ_i u_i - β_{i-1} u_{i-1}` with
/// `d_i = u_iᵀ B u_i`, `γ_i = (A u_i)ᵀ B u_i / d_i`.
///
/// Stops early once `‖u_{i+1}‖ ≤ 1e-14 ‖A u_i‖` (an invariant subspace).
pub fn factorize_aut<A, B>(a: &A, b: &B, u1: &[f64], steps: usize) -> LanczosLikeFactorization
where
    A: LinearOperator + ?Sized,
    B: LinearOperator + ?Sized,
{
    let n = a.dim();
    let mut f = LanczosLikeFactorization {
        u: Vec::new(),
        u_next: u1.to_vec(),
        gamma: Vec::new(),
        beta: Vec::new(),
        d: Vec::new(),
        terminated: false,
    };
    let mut v = vec![0.0; n];
    let mut z = vec![0.0; n];
    for i in 0..steps {
        let ui = std::mem::take(&mut f.u_next);
        a.apply(&ui, &mut v);
        b.apply(&ui, &mut z);
        let di = dot(&ui, &z);
        let gi = dot(&v, &z) / di;
        let mut next = v.clone();
        axpy(-gi, &ui, &mut next);
        if i > 0 {
            let bprev = di / f.d[i - 1];
            f.beta.push(bprev);
            axpy(-bprev, &f.u[i - 1], &mut next);
        }
        f.d.push(di);
        f.gamma.push(gi);
        let scale = norm2(&v);
        f.u.push(ui);
        let stop = is_negligible(norm2(&next), scale);
        f.u_next = next;
        if stop {
            f.terminated = true;
            break;
        }
    }
    f
}

/// CG built on the factorization with `B = A`, `u_1 = r_0`:
/// `λ_i = u_iᵀ r_{i-1} / d_i`.
pub fn cg_basic<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let n = a.dim();
    let mut x = x0.to_vec();
    let mut r = residual(a, b, &x);
    let r0 = norm2(&r);
    let thr = opts.tol.threshold(norm2(b), r0);
    let max_iter = opts.max_iter_or(n);
    let mut history = vec![r0];
    let mut u = r.clone();
    let mut u_prev = vec![0.0; n];
    let mut d_prev = 0.0;
    let mut v = vec![0.0; n];
    let mut lambdas = Vec::new();
    let mut status = Status::MaxIter;
    for i in 1..=max_iter + 1 {
        if *history.last().unwrap() <= thr {
            status = Status::Converged;
            break;
        }
        if i > max_iter {
            break;
        }
        a.apply(&u, &mut v);
        let d = dot(&u, &v);
        if d <= 0.0 || !d.is_finite() {
            status = Status::Breakdown(BreakdownKind::NotSpd);
            break;
        }
        let lambda = dot(&u, &r) / d;
        axpy(lambda, &u, &mut x);
        axpy(-lambda, &v, &mut r);
        history.push(norm2(&r));
        lambdas.push(lambda);
        let gamma = dot(&v, &v) / d;
        let beta_prev = if i == 1 { 0.0 } else { d / d_prev };
        let mut next = v.clone();
        axpy(-gamma, &u, &mut next);
        axpy(-beta_prev, &u_prev, &mut next);
        u_prev = std::mem::replace(&mut u, next);
        d_prev = d;
    }
    let mut rep = SolveReport::new(x, history, status);
    rep.scalars.insert("lambda", lambdas);
    Ok(rep)
}

/// Iteration state of the efficient CG recurrence.
#[derive(Debug, Clone)]
pub struct CgState {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    /// `η_{i} = r_iᵀ r_i`.
    pub eta: f64,
    pub lambda_hat: Vec<f64>,
    pub mu: Vec<f64>,
    pub d_hat: Vec<f64>,
    v: Vec<f64>,
}

impl CgState {
    pub fn new<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64]) -> Self {
        let r = residual(a, b, x0);
        let eta = dot(&r, &r);
        Self {
            x: x0.to_vec(),
            p: r.clone(),
            r,
            eta,
            lambda_hat: Vec::new(),
            mu: Vec::new(),
            d_hat: Vec::new(),
            v: vec![0.0; x0.len()],
        }
    }

    /// One step; `Err(NotSpd)` when `d̂_i ≤ 0`.
    pub fn step<A: LinearOperator + ?Sized>(&mut self, a: &A) -> std::result::Result<(), BreakdownKind> {
        a.apply(&self.p, &mut self.v);
        let d_hat = dot(&self.p, &self.v);
        if d_hat <= 0.0 || !d_hat.is_finite() {
            return Err(BreakdownKind::NotSpd);
        }
        let lambda_hat = self.eta / d_hat;
        axpy(lambda_hat, &self.p, &mut self.x);
        axpy(-lambda_hat, &self.v, &mut self.r);
        let eta = dot(&self.r, &self.r);
        let mu = eta / self.eta;
        for (pi, ri) in self.p.iter_mut().zip(&self.r) {
            *pi = ri + mu * *pi;
        }
        self.eta = eta;
        self.d_hat.push(d_hat);
        self.lambda_hat.push(lambda_hat);
        self.mu.push(mu);
        Ok(())
    }
}

/// Residual-based stopping or the error bound `‖e‖ ≤ ‖r‖ / λ_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Residual(Tolerance),
    ErrorBound { tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StopContext {
    pub b_norm: f64,
    pub r0_norm: f64,
    pub lambda_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopDecision {
    pub stop: bool,
    pub error_bound: Option<f64>,
}

pub fn stopping_check(r: &[f64], rule: &StopRule, ctx: &StopContext) -> Result<StopDecision> {
    stopping_check_norm(norm2(r), rule, ctx)
}

fn stopping_check_norm(rn: f64, rule: &StopRule, ctx: &StopContext) -> Result<StopDecision> {
    let error_bound = match ctx.lambda_min {
        Some(l) if l <= 0.0 => return Err(invalid(format!("lambda_min must be positive, got {l}"))),
        Some(l) => Some(rn / l),
        None => None,
    };
    let stop = match rule {
        StopRule::Residual(t) => rn <= t.threshold(ctx.b_norm, ctx.r0_norm),
        StopRule::ErrorBound { tol } => {
            error_bound.ok_or_else(|| invalid("error-bound stopping needs lambda_min"))? <= *tol
        }
    };
    Ok(StopDecision { stop, error_bound })
}

fn cg_run<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: &[f64],
    rule: &StopRule,
    lambda_min: Option<f64>,
    max_iter: usize,
) -> Result<SolveReport> {
    check_dims(a, b, x0)?;
    let mut st = CgState::new(a, b, x0);
    let r0 = st.eta.sqrt();
    let ctx = StopContext { b_norm: norm2(b), r0_norm: r0, lambda_min };
    let mut history = vec![r0];
    let mut true_res = vec![r0];
    let mut bounds = Vec::new();
    let mut status = Status::MaxIter;
    loop {
        let dec = stopping_check_norm(st.eta.sqrt(), rule, &ctx)?;
        if let Some(e) = dec.error_bound {
            bounds.push(e);
        }
        if dec.stop {
            status = Status::Converged;
            break;
        }
        if history.len() > max_iter {
            break;
        }
        if st.eta == 0.0 {
            status = Status::Converged;
            break;
        }
        if let Err(k) = st.step(a) {
            status = Status::Breakdown(k);
            break;
        }
        history.push(st.eta.sqrt());
        true_res.push(norm2(&residual(a, b, &st.x)));
    }
    let mut rep = SolveReport::new(st.x, history, status).with_extra("true_residual", true_res);
    rep.scalars.insert("lambda_hat", st.lambda_hat);
    rep.scalars.insert("mu", st.mu);
    rep.scalars.insert("d_hat", st.d_hat);
    if !bounds.is_empty() {
        rep.scalars.insert("error_bound", bounds);
    }
    Ok(rep)
}

/// Efficient CG: `p_1 = r_0`, `λ̂_i = η_{i-1}/d̂_i`, `μ_i = η_i/η_{i-1}`,
/// `p_{i+1} = r_i + μ_i p_i`. History holds the recurrence residual norms,
/// `extra` the recomputed `‖b - A x_i‖`.
pub fn cg<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    cg_run(a, b, x0, &StopRule::Residual(opts.tol), None, opts.max_iter_or(a.dim()))
}

/// Warm-up length used when `λ_min` has to be estimated.
pub const WARMUP_ITERS: usize = 25;

/// CG stopped on `‖r_i‖ / λ_min ≤ tol`. Without a supplied `λ_min` the
/// smallest eigenvalue of `T̄` after a warm-up run is used; it
/// over-estimates `λ_min(A)`, so the bound is then optimistic.
pub fn cg_error_bound<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    lambda_min: Option<f64>,
    max_iter: usize,
) -> Result<SolveReport> {
    let lmin = match lambda_min {
        Some(l) => l,
        None => cg_extreme_estimates(a, b, x0, WARMUP_ITERS)?.0,
    };
    cg_run(a, b, x0, &StopRule::ErrorBound { tol }, Some(lmin), max_iter)
}

/// `T̄_k` from CG scalars: `a_1 = d̂_1/‖r_0‖²`,
/// `a_{i+1} = (d̂_{i+1} + d̂_i μ_i²)/‖r_i‖²`, off-diagonals
/// `-d̂_i μ_i/(‖r_{i-1}‖ ‖r_i‖)`. Stops at the first vanishing residual.
pub fn assemble_tbar_from(d_hat: &[f64], mu: &[f64], r_norms: &[f64]) -> Result<TridiagSym> {
    if d_hat.is_empty() {
        return Err(invalid("no CG iterations recorded"));
    }
    let mut k = d_hat.len().min(r_norms.len());
    if let Some(z) = r_norms.iter().position(|&r| r == 0.0) {
        k = k.min(z.max(1));
    }
    let mut diag = Vec::with_capacity(k);
    let mut off = Vec::with_capacity(k.saturating_sub(1));
    diag.push(d_hat[0] / (r_norms[0] * r_norms[0]));
    for i in 1..k {
        // 0-based: d_hat[i] = d̂_{i+1}, mu[i-1] = μ_i, r_norms[i] = ‖r_i‖
        let m = mu[i - 1];
        diag.push((d_hat[i] + d_hat[i - 1] * m * m) / (r_norms[i] * r_norms[i]));
        off.push(-d_hat[i - 1] * m / (r_norms[i - 1] * r_norms[i]));
    }
    Ok(TridiagSym::new(diag, off))
}

/// `T̄` from a report produced by [`cg`].
pub fn assemble_tbar(rep: &SolveReport) -> Result<TridiagSym> {
    assemble_tbar_from(rep.scalar("d_hat"), rep.scalar("mu"), &rep.history)
}

/// Sturm extremes of `T̄` after `iters` CG steps (fewer on early exit).
pub fn cg_extreme_estimates<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], iters: usize) -> Result<(f64, f64)> {
    let rep = cg_run(a, b, x0, &StopRule::Residual(Tolerance::abs(0.0)), None, iters)?;
    if let Status::Breakdown(k) = rep.status {
        return Err(invalid(format!("CG warm-up broke down: {k}")));
    }
    Ok(sturm_extreme_eigs(&assemble_tbar(&rep)?, STURM_TOL))
}

/// `4 ((√κ - 1)/(√κ + 1))^{2i}`.
pub fn convergence_bound(kappa: f64, i: usize) -> Result<f64> {
    if !(kappa >= 1.0) {
        return Err(invalid(format!("condition number must be >= 1, got {kappa}")));
    }
    let s = kappa.sqrt();
    Ok(4.0 * ((s - 1.0) / (s + 1.0)).powi(2 * i as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sub, symmetric_extreme_eigs, DenseMatrix, LuFactor};
    use crate::problems::{hilbert, poisson_test};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_spd(seed: u64, n: usize) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = DenseMatrix::zeros(n, n);
        for v in g.data.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        DenseMatrix::identity(n).add_scaled(2.0 / n as f64, &g.transpose().matmul(&g))
    }

    fn rhs(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn energy(a: &DenseMatrix, x: &[f64], xs: &[f64]) -> f64 {
        let e = sub(x, xs);
        dot(&e, &a.matvec(&e))
    }

    #[test]
    fn factorization_identity_terminates() {
        let i = DenseMatrix::identity(4);
        let f = factorize_aut(&i, &i, &[1.0, 2.0, 0.0, -1.0], 4);
        assert_eq!(f.u.len(), 1);
        assert_eq!(f.gamma, vec![1.0]);
        assert!(f.terminated);
    }

    #[test]
    fn factorization_a_orthogonal() {
        let a = random_spd(11, 6);
        let f = factorize_aut(&a, &a, &rhs(6, 1), 6);
        for i in 0..f.u.len() {
            for j in 0..i {
                let aij = dot(&f.u[i], &a.matvec(&f.u[j]));
                let ni = dot(&f.u[i], &a.matvec(&f.u[i])).sqrt();
                let nj = dot(&f.u[j], &a.matvec(&f.u[j])).sqrt();
                assert!(aij.abs() <= 1e-8 * ni * nj);
            }
        }
        for i in 0..f.beta.len() {
            assert!((f.beta[i] - f.d[i + 1] / f.d[i]).abs() <= 1e-15 * f.beta[i].abs());
        }
    }

    #[test]
    fn factorization_matches_dense_tridiagonalization() {
        let a = DenseMatrix::from_diag(&[1.0, 2.0, 3.0]);
        let i = DenseMatrix::identity(3);
        let f = factorize_aut(&a, &i, &[1.0, 1.0, 1.0], 3);
        assert_eq!(f.u.len(), 3);
        // T is similar to A: its characteristic polynomial has roots 1,2,3
        let t = DenseMatrix::from_rows(&[
            vec![f.gamma[0], f.beta[0], 0.0],
            vec![1.0, f.gamma[1], f.beta[1]],
            vec![0.0, 1.0, f.gamma[2]],
        ]);
        for lam in [1.0, 2.0, 3.0] {
            let m = t.add_scaled(-lam, &i);
            let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)]) - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)]);
            assert!(det.abs() <= 1e-12);
        }
        assert!((f.gamma[0] - 2.0).abs() <= 1e-15);
        // A U = U T columnwise
        for k in 0..3 {
            let mut rhs = f.u[k].clone();
            for v in rhs.iter_mut() {
                *v *= f.gamma[k];
            }
            if k > 0 {
                axpy(f.beta[k - 1], &f.u[k - 1], &mut rhs);
            }
            let next = if k + 1 < 3 { f.u[k + 1].clone() } else { f.u_next.clone() };
            axpy(1.0, &next, &mut rhs);
            assert!(norm2(&sub(&a.matvec(&f.u[k]), &rhs)) <= 1e-13);
        }
    }

    #[test]
    fn identity_in_one_step() {
        let i = DenseMatrix::identity(5);
        let b = rhs(5, 3);
        for rep in [
            cg_basic(&i, &b, &[0.0; 5], &SolverOptions::default()).unwrap(),
            cg(&i, &b, &[0.0; 5], &SolverOptions::default()).unwrap(),
        ] {
            assert_eq!(rep.iterations, 1);
            assert!(rep.converged());
        }
    }

    #[test]
    fn finite_termination() {
        for seed in 0..5 {
            let a = random_spd(seed, 12);
            let xs = rhs(12, seed + 100);
            let b = a.matvec(&xs);
            let opts = SolverOptions::new(Tolerance::abs(0.0), 12);
            for rep in [cg_basic(&a, &b, &[0.0; 12], &opts).unwrap(), cg(&a, &b, &[0.0; 12], &opts).unwrap()] {
                assert!(rep.iterations <= 12);
                let err = norm2(&sub(&rep.x, &xs));
                assert!(err <= 1e-10 * norm2(&xs).max(1.0), "seed={seed} err={err}");
            }
        }
    }

    #[test]
    fn not_spd_breakdown() {
        let a = DenseMatrix::from_diag(&[1.0, -1.0]);
        let b = [1.0, 1.0];
        let r = cg(&a, &b, &[0.0; 2], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, Status::Breakdown(BreakdownKind::NotSpd));
        let r = cg_basic(&a, &b, &[0.0; 2], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, Status::Breakdown(BreakdownKind::NotSpd));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn two_formulations_agree(seed in 0u64..10_000) {
            let a = random_spd(seed, 8);
            let b = rhs(8, seed ^ 7);
            for k in 1..=8 {
                let opts = SolverOptions::new(Tolerance::abs(0.0), k);
                let x1 = cg_basic(&a, &b, &[0.0; 8], &opts).unwrap().x;
                let x2 = cg(&a, &b, &[0.0; 8], &opts).unwrap().x;
                prop_assert!(norm2(&sub(&x1, &x2)) <= 1e-11 * norm2(&x2).max(1.0));
            }
        }

        #[test]
        fn orthogonality_and_conjugacy(seed in 0u64..10_000) {
            let a = random_spd(seed, 15);
            let b = rhs(15, seed);
            let mut st = CgState::new(&a, &b, &[0.0; 15]);
            let mut rs = vec![st.r.clone()];
            let mut ps = vec![st.p.clone()];
            let mut krylov = vec![st.r.clone()];
            for _ in 0..10 {
                st.step(&a).unwrap();
                rs.push(st.r.clone());
                ps.push(st.p.clone());
                let last = krylov.last().unwrap().clone();
                krylov.push(a.matvec(&last));
            }
            for i in 0..rs.len() {
                for j in 0..i {
                    prop_assert!(dot(&rs[i], &rs[j]).abs() <= 1e-8 * norm2(&rs[i]) * norm2(&rs[j]));
                    let pap = dot(&ps[i], &a.matvec(&ps[j]));
                    let s = dot(&ps[i], &a.matvec(&ps[i])).sqrt() * dot(&ps[j], &a.matvec(&ps[j])).sqrt();
                    prop_assert!(pap.abs() <= 1e-8 * s);
                }
            }
            // r_i lies in span{r_0, A r_0, ..., A^i r_0}
            for i in 1..5 {
                let mut m = DenseMatrix::zeros(15, i + 1);
                for (c, v) in krylov.iter().take(i + 1).enumerate() {
                    let nv = norm2(v);
                    for row in 0..15 {
                        m[(row, c)] = v[row] / nv;
                    }
                }
                let gram = m.transpose().matmul(&m);
                let coef = LuFactor::new(&gram).unwrap().solve(&m.transpose().matvec(&rs[i]));
                let proj = m.matvec(&coef);
                prop_assert!(norm2(&sub(&proj, &rs[i])) <= 1e-6 * norm2(&rs[i]).max(1e-300));
            }
        }

        #[test]
        fn energy_monotone_and_bounded(seed in 0u64..10_000) {
            let a = random_spd(seed, 10);
            let xs = rhs(10, seed + 1);
            let b = a.matvec(&xs);
            let (lo, hi) = symmetric_extreme_eigs(&a);
            let kappa = hi / lo;
            let e0 = energy(&a, &[0.0; 10], &xs);
            let mut prev = e0;
            for i in 1..=10 {
                let x = cg(&a, &b, &[0.0; 10], &SolverOptions::new(Tolerance::abs(0.0), i)).unwrap().x;
                let e = energy(&a, &x, &xs);
                prop_assert!(e <= prev * (1.0 + 1e-10) + 1e-24);
                prop_assert!(e <= convergence_bound(kappa, i).unwrap() * e0 * (1.0 + 1e-8) + 1e-24);
                prev = e;
            }
        }
    }

    #[test]
    fn tbar_examples() {
        let a = DenseMatrix::from_diag(&[1.0, 4.0]);
        let b = [1.0, 1.0];
        let one = cg(&a, &b, &[0.0; 2], &SolverOptions::new(Tolerance::abs(0.0), 1)).unwrap();
        let t1 = assemble_tbar(&one).unwrap();
        assert_eq!(t1.len(), 1);
        assert!((t1.diag[0] - dot(&b, &a.matvec(&b)) / dot(&b, &b)).abs() <= 1e-15);
        let two = cg(&a, &b, &[0.0; 2], &SolverOptions::new(Tolerance::abs(0.0), 2)).unwrap();
        let t2 = assemble_tbar(&two).unwrap();
        let (lo, hi) = sturm_extreme_eigs(&t2, 1e-13);
        assert!((lo - 1.0).abs() <= 1e-10 && (hi - 4.0).abs() <= 1e-10);
        assert!(assemble_tbar_from(&[], &[], &[1.0]).is_err());
    }

    #[test]
    fn tbar_extremes_interlace() {
        let p = poisson_test(8);
        let rep = cg(&p.a, &p.b, &[0.0; 64], &SolverOptions::new(Tolerance::abs(0.0), 30)).unwrap();
        let (amin, amax) = symmetric_extreme_eigs(&p.a.to_dense());
        let mut last = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 1..=20 {
            let t = assemble_tbar_from(&rep.scalar("d_hat")[..k], &rep.scalar("mu")[..k], &rep.history[..=k]).unwrap();
            let (lo, hi) = sturm_extreme_eigs(&t, 1e-13);
            assert!(lo <= last.0 + 1e-9 && hi >= last.1 - 1e-9);
            assert!(lo >= amin - 1e-9 && hi <= amax + 1e-9);
            last = (lo, hi);
        }
    }

    #[test]
    fn poisson_twenty_estimates() {
        let p = poisson_test(20);
        let (lo, hi) = cg_extreme_estimates(&p.a, &p.b, &[0.0; 400], 25).unwrap();
        assert!((lo - 4.4682e-2).abs() <= 2e-3, "{lo}");
        assert!((hi - 7.8636).abs() <= 2e-3, "{hi}");
    }

    #[test]
    fn stopping_examples() {
        let ctx = StopContext { b_norm: 1.0, r0_norm: 1.0, lambda_min: None };
        let mut r = vec![0.0; 3];
        r[0] = 1e-7;
        assert!(stopping_check(&r, &StopRule::Residual(Tolerance::rel_to_b(1e-6)), &ctx).unwrap().stop);
        let ctx2 = StopContext { lambda_min: Some(4.4677e-2), ..ctx };
        r[0] = 1e-3;
        let d = stopping_check(&r, &StopRule::ErrorBound { tol: 1e-6 }, &ctx2).unwrap();
        assert!(!d.stop);
        assert!((d.error_bound.unwrap() - 2.2383e-2).abs() < 1e-5);
        let bad = StopContext { lambda_min: Some(0.0), ..ctx };
        assert!(stopping_check(&r, &StopRule::ErrorBound { tol: 1.0 }, &bad).is_err());
        assert!(stopping_check(&r, &StopRule::ErrorBound { tol: 1.0 }, &ctx).is_err());
    }

    #[test]
    fn error_bound_stopping_guarantees_error() {
        let p = poisson_test(10);
        let xs = LuFactor::new(&p.a.to_dense()).unwrap().solve(&p.b);
        let lmin = symmetric_extreme_eigs(&p.a.to_dense()).0;
        let rep = cg_error_bound(&p.a, &p.b, &[0.0; 100], 1e-8, Some(lmin), 500).unwrap();
        assert!(rep.converged());
        assert!(norm2(&sub(&rep.x, &xs)) <= 1e-8 * 1.01);
        let est = cg_error_bound(&p.a, &p.b, &[0.0; 100], 1e-8, None, 500).unwrap();
        assert!(est.converged());
    }

    #[test]
    fn hilbert_conditioning() {
        let shifted = hilbert(10, 1.0);
        let rep = cg(&shifted.a, &shifted.b, &[0.0; 10], &SolverOptions::new(Tolerance::abs(1e-12), 50)).unwrap();
        assert!(rep.converged() && rep.iterations <= 10, "{}", rep.iterations);
        let (lo, hi) = symmetric_extreme_eigs(&shifted.a.to_dense());
        assert!(convergence_bound(hi / lo, 6).unwrap() < 1e-6);

        let h = hilbert(10, 0.0);
        let rep = cg(&h.a, &h.b, &[0.0; 10], &SolverOptions::new(Tolerance::abs(1e-10), 200)).unwrap();
        assert!(rep.converged());
        let r = norm2(&residual(&h.a, &h.b, &rep.x));
        let e = norm2(&sub(&rep.x, h.x_true.as_ref().unwrap()));
        assert!(e / r >= 1e4, "e={e} r={r}");
    }

    #[test]
    fn bound_examples() {
        assert_eq!(convergence_bound(1.0, 3).unwrap(), 0.0);
        let f = convergence_bound(2.8, 6).unwrap();
        assert!(f > 1e-7 && f < 3e-7, "{f}");
        assert!(convergence_bound(0.5, 1).is_err());
    }
}
