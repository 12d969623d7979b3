//! Chebyshev polynomials and the Chebyshev semi-iterative accelerator over a
//! splitting.

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm2, residual, spectral_radius_estimate};
use crate::report::{BreakdownKind, SolveReport, SolverOptions, Status};
use crate::sparse::SparseMatrix;
use crate::stationary::{iteration_matrix_applier, Splitting, StationaryMethod};

/// First-kind `T_k(x)`: trigonometric form on `[-1, 1]`, hyperbolic outside.
pub fn cheb_t(k: usize, x: f64) -> f64 {
    let kf = k as f64;
    if x.abs() <= 1.0 {
        (kf * x.acos()).cos()
    } else if x > 1.0 {
        (kf * x.acosh()).cosh()
    } else {
        let v = (kf * (-x).acosh()).cosh();
        if k % 2 == 0 {
            v
        } else {
            -v
        }
    }
}

/// Second-kind `U_k(x)` by `U_{k+1} = 2x U_k - U_{k-1}`, `U_{-1} = 0`, `U_0 = 1`.
pub fn cheb_u(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..k {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Maps `[α, β]` onto `[-1, 1]`: `μ(x) = (2x - α - β)/(β - α)`.
pub fn mu(alpha: f64, beta: f64, x: f64) -> f64 {
    (2.0 * x - alpha - beta) / (beta - alpha)
}

fn check_interval(alpha: f64, beta: f64) -> Result<()> {
    if -1.0 < alpha && alpha < beta && beta < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("need -1 < alpha < beta < 1, got [{alpha}, {beta}]")))
    }
}

/// `1 / T_j(μ(1))`, the minimax error factor after `j` steps.
pub fn minimax_error_bound(alpha: f64, beta: f64, j: usize) -> Result<f64> {
    check_interval(alpha, beta)?;
    let mu1 = 1.0 + 2.0 * (1.0 - beta) / (beta - alpha);
    Ok(1.0 / cheb_t(j, mu1))
}

/// Running `γ_k = T_k(μ(1))` of the semi-iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gammas: Vec<f64>,
}

impl ChebCoeffs {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_interval(alpha, beta)?;
        Ok(Self { alpha, beta, gammas: vec![1.0, mu(alpha, beta, 1.0)] })
    }

    pub fn mu1(&self) -> f64 {
        self.gammas[1]
    }

    fn push_next(&mut self) -> f64 {
        let k = self.gammas.len() - 1;
        let g = 2.0 * self.mu1() * self.gammas[k] - self.gammas[k - 1];
        self.gammas.push(g);
        g
    }
}

/// `[-ρ, ρ]` with `ρ` estimated for the method's iteration matrix.
pub fn estimate_interval(a: &SparseMatrix, method: StationaryMethod) -> Result<(f64, f64)> {
    let g = iteration_matrix_applier(a, method)?;
    let rho = spectral_radius_estimate(&g, a.n(), 2000);
    if rho >= 1.0 {
        return Err(invalid(format!("base iteration does not converge (rho ~ {rho})")));
    }
    Ok((-rho, rho))
}

/// Consecutive increases after which the run is declared divergent.
pub const DIVERGENCE_WINDOW: usize = 50;

/// Chebyshev acceleration of `base`. The first step is a plain splitting
/// step; afterwards
/// `x_{k+1} = (γ_k/γ_{k+1}) (4/(β-α)) z_k - (γ_k/γ_{k+1}) (2(α+β)/(β-α)) x_k - (γ_{k-1}/γ_{k+1}) x_{k-1}`
/// with `M z_k = N x_k + b`.
pub fn semi_iterative(
    base: &Splitting,
    b: &[f64],
    alpha: f64,
    beta: f64,
    opts: &SolverOptions,
    x0: &[f64],
) -> Result<SolveReport> {
    let n = base.n();
    for v in [b, x0] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let mut coeffs = ChebCoeffs::new(alpha, beta)?;
    let a = ARef(base);
    // M z = N x + b  ⇔  z = x + M⁻¹(b - A x)
    let step = |x: &[f64]| -> Option<(Vec<f64>, f64)> {
        let r = residual(&a, b, x);
        let u = base.m_solve(&r);
        if u.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some((x.iter().zip(&u).map(|(xi, ui)| xi + ui).collect(), norm2(&r)))
    };
    let r0 = norm2(&residual(&a, b, x0));
    let thr = opts.tol.threshold(norm2(b), r0);
    let max_iter = opts.max_iter_or(100 * n);
    let mut history = vec![r0];
    if r0 <= thr || max_iter == 0 {
        let st = if r0 <= thr { Status::Converged } else { Status::MaxIter };
        return Ok(SolveReport::new(x0.to_vec(), history, st));
    }
    let mut x_prev = x0.to_vec();
    let mut x = match step(x0) {
        Some((x1, _)) => x1,
        None => return Ok(SolveReport::new(x0.to_vec(), history, Status::Breakdown(BreakdownKind::MSolve))),
    };
    let c1 = 4.0 / (beta - alpha);
    let c2 = 2.0 * (alpha + beta) / (beta - alpha);
    let mut rising = 0;
    loop {
        let (z, rk) = match step(&x) {
            Some(v) => v,
            None => return Ok(SolveReport::new(x, history, Status::Breakdown(BreakdownKind::MSolve))),
        };
        if rk > *history.last().unwrap() {
            rising += 1;
        } else {
            rising = 0;
        }
        history.push(rk);
        if rk <= thr {
            return Ok(SolveReport::new(x, history, Status::Converged));
        }
        if rising >= DIVERGENCE_WINDOW {
            return Ok(SolveReport::new(x, history, Status::Breakdown(BreakdownKind::IntervalMismatch)));
        }
        if history.len() > max_iter {
            return Ok(SolveReport::new(x, history, Status::MaxIter));
        }
        let k = coeffs.gammas.len() - 1;
        let g_next = coeffs.push_next();
        let (gk, gkm1) = (coeffs.gammas[k], coeffs.gammas[k - 1]);
        let next: Vec<f64> = (0..n)
            .map(|i| gk / g_next * (c1 * z[i] - c2 * x[i]) - gkm1 / g_next * x_prev[i])
            .collect();
        x_prev = std::mem::replace(&mut x, next);
    }
}

struct ARef<'a>(&'a Splitting);

impl crate::linalg::LinearOperator for ARef<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.matrix().matvec(x, y)
    }
}
