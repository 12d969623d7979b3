//! Splitting iterations `M x_{k+1} = N x_k + b` in residual form:
//! Jacobi, Gauss-Seidel, SOR, SSOR and the block Jacobi / Gauss-Seidel
//! variants, plus iteration matrices and structural diagnostics.

use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, norm2, residual, DenseMatrix, LinearOperator, LuFactor};
use crate::report::{BreakdownKind, SolveReport, SolverOptions, Status};
use crate::sparse::{RowCompressed, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StationaryMethod {
    Jacobi,
    GaussSeidel,
    Sor(f64),
    Ssor(f64),
    BlockJacobi(usize),
    BlockGs(usize),
}

impl StationaryMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Jacobi => "jacobi",
            Self::GaussSeidel => "gauss_seidel",
            Self::Sor(_) => "sor",
            Self::Ssor(_) => "ssor",
            Self::BlockJacobi(_) => "block_jacobi",
            Self::BlockGs(_) => "block_gs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConfig {
    pub method: StationaryMethod,
    pub opts: SolverOptions,
}

/// `A = M - N` for one of the supported methods. `M` is never assembled;
/// solves are sweeps over the row storage of `A`.
#[derive(Debug, Clone)]
pub struct Splitting {
    a: RowCompressed,
    method: StationaryMethod,
    diag: Vec<f64>,
    /// SSOR only: `sqrt(d_i)`.
    sqrt_diag: Vec<f64>,
    blocks: Vec<LuFactor>,
    block_size: usize,
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega < 2.0 {
        Ok(())
    } else {
        Err(invalid(format!("relaxation parameter must lie in (0,2), got {omega}")))
    }
}

pub fn split(a: &SparseMatrix, method: StationaryMethod) -> Result<Splitting> {
    let rows = a.to_row();
    let n = rows.n;
    let diag = a.diagonal();
    let mut s = Splitting { a: rows, method, diag, sqrt_diag: Vec::new(), blocks: Vec::new(), block_size: 1 };
    match method {
        StationaryMethod::Jacobi | StationaryMethod::GaussSeidel | StationaryMethod::Sor(_) | StationaryMethod::Ssor(_) => {
            if let Some(i) = s.diag.iter().position(|&d| d == 0.0) {
                return Err(Error::ZeroDiagonal(i));
            }
        }
        StationaryMethod::BlockJacobi(bs) | StationaryMethod::BlockGs(bs) => {
            if bs == 0 || n % bs != 0 {
                return Err(invalid(format!("block size {bs} does not divide n={n}")));
            }
            s.block_size = bs;
            for k in 0..n / bs {
                let mut blk = DenseMatrix::zeros(bs, bs);
                for p in 0..bs {
                    for (j, v) in s.a.row(k * bs + p) {
                        if j / bs == k {
                            blk[(p, j - k * bs)] += v;
                        }
                    }
                }
                s.blocks.push(LuFactor::new(&blk).map_err(|_| Error::SingularBlock(k))?);
            }
        }
    }
    match method {
        StationaryMethod::Sor(w) => check_omega(w)?,
        StationaryMethod::Ssor(w) => {
            check_omega(w)?;
            if let Some(i) = s.diag.iter().position(|&d| d < 0.0) {
                return Err(Error::NegativeDiagonal(i));
            }
            s.sqrt_diag = s.diag.iter().map(|d| d.sqrt()).collect();
        }
        _ => {}
    }
    Ok(s)
}

impl Splitting {
    pub fn n(&self) -> usize {
        self.a.n
    }

    pub fn method(&self) -> StationaryMethod {
        self.method
    }

    pub fn matrix(&self) -> &RowCompressed {
        &self.a
    }

    /// Lower sweep `u_i = w (r_i - sum_{j<i} a_ij u_j) / d_i`.
    fn forward_sweep(&self, r: &[f64], w: f64) -> Vec<f64> {
        let mut u = vec![0.0; self.n()];
        for i in 0..self.n() {
            let mut s = r[i];
            for (j, v) in self.a.row(i) {
                if j < i {
                    s -= v * u[j];
                }
            }
            u[i] = w * s / self.diag[i];
        }
        u
    }

    fn block_solve(&self, r: &[f64], lower: bool) -> Vec<f64> {
        let bs = self.block_size;
        let mut u = vec![0.0; self.n()];
        for (k, lu) in self.blocks.iter().enumerate() {
            let mut rhs = r[k * bs..(k + 1) * bs].to_vec();
            if lower {
                for (p, rp) in rhs.iter_mut().enumerate() {
                    for (j, v) in self.a.row(k * bs + p) {
                        if j < k * bs {
                            *rp -= v * u[j];
                        }
                    }
                }
            }
            u[k * bs..(k + 1) * bs].copy_from_slice(&lu.solve(&rhs));
        }
        u
    }

    /// SSOR half-steps on `Â = D^{-1/2} A D^{-1/2}`; input and output in the
    /// original variables.
    fn ssor_solve(&self, r: &[f64], w: f64) -> Vec<f64> {
        let n = self.n();
        let sd = &self.sqrt_diag;
        let rh: Vec<f64> = (0..n).map(|i| r[i] / sd[i]).collect();
        let ahat = |i: usize, j: usize, v: f64| v / (sd[i] * sd[j]);
        let mut u1 = vec![0.0; n];
        for i in 0..n {
            let mut s = rh[i];
            for (j, v) in self.a.row(i) {
                if j < i {
                    s -= ahat(i, j, v) * u1[j];
                }
            }
            u1[i] = w * s;
        }
        let mut t = rh;
        for (i, ti) in t.iter_mut().enumerate() {
            for (j, v) in self.a.row(i) {
                *ti -= ahat(i, j, v) * u1[j];
            }
        }
        // M̂ᵀ solve: backward sweep over the strict upper part of Â
        let mut u2 = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = t[i];
            for (j, v) in self.a.row(i) {
                if j > i {
                    s -= ahat(i, j, v) * u2[j];
                }
            }
            u2[i] = w * s;
        }
        (0..n).map(|i| (u1[i] + u2[i]) / sd[i]).collect()
    }

    /// Solves `M u = r`. For SSOR this is the combined two-half-step
    /// correction.
    pub fn m_solve(&self, r: &[f64]) -> Vec<f64> {
        match self.method {
            StationaryMethod::Jacobi => r.iter().zip(&self.diag).map(|(ri, d)| ri / d).collect(),
            StationaryMethod::GaussSeidel => self.forward_sweep(r, 1.0),
            StationaryMethod::Sor(w) => self.forward_sweep(r, w),
            StationaryMethod::Ssor(w) => self.ssor_solve(r, w),
            StationaryMethod::BlockJacobi(_) => self.block_solve(r, false),
            StationaryMethod::BlockGs(_) => self.block_solve(r, true),
        }
    }

    /// `y = M x`; `None` for SSOR, whose `M` is only available implicitly.
    pub fn m_apply(&self, x: &[f64]) -> Option<Vec<f64>> {
        if let StationaryMethod::Ssor(_) = self.method {
            return None;
        }
        let n = self.n();
        let bs = self.block_size;
        let mut y = vec![0.0; n];
        for (i, yi) in y.iter_mut().enumerate() {
            let keep = |j: usize| match self.method {
                StationaryMethod::Jacobi => j == i,
                StationaryMethod::GaussSeidel | StationaryMethod::Sor(_) => j <= i,
                StationaryMethod::BlockJacobi(_) => j / bs == i / bs,
                StationaryMethod::BlockGs(_) => j / bs <= i / bs,
                StationaryMethod::Ssor(_) => false,
            };
            for (j, v) in self.a.row(i) {
                if keep(j) && !(j == i && matches!(self.method, StationaryMethod::Sor(_))) {
                    *yi += v * x[j];
                }
            }
            if let StationaryMethod::Sor(w) = self.method {
                *yi += self.diag[i] * x[i] / w;
            }
        }
        Some(y)
    }

    /// `y = N x = M x - A x`.
    pub fn n_apply(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut y = self.m_apply(x)?;
        let mut ax = vec![0.0; self.n()];
        self.a.matvec(x, &mut ax);
        axpy(-1.0, &ax, &mut y);
        Some(y)
    }
}

/// `v ↦ M⁻¹N v = v - M⁻¹A v`.
#[derive(Debug, Clone)]
pub struct IterationMatrix {
    pub split: Splitting,
}

impl LinearOperator for IterationMatrix {
    fn dim(&self) -> usize {
        self.split.n()
    }

    fn apply(&self, v: &[f64], y: &mut [f64]) {
        let mut av = vec![0.0; v.len()];
        self.split.a.matvec(v, &mut av);
        let u = self.split.m_solve(&av);
        for i in 0..v.len() {
            y[i] = v[i] - u[i];
        }
    }
}

pub fn iteration_matrix_applier(a: &SparseMatrix, method: StationaryMethod) -> Result<IterationMatrix> {
    Ok(IterationMatrix { split: split(a, method)? })
}

/// Residual-form loop shared by every splitting.
pub(crate) fn run_splitting(s: &Splitting, b: &[f64], x0: &[f64], opts: &SolverOptions) -> SolveReport {
    let n = s.n();
    let mut x = x0.to_vec();
    let mut r = residual(&s.a_operator(), b, &x);
    let r0 = norm2(&r);
    let thr = opts.tol.threshold(norm2(b), r0);
    let max_iter = opts.max_iter_or(100 * n);
    let mut history = vec![r0];
    let mut status = Status::MaxIter;
    for _ in 0..=max_iter {
        if *history.last().unwrap() <= thr {
            status = Status::Converged;
            break;
        }
        if history.len() > max_iter {
            break;
        }
        let u = s.m_solve(&r);
        if u.iter().any(|v| !v.is_finite()) {
            status = Status::Breakdown(BreakdownKind::MSolve);
            break;
        }
        axpy(1.0, &u, &mut x);
        r = residual(&s.a_operator(), b, &x);
        history.push(norm2(&r));
    }
    SolveReport::new(x, history, status)
}

struct RowOp<'a>(&'a RowCompressed);

impl LinearOperator for RowOp<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.matvec(x, y)
    }
}

impl Splitting {
    fn a_operator(&self) -> RowOp<'_> {
        RowOp(&self.a)
    }
}

fn check_rhs(a: &SparseMatrix, b: &[f64], x0: &[f64]) -> Result<()> {
    for v in [b, x0] {
        if v.len() != a.n() {
            return Err(Error::DimensionMismatch { expected: a.n(), got: v.len() });
        }
    }
    Ok(())
}

/// `r_k = b - A x_k`, `M u_k = r_k`, `x_{k+1} = x_k + u_k`; history holds
/// true residual norms.
pub fn iterate(a: &SparseMatrix, b: &[f64], cfg: &StationaryConfig, x0: &[f64]) -> Result<SolveReport> {
    check_rhs(a, b, x0)?;
    if let StationaryMethod::Ssor(w) = cfg.method {
        return ssor_iterate(a, b, w, &cfg.opts, x0);
    }
    let s = split(a, cfg.method)?;
    Ok(run_splitting(&s, b, x0, &cfg.opts))
}

/// SSOR on the symmetrically scaled system. A negative diagonal entry is
/// reported as a breakdown.
pub fn ssor_iterate(a: &SparseMatrix, b: &[f64], omega: f64, opts: &SolverOptions, x0: &[f64]) -> Result<SolveReport> {
    check_rhs(a, b, x0)?;
    check_omega(omega)?;
    if !a.is_symmetric() {
        return Err(invalid("SSOR needs a symmetric matrix"));
    }
    match split(a, StationaryMethod::Ssor(omega)) {
        Ok(s) => Ok(run_splitting(&s, b, x0, opts)),
        Err(Error::NegativeDiagonal(_)) => {
            let r0 = norm2(&residual(a, b, x0));
            Ok(SolveReport::new(x0.to_vec(), vec![r0], Status::Breakdown(BreakdownKind::NegativeDiagonal)))
        }
        Err(e) => Err(e),
    }
}

/// `ω* = 1 + (ρ_J / (1 + sqrt(1 - ρ_J²)))²`.
pub fn optimal_omega_estimate(rho_j: f64) -> Result<f64> {
    if !(rho_j > 0.0 && rho_j < 1.0) {
        return Err(invalid(format!("rho_j must lie in (0,1), got {rho_j}")));
    }
    let rho_gs = rho_j * rho_j;
    Ok(1.0 + (rho_j / (1.0 + (1.0 - rho_gs).sqrt())).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diagnostics {
    pub diag_dominant_rows: bool,
    pub diag_dominant_cols: bool,
    /// `diag > 0`, `offdiag <= 0`: necessary for an M-matrix, not sufficient.
    pub m_matrix_sign_pattern: bool,
    pub symmetric: bool,
}

/// Weak diagonal dominance by rows and columns, sign pattern, symmetry.
pub fn diagnostics(a: &SparseMatrix) -> Diagnostics {
    let n = a.n();
    let entries = a.to_triplets().consolidated();
    let mut diag = vec![0.0; n];
    let mut row_off = vec![0.0; n];
    let mut col_off = vec![0.0; n];
    let mut sign = true;
    for &(i, j, v) in &entries {
        if i == j {
            diag[i] = v;
        } else {
            row_off[i] += v.abs();
            col_off[j] += v.abs();
            sign &= v <= 0.0;
        }
    }
    sign &= diag.iter().all(|&d| d > 0.0);
    Diagnostics {
        diag_dominant_rows: (0..n).all(|i| diag[i].abs() >= row_off[i]),
        diag_dominant_cols: (0..n).all(|i| diag[i].abs() >= col_off[i]),
        m_matrix_sign_pattern: sign,
        symmetric: a.is_symmetric(),
    }
}
