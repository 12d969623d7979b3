//! Method and preconditioner selection by name, shared by the CLI and the
//! C interface.
//!
//! Specs are comma-separated, `name[,key=value...]`, e.g. `gmres,restart=20`,
//! `sor,omega=1.5`, `poly,m=9`.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::chebyshev::{estimate_interval, semi_iterative};
use crate::error::{invalid, Error, Result};
use crate::krylov_nonsymmetric::{bicg, bicgstab, bidiag_solve, cgs, gmres, precondition_rhs, qmr, qmr_alt, LeftPreconditioned};
use crate::krylov_spd::{cg, cg_extreme_estimates, WARMUP_ITERS};
use crate::krylov_symmetric::minres;
use crate::linalg::{symmetric_extreme_eigs, LinearOperator};
use crate::preconditioners::{
    block_precond, ic0_pentadiagonal, mic_pentadiagonal, pcg, pcg_poly, poly_precond_build, JacobiPrecond,
    PolyOperator, SigmaRule,
};
use crate::report::{SolveReport, SolverOptions};
use crate::sparse::SparseMatrix;
use crate::stationary::{iterate, split, StationaryConfig, StationaryMethod};

fn parse_params(s: &str) -> Result<(String, BTreeMap<String, String>)> {
    let mut parts = s.split(',').map(str::trim);
    let name = parts.next().unwrap_or("").to_ascii_lowercase();
    if name.is_empty() {
        return Err(invalid("empty spec"));
    }
    let mut params = BTreeMap::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got `{p}`")))?;
        params.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    Ok((name, params))
}

fn take<T: FromStr>(params: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match params.remove(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| invalid(format!("bad value for {key}: `{v}`"))),
    }
}

fn no_leftovers(name: &str, params: &BTreeMap<String, String>) -> Result<()> {
    match params.keys().next() {
        None => Ok(()),
        Some(k) => Err(invalid(format!("unknown parameter `{k}` for {name}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebBase {
    Jacobi,
    Ssor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    Jacobi,
    GaussSeidel,
    Sor { omega: f64 },
    Ssor { omega: f64 },
    /// Block size `None` means the detected band offset.
    BlockJacobi { block: Option<usize> },
    BlockGs { block: Option<usize> },
    Chebyshev { base: ChebBase, omega: f64 },
    Cg,
    Minres,
    Gmres { restart: Option<usize> },
    Bicg,
    Qmr,
    QmrAlt,
    Bidiag,
    Cgs,
    Bicgstab,
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Jacobi => "jacobi",
            Self::GaussSeidel => "gauss-seidel",
            Self::Sor { .. } => "sor",
            Self::Ssor { .. } => "ssor",
            Self::BlockJacobi { .. } => "block-jacobi",
            Self::BlockGs { .. } => "block-gs",
            Self::Chebyshev { .. } => "chebyshev",
            Self::Cg => "cg",
            Self::Minres => "minres",
            Self::Gmres { .. } => "gmres",
            Self::Bicg => "bicg",
            Self::Qmr => "qmr",
            Self::QmrAlt => "qmr-alt",
            Self::Bidiag => "bidiag",
            Self::Cgs => "cgs",
            Self::Bicgstab => "bicgstab",
        }
    }

    /// Methods whose theory needs a symmetric matrix.
    pub fn needs_symmetric(&self) -> bool {
        matches!(self, Self::Cg | Self::Minres | Self::Chebyshev { .. } | Self::Ssor { .. })
    }

    /// Methods that use products with `Aᵀ`.
    pub fn uses_transpose(&self) -> bool {
        matches!(self, Self::Bicg | Self::Qmr | Self::QmrAlt | Self::Bidiag)
    }

    fn is_stationary(&self) -> bool {
        matches!(
            self,
            Self::Jacobi | Self::GaussSeidel | Self::Sor { .. } | Self::Ssor { .. } | Self::BlockJacobi { .. } | Self::BlockGs { .. } | Self::Chebyshev { .. }
        )
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, mut p) = parse_params(s)?;
        let spec = match name.as_str() {
            "jacobi" => Self::Jacobi,
            "gauss-seidel" | "gs" => Self::GaussSeidel,
            "sor" => Self::Sor { omega: take(&mut p, "omega")?.unwrap_or(1.0) },
            "ssor" => Self::Ssor { omega: take(&mut p, "omega")?.unwrap_or(1.0) },
            "block-jacobi" => Self::BlockJacobi { block: take(&mut p, "block")? },
            "block-gs" => Self::BlockGs { block: take(&mut p, "block")? },
            "chebyshev" => {
                let base = match p.remove("base").as_deref() {
                    None | Some("jacobi") => ChebBase::Jacobi,
                    Some("ssor") => ChebBase::Ssor,
                    Some(o) => return Err(invalid(format!("chebyshev base must be jacobi or ssor, got `{o}`"))),
                };
                Self::Chebyshev { base, omega: take(&mut p, "omega")?.unwrap_or(1.0) }
            }
            "cg" => Self::Cg,
            "minres" => Self::Minres,
            "gmres" => Self::Gmres { restart: take(&mut p, "restart")? },
            "bicg" | "bi-cg" => Self::Bicg,
            "qmr" => Self::Qmr,
            "qmr-alt" | "qmr_alt" => Self::QmrAlt,
            "bidiag" => Self::Bidiag,
            "cgs" => Self::Cgs,
            "bicgstab" | "bi-cgstab" => Self::Bicgstab,
            other => return Err(invalid(format!("unknown method `{other}`"))),
        };
        no_leftovers(&name, &p)?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecondSpec {
    None,
    Jacobi,
    /// `band = None` means the detected band offset.
    Ic { band: Option<usize> },
    Mic { band: Option<usize> },
    Block { size: Option<usize>, sigma: SigmaRule },
    /// Interval `None` is estimated from the matrix.
    Poly { m: usize, interval: Option<(f64, f64)> },
}

impl PrecondSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Jacobi => "jacobi",
            Self::Ic { .. } => "ic",
            Self::Mic { .. } => "mic",
            Self::Block { .. } => "block",
            Self::Poly { .. } => "poly",
        }
    }
}

impl FromStr for PrecondSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, mut p) = parse_params(s)?;
        let spec = match name.as_str() {
            "none" => Self::None,
            "jacobi" => Self::Jacobi,
            "ic" | "ic0" => Self::Ic { band: take(&mut p, "band")? },
            "mic" => Self::Mic { band: take(&mut p, "band")? },
            "block" => {
                let sigma = match p.remove("sigma").as_deref() {
                    None | Some("tridiagonal") => SigmaRule::Tridiagonal,
                    Some("full") => SigmaRule::Full,
                    Some(o) => return Err(invalid(format!("sigma must be tridiagonal or full, got `{o}`"))),
                };
                Self::Block { size: take(&mut p, "size")?, sigma }
            }
            "poly" => {
                let m = take(&mut p, "m")?.unwrap_or(9);
                let lo: Option<f64> = take(&mut p, "lmin")?;
                let hi: Option<f64> = take(&mut p, "lmax")?;
                let interval = match (lo, hi) {
                    (Some(l), Some(h)) => Some((l, h)),
                    (None, None) => None,
                    _ => return Err(invalid("poly needs both lmin and lmax, or neither")),
                };
                Self::Poly { m, interval }
            }
            other => return Err(invalid(format!("unknown preconditioner `{other}`"))),
        };
        no_leftovers(&name, &p)?;
        Ok(spec)
    }
}

/// Largest `|i - j|` over the stored entries; `N` for the five-point
/// matrices.
pub fn band_offset(a: &SparseMatrix) -> usize {
    a.to_triplets().consolidated().iter().map(|&(i, j, _)| i.abs_diff(j)).max().unwrap_or(0).max(1)
}

/// Spectrum interval of a symmetric positive definite matrix: dense
/// eigenvalue extremes up to `n = 400`, otherwise CG estimates after a
/// warm-up with `λmax` widened by 1%.
pub fn spd_interval(a: &SparseMatrix, b: &[f64]) -> Result<(f64, f64)> {
    let (lo, hi) = if a.n() <= 400 {
        symmetric_extreme_eigs(&a.to_dense())
    } else {
        let (lo, hi) = cg_extreme_estimates(a, b, &vec![0.0; a.n()], WARMUP_ITERS.max(50))?;
        (lo, hi * 1.01)
    };
    if !(lo > 0.0) {
        return Err(Error::NotSpd);
    }
    Ok((lo, hi))
}

fn run_with<C: LinearOperator>(a: &SparseMatrix, b: &[f64], x0: &[f64], method: &MethodSpec, c: &C, opts: &SolverOptions) -> Result<SolveReport> {
    match method {
        MethodSpec::Cg => pcg(a, b, c, x0, opts),
        MethodSpec::Minres => Err(invalid("minres does not take a preconditioner")),
        m => {
            let op = LeftPreconditioned { a, c };
            let cb = precondition_rhs(c, b);
            run_plain(&op, &cb, x0, m, opts)
        }
    }
}

fn run_plain<A: crate::linalg::TransposeOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], method: &MethodSpec, opts: &SolverOptions) -> Result<SolveReport> {
    match method {
        MethodSpec::Cg => cg(a, b, x0, opts),
        MethodSpec::Minres => minres(a, b, x0, opts),
        MethodSpec::Gmres { restart } => gmres(a, b, x0, opts, *restart),
        MethodSpec::Bicg => bicg(a, b, x0, opts),
        MethodSpec::Qmr => qmr(a, b, x0, opts),
        MethodSpec::QmrAlt => qmr_alt(a, b, x0, opts),
        MethodSpec::Bidiag => bidiag_solve(a, b, x0, opts),
        MethodSpec::Cgs => cgs(a, b, x0, opts),
        MethodSpec::Bicgstab => bicgstab(a, b, x0, opts),
        m => Err(invalid(format!("{} is not a Krylov method", m.name()))),
    }
}

fn run_stationary(a: &SparseMatrix, b: &[f64], x0: &[f64], method: &MethodSpec, opts: &SolverOptions) -> Result<SolveReport> {
    let band = || band_offset(a);
    let sm = match *method {
        MethodSpec::Jacobi => StationaryMethod::Jacobi,
        MethodSpec::GaussSeidel => StationaryMethod::GaussSeidel,
        MethodSpec::Sor { omega } => StationaryMethod::Sor(omega),
        MethodSpec::Ssor { omega } => StationaryMethod::Ssor(omega),
        MethodSpec::BlockJacobi { block } => StationaryMethod::BlockJacobi(block.unwrap_or_else(band)),
        MethodSpec::BlockGs { block } => StationaryMethod::BlockGs(block.unwrap_or_else(band)),
        MethodSpec::Chebyshev { base, omega } => {
            let sm = match base {
                ChebBase::Jacobi => StationaryMethod::Jacobi,
                ChebBase::Ssor => StationaryMethod::Ssor(omega),
            };
            let (lo, hi) = estimate_interval(a, sm)?;
            let s = split(a, sm)?;
            return semi_iterative(&s, b, lo, hi, opts, x0);
        }
        _ => unreachable!("caller checks is_stationary"),
    };
    iterate(a, b, &StationaryConfig { method: sm, opts: *opts }, x0)
}

/// Runs `method` with `precond` on `A x = b`.
///
/// CG uses the preconditioner inside PCG (polynomial: CG on
/// `p_m(A) x = C_{m-1}(A) b`). Other Krylov methods solve the left
/// preconditioned system `C A x = C b`; their history then holds norms of
/// the preconditioned residual. Methods that use `Aᵀ` need a symmetric
/// `C`, so with them `ic`, `mic`, `block` and `poly` require symmetric `A`.
/// Stationary methods and MINRES take no preconditioner.
pub fn solve(a: &SparseMatrix, b: &[f64], x0: &[f64], method: &MethodSpec, precond: &PrecondSpec, opts: &SolverOptions) -> Result<SolveReport> {
    let n = a.n();
    for v in [b, x0] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    if method.is_stationary() {
        if *precond != PrecondSpec::None {
            return Err(invalid(format!("{} does not take a preconditioner", method.name())));
        }
        return run_stationary(a, b, x0, method, opts);
    }
    let symmetric_c_needed = !matches!(precond, PrecondSpec::None | PrecondSpec::Jacobi);
    if symmetric_c_needed && !a.is_symmetric() {
        return Err(invalid(format!("preconditioner {} needs a symmetric matrix", precond.name())));
    }
    match *precond {
        PrecondSpec::None => run_plain(a, b, x0, method, opts),
        PrecondSpec::Jacobi => run_with(a, b, x0, method, &JacobiPrecond::new(a)?, opts),
        // no ±N band present: any N ≥ 2 gives the same factorization
        PrecondSpec::Ic { band } => run_with(a, b, x0, method, &ic0_pentadiagonal(a, band.unwrap_or_else(|| band_offset(a).max(2)))?, opts),
        PrecondSpec::Mic { band } => run_with(a, b, x0, method, &mic_pentadiagonal(a, band.unwrap_or_else(|| band_offset(a).max(2)))?, opts),
        PrecondSpec::Block { size, sigma } => run_with(a, b, x0, method, &block_precond(a, size.unwrap_or_else(|| band_offset(a)), sigma)?, opts),
        PrecondSpec::Poly { m, interval } => {
            let (lo, hi) = match interval {
                Some(iv) => iv,
                None => spd_interval(a, b)?,
            };
            let poly = poly_precond_build(m, lo, hi)?;
            if *method == MethodSpec::Cg {
                pcg_poly(a, b, &poly, x0, opts)
            } else {
                run_with(a, b, x0, method, &PolyOperator { poly: &poly, a }, opts)
            }
        }
    }
}
