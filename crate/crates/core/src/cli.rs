//! The `krylov` command line: problem generation, solves, spectral-radius
//! sweeps, preconditioner comparisons and CG eigenvalue estimates.
//!
//! Output is CSV on stdout (or `--out`) with a `# key=value ...` header;
//! floats carry 17 significant digits. Exit codes: 0 success/converged,
//! 2 usage or input error, 3 not converged, 4 breakdown.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dispatch::{band_offset, solve, spd_interval, MethodSpec, PrecondSpec};
use crate::error::{invalid, Error, Result};
use crate::krylov_spd::cg_extreme_estimates;
use crate::linalg::{apply, spectral_radius_estimate, symmetric_extreme_eigs};
use crate::problems::{cavity_laplace, hilbert, indefinite_kron, poisson_test, random_sparse, ProblemInstance};
use crate::report::{SolverOptions, Status, TolKind, Tolerance};
use crate::sparse::{build, read_matrix_market, write_matrix_market, write_matrix_market_symmetric, FormatTag, SparseMatrix};
use crate::stationary::{diagnostics, iteration_matrix_applier, StationaryMethod};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_BREAKDOWN: i32 = 4;

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "KRYLOV_SEED";

#[derive(Parser, Debug)]
#[command(name = "krylov", version, about = "Sparse iterative solvers and test problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a test problem as MatrixMarket (plus right-hand side).
    Generate {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Matrix output file.
        #[arg(long)]
        out: PathBuf,
        /// Right-hand side output file, one value per line.
        #[arg(long)]
        rhs_out: Option<PathBuf>,
    },
    /// Solve a system and print the residual history.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        /// e.g. cg, minres, gmres,restart=20, sor,omega=1.5, chebyshev,base=jacobi
        #[arg(long, default_value = "cg")]
        method: String,
        /// none, jacobi, ic, mic, block, poly,m=9
        #[arg(long, default_value = "none")]
        precond: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// abs, rel_to_b or rel_to_r0
        #[arg(long, default_value = "rel_to_b")]
        tol_kind: String,
        #[arg(long)]
        max_iter: Option<usize>,
        /// CSV destination (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the computed solution, one value per line.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Spectral radii of iteration matrices: an SOR sweep over omega, or a
    /// list of methods.
    Spectrum {
        #[command(flatten)]
        input: InputArgs,
        /// start:stop:step, e.g. 1.0:1.9:0.01
        #[arg(long)]
        sweep: Option<String>,
        /// Add the SSOR radius to each sweep row.
        #[arg(long)]
        ssor: bool,
        /// Comma-separated jacobi, gauss-seidel, block-jacobi, block-gs.
        #[arg(long)]
        methods: Option<String>,
        /// Power-iteration steps.
        #[arg(long, default_value_t = 1500)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iteration counts of CG, IC-, MIC- (and polynomial-) preconditioned CG
    /// over a list of grid sizes, zero start vector.
    PrecondCompare {
        /// Comma-separated grid sizes N.
        #[arg(long, default_value = "10,20,30,40,50")]
        sizes: String,
        #[arg(long, value_enum, default_value_t = GridProblem::Poisson)]
        problem: GridProblem,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Comma-separated polynomial degrees.
        #[arg(long)]
        poly: Option<String>,
        /// Stop when ‖r‖ falls below this.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extreme eigenvalue estimates from the CG tridiagonal matrix.
    Eigs {
        #[command(flatten)]
        input: InputArgs,
        /// CG steps.
        #[arg(long, default_value_t = 25)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ProblemName {
    Poisson,
    Cavity,
    Hilbert,
    Indefinite,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GridProblem {
    Poisson,
    Cavity,
}

#[derive(Args, Debug)]
struct ProblemArgs {
    #[arg(long, value_enum)]
    problem: Option<ProblemName>,
    /// Grid side N (poisson, cavity, indefinite) or matrix size (hilbert, random).
    #[arg(long)]
    n: Option<usize>,
    /// Cavity outlet fraction.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Diagonal shift added to the Hilbert matrix.
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
    /// Random matrix density.
    #[arg(long, default_value_t = 0.04)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct InputArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// MatrixMarket input instead of a generated problem.
    #[arg(long, conflicts_with = "problem")]
    matrix: Option<PathBuf>,
    /// Right-hand side file for --matrix (default A·1).
    #[arg(long, requires = "matrix")]
    rhs: Option<PathBuf>,
    /// Storage for --matrix: row, col, diag or dense.
    #[arg(long, default_value = "row")]
    format: String,
}

fn effective_seed(cli_seed: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| invalid(format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(cli_seed),
    }
}

impl ProblemArgs {
    fn build(&self) -> Result<(ProblemInstance, String)> {
        let kind = self.problem.ok_or_else(|| invalid("need --problem or --matrix"))?;
        let n = self.n.ok_or_else(|| invalid("--n is required with --problem"))?;
        if n == 0 {
            return Err(invalid("--n must be positive"));
        }
        let seed = effective_seed(self.seed)?;
        let (p, desc) = match kind {
            ProblemName::Poisson => (poisson_test(n), format!("problem=poisson n={n}")),
            ProblemName::Cavity => (cavity_laplace(n, self.delta)?, format!("problem=cavity n={n} delta={}", self.delta)),
            ProblemName::Hilbert => (hilbert(n, self.shift), format!("problem=hilbert n={n} shift={}", self.shift)),
            ProblemName::Indefinite => (indefinite_kron(n), format!("problem=indefinite n={n}")),
            ProblemName::Random => {
                (random_sparse(n, self.density, seed)?, format!("problem=random n={n} density={} seed={seed}", self.density))
            }
        };
        Ok((p, desc))
    }
}

fn read_vector(path: &PathBuf) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('%') && !t.starts_with('#')
        })
        .map(|(i, l)| l.trim().parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad number `{}`", l.trim()) }))
        .collect()
}

fn vector_text(v: &[f64]) -> String {
    let mut s = String::new();
    for x in v {
        let _ = writeln!(s, "{x:.16e}");
    }
    s
}

impl InputArgs {
    fn load(&self) -> Result<(SparseMatrix, Vec<f64>, String)> {
        match &self.matrix {
            Some(path) => {
                let fmt = FormatTag::parse(&self.format).ok_or_else(|| invalid(format!("unknown format `{}`", self.format)))?;
                let t = read_matrix_market(&std::fs::read_to_string(path)?)?;
                let a = build(&t, fmt);
                let b = match &self.rhs {
                    Some(r) => read_vector(r)?,
                    None => apply(&a, &vec![1.0; a.n()]),
                };
                if b.len() != a.n() {
                    return Err(Error::DimensionMismatch { expected: a.n(), got: b.len() });
                }
                Ok((a, b, format!("matrix={}", path.display())))
            }
            None => {
                let (p, desc) = self.problem.build()?;
                Ok((p.a, p.b, desc))
            }
        }
    }
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',').map(|t| t.trim().parse().map_err(|_| invalid(format!("bad {what} `{t}`")))).collect()
}

fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s.split(':').map(|t| t.trim().parse().map_err(|_| invalid(format!("bad sweep `{s}`")))).collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(invalid("sweep must be start:stop:step"));
    };
    if !(step > 0.0 && start > 0.0 && stop < 2.0 && start <= stop) {
        return Err(invalid("sweep needs 0 < start <= stop < 2 and step > 0"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

fn cmd_generate(problem: &ProblemArgs, out_path: &PathBuf, rhs_out: &Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (p, desc) = problem.build()?;
    if matches!(p.a, SparseMatrix::Dense(_)) {
        writeln!(err, "warning: {} is stored dense ({} entries)", p.label, p.n() * p.n())?;
    }
    let t = p.a.to_triplets();
    let d = diagnostics(&p.a);
    let text = if d.symmetric { write_matrix_market_symmetric(&t)? } else { write_matrix_market(&t) };
    std::fs::write(out_path, text)?;
    if let Some(r) = rhs_out {
        std::fs::write(r, vector_text(&p.b))?;
    }
    writeln!(
        out,
        "# {desc}\nn={} nnz={} symmetric={} diag_dominant_rows={} diag_dominant_cols={} m_matrix_sign_pattern={}",
        p.n(),
        t.nnz(),
        d.symmetric,
        d.diag_dominant_rows,
        d.diag_dominant_cols,
        d.m_matrix_sign_pattern
    )?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    input: &InputArgs,
    method: &str,
    precond: &str,
    tol: f64,
    tol_kind: &str,
    max_iter: Option<usize>,
    out_path: &Option<PathBuf>,
    solution: &Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let method: MethodSpec = method.parse()?;
    let precond: PrecondSpec = precond.parse()?;
    let kind = TolKind::parse(tol_kind).ok_or_else(|| invalid(format!("unknown tol kind `{tol_kind}`")))?;
    if !(tol >= 0.0) {
        return Err(invalid("tol must be nonnegative"));
    }
    let (a, b, desc) = input.load()?;
    if method.needs_symmetric() && !a.is_symmetric() {
        writeln!(err, "warning: {} expects a symmetric matrix", method.name())?;
    }
    let opts = SolverOptions { tol: Tolerance { tol, kind }, max_iter };
    let start = Instant::now();
    let rep = solve(&a, &b, &vec![0.0; a.n()], &method, &precond, &opts)?;
    let ms = start.elapsed().as_millis();

    let mut csv = String::new();
    let max_iter_s = max_iter.map(|m| m.to_string()).unwrap_or_else(|| "default".into());
    let _ = writeln!(
        csv,
        "# command=solve {desc} method={} precond={} tol={tol:e} tol_kind={} max_iter={max_iter_s} status={}",
        method.name(),
        precond.name(),
        kind.as_str(),
        rep.status
    );
    match &rep.extra {
        Some(s) => {
            let _ = writeln!(csv, "iter,residual_norm,{}", s.name);
            for (i, r) in rep.history.iter().enumerate() {
                let e = s.values.get(i).copied().unwrap_or(f64::NAN);
                let _ = writeln!(csv, "{i},{r:.16e},{e:.16e}");
            }
        }
        None => {
            let _ = writeln!(csv, "iter,residual_norm");
            for (i, r) in rep.history.iter().enumerate() {
                let _ = writeln!(csv, "{i},{r:.16e}");
            }
        }
    }
    emit(out, out_path, &csv)?;
    if let Some(p) = solution {
        std::fs::write(p, vector_text(&rep.x))?;
    }
    writeln!(err, "{} {} {:.16e} {ms}", rep.status, rep.iterations, rep.final_residual())?;
    Ok(match rep.status {
        Status::Converged => EXIT_OK,
        Status::MaxIter => EXIT_NOT_CONVERGED,
        Status::Breakdown(_) => EXIT_BREAKDOWN,
    })
}

fn rho_of(a: &SparseMatrix, m: StationaryMethod, iters: usize) -> Result<f64> {
    let g = iteration_matrix_applier(a, m)?;
    Ok(spectral_radius_estimate(&g, a.n(), iters.max(100)))
}

fn cmd_spectrum(input: &InputArgs, sweep: &Option<String>, ssor: bool, methods: &Option<String>, iters: usize, out_path: &Option<PathBuf>, out: &mut dyn Write) -> Result<i32> {
    let (a, _, desc) = input.load()?;
    let mut csv = String::new();
    let _ = writeln!(csv, "# command=spectrum {desc} iters={iters}");
    if let Some(s) = sweep {
        let omegas = parse_sweep(s)?;
        let _ = writeln!(csv, "{}", if ssor { "omega,rho,rho_ssor" } else { "omega,rho" });
        for w in omegas {
            let rho = rho_of(&a, StationaryMethod::Sor(w), iters)?;
            if ssor {
                let rs = rho_of(&a, StationaryMethod::Ssor(w), iters)?;
                let _ = writeln!(csv, "{w:.16e},{rho:.16e},{rs:.16e}");
            } else {
                let _ = writeln!(csv, "{w:.16e},{rho:.16e}");
            }
        }
    } else {
        let list = methods.as_deref().unwrap_or("jacobi,gauss-seidel,block-jacobi,block-gs");
        let band = band_offset(&a);
        let _ = writeln!(csv, "method,rho");
        for name in list.split(',').map(str::trim) {
            let m = match name {
                "jacobi" => StationaryMethod::Jacobi,
                "gauss-seidel" | "gs" => StationaryMethod::GaussSeidel,
                "block-jacobi" => StationaryMethod::BlockJacobi(band),
                "block-gs" => StationaryMethod::BlockGs(band),
                other => return Err(invalid(format!("unknown method `{other}` for spectrum"))),
            };
            let _ = writeln!(csv, "{name},{:.16e}", rho_of(&a, m, iters)?);
        }
    }
    emit(out, out_path, &csv)?;
    Ok(EXIT_OK)
}

fn cmd_precond_compare(sizes: &str, problem: GridProblem, delta: f64, poly: &Option<String>, tol: f64, out_path: &Option<PathBuf>, out: &mut dyn Write) -> Result<i32> {
    let sizes: Vec<usize> = parse_list(sizes, "size")?;
    let degrees: Vec<usize> = match poly {
        Some(p) => parse_list(p, "degree")?,
        None => Vec::new(),
    };
    let mut csv = String::new();
    let _ = writeln!(csv, "# command=precond-compare problem={problem:?} delta={delta} tol={tol:e} tol_kind=abs_residual x0=0");
    let _ = writeln!(csv, "N,method,iterations,status");
    let opts = SolverOptions::new(Tolerance::abs(tol), 100_000);
    for &n in &sizes {
        let p = match problem {
            GridProblem::Poisson => poisson_test(n),
            GridProblem::Cavity => cavity_laplace(n, delta)?,
        };
        let x0 = vec![0.0; p.n()];
        let mut runs: Vec<(String, PrecondSpec)> =
            vec![("cg".into(), PrecondSpec::None), ("pcg-ic".into(), PrecondSpec::Ic { band: Some(n) }), ("pcg-mic".into(), PrecondSpec::Mic { band: Some(n) })];
        if !degrees.is_empty() {
            let iv = spd_interval(&p.a, &p.b)?;
            for &m in &degrees {
                runs.push((format!("pcg-poly:{m}"), PrecondSpec::Poly { m, interval: Some(iv) }));
            }
        }
        for (name, pc) in runs {
            let rep = solve(&p.a, &p.b, &x0, &MethodSpec::Cg, &pc, &opts)?;
            let _ = writeln!(csv, "{n},{name},{},{}", rep.iterations, rep.status);
        }
    }
    emit(out, out_path, &csv)?;
    Ok(EXIT_OK)
}

fn cmd_eigs(input: &InputArgs, iters: usize, out_path: &Option<PathBuf>, out: &mut dyn Write) -> Result<i32> {
    let (a, b, desc) = input.load()?;
    let mut csv = String::new();
    let _ = write!(csv, "# command=eigs {desc} iters={iters}");
    if a.n() <= 1000 && a.is_symmetric() {
        let (lo, hi) = symmetric_extreme_eigs(&a.to_dense());
        let _ = write!(csv, " exact_lambda_min={lo:.16e} exact_lambda_max={hi:.16e}");
    }
    let _ = writeln!(csv, "\nk,lambda_min,lambda_max");
    let x0 = vec![0.0; a.n()];
    for k in 1..=iters {
        let (lo, hi) = cg_extreme_estimates(&a, &b, &x0, k)?;
        let _ = writeln!(csv, "{k},{lo:.16e},{hi:.16e}");
    }
    emit(out, out_path, &csv)?;
    Ok(EXIT_OK)
}

fn dispatch(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Generate { problem, out: path, rhs_out } => cmd_generate(problem, path, rhs_out, out, err),
        Command::Solve { input, method, precond, tol, tol_kind, max_iter, out: path, solution } => {
            cmd_solve(input, method, precond, *tol, tol_kind, *max_iter, path, solution, out, err)
        }
        Command::Spectrum { input, sweep, ssor, methods, iters, out: path } => cmd_spectrum(input, sweep, *ssor, methods, *iters, path, out),
        Command::PrecondCompare { sizes, problem, delta, poly, tol, out: path } => cmd_precond_compare(sizes, *problem, *delta, poly, *tol, path, out),
        Command::Eigs { input, iters, out: path } => cmd_eigs(input, *iters, path, out),
    }
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the process exit code.
pub fn run_with_io<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli.cmd, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
