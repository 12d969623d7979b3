//! Stopping rules and the outcome record shared by every solver.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TolKind {
    AbsResidual,
    RelToB,
    RelToR0,
}

impl TolKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "abs" | "abs_residual" => Some(Self::AbsResidual),
            "rel_to_b" | "rel-b" => Some(Self::RelToB),
            "rel_to_r0" | "rel-r0" => Some(Self::RelToR0),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AbsResidual => "abs_residual",
            Self::RelToB => "rel_to_b",
            Self::RelToR0 => "rel_to_r0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub tol: f64,
    pub kind: TolKind,
}

impl Tolerance {
    pub fn abs(tol: f64) -> Self {
        Self { tol, kind: TolKind::AbsResidual }
    }

    pub fn rel_to_b(tol: f64) -> Self {
        Self { tol, kind: TolKind::RelToB }
    }

    pub fn rel_to_r0(tol: f64) -> Self {
        Self { tol, kind: TolKind::RelToR0 }
    }

    /// Absolute residual-norm threshold.
    pub fn threshold(&self, b_norm: f64, r0_norm: f64) -> f64 {
        match self.kind {
            TolKind::AbsResidual => self.tol,
            TolKind::RelToB => self.tol * b_norm,
            TolKind::RelToR0 => self.tol * r0_norm,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::rel_to_r0(1e-6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: Tolerance,
    /// `None` means the method's default (usually `n`, or `100 n` for
    /// stationary iterations).
    pub max_iter: Option<usize>,
}

impl SolverOptions {
    pub fn new(tol: Tolerance, max_iter: usize) -> Self {
        Self { tol, max_iter: Some(max_iter) }
    }

    pub fn max_iter_or(&self, default: usize) -> usize {
        self.max_iter.unwrap_or(default)
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: Tolerance::default(), max_iter: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownKind {
    NotSpd,
    PrecondNotSpd,
    IcPivot,
    SingularR,
    InvariantSubspace,
    SeriousBreakdown,
    LuBreakdown,
    Stagnation,
    IntervalMismatch,
    MSolve,
    NegativeDiagonal,
}

impl BreakdownKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NotSpd => "not-spd",
            Self::PrecondNotSpd => "precond-not-spd",
            Self::IcPivot => "ic-pivot",
            Self::SingularR => "singular-R",
            Self::InvariantSubspace => "invariant_subspace",
            Self::SeriousBreakdown => "serious_breakdown",
            Self::LuBreakdown => "lu_breakdown",
            Self::Stagnation => "stagnation",
            Self::IntervalMismatch => "interval-mismatch",
            Self::MSolve => "m-solve",
            Self::NegativeDiagonal => "negative-diagonal",
        }
    }
}

impl fmt::Display for BreakdownKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    Breakdown(BreakdownKind),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Converged => f.write_str("converged"),
            Status::MaxIter => f.write_str("max_iter"),
            Status::Breakdown(k) => write!(f, "breakdown({k})"),
        }
    }
}

/// A named per-iteration series reported next to the main history.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: &'static str,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Residual norms, entry 0 is the initial residual.
    pub history: Vec<f64>,
    pub status: Status,
    pub extra: Option<Series>,
    /// Recorded scalar recurrences (`lambda_hat`, `mu`, ...), 1-based in
    /// iteration order.
    pub scalars: BTreeMap<&'static str, Vec<f64>>,
}

impl SolveReport {
    pub fn new(x: Vec<f64>, history: Vec<f64>, status: Status) -> Self {
        let iterations = history.len().saturating_sub(1);
        Self { x, iterations, history, status, extra: None, scalars: BTreeMap::new() }
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn final_residual(&self) -> f64 {
        *self.history.last().expect("history is never empty")
    }

    pub fn with_extra(mut self, name: &'static str, values: Vec<f64>) -> Self {
        self.extra = Some(Series { name, values });
        self
    }

    pub fn scalar(&self, name: &str) -> &[f64] {
        self.scalars.get(name).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// `|x| <= 1e-14 * scale`, the zero test used for breakdown detection.
pub(crate) fn is_negligible(x: f64, scale: f64) -> bool {
    x.abs() <= 1e-14 * scale || !x.is_finite()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(Tolerance::abs(1e-3).threshold(10.0, 5.0), 1e-3);
        assert_eq!(Tolerance::rel_to_b(1e-3).threshold(10.0, 5.0), 1e-2);
        assert_eq!(Tolerance::rel_to_r0(1e-3).threshold(10.0, 5.0), 5e-3);
        assert_eq!(TolKind::parse("rel_to_b"), Some(TolKind::RelToB));
    }

    #[test]
    fn status_text() {
        assert_eq!(Status::Breakdown(BreakdownKind::LuBreakdown).to_string(), "breakdown(lu_breakdown)");
        let r = SolveReport::new(vec![0.0], vec![1.0, 0.5], Status::MaxIter);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.final_residual(), 0.5);
    }
}
