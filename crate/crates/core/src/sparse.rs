//! Padded sparse storage: compressed-by-rows, compressed-by-columns and
//! compressed-by-diagonals, each with a uniform width `k`, plus a triplet
//! builder and MatrixMarket coordinate I/O.
//!
//! Padding rules: unused value slots hold exactly `0.0`. In the row format
//! the unused column slots repeat the last used column index of that row (an
//! empty row uses its own index); the column format mirrors this by column.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::linalg::{DenseMatrix, LinearOperator, TransposeOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatTag {
    Row,
    Col,
    Diag,
    Dense,
}

impl FormatTag {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "row" | "csr" => Some(Self::Row),
            "col" | "csc" => Some(Self::Col),
            "diag" | "dia" => Some(Self::Diag),
            "dense" => Some(Self::Dense),
            _ => None,
        }
    }
}

/// Coordinate list; duplicates are summed when built.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplets {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "index ({i},{j}) out of range for n={}", self.n);
        self.entries.push((i, j, v));
    }

    /// Sorted, duplicate-summed entries with exact zeros dropped.
    pub fn consolidated(&self) -> Vec<(usize, usize, f64)> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in &self.entries {
            *map.entry((i, j)).or_insert(0.0) += v;
        }
        map.into_iter().filter(|(_, v)| *v != 0.0).map(|((i, j), v)| (i, j, v)).collect()
    }

    pub fn nnz(&self) -> usize {
        self.consolidated().len()
    }

    pub fn is_symmetric(&self) -> bool {
        let c = self.consolidated();
        let map: BTreeMap<(usize, usize), f64> = c.iter().map(|&(i, j, v)| ((i, j), v)).collect();
        c.iter().all(|&(i, j, v)| map.get(&(j, i)) == Some(&v))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            d[(i, j)] += v;
        }
        d
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        assert_eq!(d.rows, d.cols);
        let mut t = Self::new(d.rows);
        for i in 0..d.rows {
            for j in 0..d.cols {
                if d[(i, j)] != 0.0 {
                    t.push(i, j, d[(i, j)]);
                }
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowCompressed {
    pub n: usize,
    pub k: usize,
    /// `n × k`, row-major.
    pub vals: Vec<f64>,
    pub cols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColCompressed {
    pub n: usize,
    pub k: usize,
    /// `k × n`, row-major: slot `r` of column `j` is at `r * n + j`.
    pub vals: Vec<f64>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagCompressed {
    pub n: usize,
    pub k: usize,
    /// `n × k`, row-major: `vals[i * k + r] = a(i, i + nu[r])`.
    pub vals: Vec<f64>,
    /// Offsets `j - i`, ascending.
    pub nu: Vec<isize>,
}

impl RowCompressed {
    pub fn from_triplets(t: &Triplets) -> Self {
        let n = t.n;
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in t.consolidated() {
            per_row[i].push((j, v));
        }
        let k = per_row.iter().map(|r| r.len()).max().unwrap_or(0).max(1);
        let mut vals = vec![0.0; n * k];
        let mut cols = vec![0usize; n * k];
        for (i, row) in per_row.iter().enumerate() {
            let mut last = i;
            for r in 0..k {
                if let Some(&(j, v)) = row.get(r) {
                    vals[i * k + r] = v;
                    last = j;
                }
                cols[i * k + r] = last;
            }
        }
        Self { n, k, vals, cols }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let k = self.k;
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for r in 0..k {
                s += self.vals[i * k + r] * x[self.cols[i * k + r]];
            }
            *yi = s;
        }
    }

    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let k = self.k;
        for i in 0..self.n {
            for r in 0..k {
                y[self.cols[i * k + r]] += self.vals[i * k + r] * x[i];
            }
        }
    }

    /// Stored `(col, val)` slots of row `i`, padding included.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let k = self.k;
        (0..k).map(move |r| (self.cols[i * k + r], self.vals[i * k + r]))
    }

    pub fn to_triplets(&self) -> Triplets {
        let mut t = Triplets::new(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        t
    }
}

impl ColCompressed {
    pub fn from_triplets(t: &Triplets) -> Self {
        let n = t.n;
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in t.consolidated() {
            per_col[j].push((i, v));
        }
        let k = per_col.iter().map(|c| c.len()).max().unwrap_or(0).max(1);
        let mut vals = vec![0.0; k * n];
        let mut rows = vec![0usize; k * n];
        for (j, col) in per_col.iter().enumerate() {
            let mut last = j;
            for r in 0..k {
                if let Some(&(i, v)) = col.get(r) {
                    vals[r * n + j] = v;
                    last = i;
                }
                rows[r * n + j] = last;
            }
        }
        Self { n, k, vals, rows }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let n = self.n;
        for r in 0..self.k {
            for j in 0..n {
                y[self.rows[r * n + j]] += self.vals[r * n + j] * x[j];
            }
        }
    }

    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for (j, yj) in y.iter_mut().enumerate().take(n) {
            let mut s = 0.0;
            for r in 0..self.k {
                s += self.vals[r * n + j] * x[self.rows[r * n + j]];
            }
            *yj = s;
        }
    }

    pub fn to_triplets(&self) -> Triplets {
        let mut t = Triplets::new(self.n);
        for r in 0..self.k {
            for j in 0..self.n {
                let v = self.vals[r * self.n + j];
                if v != 0.0 {
                    t.push(self.rows[r * self.n + j], j, v);
                }
            }
        }
        t
    }
}

impl DiagCompressed {
    pub fn from_triplets(t: &Triplets) -> Self {
        let n = t.n;
        let c = t.consolidated();
        let mut nu: Vec<isize> = c.iter().map(|&(i, j, _)| j as isize - i as isize).collect();
        nu.sort_unstable();
        nu.dedup();
        if nu.is_empty() {
            nu.push(0);
        }
        let k = nu.len();
        let mut vals = vec![0.0; n * k];
        for (i, j, v) in c {
            let off = j as isize - i as isize;
            let r = nu.binary_search(&off).expect("offset collected above");
            vals[i * k + r] = v;
        }
        Self { n, k, vals, nu }
    }

    /// Builds from explicit diagonals; `diags[r][i] = a(i, i + nu[r])`,
    /// entries falling outside the matrix are forced to zero.
    pub fn from_diagonals(n: usize, nu: Vec<isize>, diags: &[Vec<f64>]) -> Self {
        assert_eq!(nu.len(), diags.len());
        let mut order: Vec<usize> = (0..nu.len()).collect();
        order.sort_by_key(|&r| nu[r]);
        let k = nu.len();
        let mut vals = vec![0.0; n * k];
        let sorted: Vec<isize> = order.iter().map(|&r| nu[r]).collect();
        for (slot, &r) in order.iter().enumerate() {
            assert_eq!(diags[r].len(), n);
            for i in 0..n {
                let j = i as isize + nu[r];
                if j >= 0 && (j as usize) < n {
                    vals[i * k + slot] = diags[r][i];
                }
            }
        }
        Self { n, k, vals, nu: sorted }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let n = self.n as isize;
        let k = self.k;
        for (r, &nu) in self.nu.iter().enumerate() {
            let start = 0.max(-nu);
            let end = n - 0.max(nu);
            for i in start..end {
                let iu = i as usize;
                y[iu] += self.vals[iu * k + r] * x[(i + nu) as usize];
            }
        }
    }

    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let n = self.n as isize;
        let k = self.k;
        for (r, &nu) in self.nu.iter().enumerate() {
            let start = 0.max(-nu);
            let end = n - 0.max(nu);
            for i in start..end {
                let iu = i as usize;
                y[(i + nu) as usize] += self.vals[iu * k + r] * x[iu];
            }
        }
    }

    /// Diagonal at offset `nu` as a length-`n` vector, or `None`.
    pub fn diagonal(&self, nu: isize) -> Option<Vec<f64>> {
        let r = self.nu.iter().position(|&v| v == nu)?;
        Some((0..self.n).map(|i| self.vals[i * self.k + r]).collect())
    }

    pub fn to_triplets(&self) -> Triplets {
        let mut t = Triplets::new(self.n);
        for i in 0..self.n {
            for (r, &nu) in self.nu.iter().enumerate() {
                let v = self.vals[i * self.k + r];
                if v != 0.0 {
                    t.push(i, (i as isize + nu) as usize, v);
                }
            }
        }
        t
    }
}

/// An `n × n` real matrix in one of the supported storages.
#[derive(Debug, Clone, PartialEq)]
pub enum SparseMatrix {
    Row(RowCompressed),
    Col(ColCompressed),
    Diag(DiagCompressed),
    Dense(DenseMatrix),
}

pub fn build(t: &Triplets, target: FormatTag) -> SparseMatrix {
    match target {
        FormatTag::Row => SparseMatrix::Row(RowCompressed::from_triplets(t)),
        FormatTag::Col => SparseMatrix::Col(ColCompressed::from_triplets(t)),
        FormatTag::Diag => SparseMatrix::Diag(DiagCompressed::from_triplets(t)),
        FormatTag::Dense => SparseMatrix::Dense(t.to_dense()),
    }
}

fn check_dim(n: usize, x: &[f64]) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    Ok(())
}

pub fn matvec_row(a: &RowCompressed, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(a.n, x)?;
    let mut y = vec![0.0; a.n];
    a.matvec(x, &mut y);
    Ok(y)
}

pub fn matvec_col(a: &ColCompressed, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(a.n, x)?;
    let mut y = vec![0.0; a.n];
    a.matvec(x, &mut y);
    Ok(y)
}

pub fn matvec_diag(a: &DiagCompressed, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(a.n, x)?;
    let mut y = vec![0.0; a.n];
    a.matvec(x, &mut y);
    Ok(y)
}

impl SparseMatrix {
    pub fn n(&self) -> usize {
        match self {
            Self::Row(a) => a.n,
            Self::Col(a) => a.n,
            Self::Diag(a) => a.n,
            Self::Dense(a) => a.rows,
        }
    }

    pub fn format(&self) -> FormatTag {
        match self {
            Self::Row(_) => FormatTag::Row,
            Self::Col(_) => FormatTag::Col,
            Self::Diag(_) => FormatTag::Diag,
            Self::Dense(_) => FormatTag::Dense,
        }
    }

    pub fn to_triplets(&self) -> Triplets {
        match self {
            Self::Row(a) => a.to_triplets(),
            Self::Col(a) => a.to_triplets(),
            Self::Diag(a) => a.to_triplets(),
            Self::Dense(a) => Triplets::from_dense(a),
        }
    }

    pub fn convert(&self, target: FormatTag) -> SparseMatrix {
        if self.format() == target {
            return self.clone();
        }
        build(&self.to_triplets(), target)
    }

    pub fn to_row(&self) -> RowCompressed {
        match self {
            Self::Row(a) => a.clone(),
            other => RowCompressed::from_triplets(&other.to_triplets()),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Self::Dense(a) => a.clone(),
            other => other.to_triplets().to_dense(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n()];
        for (i, j, v) in self.to_triplets().entries {
            if i == j {
                d[i] += v;
            }
        }
        d
    }

    pub fn nnz(&self) -> usize {
        self.to_triplets().nnz()
    }

    pub fn is_symmetric(&self) -> bool {
        self.to_triplets().is_symmetric()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n(), x)?;
        let mut y = vec![0.0; self.n()];
        self.apply(x, &mut y);
        Ok(y)
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Self::Row(a) => a.matvec(x, y),
            Self::Col(a) => a.matvec(x, y),
            Self::Diag(a) => a.matvec(x, y),
            Self::Dense(a) => a.apply(x, y),
        }
    }
}

impl TransposeOperator for SparseMatrix {
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Self::Row(a) => a.matvec_transpose(x, y),
            Self::Col(a) => a.matvec_transpose(x, y),
            Self::Diag(a) => a.matvec_transpose(x, y),
            Self::Dense(a) => a.apply_transpose(x, y),
        }
    }
}

const MM_GENERAL: &str = "%%MatrixMarket matrix coordinate real general";
const MM_SYMMETRIC: &str = "%%MatrixMarket matrix coordinate real symmetric";

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses a square coordinate real general/symmetric MatrixMarket file.
pub fn read_matrix_market(text: &str) -> Result<Triplets> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header.trim_end();
    let symmetric = match header {
        MM_GENERAL => false,
        MM_SYMMETRIC => true,
        _ => return Err(parse_err(1, format!("unsupported header '{header}'"))),
    };
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|tok| tok.parse::<usize>().map_err(|_| parse_err(size_line, format!("non-numeric token '{tok}'"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(parse_err(size_line, "size line needs rows cols nnz"));
    }
    let (m, n, nnz) = (dims[0], dims[1], dims[2]);
    if m != n || n == 0 {
        return Err(parse_err(size_line, format!("expected a nonempty square matrix, got {m}x{n}")));
    }
    let mut t = Triplets::new(n);
    let mut count = 0;
    for (ln, line) in body {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(ln, "entry needs row col value"));
        }
        let idx = |tok: &str| -> Result<usize> {
            let v: usize = tok.parse().map_err(|_| parse_err(ln, format!("non-numeric token '{tok}'")))?;
            if v == 0 || v > n {
                return Err(parse_err(ln, format!("index {v} out of range 1..={n}")));
            }
            Ok(v - 1)
        };
        let i = idx(toks[0])?;
        let j = idx(toks[1])?;
        let v: f64 = toks[2].parse().map_err(|_| parse_err(ln, format!("non-numeric token '{}'", toks[2])))?;
        if !v.is_finite() {
            return Err(parse_err(ln, "non-finite value"));
        }
        t.push(i, j, v);
        if symmetric && i != j {
            t.push(j, i, v);
        }
        count += 1;
    }
    if count != nnz {
        return Err(parse_err(size_line, format!("declared {nnz} entries, found {count}")));
    }
    Ok(t)
}

fn fmt_entry(out: &mut String, i: usize, j: usize, v: f64) {
    let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
}

/// General-format writer, 17 significant digits.
pub fn write_matrix_market(t: &Triplets) -> String {
    let c = t.consolidated();
    let mut out = String::new();
    let _ = writeln!(out, "{MM_GENERAL}");
    let _ = writeln!(out, "{} {} {}", t.n, t.n, c.len());
    for (i, j, v) in c {
        fmt_entry(&mut out, i, j, v);
    }
    out
}

/// Symmetric-format writer (lower triangle); fails on a nonsymmetric input.
pub fn write_matrix_market_symmetric(t: &Triplets) -> Result<String> {
    if !t.is_symmetric() {
        return Err(invalid("matrix is not symmetric"));
    }
    let lower: Vec<_> = t.consolidated().into_iter().filter(|&(i, j, _)| i >= j).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{MM_SYMMETRIC}");
    let _ = writeln!(out, "{} {} {}", t.n, t.n, lower.len());
    for (i, j, v) in lower {
        fmt_entry(&mut out, i, j, v);
    }
    Ok(out)
}
