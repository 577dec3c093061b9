//! Parity-check matrices, their Tanner graphs, and the alist text format.
//!
//! Rows of `H` are check nodes and columns are variable nodes. Edge ids are
//! assigned row-major over the nonzero entries, so the edges of one check
//! node form a contiguous id range and per-edge weight vectors are stable
//! across runs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse binary matrix `H` with `n_checks` rows and `n_vars` columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_vars: usize,
    n_checks: usize,
    /// Sorted (row, col) pairs.
    entries: Vec<(u32, u32)>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from `(row, col)` pairs. Duplicates, out-of-range
    /// indices, and empty rows or columns are rejected.
    pub fn from_entries<I>(n_checks: usize, n_vars: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n_vars == 0 || n_checks == 0 {
            return Err(Error::InvalidMatrix("matrix has no rows or columns".into()));
        }
        let mut set = BTreeSet::new();
        for (r, c) in entries {
            if r >= n_checks || c >= n_vars {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) outside {n_checks}x{n_vars}"
                )));
            }
            if !set.insert((r as u32, c as u32)) {
                return Err(Error::InvalidMatrix(format!("duplicate entry ({r}, {c})")));
            }
        }
        let mut row_seen = vec![false; n_checks];
        let mut col_seen = vec![false; n_vars];
        for &(r, c) in &set {
            row_seen[r as usize] = true;
            col_seen[c as usize] = true;
        }
        if let Some(r) = row_seen.iter().position(|s| !s) {
            return Err(Error::InvalidMatrix(format!("row {r} is empty")));
        }
        if let Some(c) = col_seen.iter().position(|s| !s) {
            return Err(Error::InvalidMatrix(format!("column {c} is empty")));
        }
        Ok(Self {
            n_vars,
            n_checks,
            entries: set.into_iter().collect(),
        })
    }

    /// Builds a matrix from dense 0/1 rows.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let n_checks = rows.len();
        let n_vars = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_vars) {
            return Err(Error::InvalidMatrix("ragged dense rows".into()));
        }
        let entries = rows.iter().enumerate().flat_map(|(r, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(move |(c, _)| (r, c))
        });
        Self::from_entries(n_checks, n_vars, entries)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    /// Sorted `(row, col)` entries.
    pub fn entries(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.entries.iter().map(|&(r, c)| (r as usize, c as usize))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_checks];
        for &(r, _) in &self.entries {
            d[r as usize] += 1;
        }
        d
    }

    pub fn col_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_vars];
        for &(_, c) in &self.entries {
            d[c as usize] += 1;
        }
        d
    }

    /// `H c` over GF(2).
    pub fn syndrome(&self, c: &[u8]) -> Result<Vec<u8>> {
        if c.len() != self.n_vars {
            return Err(Error::LengthMismatch {
                what: "codeword",
                expected: self.n_vars,
                got: c.len(),
            });
        }
        let mut s = vec![0u8; self.n_checks];
        for &(r, col) in &self.entries {
            s[r as usize] ^= c[col as usize] & 1;
        }
        Ok(s)
    }

    /// GF(2) rank by Gaussian elimination on bit-packed rows.
    pub fn rank(&self) -> usize {
        let words = self.n_vars.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; self.n_checks];
        for &(r, c) in &self.entries {
            rows[r as usize][c as usize / 64] |= 1 << (c % 64);
        }
        let mut rank = 0;
        for col in 0..self.n_vars {
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] & bit != 0 {
                    for (a, b) in row.iter_mut().zip(&pivot_row).skip(w) {
                        *a ^= b;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }
}

/// Parses the alist layout.
///
/// Column and row neighbor lines may be padded with zeros to the declared
/// maximum degree; zeros anywhere in a list line are skipped, but more
/// nonzero indices than the declared degree is an error.
pub fn parse_alist(text: &str) -> Result<ParityCheckMatrix> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty());

    let mut numbers = |what: &'static str| -> Result<(usize, Vec<usize>)> {
        let (lineno, line) = lines.next().ok_or(Error::Alist {
            line: 0,
            msg: format!("{what} missing"),
        })?;
        let vals = line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Alist {
                    line: lineno + 1,
                    msg: format!("bad integer {t:?} in {what}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((lineno + 1, vals))
    };

    let (l, dims) = numbers("dimension line")?;
    let [n, m] = dims[..] else {
        return Err(Error::Alist {
            line: l,
            msg: "dimension line must hold exactly N M".into(),
        });
    };
    if n == 0 || m == 0 {
        return Err(Error::Alist {
            line: l,
            msg: "zero dimension".into(),
        });
    }
    let (l, maxes) = numbers("max degree line")?;
    let [max_col, max_row] = maxes[..] else {
        return Err(Error::Alist {
            line: l,
            msg: "max degree line must hold exactly two values".into(),
        });
    };
    let (l, col_deg) = numbers("column degree line")?;
    if col_deg.len() != n {
        return Err(Error::Alist {
            line: l,
            msg: format!("expected {n} column degrees, found {}", col_deg.len()),
        });
    }
    let (l, row_deg) = numbers("row degree line")?;
    if row_deg.len() != m {
        return Err(Error::Alist {
            line: l,
            msg: format!("expected {m} row degrees, found {}", row_deg.len()),
        });
    }
    for (what, degs, max) in [("column", &col_deg, max_col), ("row", &row_deg, max_row)] {
        if let Some(d) = degs.iter().find(|&&d| d > max || d == 0) {
            return Err(Error::Alist {
                line: 0,
                msg: format!("{what} degree {d} outside 1..={max}"),
            });
        }
    }

    let mut from_cols = BTreeSet::new();
    for (col, &deg) in col_deg.iter().enumerate() {
        let (l, list) = numbers("column neighbor list")?;
        let nz = neighbor_list(l, &list, deg, m)?;
        for r in nz {
            if !from_cols.insert((r, col)) {
                return Err(Error::Alist {
                    line: l,
                    msg: format!("duplicate check {} for column {}", r + 1, col + 1),
                });
            }
        }
    }
    let mut from_rows = BTreeSet::new();
    for (row, &deg) in row_deg.iter().enumerate() {
        let (l, list) = numbers("row neighbor list")?;
        let nz = neighbor_list(l, &list, deg, n)?;
        for c in nz {
            if !from_rows.insert((row, c)) {
                return Err(Error::Alist {
                    line: l,
                    msg: format!("duplicate variable {} for row {}", c + 1, row + 1),
                });
            }
        }
    }
    if from_cols != from_rows {
        return Err(Error::Alist {
            line: 0,
            msg: "row and column neighbor lists disagree".into(),
        });
    }
    ParityCheckMatrix::from_entries(m, n, from_cols)
}

fn neighbor_list(line: usize, list: &[usize], deg: usize, bound: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(deg);
    for &v in list {
        if v == 0 {
            continue;
        }
        if out.len() == deg {
            return Err(Error::Alist {
                line,
                msg: format!("nonzero entry {v} beyond declared degree {deg}"),
            });
        }
        if v > bound {
            return Err(Error::Alist {
                line,
                msg: format!("index {v} out of range 1..={bound}"),
            });
        }
        out.push(v - 1);
    }
    if out.len() != deg {
        return Err(Error::Alist {
            line,
            msg: format!("declared degree {deg} but found {} entries", out.len()),
        });
    }
    Ok(out)
}

/// Serializes `h` as a zero-padded alist document.
pub fn write_alist(h: &ParityCheckMatrix) -> String {
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); h.n_vars];
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); h.n_checks];
    for (r, c) in h.entries() {
        cols[c].push(r + 1);
        rows[r].push(c + 1);
    }
    let max_col = cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = rows.iter().map(Vec::len).max().unwrap_or(0);
    let join =
        |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");

    let mut out = String::new();
    let _ = writeln!(out, "{} {}", h.n_vars, h.n_checks);
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut cols.iter().map(Vec::len)));
    let _ = writeln!(out, "{}", join(&mut rows.iter().map(Vec::len)));
    for (list, max) in cols
        .iter()
        .map(|c| (c, max_col))
        .chain(rows.iter().map(|r| (r, max_row)))
    {
        let padded = list.iter().copied().chain(std::iter::repeat(0)).take(max);
        let _ = writeln!(out, "{}", join(&mut padded.into_iter()));
    }
    out
}

/// Bipartite graph of `H` with dense edge ids.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    n_vars: usize,
    n_checks: usize,
    edge_var: Vec<u32>,
    edge_check: Vec<u32>,
    check_offsets: Vec<usize>,
    var_offsets: Vec<usize>,
    var_edges: Vec<u32>,
}

impl TannerGraph {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let n_edges = h.nnz();
        let mut edge_var = Vec::with_capacity(n_edges);
        let mut edge_check = Vec::with_capacity(n_edges);
        let mut check_offsets = vec![0; h.n_checks + 1];
        for (r, c) in h.entries() {
            edge_check.push(r as u32);
            edge_var.push(c as u32);
            check_offsets[r + 1] += 1;
        }
        for j in 0..h.n_checks {
            check_offsets[j + 1] += check_offsets[j];
        }

        let mut var_offsets = vec![0; h.n_vars + 1];
        for &v in &edge_var {
            var_offsets[v as usize + 1] += 1;
        }
        for i in 0..h.n_vars {
            var_offsets[i + 1] += var_offsets[i];
        }
        let mut fill = var_offsets.clone();
        let mut var_edges = vec![0u32; n_edges];
        // Row-major edge order visits each column's checks in ascending order.
        for (e, &v) in edge_var.iter().enumerate() {
            let slot = &mut fill[v as usize];
            var_edges[*slot] = e as u32;
            *slot += 1;
        }

        Self {
            n_vars: h.n_vars,
            n_checks: h.n_checks,
            edge_var,
            edge_check,
            check_offsets,
            var_offsets,
            var_edges,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn n_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Edge ids incident to check `j`; contiguous by construction.
    #[inline]
    pub fn check_edges(&self, j: usize) -> Range<usize> {
        self.check_offsets[j]..self.check_offsets[j + 1]
    }

    /// Edge ids incident to variable `i`, ascending by check index.
    #[inline]
    pub fn var_edges(&self, i: usize) -> &[u32] {
        &self.var_edges[self.var_offsets[i]..self.var_offsets[i + 1]]
    }

    #[inline]
    pub fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e] as usize
    }

    #[inline]
    pub fn edge_check(&self, e: usize) -> usize {
        self.edge_check[e] as usize
    }

    pub fn var_degree(&self, i: usize) -> usize {
        self.var_offsets[i + 1] - self.var_offsets[i]
    }

    pub fn check_degree(&self, j: usize) -> usize {
        self.check_offsets[j + 1] - self.check_offsets[j]
    }

    /// Syndrome of a hard decision vector, evaluated on the graph.
    pub fn syndrome_is_zero(&self, hard: &[u8]) -> bool {
        (0..self.n_checks).all(|j| {
            self.check_edges(j)
                .fold(0u8, |acc, e| acc ^ hard[self.edge_var[e] as usize])
                == 0
        })
    }
}

/// Dimension summary of a code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub rank: usize,
    pub edges: usize,
    /// Average column weight d_v.
    pub avg_col_weight: f64,
    /// Average row weight d_c.
    pub avg_row_weight: f64,
}

impl CodeParams {
    /// `k_override` replaces the default `N - rank(H)`.
    pub fn from_matrix(h: &ParityCheckMatrix, k_override: Option<usize>) -> Result<Self> {
        let rank = h.rank();
        let k = k_override.unwrap_or(h.n_vars - rank);
        if k == 0 || k >= h.n_vars {
            return Err(Error::InvalidMatrix(format!(
                "information length {k} outside 1..{}",
                h.n_vars
            )));
        }
        let e = h.nnz();
        Ok(Self {
            n: h.n_vars,
            m: h.n_checks,
            k,
            rank,
            edges: e,
            avg_col_weight: e as f64 / h.n_vars as f64,
            avg_row_weight: e as f64 / h.n_checks as f64,
        })
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

/// JSON sidecar describing a code on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeMeta {
    pub name: String,
    pub n: usize,
    pub k: usize,
    /// Relative paths resolve against the sidecar's directory.
    pub alist_path: PathBuf,
}

/// A loaded code: matrix, graph, and parameters.
#[derive(Clone, Debug)]
pub struct Code {
    pub name: String,
    pub h: ParityCheckMatrix,
    pub graph: TannerGraph,
    pub params: CodeParams,
}

impl Code {
    pub fn new(
        name: impl Into<String>,
        h: ParityCheckMatrix,
        k_override: Option<usize>,
    ) -> Result<Self> {
        let params = CodeParams::from_matrix(&h, k_override)?;
        let graph = TannerGraph::new(&h);
        Ok(Self {
            name: name.into(),
            h,
            graph,
            params,
        })
    }

    /// Loads either a JSON sidecar or a bare alist file (K from the rank).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|x| x == "json") {
            let meta: CodeMeta = serde_json::from_str(&text)?;
            let alist = if meta.alist_path.is_absolute() {
                meta.alist_path.clone()
            } else {
                path.parent()
                    .unwrap_or(Path::new("."))
                    .join(&meta.alist_path)
            };
            let body = std::fs::read_to_string(&alist).map_err(|e| Error::io(&alist, e))?;
            let h = parse_alist(&body)?;
            if h.n_vars() != meta.n {
                return Err(Error::InvalidMatrix(format!(
                    "metadata says n={} but alist has {} columns",
                    meta.n,
                    h.n_vars()
                )));
            }
            Self::new(meta.name, h, Some(meta.k))
        } else {
            let h = parse_alist(&text)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Self::new(name, h, None)
        }
    }

    pub fn n(&self) -> usize {
        self.params.n
    }
}
