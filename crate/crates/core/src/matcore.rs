//! Dense symmetric-matrix kernel.
//!
//! Indices are 0-based inside the library. Anything user-facing (error
//! messages, `Display` impls, file formats) reports them 1-based.

use std::fmt;

use itertools::Itertools;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance used for every "is this zero" decision.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Reciprocal condition estimates below this are treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Scale-relative zero test shared by minors and precision entries.
///
/// A value `v` computed from data of magnitude `scale` counts as zero iff
/// `|v| <= rel * max(1, scale)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TolPolicy {
    pub rel: f64,
}

impl Default for TolPolicy {
    fn default() -> Self {
        Self {
            rel: DEFAULT_REL_TOL,
        }
    }
}

impl TolPolicy {
    pub fn new(rel: f64) -> Result<Self> {
        if !(rel.is_finite() && rel >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be a finite non-negative number, got {rel}"
            )));
        }
        Ok(Self { rel })
    }

    pub fn vanishes(&self, value: f64, scale: f64) -> bool {
        value.abs() <= self.rel * scale.max(1.0)
    }
}

/// A real symmetric matrix, stored densely in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from rows, requiring exact symmetry and finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("matrix must have dimension >= 1".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({}, {}) is not finite",
                        i + 1,
                        j + 1
                    )));
                }
            }
            data.extend_from_slice(row);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::Asymmetric { row: i + 1, col: j + 1 });
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from the upper triangle of `f` (entries with `i <= j`),
    /// mirroring them into the lower triangle.
    pub fn from_upper_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "matrix must have dimension >= 1");
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self::from_upper_fn(n, |_, _| value)
    }

    pub fn ones(n: usize) -> Self {
        Self::constant(n, 1.0)
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_upper_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_upper_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Sets `(i, j)` and `(j, i)` together.
    pub(crate) fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Entrywise quotient. Used to recover a covariation matrix from a product.
    pub fn entrywise_div(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a / b)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    /// Converts a nearly symmetric dense matrix by averaging it with its transpose.
    pub fn from_dmatrix_symmetrized(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        Self::from_upper_fn(m.nrows(), |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        })
    }

    /// Principal submatrix on `idx`.
    pub fn principal(&self, idx: &IndexSet) -> Result<SymMatrix> {
        idx.check_bounds(self.n)?;
        if idx.is_empty() {
            return Err(Error::InvalidArgument("principal submatrix of an empty index set".into()));
        }
        let ix = idx.as_slice();
        Ok(Self::from_upper_fn(ix.len(), |a, b| self.get(ix[a], ix[b])))
    }

    pub fn det(&self) -> f64 {
        det_dense(&self.data, self.n)
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row = self.row(i).iter().map(|v| format!("{v:>12.6}")).join(" ");
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

/// A strictly increasing list of variable indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Sorts the indices; duplicates are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "duplicate index {} in index set",
                w[0] + 1
            )));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn singleton(i: usize) -> Self {
        Self(vec![i])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut v: Vec<usize> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.0.iter().copied().filter(|i| other.contains(*i)).collect())
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self(self.0.iter().copied().filter(|i| !other.contains(*i)).collect())
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.0.iter().all(|i| !other.contains(*i))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().all(|i| other.contains(*i))
    }

    pub fn check_bounds(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&i) if i >= n => Err(Error::IndexOutOfRange {
                index: i + 1,
                dim: n,
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().map(|i| i + 1).join(","))
    }
}

/// A rectangular block `M[rows, cols]` with its global index sets.
#[derive(Clone, Debug, PartialEq)]
pub struct RectBlock {
    pub rows: IndexSet,
    pub cols: IndexSet,
    values: Vec<f64>,
}

impl RectBlock {
    pub fn new(rows: IndexSet, cols: IndexSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows.len() * cols.len() {
            return Err(Error::DimensionMismatch {
                left: rows.len() * cols.len(),
                right: values.len(),
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_fn(rows: IndexSet, cols: IndexSet, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for r in rows.iter() {
            for c in cols.iter() {
                values.push(f(r, c));
            }
        }
        Self { rows, cols, values }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    /// Entry at local (block) coordinates.
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.cols.len() + b]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.ncols().max(1)).map(|c| c.to_vec()).collect()
    }
}

pub fn submatrix(m: &SymMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<RectBlock> {
    rows.check_bounds(m.dim())?;
    cols.check_bounds(m.dim())?;
    Ok(RectBlock::from_fn(rows.clone(), cols.clone(), |r, c| m.get(r, c)))
}

/// Entrywise (Schur/Hadamard) product.
pub fn schur(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    a.zip_with(b, |x, y| x * y)
}

/// One k×k minor of a block, with global row/column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Minor {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub value: f64,
    /// Product of the row-wise max-abs entries of the k×k submatrix.
    pub scale: f64,
}

impl Minor {
    pub fn vanishes(&self, tol: &TolPolicy) -> bool {
        tol.vanishes(self.value, self.scale)
    }
}

impl fmt::Display for Minor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "det Σ[{}, {}] = {}", self.rows, self.cols, self.value)
    }
}

/// Every k×k minor of `block`, row subsets outermost, both in lexicographic order.
pub fn minors(block: &RectBlock, k: usize) -> Result<Vec<Minor>> {
    if k == 0 || k > block.nrows().min(block.ncols()) {
        return Err(Error::InvalidArgument(format!(
            "minor order {k} is not in 1..={} for a {}x{} block",
            block.nrows().min(block.ncols()),
            block.nrows(),
            block.ncols()
        )));
    }
    let rows = block.rows.as_slice();
    let cols = block.cols.as_slice();
    let mut out = Vec::new();
    let mut buf = vec![0.0; k * k];
    for rsub in (0..rows.len()).combinations(k) {
        for csub in (0..cols.len()).combinations(k) {
            let mut scale = 1.0;
            for (a, &r) in rsub.iter().enumerate() {
                let mut row_max = 0.0_f64;
                for (b, &c) in csub.iter().enumerate() {
                    let v = block.get(r, c);
                    buf[a * k + b] = v;
                    row_max = row_max.max(v.abs());
                }
                scale *= row_max;
            }
            out.push(Minor {
                rows: IndexSet(rsub.iter().map(|&a| rows[a]).collect()),
                cols: IndexSet(csub.iter().map(|&b| cols[b]).collect()),
                value: det_dense(&buf, k),
                scale,
            });
        }
    }
    Ok(out)
}

pub fn all_minors(block: &RectBlock, k: usize) -> Result<Vec<f64>> {
    Ok(minors(block, k)?.into_iter().map(|m| m.value).collect())
}

/// Determinant of a square block.
pub fn det(block: &RectBlock) -> Result<f64> {
    if block.nrows() != block.ncols() {
        return Err(Error::DimensionMismatch {
            left: block.nrows(),
            right: block.ncols(),
        });
    }
    Ok(det_dense(block.values(), block.nrows()))
}

/// Closed forms up to 3×3 keep small integer minors exact; LU beyond that.
fn det_dense(a: &[f64], k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => DMatrix::from_row_slice(k, k, a).determinant(),
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse with a reciprocal-condition guard (1-norm estimate).
pub fn inverse(m: &SymMatrix) -> Result<SymMatrix> {
    let dm = m.to_dmatrix();
    let inv = dm
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { rcond: 0.0 })?;
    let denom = norm1(&dm) * norm1(&inv);
    let rcond = if denom.is_finite() && denom > 0.0 {
        1.0 / denom
    } else {
        0.0
    };
    if rcond < RCOND_THRESHOLD {
        return Err(Error::Singular { rcond });
    }
    Ok(SymMatrix::from_dmatrix_symmetrized(&inv))
}

pub fn eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.to_dmatrix())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &SymMatrix) -> f64 {
    eigenvalues(m)[0]
}

/// True iff the smallest eigenvalue is at least `-tol * max(1, max|entry|)`.
pub fn is_psd(m: &SymMatrix, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol * m.max_abs().max(1.0)
}

/// `ln det m` when `m` is positive definite (Cholesky succeeds), else `None`.
pub fn log_det_pd(m: &SymMatrix) -> Option<f64> {
    let chol = m.to_dmatrix().cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.dim() {
        let d = l[(i, i)];
        if !(d > 0.0 && d.is_finite()) {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

pub fn is_positive_definite(m: &SymMatrix) -> bool {
    log_det_pd(m).is_some()
}

/// Embeds `block` into an n×n matrix of ones, mirroring every block entry so
/// the result is symmetric. Fails if the block disagrees with its own mirror.
pub fn embed_block(n: usize, block: &RectBlock) -> Result<SymMatrix> {
    block.rows.check_bounds(n)?;
    block.cols.check_bounds(n)?;
    let mut assigned: Vec<Option<f64>> = vec![None; n * n];
    let mut out = SymMatrix::ones(n);
    for (a, r) in block.rows.iter().enumerate() {
        for (b, c) in block.cols.iter().enumerate() {
            let v = block.get(a, b);
            for (x, y) in [(r, c), (c, r)] {
                match assigned[x * n + y] {
                    Some(prev) if prev != v => {
                        return Err(Error::InconsistentEmbedding {
                            row: x + 1,
                            col: y + 1,
                        })
                    }
                    _ => assigned[x * n + y] = Some(v),
                }
            }
            out.set_sym(r, c, v);
        }
    }
    Ok(out)
}

/// `D[rows, cols]` embedded into a symmetric matrix of ones.
pub fn floor_one(d: &SymMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<SymMatrix> {
    embed_block(d.dim(), &submatrix(d, rows, cols)?)
}

/// `value` on `rows × cols` (and the mirror), ones elsewhere.
pub fn ones_block(n: usize, rows: &IndexSet, cols: &IndexSet, value: f64) -> Result<SymMatrix> {
    let block = RectBlock::from_fn(rows.clone(), cols.clone(), |_, _| value);
    embed_block(n, &block)
}
