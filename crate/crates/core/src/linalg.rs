//! Dense and sparse-binary matrix primitives.
//!
//! Everything here is row-major and every binary operation checks shapes
//! explicitly. There is no broadcasting.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 1.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            values: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from row-major values, rejecting a wrong length or any
    /// non-finite entry.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos / cols.max(1), pos % cols.max(1)));
        }
        Ok(Self { rows, cols, values })
    }

    /// Unchecked; non-finite values are allowed through so callers can
    /// detect divergence themselves.
    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::from_vec(n, m, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same_shape(op, self, other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// Dense product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.values[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_same_shape("max_abs_diff", self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

fn check_same_shape(op: &'static str, a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

/// Entrywise product `a ⊙ b`.
pub fn hadamard(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.zip_with(b, "hadamard", |x, y| x * y)
}

/// Squared Frobenius norm.
pub fn frobenius_norm_sq(a: &DenseMatrix) -> f64 {
    a.values.iter().map(|v| v * v).sum()
}

/// `u · vᵀ` for `u` of shape N×d and `v` of shape M×d.
pub fn low_rank_product(u: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    if u.cols != v.cols {
        return Err(Error::ShapeMismatch {
            op: "low_rank_product",
            left: u.shape(),
            right: v.shape(),
        });
    }
    Ok(DenseMatrix::from_fn(u.rows, v.rows, |i, j| dot(u.row(i), v.row(j))))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Binary N×M matrix stored as the set of its 1-coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeSet<(usize, usize)>,
}

impl SparseBinaryMatrix {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: BTreeSet::new(),
        }
    }

    /// Rejects out-of-range or repeated coordinates.
    pub fn new(rows: usize, cols: usize, coords: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut m = Self::empty(rows, cols);
        for (r, c) in coords {
            m.check(r, c)?;
            if !m.entries.insert((r, c)) {
                return Err(Error::DuplicateEntry(r, c));
            }
        }
        Ok(m)
    }

    /// Like [`SparseBinaryMatrix::new`] but repeated coordinates collapse.
    pub fn from_coords_dedup(
        rows: usize,
        cols: usize,
        coords: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut m = Self::empty(rows, cols);
        for (r, c) in coords {
            m.check(r, c)?;
            m.entries.insert((r, c));
        }
        Ok(m)
    }

    pub fn from_dense_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let coords = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, &v)| v != 0).map(move |(j, _)| (i, j)));
        Self::new(n, m, coords)
    }

    fn check(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::OutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of ones, `N_x`.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn density(&self) -> f64 {
        if self.rows * self.cols == 0 {
            0.0
        } else {
            self.nnz() as f64 / (self.rows * self.cols) as f64
        }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.entries.contains(&(row, col))
    }

    /// Ones in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().copied()
    }

    /// Column indices of the ones in `row`, ascending.
    pub fn row_entries(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.entries.range((row, 0)..(row + 1, 0)).map(|&(_, c)| c)
    }

    pub fn first_in_row(&self, row: usize) -> Option<usize> {
        self.row_entries(row).next()
    }

    pub fn row_dense(&self, row: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.cols];
        for c in self.row_entries(row) {
            out[c] = 1;
        }
        out
    }

    pub fn insert(&mut self, row: usize, col: usize) -> Result<bool> {
        self.check(row, col)?;
        Ok(self.entries.insert((row, col)))
    }

    pub fn remove(&mut self, row: usize, col: usize) -> bool {
        self.entries.remove(&(row, col))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (r, c) in self.iter() {
            d.set(r, c, 1.0);
        }
        d
    }

    /// Same ones with the rows reordered so that output row `i` is input row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.rows {
            return Err(Error::InvalidInput("permutation length differs from row count".into()));
        }
        let mut inverse = vec![usize::MAX; self.rows];
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.rows || inverse[old] != usize::MAX {
                return Err(Error::InvalidInput("not a permutation".into()));
            }
            inverse[old] = new;
        }
        Self::new(self.rows, self.cols, self.iter().map(|(r, c)| (inverse[r], c)))
    }
}
