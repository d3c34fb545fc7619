//! Indicator (W) and attenuation (G) matrices.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseBinaryMatrix};

/// Cells removed from the training matrix for evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeldOutSet {
    cells: BTreeSet<(usize, usize)>,
}

impl HeldOutSet {
    pub fn new(cells: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            cells: cells.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.cells.contains(&(row, col))
    }

    /// Row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells.iter().copied()
    }
}

impl FromIterator<(usize, usize)> for HeldOutSet {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        Self::new(iter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair {
    pub w: DenseMatrix,
    pub g: DenseMatrix,
}

impl MaskPair {
    /// W from the held-out cells and G from the (already masked) training matrix.
    pub fn build(x_train: &SparseBinaryMatrix, held_out: &HeldOutSet) -> Result<Self> {
        let w = build_indicator(x_train.shape(), held_out)?;
        let g = build_attenuation(x_train);
        Ok(Self { w, g })
    }

    /// Masks for a matrix with nothing held out.
    pub fn unmasked(x: &SparseBinaryMatrix) -> Self {
        Self {
            w: DenseMatrix::ones(x.rows(), x.cols()),
            g: build_attenuation(x),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.w.shape()
    }
}

/// All ones except the held-out cells. Training zeros are known negatives.
pub fn build_indicator(shape: (usize, usize), held_out: &HeldOutSet) -> Result<DenseMatrix> {
    let (rows, cols) = shape;
    let mut w = DenseMatrix::ones(rows, cols);
    for (r, c) in held_out.iter() {
        if r >= rows || c >= cols {
            return Err(Error::OutOfRange {
                row: r,
                col: c,
                rows,
                cols,
            });
        }
        w.set(r, c, 0.0);
    }
    Ok(w)
}

/// Per row: zero before the first positive, one at it, then `1 - 1/(M - c)`
/// for 0-based column `c`, which decays to exactly zero at the last column.
/// Later positives do not restart the ramp. Rows without positives stay zero.
pub fn build_attenuation(x_train: &SparseBinaryMatrix) -> DenseMatrix {
    let cols = x_train.cols();
    let mut g = DenseMatrix::zeros(x_train.rows(), cols);
    for i in 0..x_train.rows() {
        let Some(first) = x_train.first_in_row(i) else {
            continue;
        };
        let row = g.row_mut(i);
        row[first] = 1.0;
        for (c, v) in row.iter_mut().enumerate().skip(first + 1) {
            *v = 1.0 - 1.0 / (cols - c) as f64;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn indicator_examples() {
        let w = build_indicator((2, 2), &HeldOutSet::new([(0, 1)])).unwrap();
        assert_eq!(w.values(), &[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(
            build_indicator((2, 3), &HeldOutSet::default()).unwrap(),
            DenseMatrix::ones(2, 3)
        );
        let all = HeldOutSet::new((0..2).flat_map(|i| (0..2).map(move |j| (i, j))));
        assert_eq!(build_indicator((2, 2), &all).unwrap(), DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn indicator_rejects_out_of_range() {
        assert!(matches!(
            build_indicator((2, 2), &HeldOutSet::new([(0, 2)])),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn attenuation_examples() {
        let x = SparseBinaryMatrix::from_dense_rows(&[vec![1, 0, 0]]).unwrap();
        let g = build_attenuation(&x);
        assert_abs_diff_eq!(g.row(0)[0], 1.0);
        assert_abs_diff_eq!(g.row(0)[1], 0.5);
        assert_abs_diff_eq!(g.row(0)[2], 0.0);

        let x = SparseBinaryMatrix::from_dense_rows(&[vec![0, 1, 0, 0, 0]]).unwrap();
        let g = build_attenuation(&x);
        for (got, want) in g.row(0).iter().zip([0.0, 1.0, 2.0 / 3.0, 0.5, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }

        let x = SparseBinaryMatrix::from_dense_rows(&[vec![0, 0, 0, 0]]).unwrap();
        assert_eq!(build_attenuation(&x), DenseMatrix::zeros(1, 4));
    }

    #[test]
    fn later_positives_do_not_reset_ramp() {
        let a = SparseBinaryMatrix::from_dense_rows(&[vec![0, 1, 0, 0, 1, 0]]).unwrap();
        let b = SparseBinaryMatrix::from_dense_rows(&[vec![0, 1, 0, 0, 0, 0]]).unwrap();
        assert_eq!(build_attenuation(&a), build_attenuation(&b));
    }

    #[test]
    fn first_positive_in_last_column() {
        let x = SparseBinaryMatrix::from_dense_rows(&[vec![0, 0, 1]]).unwrap();
        assert_eq!(build_attenuation(&x).row(0), &[0.0, 0.0, 1.0]);
    }
}
