//! Comparison predictors: a pooled two-state Markov chain, fair-coin guessing,
//! and a per-row autoregressive model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SparseBinaryMatrix;
use crate::masks::HeldOutSet;

/// Row-stochastic 2×2 transition matrix over states {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionModel {
    pub t: [[f64; 2]; 2],
}

impl TransitionModel {
    pub fn prob(&self, from: u8, to: u8) -> f64 {
        self.t[from as usize][to as usize]
    }
}

/// Counts transitions between consecutive columns of every row, pooled over
/// rows. A state that is never left gets the absorbing row `[1, 0]`.
pub fn fit_markov(x_train: &SparseBinaryMatrix) -> Result<TransitionModel> {
    if x_train.cols() < 2 {
        return Err(Error::InvalidInput(format!(
            "Markov fit needs at least 2 columns, got {}",
            x_train.cols()
        )));
    }
    if x_train.rows() == 0 {
        return Err(Error::InvalidInput("Markov fit needs at least one row".into()));
    }
    let mut counts = [[0u64; 2]; 2];
    for i in 0..x_train.rows() {
        let row = x_train.row_dense(i);
        for pair in row.windows(2) {
            counts[pair[0] as usize][pair[1] as usize] += 1;
        }
    }
    let mut t = [[1.0, 0.0], [1.0, 0.0]];
    for (state, c) in counts.iter().enumerate() {
        let total = c[0] + c[1];
        if total > 0 {
            t[state] = [c[0] as f64 / total as f64, c[1] as f64 / total as f64];
        }
    }
    Ok(TransitionModel { t })
}

/// Probability of a 1 following `prev_state`.
pub fn predict_markov(model: &TransitionModel, prev_state: u8) -> f64 {
    model.prob(prev_state.min(1), 1)
}

/// Predicts each held-out cell from the training value immediately to its
/// left. Column 0 and cells whose left neighbour is itself held out use state 0.
pub fn markov_predict_cells(model: &TransitionModel, x_train: &SparseBinaryMatrix, held_out: &HeldOutSet) -> Vec<f64> {
    held_out
        .iter()
        .map(|(i, j)| {
            let prev = j > 0 && x_train.contains(i, j - 1);
            predict_markov(model, prev as u8)
        })
        .collect()
}

/// Independent fair coin flips.
pub fn random_predict(n_cells: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_cells).map(|_| rng.gen_bool(0.5) as u8).collect()
}

/// `x_t = c + Σ φ_i x_{t−i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl ArModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    fn intercept_only(order: usize, series: &[f64]) -> Self {
        let mean = if series.is_empty() {
            0.0
        } else {
            series.iter().sum::<f64>() / series.len() as f64
        };
        Self {
            coefficients: vec![0.0; order],
            intercept: mean,
        }
    }
}

/// Ordinary least squares on lagged values. Falls back to the series mean
/// when the lag design is rank deficient or has too few rows.
pub fn fit_ar(series: &[f64], order: usize) -> Result<ArModel> {
    if order == 0 {
        return Err(Error::InvalidConfig("AR order must be at least 1".into()));
    }
    if series.len() <= order {
        return Err(Error::InvalidInput(format!(
            "AR({order}) needs more than {order} observations, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in series".into()));
    }
    let k = order + 1;
    let n_eq = series.len() - order;
    if n_eq < k {
        return Ok(ArModel::intercept_only(order, series));
    }

    // Normal equations over design rows [1, x_{t-1}, ..., x_{t-p}].
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    let mut regressors = vec![0.0; k];
    for t in order..series.len() {
        regressors[0] = 1.0;
        for lag in 1..=order {
            regressors[lag] = series[t - lag];
        }
        for a in 0..k {
            xty[a] += regressors[a] * series[t];
            for b in 0..k {
                xtx[a][b] += regressors[a] * regressors[b];
            }
        }
    }
    match solve(xtx, xty) {
        Some(beta) => Ok(ArModel {
            intercept: beta[0],
            coefficients: beta[1..].to_vec(),
        }),
        None => Ok(ArModel::intercept_only(order, series)),
    }
}

/// One-step-ahead forecast after `history`. Lags before the start of the
/// history are taken as 0.
pub fn predict_ar(model: &ArModel, history: &[f64]) -> f64 {
    model.intercept
        + model
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, phi)| {
                let lag = i + 1;
                let value = if history.len() >= lag {
                    history[history.len() - lag]
                } else {
                    0.0
                };
                phi * value
            })
            .sum::<f64>()
}

/// One AR model per row, fitted on that row's training series; each held-out
/// cell is forecast from the training values to its left.
pub fn ar_predict_cells(x_train: &SparseBinaryMatrix, held_out: &HeldOutSet, order: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(held_out.len());
    let mut cached: Option<(usize, Vec<f64>, ArModel)> = None;
    for (i, j) in held_out.iter() {
        if cached.as_ref().is_none_or(|(row, _, _)| *row != i) {
            let series: Vec<f64> = x_train.row_dense(i).into_iter().map(f64::from).collect();
            let model = if series.len() > order {
                fit_ar(&series, order)?
            } else {
                ArModel::intercept_only(order, &series)
            };
            cached = Some((i, series, model));
        }
        let (_, series, model) = cached.as_ref().expect("cache filled above");
        out.push(predict_ar(model, &series[..j]));
    }
    Ok(out)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() <= 1e-10 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (k, row) in lower.iter_mut().enumerate() {
            let factor = row[col] / pivot_row[col];
            if factor == 0.0 {
                continue;
            }
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= factor * p;
            }
            b[col + 1 + k] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}
