//! Consistency-regularized weighted matrix factorization.
//!
//! The loss minimized over non-negative `U` (N×d) and `V` (M×d) is
//!
//! ```text
//! L = ‖W ⊙ (X − UVᵀ)‖² + γ1‖U‖² + γ2‖V‖² + μ‖G ⊙ (1 − UVᵀ)‖²
//! ```
//!
//! and training alternates projected gradient steps on `U` and `V`. Setting
//! `μ = 0` gives plain weighted matrix factorization (WMF).

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, low_rank_product, DenseMatrix, SparseBinaryMatrix};
use crate::masks::MaskPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Latent dimension.
    pub d: usize,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Weight of the consistency term.
    pub mu: f64,
    /// Gradient step.
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop once `|L_prev − L| / L_prev` falls below this; 0 runs all `max_iters`.
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            d: 10,
            gamma1: 0.2,
            gamma2: 0.2,
            mu: 0.2,
            lambda: 0.001,
            max_iters: 500,
            rel_tol: 1e-6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if !(self.gamma1 >= 0.0 && self.gamma2 >= 0.0) {
            return bad("gamma1 and gamma2 must be non-negative");
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return bad("mu must be non-negative");
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.rel_tol >= 0.0) {
            return bad("rel_tol must be non-negative");
        }
        Ok(())
    }

    /// The WMF ablation of this config.
    pub fn without_consistency(&self) -> Self {
        Self {
            mu: 0.0,
            ..self.clone()
        }
    }
}

/// Non-negative user factors `u` (N×d) and time factors `v` (M×d).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

impl FactorPair {
    /// Entries uniform in `[0, 1/√d)`, so initial products are O(1).
    pub fn random(n: usize, m: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (d as f64).sqrt();
        let u = DenseMatrix::from_fn(n, d, |_, _| rng.gen::<f64>() * scale);
        let v = DenseMatrix::from_fn(m, d, |_, _| rng.gen::<f64>() * scale);
        Self { u, v }
    }

    pub fn dim(&self) -> usize {
        self.u.cols()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub objective_per_iter: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl TrainTrace {
    /// `iteration,objective` with 1-based iterations.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "objective"])?;
        for (i, obj) in self.objective_per_iter.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format!("{obj:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_dims(x: &SparseBinaryMatrix, masks: &MaskPair, f: &FactorPair) -> Result<()> {
    let shape = x.shape();
    for (other, op) in [(masks.w.shape(), "indicator"), (masks.g.shape(), "attenuation")] {
        if other != shape {
            return Err(Error::ShapeMismatch {
                op,
                left: shape,
                right: other,
            });
        }
    }
    if f.u.rows() != shape.0 || f.v.rows() != shape.1 || f.u.cols() != f.v.cols() {
        return Err(Error::ShapeMismatch {
            op: "factors",
            left: f.u.shape(),
            right: f.v.shape(),
        });
    }
    Ok(())
}

/// Residual pieces that both the loss and its gradients are built from.
struct Residuals {
    /// `W ⊙ (X − P)`
    fit: DenseMatrix,
    /// `G ⊙ (1 − P)`, absent when the consistency term is off.
    consistency: Option<DenseMatrix>,
}

fn residuals(x: &DenseMatrix, w: &DenseMatrix, g: Option<&DenseMatrix>, p: &DenseMatrix) -> Residuals {
    let fit = DenseMatrix::from_raw(
        p.rows(),
        p.cols(),
        x.values()
            .iter()
            .zip(w.values())
            .zip(p.values())
            .map(|((&xv, &wv), &pv)| wv * (xv - pv))
            .collect(),
    );
    let consistency = g.map(|g| DenseMatrix::from_fn(p.rows(), p.cols(), |i, j| g.get(i, j) * (1.0 - p.get(i, j))));
    Residuals { fit, consistency }
}

/// Coefficient matrix `E = W⊙(X−P) + μ G⊙G⊙(1−P)`; both gradients are
/// `−2·E·(other factor) + 2γ·(own factor)`.
fn gradient_weights(res: &Residuals, g: Option<&DenseMatrix>, mu: f64) -> DenseMatrix {
    let mut e = res.fit.clone();
    if let (Some(c), Some(g)) = (&res.consistency, g) {
        for ((ev, &cv), &gv) in e.values_mut().iter_mut().zip(c.values()).zip(g.values()) {
            *ev += mu * gv * cv;
        }
    }
    e
}

fn loss(res: &Residuals, f: &FactorPair, cfg: &TrainConfig) -> f64 {
    use crate::linalg::frobenius_norm_sq;
    let mut l =
        frobenius_norm_sq(&res.fit) + cfg.gamma1 * frobenius_norm_sq(&f.u) + cfg.gamma2 * frobenius_norm_sq(&f.v);
    if let Some(c) = &res.consistency {
        l += cfg.mu * frobenius_norm_sq(c);
    }
    l
}

fn grad_u_from(e: &DenseMatrix, f: &FactorPair, gamma1: f64) -> DenseMatrix {
    let d = f.dim();
    let mut grad = f.u.scale(2.0 * gamma1);
    for i in 0..e.rows() {
        let gi = grad.row_mut(i);
        for (j, &eij) in e.row(i).iter().enumerate() {
            if eij == 0.0 {
                continue;
            }
            let vj = f.v.row(j);
            for k in 0..d {
                gi[k] -= 2.0 * eij * vj[k];
            }
        }
    }
    grad
}

fn grad_v_from(e: &DenseMatrix, f: &FactorPair, gamma2: f64) -> DenseMatrix {
    let d = f.dim();
    let mut grad = f.v.scale(2.0 * gamma2);
    let gv = grad.values_mut();
    for i in 0..e.rows() {
        let ui = f.u.row(i);
        for (j, &eij) in e.row(i).iter().enumerate() {
            if eij == 0.0 {
                continue;
            }
            let gj = &mut gv[j * d..(j + 1) * d];
            for k in 0..d {
                gj[k] -= 2.0 * eij * ui[k];
            }
        }
    }
    grad
}

/// The hCWMF loss; always ≥ 0.
pub fn objective(x: &SparseBinaryMatrix, masks: &MaskPair, f: &FactorPair, cfg: &TrainConfig) -> Result<f64> {
    check_dims(x, masks, f)?;
    let p = low_rank_product(&f.u, &f.v)?;
    let res = residuals(&x.to_dense(), &masks.w, Some(&masks.g), &p);
    Ok(loss(&res, f, cfg))
}

/// ∂L/∂U = −2 (W⊙(X−UVᵀ)) V + 2γ1 U − 2μ (G⊙G⊙(1−UVᵀ)) V
pub fn grad_u(x: &SparseBinaryMatrix, masks: &MaskPair, f: &FactorPair, cfg: &TrainConfig) -> Result<DenseMatrix> {
    check_dims(x, masks, f)?;
    let p = low_rank_product(&f.u, &f.v)?;
    let res = residuals(&x.to_dense(), &masks.w, Some(&masks.g), &p);
    Ok(grad_u_from(
        &gradient_weights(&res, Some(&masks.g), cfg.mu),
        f,
        cfg.gamma1,
    ))
}

/// ∂L/∂V = −2 (W⊙(X−UVᵀ))ᵀ U + 2γ2 V − 2μ (G⊙G⊙(1−UVᵀ))ᵀ U
pub fn grad_v(x: &SparseBinaryMatrix, masks: &MaskPair, f: &FactorPair, cfg: &TrainConfig) -> Result<DenseMatrix> {
    check_dims(x, masks, f)?;
    let p = low_rank_product(&f.u, &f.v)?;
    let res = residuals(&x.to_dense(), &masks.w, Some(&masks.g), &p);
    Ok(grad_v_from(
        &gradient_weights(&res, Some(&masks.g), cfg.mu),
        f,
        cfg.gamma2,
    ))
}

/// Reconstruction `UVᵀ`, reported unclamped.
pub fn predict(f: &FactorPair) -> DenseMatrix {
    low_rank_product(&f.u, &f.v).expect("factor pair with matching latent dimension")
}

fn project_step(target: &mut DenseMatrix, grad: &DenseMatrix, step: f64) {
    for (t, &g) in target.values_mut().iter_mut().zip(grad.values()) {
        *t = (*t - step * g).max(0.0);
    }
}

/// Alternating projected gradient descent on the full hCWMF loss.
pub fn train(x: &SparseBinaryMatrix, masks: &MaskPair, cfg: &TrainConfig) -> Result<(FactorPair, TrainTrace)> {
    run(x, &masks.w, Some(&masks.g), cfg)
}

/// Same loop with the consistency term removed outright (WMF). Equivalent to
/// [`train`] with `μ = 0`.
pub fn train_wmf(x: &SparseBinaryMatrix, w: &DenseMatrix, cfg: &TrainConfig) -> Result<(FactorPair, TrainTrace)> {
    run(x, w, None, cfg)
}

fn run(
    x: &SparseBinaryMatrix,
    w: &DenseMatrix,
    g: Option<&DenseMatrix>,
    cfg: &TrainConfig,
) -> Result<(FactorPair, TrainTrace)> {
    cfg.validate()?;
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::InvalidInput("cannot factorize an empty matrix".into()));
    }
    let (n, m) = x.shape();
    let mut f = FactorPair::random(n, m, cfg.d, cfg.seed);
    let masks_shape_ok = w.shape() == (n, m) && g.is_none_or(|g| g.shape() == (n, m));
    if !masks_shape_ok {
        return Err(Error::ShapeMismatch {
            op: "train",
            left: (n, m),
            right: w.shape(),
        });
    }
    let xd = x.to_dense();

    let mut p = low_rank_product(&f.u, &f.v)?;
    let mut prev = loss(&residuals(&xd, w, g, &p), &f, cfg);
    let mut trace = TrainTrace::default();

    for iter in 1..=cfg.max_iters {
        let e = gradient_weights(&residuals(&xd, w, g, &p), g, cfg.mu);
        let gu = grad_u_from(&e, &f, cfg.gamma1);
        project_step(&mut f.u, &gu, cfg.lambda);

        p = low_rank_product(&f.u, &f.v)?;
        let e = gradient_weights(&residuals(&xd, w, g, &p), g, cfg.mu);
        let gv = grad_v_from(&e, &f, cfg.gamma2);
        project_step(&mut f.v, &gv, cfg.lambda);

        p = low_rank_product(&f.u, &f.v)?;
        let cur = loss(&residuals(&xd, w, g, &p), &f, cfg);
        if !cur.is_finite() {
            return Err(Error::Diverged {
                iteration: iter,
                last: prev,
            });
        }
        trace.objective_per_iter.push(cur);
        trace.iterations_run = iter;

        let rel = (prev - cur).abs() / prev.abs().max(f64::MIN_POSITIVE);
        prev = cur;
        if rel < cfg.rel_tol {
            trace.converged = true;
            break;
        }
    }
    log::debug!(
        "trained {n}x{m} d={} mu={} in {} iterations (converged: {})",
        cfg.d,
        cfg.mu,
        trace.iterations_run,
        trace.converged
    );
    Ok((f, trace))
}

/// Prediction at the given cells without materializing the full product.
pub fn predict_cells(f: &FactorPair, cells: impl IntoIterator<Item = (usize, usize)>) -> Vec<f64> {
    cells.into_iter().map(|(i, j)| dot(f.u.row(i), f.v.row(j))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::HeldOutSet;

    fn one_by_one(u: f64, v: f64) -> (SparseBinaryMatrix, MaskPair, FactorPair) {
        let x = SparseBinaryMatrix::from_dense_rows(&[vec![1]]).unwrap();
        let masks = MaskPair::unmasked(&x);
        let f = FactorPair {
            u: DenseMatrix::from_vec(1, 1, vec![u]).unwrap(),
            v: DenseMatrix::from_vec(1, 1, vec![v]).unwrap(),
        };
        (x, masks, f)
    }

    fn cfg(gamma: f64, mu: f64) -> TrainConfig {
        TrainConfig {
            gamma1: gamma,
            gamma2: gamma,
            mu,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn objective_examples() {
        let (x, masks, f) = one_by_one(0.0, 0.0);
        assert_eq!(objective(&x, &masks, &f, &cfg(0.0, 1.0)).unwrap(), 2.0);
        let (x, masks, f) = one_by_one(1.0, 1.0);
        assert_eq!(objective(&x, &masks, &f, &cfg(0.0, 1.0)).unwrap(), 0.0);
        assert!((objective(&x, &masks, &f, &cfg(0.2, 0.0)).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let (x, masks, f) = one_by_one(1.0, 1.0);
        let c = cfg(0.0, 0.0);
        assert_eq!(grad_u(&x, &masks, &f, &c).unwrap().values(), &[0.0]);
        assert_eq!(grad_v(&x, &masks, &f, &c).unwrap().values(), &[0.0]);
        let (x, masks, f) = one_by_one(0.0, 1.0);
        assert_eq!(grad_u(&x, &masks, &f, &c).unwrap().values(), &[-2.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (x, _, f) = one_by_one(1.0, 1.0);
        let masks = MaskPair {
            w: DenseMatrix::ones(2, 1),
            g: DenseMatrix::ones(1, 1),
        };
        assert!(matches!(
            objective(&x, &masks, &f, &cfg(0.0, 0.0)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn rank_one_fit_converges() {
        let x = SparseBinaryMatrix::from_dense_rows(&[vec![1]]).unwrap();
        let masks = MaskPair::unmasked(&x);
        let c = TrainConfig {
            d: 1,
            gamma1: 0.0,
            gamma2: 0.0,
            mu: 0.0,
            lambda: 0.05,
            max_iters: 5000,
            rel_tol: 1e-12,
            seed: 3,
        };
        let (f, trace) = train(&x, &masks, &c).unwrap();
        assert!((predict(&f).get(0, 0) - 1.0).abs() < 1e-2);
        assert_eq!(trace.objective_per_iter.len(), trace.iterations_run);
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let x = SparseBinaryMatrix::from_dense_rows(&[vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
        let masks = MaskPair::build(&x, &HeldOutSet::default()).unwrap();
        let c = TrainConfig {
            d: 2,
            max_iters: 50,
            seed: 11,
            ..TrainConfig::default()
        };
        let (a, ta) = train(&x, &masks, &c).unwrap();
        let (b, tb) = train(&x, &masks, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn divergence_names_the_iteration() {
        let x = SparseBinaryMatrix::from_dense_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        let masks = MaskPair::unmasked(&x);
        let c = TrainConfig {
            d: 2,
            lambda: 1e200,
            max_iters: 200,
            ..TrainConfig::default()
        };
        match train(&x, &masks, &c) {
            Err(Error::Diverged { iteration, .. }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        for c in [
            TrainConfig {
                d: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                lambda: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                mu: -1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                max_iters: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                rel_tol: -1.0,
                ..TrainConfig::default()
            },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn predict_zero_factors() {
        let f = FactorPair {
            u: DenseMatrix::zeros(2, 3),
            v: DenseMatrix::zeros(4, 3),
        };
        assert_eq!(predict(&f), DenseMatrix::zeros(2, 4));
        let f = FactorPair {
            u: DenseMatrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap(),
            v: DenseMatrix::from_vec(2, 2, vec![0.5, 0.0, 0.0, 1.0]).unwrap(),
        };
        assert_eq!(predict(&f).values(), &[0.5, 0.0]);
        assert_eq!(predict_cells(&f, [(0, 1), (0, 0)]), vec![0.0, 0.5]);
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let t = TrainTrace {
            objective_per_iter: vec![2.0, 1.5],
            iterations_run: 2,
            converged: false,
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "iteration,objective");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("2,1.5"));
    }
}
