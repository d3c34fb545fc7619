//! Compare analytic gradients with central differences of the objective.
//!
//! cargo run --example gradient_check

use hcwmf::factorization::{grad_u, grad_v, objective, FactorPair, TrainConfig};
use hcwmf::linalg::{DenseMatrix, SparseBinaryMatrix};
use hcwmf::masks::MaskPair;

fn main() -> hcwmf::Result<()> {
    let x = SparseBinaryMatrix::from_dense_rows(&[
        vec![0, 1, 1, 0, 1],
        vec![1, 0, 0, 1, 0],
        vec![0, 0, 1, 1, 1],
        vec![0, 0, 0, 0, 0],
    ])?;
    let masks = MaskPair::unmasked(&x);
    let cfg = TrainConfig {
        d: 2,
        mu: 0.5,
        ..TrainConfig::default()
    };
    let f = FactorPair::random(4, 5, 2, 3);

    let check = |analytic: DenseMatrix, on_u: bool| -> hcwmf::Result<f64> {
        let h = 1e-6;
        let mut worst = 0.0f64;
        let target = if on_u { &f.u } else { &f.v };
        for r in 0..target.rows() {
            for c in 0..target.cols() {
                let nudged = |delta: f64| {
                    let mut g = f.clone();
                    let m = if on_u { &mut g.u } else { &mut g.v };
                    m.set(r, c, m.get(r, c) + delta);
                    objective(&x, &masks, &g, &cfg)
                };
                let fd = (nudged(h)? - nudged(-h)?) / (2.0 * h);
                worst = worst.max((fd - analytic.get(r, c)).abs());
            }
        }
        Ok(worst)
    };

    println!("objective {:.6}", objective(&x, &masks, &f, &cfg)?);
    println!(
        "max |grad_u - fd| = {:.2e}",
        check(grad_u(&x, &masks, &f, &cfg)?, true)?
    );
    println!(
        "max |grad_v - fd| = {:.2e}",
        check(grad_v(&x, &masks, &f, &cfg)?, false)?
    );
    Ok(())
}
