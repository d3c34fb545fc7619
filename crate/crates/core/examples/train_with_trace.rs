//! Train hCWMF on a held-out split, write the objective trace, and score
//! the hidden adoptions.
//!
//! cargo run --example train_with_trace [trace.csv]

use hcwmf::dataio::{bin_records, generate_synthetic, SynthConfig};
use hcwmf::factorization::{predict_cells, train, TrainConfig};
use hcwmf::harness::{rmse, split_mask, SplitSpec};
use hcwmf::masks::MaskPair;

fn main() -> hcwmf::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "trace.csv".into());

    let cfg = SynthConfig {
        n_users: 200,
        n_bins: 72,
        repeat_prob: 0.4,
        seed: 11,
        ..SynthConfig::default()
    };
    let x = bin_records(&generate_synthetic(&cfg)?, &cfg.hashtag, cfg.bin_seconds, Some(72))?.matrix;
    let (x_train, held) = split_mask(
        &x,
        &SplitSpec {
            fraction: 30.0,
            seed: 11,
        },
    )?;
    let masks = MaskPair::build(&x_train, &held)?;

    let tc = TrainConfig::default();
    let (factors, trace) = train(&x_train, &masks, &tc)?;
    trace.write_csv(std::fs::File::create(&out)?)?;

    let first = trace.objective_per_iter[0];
    let last = *trace.objective_per_iter.last().unwrap();
    println!(
        "{} iterations (converged: {}), objective {first:.3} -> {last:.3}",
        trace.iterations_run, trace.converged
    );

    let preds = predict_cells(&factors, held.iter());
    println!(
        "held-out RMSE on {} cells: {:.4}",
        held.len(),
        rmse(&preds, &vec![1.0; preds.len()])?
    );
    println!("trace written to {out}");
    Ok(())
}
