//! All five methods across the standard held-out fractions on a corpus
//! whose users repeat at a habitual hour, then a latent-dimension sweep.
//!
//! cargo run --release --example baseline_sweep

use hcwmf::dataio::{bin_records, generate_synthetic, ActivityCycle, SynthConfig};
use hcwmf::harness::{run_sweep, Method, SweepConfig, STANDARD_DIMS, STANDARD_FRACTIONS};

fn main() -> hcwmf::Result<()> {
    let cfg = SynthConfig {
        trend_decay: 3.0,
        repeat_prob: 0.5,
        repeat_decay: 0.0,
        cycle: Some(ActivityCycle { period: 12, phase: 8 }),
        seed: 1,
        ..SynthConfig::default()
    };
    let x = bin_records(
        &generate_synthetic(&cfg)?,
        &cfg.hashtag,
        cfg.bin_seconds,
        Some(cfg.n_bins),
    )?
    .matrix;

    let table = run_sweep(
        &x,
        &SweepConfig {
            seed: 1,
            ..SweepConfig::default()
        },
    )?;
    print!("{:>8}", "fraction");
    Method::ALL.iter().for_each(|m| print!("{:>9}", m.name()));
    println!();
    for f in STANDARD_FRACTIONS {
        print!("{f:>7}%");
        for m in Method::ALL {
            match table.get(m, f, 10) {
                Some(row) if row.rmse.is_some() => print!("{:>9.4}", row.rmse.unwrap()),
                _ => print!("{:>9}", "err"),
            }
        }
        println!();
    }

    let dims = run_sweep(
        &x,
        &SweepConfig {
            methods: vec![Method::Hcwmf],
            fractions: vec![30.0],
            dims: STANDARD_DIMS.to_vec(),
            seed: 1,
            ..SweepConfig::default()
        },
    )?;
    for d in STANDARD_DIMS {
        println!(
            "d={d:<2} hCWMF RMSE {:.4}",
            dims.rmse(Method::Hcwmf, 30.0, d).unwrap_or(f64::NAN)
        );
    }
    table.write_csv(std::io::stdout().lock())
}
