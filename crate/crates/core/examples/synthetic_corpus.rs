//! Generate a synthetic trend, bin it, and look at its shape.
//!
//! cargo run --example synthetic_corpus

use hcwmf::dataio::{bin_records, generate_synthetic, AdoptionRecords, SynthConfig};

fn main() -> hcwmf::Result<()> {
    let cfg = SynthConfig {
        repeat_prob: 0.3,
        seed: 7,
        ..SynthConfig::default()
    };
    let records = generate_synthetic(&cfg)?;
    let binned = bin_records(&records, &cfg.hashtag, cfg.bin_seconds, Some(cfg.n_bins))?;
    let x = &binned.matrix;

    println!("{} events from {} users", records.len(), records.users().len());
    println!("matrix {}x{}, density {:.4}", x.rows(), x.cols(), x.density());

    // Adoptions per day for the first week.
    for day in 0..cfg.n_bins / 24 {
        let hits = x.iter().filter(|&(_, c)| c / 24 == day).count();
        println!("day {day}: {hits:>4} {}", "#".repeat(hits / 10));
    }

    println!("first records:");
    let head = AdoptionRecords {
        events: records.events[..3].to_vec(),
    };
    head.write_ndjson(std::io::stdout().lock())?;
    Ok(())
}
