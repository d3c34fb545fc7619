//! Parse NDJSON adoption records, bin one hashtag into a matrix CSV, and
//! print the cumulative tweet and user curves.
//!
//! cargo run --example ingest_cumulative

use std::io::Cursor;

use hcwmf::dataio::{bin_records, cumulative_counts, parse_records, write_cumulative_csv, write_matrix_csv};

const RAW: &str = r##"{"user":"alice","hashtag":"#rust","ts":1000}
{"user":"bob","hashtag":"#rust","ts":4000}
{"user":"alice","hashtag":"#rust","ts":8000}
{"user":"carol","hashtag":"#go","ts":500}
not json at all
{"user":"carol","hashtag":"#rust","ts":11000}
{"user":"bob","hashtag":"#rust","ts":-5}
"##;

fn main() -> hcwmf::Result<()> {
    let parsed = parse_records(Cursor::new(RAW))?;
    println!(
        "kept {} records, skipped {} lines",
        parsed.records.len(),
        parsed.skipped
    );

    let binned = bin_records(&parsed.records, "#rust", 3600, None)?;
    println!("rows: {:?}, origin ts {}", binned.users, binned.origin);
    write_matrix_csv(&binned.matrix, std::io::stdout().lock())?;

    let mut rust_only = parsed.records.clone();
    rust_only.events.retain(|e| e.hashtag == "#rust");
    write_cumulative_csv(&cumulative_counts(&rust_only, 3600)?, std::io::stdout().lock())
}
