//! The two weighting masks for a tiny matrix with one held-out cell.
//!
//! cargo run --example attenuation_masks

use hcwmf::linalg::{DenseMatrix, SparseBinaryMatrix};
use hcwmf::masks::{HeldOutSet, MaskPair};

fn show(name: &str, m: &DenseMatrix) {
    println!("{name}:");
    for r in 0..m.rows() {
        let cells: Vec<String> = m.row(r).iter().map(|v| format!("{v:.3}")).collect();
        println!("  [{}]", cells.join(", "));
    }
}

fn main() -> hcwmf::Result<()> {
    let full =
        SparseBinaryMatrix::from_dense_rows(&[vec![0, 1, 0, 1, 0, 0], vec![1, 0, 0, 0, 1, 0], vec![0, 0, 0, 0, 0, 0]])?;
    // Hide user 1's first adoption. The consistency weights must then
    // start at that user's next known adoption.
    let held = HeldOutSet::new([(1, 0)]);
    let mut train = full.clone();
    train.remove(1, 0);

    let masks = MaskPair::build(&train, &held)?;
    show("W (known cells)", &masks.w);
    show("G (attenuation)", &masks.g);
    Ok(())
}
