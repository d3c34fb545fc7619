//! Do users re-adopt hashtags more often than they share hashtags with a
//! random other user? One-sided Welch test on a multi-hashtag corpus.
//!
//! cargo run --example consistency_ttest

use hcwmf::dataio::{generate_corpus, CorpusConfig, SynthConfig};
use hcwmf::stats::{build_consistency_vectors, partner_overlap_vector, welch_ttest_one_sided};

fn floats(v: &[u32]) -> Vec<f64> {
    v.iter().map(|&c| c as f64).collect()
}

fn main() -> hcwmf::Result<()> {
    let corpus = generate_corpus(&CorpusConfig {
        base: SynthConfig {
            n_users: 500,
            n_bins: 24,
            repeat_prob: 0.7,
            ..SynthConfig::default()
        },
        hashtags: (0..8).map(|i| format!("#tag{i}")).collect(),
        participation: 0.4,
        seed: 6,
    })?;

    let v = build_consistency_vectors(&corpus, 6)?;
    let mean = |x: &[u32]| x.iter().sum::<u32>() as f64 / x.len() as f64;
    println!(
        "{} users, mean hc_u {:.3}, mean hc_r {:.3}",
        v.users.len(),
        mean(&v.hc_u),
        mean(&v.hc_r)
    );

    let result = welch_ttest_one_sided(&floats(&v.hc_u), &floats(&v.hc_r))?;
    println!("{}", serde_json::to_string_pretty(&result)?);

    // Two independent partner draws: no real difference, so no rejection expected.
    let a = partner_overlap_vector(&corpus, 1)?;
    let b = partner_overlap_vector(&corpus, 2)?;
    let control = welch_ttest_one_sided(&floats(&a), &floats(&b))?;
    println!(
        "control: t={:.3} p={:.3} reject={}",
        control.t_stat, control.p_value, control.reject
    );
    Ok(())
}
