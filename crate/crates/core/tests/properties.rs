//! Property checks for masks, splitting, binning, baselines and the generator.

use std::collections::BTreeSet;

use hcwmf::baselines::{fit_markov, markov_predict_cells, random_predict};
use hcwmf::dataio::{self, AdoptionEvent, AdoptionRecords, SynthConfig};
use hcwmf::harness::{rmse, split_mask, SplitSpec};
use hcwmf::linalg::SparseBinaryMatrix;
use hcwmf::masks::{build_attenuation, build_indicator, HeldOutSet};
use proptest::prelude::*;

fn binary_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = SparseBinaryMatrix> {
    (1..=max_rows, 2..=max_cols).prop_flat_map(|(n, m)| {
        proptest::collection::vec(proptest::bool::weighted(0.2), n * m).prop_map(move |bits| {
            let coords = bits.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| (k / m, k % m));
            SparseBinaryMatrix::new(n, m, coords).unwrap()
        })
    })
}

fn check_attenuation_row(row: &[f64], first: Option<usize>) -> Result<(), TestCaseError> {
    match first {
        None => prop_assert!(row.iter().all(|&v| v == 0.0)),
        Some(f) => {
            prop_assert!(row[..f].iter().all(|&v| v == 0.0));
            prop_assert_eq!(row[f], 1.0);
            prop_assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            let tail = &row[f + 1..];
            prop_assert!(tail.iter().all(|&v| (0.0..1.0).contains(&v)));
            prop_assert!(tail.windows(2).all(|w| w[1] < w[0]));
            if let Some(&last) = tail.last() {
                prop_assert_eq!(last, 0.0);
            }
        }
    }
    Ok(())
}

proptest! {
    #[test]
    fn attenuation_rows_ramp_down(x in binary_matrix(6, 30)) {
        let g = build_attenuation(&x);
        for i in 0..x.rows() {
            check_attenuation_row(g.row(i), x.first_in_row(i))?;
        }
    }

    #[test]
    fn indicator_zeros_are_exactly_the_held_out(x in binary_matrix(6, 12), seed in 0u64..1000) {
        prop_assume!(x.nnz() > 0);
        let (_, held) = split_mask(&x, &SplitSpec { fraction: 40.0, seed }).unwrap();
        let w = build_indicator(x.shape(), &held).unwrap();
        prop_assert!(w.values().iter().all(|&v| v == 0.0 || v == 1.0));
        prop_assert_eq!(w.values().iter().filter(|&&v| v == 0.0).count(), held.len());
    }

    /// Masking a row's first positive moves its anchor later: entries before
    /// the new anchor can only drop, entries after it are unchanged.
    #[test]
    fn attenuation_does_not_leak_masked_onsets(x in binary_matrix(6, 20), seed in 0u64..1000) {
        prop_assume!(x.nnz() > 0);
        let (train, _) = split_mask(&x, &SplitSpec { fraction: 50.0, seed }).unwrap();
        let full = build_attenuation(&x);
        let masked = build_attenuation(&train);
        for i in 0..x.rows() {
            if x.first_in_row(i) == train.first_in_row(i) {
                prop_assert_eq!(full.row(i), masked.row(i));
                continue;
            }
            let anchor = train.first_in_row(i).unwrap_or(x.cols());
            for c in 0..anchor {
                prop_assert!(masked.get(i, c) <= full.get(i, c));
                prop_assert_eq!(masked.get(i, c), 0.0);
            }
            for c in anchor + 1..x.cols() {
                prop_assert_eq!(masked.get(i, c), full.get(i, c));
            }
        }
    }

    #[test]
    fn split_partitions_positives(x in binary_matrix(8, 15), frac in 1.0f64..99.0, seed in 0u64..1000) {
        prop_assume!(x.nnz() > 0);
        let (train, held) = split_mask(&x, &SplitSpec { fraction: frac, seed }).unwrap();
        let original: BTreeSet<_> = x.iter().collect();
        let kept: BTreeSet<_> = train.iter().collect();
        let removed: BTreeSet<_> = held.iter().collect();
        prop_assert!(kept.is_disjoint(&removed));
        prop_assert_eq!(kept.union(&removed).copied().collect::<BTreeSet<_>>(), original);
        let want = ((frac / 100.0 * x.nnz() as f64).round() as usize).clamp(1, x.nnz());
        prop_assert_eq!(held.len(), want);
    }

    #[test]
    fn markov_ignores_row_order(x in binary_matrix(8, 10), seed in 0u64..1000) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..x.rows()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = fit_markov(&x).unwrap();
        let b = fit_markov(&x.permute_rows(&perm).unwrap()).unwrap();
        prop_assert_eq!(a, b);
        for row in a.t {
            prop_assert!((row[0] + row[1] - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn binning_ignores_event_order(seed in 0u64..500) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let cfg = SynthConfig { n_users: 30, n_bins: 40, repeat_prob: 0.3, seed, ..SynthConfig::default() };
        let records = dataio::generate_synthetic(&cfg).unwrap();
        let mut shuffled = records.clone();
        shuffled.events.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xabc));
        let a = dataio::bin_records(&records, &cfg.hashtag, 3600, None).unwrap();
        let b = dataio::bin_records(&shuffled, &cfg.hashtag, 3600, None).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn records_round_trip_through_ndjson(seed in 0u64..500, repeat in 0.0f64..1.0) {
        let cfg = SynthConfig { n_users: 25, n_bins: 30, repeat_prob: repeat, seed, ..SynthConfig::default() };
        let records = dataio::generate_synthetic(&cfg).unwrap();
        let mut buf = Vec::new();
        records.write_ndjson(&mut buf).unwrap();
        let parsed = dataio::parse_records(buf.as_slice()).unwrap();
        prop_assert_eq!(parsed.skipped, 0);
        let a = dataio::bin_records(&records, &cfg.hashtag, 3600, None).unwrap();
        let b = dataio::bin_records(&parsed.records, &cfg.hashtag, 3600, None).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cumulative_curves_are_monotone(seed in 0u64..200) {
        let cfg = SynthConfig { n_users: 40, n_bins: 50, repeat_prob: 0.2, seed, ..SynthConfig::default() };
        let records = dataio::generate_synthetic(&cfg).unwrap();
        let c = dataio::cumulative_counts(&records, 3600).unwrap();
        prop_assert!(c.windows(2).all(|w| w[1].tweets >= w[0].tweets && w[1].users >= w[0].users));
        prop_assert_eq!(c.last().unwrap().tweets, records.len());
        prop_assert_eq!(c.last().unwrap().users, records.users().len());
    }
}

#[test]
fn default_generator_is_about_one_percent_dense() {
    let cfg = SynthConfig {
        n_users: 500,
        n_bins: 168,
        repeat_prob: 0.05,
        seed: 11,
        ..SynthConfig::default()
    };
    let records = dataio::generate_synthetic(&cfg).unwrap();
    let x = dataio::bin_records(&records, &cfg.hashtag, 3600, Some(168))
        .unwrap()
        .matrix;
    assert!((0.005..=0.02).contains(&x.density()), "density {}", x.density());
}

#[test]
fn high_repeat_probability_means_repeat_adopters() {
    let cfg = SynthConfig {
        n_users: 300,
        repeat_prob: 0.5,
        seed: 2,
        ..SynthConfig::default()
    };
    let records = dataio::generate_synthetic(&cfg).unwrap();
    let per_user = records.len() as f64 / records.users().len() as f64;
    assert!(per_user > 1.5, "{per_user}");
}

#[test]
fn markov_on_sparse_corpus_misses_held_out_adoptions() {
    let cfg = SynthConfig {
        seed: 4,
        ..SynthConfig::default()
    };
    let records = dataio::generate_synthetic(&cfg).unwrap();
    let x = dataio::bin_records(&records, &cfg.hashtag, 3600, Some(cfg.n_bins))
        .unwrap()
        .matrix;
    let (train, held) = split_mask(
        &x,
        &SplitSpec {
            fraction: 30.0,
            seed: 1,
        },
    )
    .unwrap();
    let model = fit_markov(&train).unwrap();
    assert!(model.prob(0, 1) < 0.02);
    let preds = markov_predict_cells(&model, &train, &held);
    let score = rmse(&preds, &vec![1.0; preds.len()]).unwrap();
    assert!(score >= 0.95, "{score}");
}

#[test]
fn fair_coin_rmse_is_root_half() {
    let preds: Vec<f64> = random_predict(10_000, 21).into_iter().map(f64::from).collect();
    let score = rmse(&preds, &vec![1.0; preds.len()]).unwrap();
    assert!((score - 0.5f64.sqrt()).abs() < 0.02, "{score}");
}

#[test]
fn parse_reports_skips_without_dropping_good_lines() {
    let text =
        "{\"user\":\"a\",\"hashtag\":\"#x\",\"ts\":10}\n{broken\n\n{\"user\":\"b\",\"hashtag\":\"#x\",\"ts\":20}\n";
    let parsed = dataio::parse_records(text.as_bytes()).unwrap();
    assert_eq!(parsed.skipped, 1);
    assert_eq!(
        parsed.records,
        AdoptionRecords {
            events: vec![
                AdoptionEvent {
                    user: "a".into(),
                    hashtag: "#x".into(),
                    ts: 10
                },
                AdoptionEvent {
                    user: "b".into(),
                    hashtag: "#x".into(),
                    ts: 20
                },
            ]
        }
    );
}

#[test]
fn held_out_set_is_row_major() {
    let h = HeldOutSet::new([(2, 0), (0, 5), (0, 1)]);
    assert_eq!(h.iter().collect::<Vec<_>>(), vec![(0, 1), (0, 5), (2, 0)]);
}
