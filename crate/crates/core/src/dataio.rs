//! Adoption records: NDJSON ingestion, binning into user-time matrices,
//! matrix CSV files, cumulative curves, and the synthetic corpus generator.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseBinaryMatrix;

pub const DEFAULT_BIN_SECONDS: i64 = 3600;

/// One use of a hashtag by a user at `ts` (seconds since epoch).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdoptionEvent {
    pub user: String,
    pub hashtag: String,
    pub ts: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdoptionRecords {
    pub events: Vec<AdoptionEvent>,
}

impl AdoptionRecords {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn hashtags(&self) -> BTreeSet<&str> {
        self.events.iter().map(|e| e.hashtag.as_str()).collect()
    }

    pub fn users(&self) -> BTreeSet<&str> {
        self.events.iter().map(|e| e.user.as_str()).collect()
    }

    pub fn extend(&mut self, other: AdoptionRecords) {
        self.events.extend(other.events);
    }

    /// One JSON object per line.
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedRecords {
    pub records: AdoptionRecords,
    /// Lines that were non-empty but not a valid record.
    pub skipped: usize,
}

/// Reads newline-delimited `{"user", "hashtag", "ts"}` objects. Malformed
/// lines (including negative timestamps) are counted and logged, blank lines
/// are ignored.
pub fn parse_records<R: BufRead>(input: R) -> Result<ParsedRecords> {
    let mut parsed = ParsedRecords::default();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match serde_json::from_str::<AdoptionEvent>(trimmed) {
            Ok(e) if e.ts >= 0 => parsed.records.events.push(e),
            Ok(e) => {
                log::warn!("line {}: negative timestamp {}, skipped", lineno + 1, e.ts);
                parsed.skipped += 1;
            }
            Err(err) => {
                log::warn!("line {}: {err}, skipped", lineno + 1);
                parsed.skipped += 1;
            }
        }
    }
    Ok(parsed)
}

/// User-time matrix for one hashtag plus the labels of its axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedMatrix {
    pub matrix: SparseBinaryMatrix,
    /// Row labels, sorted.
    pub users: Vec<String>,
    /// Timestamp of the left edge of column 0.
    pub origin: i64,
    pub bin_seconds: i64,
}

/// Columns needed to hold bins `0..=max_bin` plus a quarter of headroom.
pub fn default_columns(max_bin: usize) -> usize {
    let occupied = max_bin + 1;
    occupied + occupied.div_ceil(4)
}

/// Bins the events of `hashtag` into a binary user × time matrix.
///
/// Rows are the users with at least one event of the hashtag, in sorted
/// order. Column `k` covers `[origin + k·bin, origin + (k+1)·bin)` where
/// `origin` is the earliest event of the hashtag. `columns = None` picks
/// [`default_columns`].
pub fn bin_records(
    records: &AdoptionRecords,
    hashtag: &str,
    bin_seconds: i64,
    columns: Option<usize>,
) -> Result<BinnedMatrix> {
    if bin_seconds <= 0 {
        return Err(Error::InvalidConfig(format!(
            "bin width must be positive, got {bin_seconds}"
        )));
    }
    let events: Vec<&AdoptionEvent> = records.events.iter().filter(|e| e.hashtag == hashtag).collect();
    let Some(origin) = events.iter().map(|e| e.ts).min() else {
        return Err(Error::InvalidInput(format!("no events for hashtag {hashtag:?}")));
    };
    let users: Vec<String> = events
        .iter()
        .map(|e| e.user.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let row_of: BTreeMap<&str, usize> = users.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    let coords: Vec<(usize, usize)> = events
        .iter()
        .map(|e| (row_of[e.user.as_str()], ((e.ts - origin) / bin_seconds) as usize))
        .collect();
    let max_bin = coords.iter().map(|&(_, c)| c).max().unwrap_or(0);
    let cols = match columns {
        Some(m) if m <= max_bin => {
            return Err(Error::TooFewColumns {
                columns: m,
                required: max_bin + 1,
            })
        }
        Some(m) => m,
        None => default_columns(max_bin),
    };
    let matrix = SparseBinaryMatrix::from_coords_dedup(users.len(), cols, coords)?;
    Ok(BinnedMatrix {
        matrix,
        users,
        origin,
        bin_seconds,
    })
}

/// Writes `N,<rows>` and `M,<cols>` followed by one `row,col,1` line per one.
pub fn write_matrix_csv<W: Write>(m: &SparseBinaryMatrix, mut out: W) -> Result<()> {
    writeln!(out, "N,{}", m.rows())?;
    writeln!(out, "M,{}", m.cols())?;
    for (r, c) in m.iter() {
        writeln!(out, "{r},{c},1")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<SparseBinaryMatrix> {
    let mut lines = input.lines();
    let mut header = |name: &str| -> Result<usize> {
        let line = lines
            .next()
            .ok_or_else(|| Error::InvalidInput(format!("missing {name} header line")))??;
        let value = line
            .trim()
            .strip_prefix(name)
            .and_then(|rest| rest.strip_prefix(','))
            .ok_or_else(|| Error::InvalidInput(format!("expected `{name},<count>`, got {line:?}")))?;
        value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad {name} count {value:?}")))
    };
    let n = header("N")?;
    let m = header("M")?;
    let mut coords = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        let bad = || Error::InvalidInput(format!("line {}: expected `row,col,1`, got {line:?}", i + 3));
        if fields.len() != 3 || fields[2].trim() != "1" {
            return Err(bad());
        }
        let r: usize = fields[0].trim().parse().map_err(|_| bad())?;
        let c: usize = fields[1].trim().parse().map_err(|_| bad())?;
        coords.push((r, c));
    }
    SparseBinaryMatrix::new(n, m, coords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CumulativePoint {
    pub bin: usize,
    pub tweets: usize,
    pub users: usize,
}

/// Running totals of events and distinct users for every bin from the first
/// event to the last.
pub fn cumulative_counts(records: &AdoptionRecords, bin_seconds: i64) -> Result<Vec<CumulativePoint>> {
    if bin_seconds <= 0 {
        return Err(Error::InvalidConfig(format!(
            "bin width must be positive, got {bin_seconds}"
        )));
    }
    let origin = records
        .events
        .iter()
        .map(|e| e.ts)
        .min()
        .ok_or_else(|| Error::InvalidInput("no records".into()))?;
    let mut by_bin: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for e in &records.events {
        by_bin
            .entry(((e.ts - origin) / bin_seconds) as usize)
            .or_default()
            .push(&e.user);
    }
    let last = *by_bin.keys().next_back().expect("non-empty");
    let mut seen = BTreeSet::new();
    let mut tweets = 0;
    let mut out = Vec::with_capacity(last + 1);
    for bin in 0..=last {
        if let Some(users) = by_bin.get(&bin) {
            tweets += users.len();
            seen.extend(users.iter().copied());
        }
        out.push(CumulativePoint {
            bin,
            tweets,
            users: seen.len(),
        });
    }
    Ok(out)
}

pub fn write_cumulative_csv<W: Write>(points: &[CumulativePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Parameters of the synthetic trend generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    /// Number of time bins (M).
    pub n_bins: usize,
    /// Rate of the truncated geometric first-adoption bin; larger values
    /// pack onsets closer to the start of the trend.
    pub trend_decay: f64,
    /// Chance of adopting again in the bin right after the first adoption.
    pub repeat_prob: f64,
    /// Fractional loss of the repeat chance per further elapsed bin.
    pub repeat_decay: f64,
    pub seed: u64,
    pub hashtag: String,
    pub bin_seconds: i64,
    /// Timestamp of the start of bin 0.
    pub start_ts: i64,
    /// Restrict repeat adoptions to one recurring bin per period.
    #[serde(default)]
    pub cycle: Option<ActivityCycle>,
}

/// Habitual activity window shared by all users, e.g. one evening hour per
/// day for hourly bins. Only bins with `bin % period == phase` can hold a
/// repeat adoption; elsewhere the repeat chance still decays but is unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityCycle {
    pub period: usize,
    pub phase: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 500,
            n_bins: 168,
            trend_decay: 0.05,
            repeat_prob: 0.05,
            repeat_decay: 0.08,
            seed: 0,
            hashtag: "#trend".to_string(),
            bin_seconds: DEFAULT_BIN_SECONDS,
            start_ts: 1_420_070_400,
            cycle: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        if self.n_bins < 2 {
            return bad(format!("n_bins must be at least 2, got {}", self.n_bins));
        }
        if !(self.trend_decay > 0.0) || !self.trend_decay.is_finite() {
            return bad(format!("trend_decay must be positive, got {}", self.trend_decay));
        }
        if !(0.0..=1.0).contains(&self.repeat_prob) {
            return bad(format!("repeat_prob must lie in [0, 1], got {}", self.repeat_prob));
        }
        if !(0.0..=1.0).contains(&self.repeat_decay) {
            return bad(format!("repeat_decay must lie in [0, 1], got {}", self.repeat_decay));
        }
        if let Some(c) = self.cycle {
            if c.period == 0 || c.phase >= c.period {
                return bad(format!("activity cycle needs phase < period, got {c:?}"));
            }
        }
        if self.bin_seconds <= 0 || self.start_ts < 0 {
            return bad("bin_seconds must be positive and start_ts non-negative".into());
        }
        Ok(())
    }
}

pub fn synthetic_user_id(index: usize) -> String {
    format!("u{index:06}")
}

/// Bin of first adoption from a geometric law with rate `decay`,
/// truncated to `n_bins` by inverse-CDF sampling.
fn sample_onset(rng: &mut impl Rng, decay: f64, n_bins: usize) -> usize {
    let mass = 1.0 - (-decay * n_bins as f64).exp();
    let u: f64 = rng.gen();
    let k = (-(1.0 - u * mass).ln() / decay).floor() as usize;
    k.min(n_bins - 1)
}

fn generate_user(rng: &mut impl Rng, cfg: &SynthConfig, user: &str, repeat_prob: f64, events: &mut Vec<AdoptionEvent>) {
    let onset = sample_onset(rng, cfg.trend_decay, cfg.n_bins);
    let mut emit = |bin: usize| {
        events.push(AdoptionEvent {
            user: user.to_string(),
            hashtag: cfg.hashtag.clone(),
            ts: cfg.start_ts + bin as i64 * cfg.bin_seconds,
        })
    };
    emit(onset);
    let keep = 1.0 - cfg.repeat_decay;
    let mut p = repeat_prob;
    for bin in onset + 1..cfg.n_bins {
        let draw = rng.gen::<f64>();
        let active = cfg.cycle.is_none_or(|c| bin % c.period == c.phase);
        if active && draw < p {
            emit(bin);
        }
        p *= keep;
    }
}

/// One hashtag's worth of adoptions: every user adopts once at a sampled
/// onset bin, then again in each later bin independently with a chance that
/// starts at `repeat_prob` and shrinks by `repeat_decay` per bin.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<AdoptionRecords> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut events = Vec::new();
    for i in 0..cfg.n_users {
        generate_user(&mut rng, cfg, &synthetic_user_id(i), cfg.repeat_prob, &mut events);
    }
    Ok(AdoptionRecords { events })
}

/// Several hashtags over a shared user pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    /// Per-hashtag template; its `hashtag` and `seed` are replaced per tag.
    pub base: SynthConfig,
    pub hashtags: Vec<String>,
    /// Chance that a given user takes part in a given hashtag at all.
    pub participation: f64,
    pub seed: u64,
}

/// Multi-hashtag corpus. Each user draws a consistency propensity once,
/// uniform in `[0, 1)`, and uses `repeat_prob · (0.5 + propensity)`
/// (capped at 1) as their repeat chance on every hashtag they join.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<AdoptionRecords> {
    cfg.base.validate()?;
    if !(0.0..=1.0).contains(&cfg.participation) {
        return Err(Error::InvalidConfig(format!(
            "participation must lie in [0, 1], got {}",
            cfg.participation
        )));
    }
    if cfg.hashtags.is_empty() {
        return Err(Error::InvalidConfig("at least one hashtag is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let propensity: Vec<f64> = (0..cfg.base.n_users).map(|_| rng.gen()).collect();
    let mut events = Vec::new();
    for (h, tag) in cfg.hashtags.iter().enumerate() {
        let tag_cfg = SynthConfig {
            hashtag: tag.clone(),
            seed: cfg.seed.wrapping_add(h as u64 + 1),
            ..cfg.base.clone()
        };
        let mut tag_rng = ChaCha8Rng::seed_from_u64(tag_cfg.seed);
        for (i, prop) in propensity.iter().enumerate() {
            if tag_rng.gen::<f64>() >= cfg.participation {
                continue;
            }
            let p = (tag_cfg.repeat_prob * (0.5 + prop)).min(1.0);
            generate_user(&mut tag_rng, &tag_cfg, &synthetic_user_id(i), p, &mut events);
        }
    }
    Ok(AdoptionRecords { events })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(user: &str, hashtag: &str, ts: i64) -> AdoptionEvent {
        AdoptionEvent {
            user: user.into(),
            hashtag: hashtag.into(),
            ts,
        }
    }

    #[test]
    fn parse_examples() {
        let one = parse_records(r#"{"user":"a","hashtag":"X","ts":0}"#.as_bytes()).unwrap();
        assert_eq!(one.records.events, vec![ev("a", "X", 0)]);
        assert_eq!(one.skipped, 0);

        let empty = parse_records("".as_bytes()).unwrap();
        assert!(empty.records.is_empty());

        let text =
            "{\"user\":\"a\",\"hashtag\":\"X\",\"ts\":0}\nnot json\n{\"user\":\"b\",\"hashtag\":\"X\",\"ts\":5}\n";
        let mixed = parse_records(text.as_bytes()).unwrap();
        assert_eq!(mixed.records.len(), 2);
        assert_eq!(mixed.skipped, 1);
    }

    #[test]
    fn parse_skips_negative_and_mistyped() {
        let text = "{\"user\":\"a\",\"hashtag\":\"X\",\"ts\":-1}\n{\"user\":\"a\",\"hashtag\":\"X\",\"ts\":\"3\"}\n";
        let p = parse_records(text.as_bytes()).unwrap();
        assert_eq!(p.records.len(), 0);
        assert_eq!(p.skipped, 2);
    }

    #[test]
    fn binning_examples() {
        let r = AdoptionRecords {
            events: vec![ev("a", "X", 100), ev("a", "X", 100 + 3600)],
        };
        let b = bin_records(&r, "X", 3600, Some(4)).unwrap();
        assert!(b.matrix.contains(0, 1));
        assert_eq!(b.origin, 100);

        let r = AdoptionRecords {
            events: vec![ev("a", "X", 0), ev("a", "X", 10)],
        };
        let b = bin_records(&r, "X", 3600, Some(3)).unwrap();
        assert_eq!(b.matrix.nnz(), 1);

        let r = AdoptionRecords {
            events: vec![ev("b", "X", 7200), ev("a", "X", 0), ev("a", "Y", 3600)],
        };
        let b = bin_records(&r, "X", 3600, Some(5)).unwrap();
        assert_eq!(b.matrix.shape(), (2, 5));
        assert_eq!(b.matrix.nnz(), 2);
        assert_eq!(b.users, vec!["a", "b"]);
        assert!(b.matrix.contains(1, 2));
    }

    #[test]
    fn binning_column_checks() {
        let r = AdoptionRecords {
            events: vec![ev("a", "X", 0), ev("a", "X", 3 * 3600)],
        };
        match bin_records(&r, "X", 3600, Some(3)) {
            Err(Error::TooFewColumns { required, .. }) => assert_eq!(required, 4),
            other => panic!("{other:?}"),
        }
        assert_eq!(bin_records(&r, "X", 3600, None).unwrap().matrix.cols(), 5);
        assert!(bin_records(&r, "X", 0, None).is_err());
        assert!(bin_records(&r, "nope", 3600, None).is_err());
    }

    #[test]
    fn default_columns_headroom() {
        assert_eq!(default_columns(0), 2);
        assert_eq!(default_columns(3), 5);
        assert_eq!(default_columns(167), 210);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = SparseBinaryMatrix::from_dense_rows(&[vec![0, 1, 0], vec![1, 0, 1]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("N,2\nM,3\n0,1,1\n"));
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn matrix_csv_rejects_garbage() {
        assert!(read_matrix_csv("N,2\n".as_bytes()).is_err());
        assert!(read_matrix_csv("N,2\nM,2\n0,5,1\n".as_bytes()).is_err());
        assert!(read_matrix_csv("N,2\nM,2\n0,1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn cumulative_examples() {
        let single = AdoptionRecords {
            events: vec![ev("a", "X", 50)],
        };
        assert_eq!(
            cumulative_counts(&single, 3600).unwrap(),
            vec![CumulativePoint {
                bin: 0,
                tweets: 1,
                users: 1
            }]
        );

        let two = AdoptionRecords {
            events: vec![ev("a", "X", 0), ev("a", "X", 5 * 3600)],
        };
        let c = cumulative_counts(&two, 3600).unwrap();
        assert_eq!(c.len(), 6);
        assert!(c.iter().all(|p| p.users == 1));
        assert_eq!(c.last().unwrap().tweets, 2);

        assert!(cumulative_counts(&AdoptionRecords::default(), 3600).is_err());
    }

    #[test]
    fn no_repeats_means_one_event_each() {
        let cfg = SynthConfig {
            n_users: 50,
            repeat_prob: 0.0,
            seed: 3,
            ..SynthConfig::default()
        };
        let r = generate_synthetic(&cfg).unwrap();
        assert_eq!(r.len(), 50);
        assert_eq!(r.users().len(), 50);
    }

    #[test]
    fn saturated_repeats_fill_every_bin_after_onset() {
        let cfg = SynthConfig {
            n_users: 30,
            n_bins: 40,
            repeat_prob: 1.0,
            repeat_decay: 0.0,
            seed: 5,
            ..SynthConfig::default()
        };
        let r = generate_synthetic(&cfg).unwrap();
        let mut bins: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for e in &r.events {
            bins.entry(&e.user)
                .or_default()
                .push(((e.ts - cfg.start_ts) / cfg.bin_seconds) as usize);
        }
        assert_eq!(bins.len(), 30);
        for b in bins.values() {
            let onset = b[0];
            assert_eq!(*b, (onset..cfg.n_bins).collect::<Vec<_>>());
        }
    }

    #[test]
    fn generator_is_seeded() {
        let cfg = SynthConfig::default();
        assert_eq!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&cfg).unwrap());
    }

    #[test]
    fn invalid_synth_configs() {
        for cfg in [
            SynthConfig {
                repeat_prob: 1.5,
                ..SynthConfig::default()
            },
            SynthConfig {
                trend_decay: 0.0,
                ..SynthConfig::default()
            },
            SynthConfig {
                n_bins: 1,
                ..SynthConfig::default()
            },
        ] {
            assert!(generate_synthetic(&cfg).is_err());
        }
    }
}
