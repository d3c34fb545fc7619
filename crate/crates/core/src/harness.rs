//! Masked-RMSE evaluation: hold out a fraction of the positives, fit every
//! method on what is left, and score predictions on the held-out cells
//! against their true value of 1.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{ar_predict_cells, fit_markov, markov_predict_cells, random_predict};
use crate::error::{Error, Result};
use crate::factorization::{predict_cells, train, train_wmf, TrainConfig};
use crate::linalg::SparseBinaryMatrix;
use crate::masks::{HeldOutSet, MaskPair};

pub const STANDARD_FRACTIONS: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];
pub const STANDARD_DIMS: [usize; 5] = [5, 10, 15, 20, 25];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    /// Percentage of positives to hold out, in (0, 100).
    pub fraction: f64,
    pub seed: u64,
}

/// Clears a uniformly sampled `round(fraction% · N_x)` positives (at least
/// one) and returns the training matrix with the removed cells.
pub fn split_mask(x: &SparseBinaryMatrix, spec: &SplitSpec) -> Result<(SparseBinaryMatrix, HeldOutSet)> {
    if !(spec.fraction > 0.0 && spec.fraction < 100.0) {
        return Err(Error::InvalidConfig(format!(
            "held-out fraction must lie in (0, 100), got {}",
            spec.fraction
        )));
    }
    let positives: Vec<(usize, usize)> = x.iter().collect();
    if positives.is_empty() {
        return Err(Error::InvalidInput(
            "cannot split a matrix with no positive entries".into(),
        ));
    }
    let count = ((spec.fraction / 100.0 * positives.len() as f64).round() as usize).clamp(1, positives.len());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let held: HeldOutSet = rand::seq::index::sample(&mut rng, positives.len(), count)
        .into_iter()
        .map(|k| positives[k])
        .collect();
    let mut train = x.clone();
    for (r, c) in held.iter() {
        train.remove(r, c);
    }
    Ok((train, held))
}

pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidInput(format!(
            "rmse: {} predictions for {} targets",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidInput("rmse of an empty sequence".into()));
    }
    let sse: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok((sse / predicted.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "hCWMF")]
    Hcwmf,
    #[serde(rename = "WMF")]
    Wmf,
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "MC")]
    Markov,
    #[serde(rename = "Random")]
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Hcwmf, Method::Wmf, Method::Ar, Method::Markov, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hcwmf => "hCWMF",
            Method::Wmf => "WMF",
            Method::Ar => "AR",
            Method::Markov => "MC",
            Method::Random => "Random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hcwmf" => Ok(Method::Hcwmf),
            "wmf" => Ok(Method::Wmf),
            "ar" | "arma" => Ok(Method::Ar),
            "mc" | "markov" => Ok(Method::Markov),
            "random" => Ok(Method::Random),
            other => Err(Error::InvalidInput(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub method: Method,
    pub fraction: f64,
    pub d: usize,
    /// Missing when the method failed in this cell.
    pub rmse: Option<f64>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dataset", "method", "fraction", "d", "rmse", "error"])?;
        for r in &self.rows {
            w.write_record([
                r.dataset.clone(),
                r.method.to_string(),
                r.fraction.to_string(),
                r.d.to_string(),
                r.rmse.map(|v| v.to_string()).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn get(&self, method: Method, fraction: f64, d: usize) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.fraction == fraction && r.d == d)
    }

    pub fn rmse(&self, method: Method, fraction: f64, d: usize) -> Option<f64> {
        self.get(method, fraction, d).and_then(|r| r.rmse)
    }

    /// Whether `method`'s RMSE at dimension `d` never drops as the held-out
    /// fraction grows. `None` if any needed row is missing or failed.
    pub fn nondecreasing_in_fraction(&self, method: Method, d: usize) -> Option<bool> {
        let mut pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.d == d)
            .map(|r| r.rmse.map(|v| (r.fraction, v)))
            .collect::<Option<_>>()?;
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        Some(pts.windows(2).all(|w| w[1].1 >= w[0].1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dataset: String,
    pub methods: Vec<Method>,
    pub fractions: Vec<f64>,
    pub dims: Vec<usize>,
    /// Template for the factorization methods; its `d` and `seed` are set per cell.
    pub base: TrainConfig,
    pub ar_order: usize,
    /// Clip factorization predictions to [0, 1] before scoring.
    pub clamp_predictions: bool,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dataset: "synthetic".into(),
            methods: Method::ALL.to_vec(),
            fractions: STANDARD_FRACTIONS.to_vec(),
            dims: vec![10],
            base: TrainConfig::default(),
            ar_order: 2,
            clamp_predictions: false,
            seed: 0,
        }
    }
}

/// SplitMix64 finalizer, used to derive per-cell seeds from one master seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut z = master;
    for &p in parts {
        z = z.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Everything a method sees in one sweep cell.
pub struct SweepCell<'a> {
    pub train: &'a SparseBinaryMatrix,
    pub held_out: &'a HeldOutSet,
    pub masks: &'a MaskPair,
    pub cfg: TrainConfig,
    pub random_seed: u64,
    pub ar_order: usize,
    pub clamp: bool,
}

/// Predictions of `method` at the held-out cells, in row-major cell order.
pub fn predict_held_out(method: Method, cell: &SweepCell<'_>) -> Result<Vec<f64>> {
    let cells = || cell.held_out.iter();
    let mut preds = match method {
        Method::Hcwmf => {
            let (f, _) = train(cell.train, cell.masks, &cell.cfg)?;
            predict_cells(&f, cells())
        }
        Method::Wmf => {
            let (f, _) = train_wmf(cell.train, &cell.masks.w, &cell.cfg.without_consistency())?;
            predict_cells(&f, cells())
        }
        Method::Markov => markov_predict_cells(&fit_markov(cell.train)?, cell.train, cell.held_out),
        Method::Random => random_predict(cell.held_out.len(), cell.random_seed)
            .into_iter()
            .map(f64::from)
            .collect(),
        Method::Ar => ar_predict_cells(cell.train, cell.held_out, cell.ar_order)?,
    };
    if cell.clamp && matches!(method, Method::Hcwmf | Method::Wmf) {
        for p in &mut preds {
            *p = p.clamp(0.0, 1.0);
        }
    }
    Ok(preds)
}

/// Runs every (fraction, d) cell, possibly in parallel, and scores each
/// method on the same held-out cells. Failures become error rows.
pub fn run_sweep(x: &SparseBinaryMatrix, cfg: &SweepConfig) -> Result<ResultsTable> {
    if cfg.methods.is_empty() || cfg.fractions.is_empty() || cfg.dims.is_empty() {
        return Err(Error::InvalidConfig(
            "methods, fractions and dims must be non-empty".into(),
        ));
    }
    let grid: Vec<(f64, usize)> = cfg
        .fractions
        .iter()
        .flat_map(|&f| cfg.dims.iter().map(move |&d| (f, d)))
        .collect();

    let cells: Vec<Vec<ResultRow>> = grid
        .par_iter()
        .map(|&(fraction, d)| sweep_cell(x, cfg, fraction, d))
        .collect();
    Ok(ResultsTable {
        rows: cells.into_iter().flatten().collect(),
    })
}

fn sweep_cell(x: &SparseBinaryMatrix, cfg: &SweepConfig, fraction: f64, d: usize) -> Vec<ResultRow> {
    let row = |method: Method, outcome: Result<f64>| {
        let (rmse, error) = match outcome {
            Ok(v) => (Some(v), None),
            Err(e) => {
                log::warn!("{method} at fraction {fraction} d {d} failed: {e}");
                (None, Some(e.to_string()))
            }
        };
        ResultRow {
            dataset: cfg.dataset.clone(),
            method,
            fraction,
            d,
            rmse,
            error,
        }
    };
    // Split depends on the fraction only, so a d-sweep reuses the same cells.
    let split_seed = derive_seed(cfg.seed, &[fraction.to_bits()]);
    let split = split_mask(
        x,
        &SplitSpec {
            fraction,
            seed: split_seed,
        },
    )
    .and_then(|(train, held)| {
        let masks = MaskPair::build(&train, &held)?;
        Ok((train, held, masks))
    });
    let (train, held, masks) = match split {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return cfg
                .methods
                .iter()
                .map(|&m| row(m, Err(Error::InvalidInput(msg.clone()))))
                .collect();
        }
    };
    let cell = SweepCell {
        train: &train,
        held_out: &held,
        masks: &masks,
        cfg: TrainConfig {
            d,
            seed: derive_seed(cfg.seed, &[fraction.to_bits(), d as u64]),
            ..cfg.base.clone()
        },
        random_seed: derive_seed(split_seed, &[1]),
        ar_order: cfg.ar_order,
        clamp: cfg.clamp_predictions,
    };
    let actual = vec![1.0; held.len()];
    cfg.methods
        .iter()
        .map(|&m| row(m, predict_held_out(m, &cell).and_then(|p| rmse(&p, &actual))))
        .collect()
}
