//! Command-line front end: synth, ingest, train, eval, ttest.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hcwmf::dataio::{self, ActivityCycle, CorpusConfig, SynthConfig};
use hcwmf::factorization::{self, TrainConfig};
use hcwmf::harness::{self, Method, SweepConfig};
use hcwmf::masks::MaskPair;
use hcwmf::stats;

#[derive(Parser)]
#[command(name = "hcwmf", version, about = "Trending-hashtag adoption prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic adoption corpus as NDJSON records.
    Synth(SynthArgs),
    /// Bin one hashtag of a record file into a user-time matrix CSV.
    Ingest(IngestArgs),
    /// Fit hCWMF on a matrix and dump the factors and objective trace.
    Train(TrainArgs),
    /// Masked-RMSE comparison over held-out fractions and latent dimensions.
    Eval(EvalArgs),
    /// One-sided Welch t-test of the consistency hypothesis.
    Ttest(TtestArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    users: usize,
    #[arg(long, default_value_t = 168)]
    bins: usize,
    #[arg(long, default_value_t = 0.05)]
    repeat_prob: f64,
    #[arg(long, default_value_t = 0.08)]
    repeat_decay: f64,
    #[arg(long, default_value_t = 0.05)]
    trend_decay: f64,
    /// Repeats only every `cycle-period` bins (0 disables the cycle).
    #[arg(long, default_value_t = 0)]
    cycle_period: usize,
    #[arg(long, default_value_t = 0)]
    cycle_phase: usize,
    /// Comma-separated hashtags; more than one builds a shared-user corpus.
    #[arg(long, default_value = "#trend", value_delimiter = ',')]
    hashtags: Vec<String>,
    /// Chance a user joins each hashtag (multi-hashtag corpora only).
    #[arg(long, default_value_t = 0.3)]
    participation: f64,
    #[arg(long, default_value_t = dataio::DEFAULT_BIN_SECONDS)]
    bin_seconds: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    hashtag: String,
    #[arg(long, default_value_t = dataio::DEFAULT_BIN_SECONDS)]
    bin_seconds: i64,
    /// Matrix width; defaults to the last occupied bin plus 25%.
    #[arg(long)]
    columns: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also write cumulative (bin, tweets, users) counts for the hashtag.
    #[arg(long)]
    cumulative: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 0.2)]
    gamma1: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma2: f64,
    #[arg(long, default_value_t = 0.2)]
    mu: f64,
    #[arg(long, default_value_t = 0.001)]
    lambda: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trace: PathBuf,
    /// Factor dump (JSON); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dense N×M reconstruction as CSV.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Clip the written reconstruction to [0, 1].
    #[arg(long)]
    clamp: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value = "hcwmf,wmf,ar,mc,random", value_delimiter = ',')]
    methods: Vec<Method>,
    #[arg(long, default_value = "10,20,30,40,50", value_delimiter = ',')]
    fractions: Vec<f64>,
    #[arg(long, default_value = "10", value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Dataset label written to every row; defaults to the matrix file stem.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, default_value_t = 0.2)]
    gamma1: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma2: f64,
    #[arg(long, default_value_t = 0.2)]
    mu: f64,
    #[arg(long, default_value_t = 0.001)]
    lambda: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    #[arg(long, default_value_t = 2)]
    ar_order: usize,
    #[arg(long)]
    clamp: bool,
}

#[derive(Args)]
struct TtestArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON result here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn read_records(path: &Path) -> Result<dataio::AdoptionRecords> {
    let parsed = dataio::parse_records(open(path)?)?;
    if parsed.skipped > 0 {
        log::warn!("{}: skipped {} malformed lines", path.display(), parsed.skipped);
    }
    Ok(parsed.records)
}

fn synth(a: SynthArgs) -> Result<()> {
    let cycle = (a.cycle_period > 0).then_some(ActivityCycle {
        period: a.cycle_period,
        phase: a.cycle_phase,
    });
    let base = SynthConfig {
        n_users: a.users,
        n_bins: a.bins,
        trend_decay: a.trend_decay,
        repeat_prob: a.repeat_prob,
        repeat_decay: a.repeat_decay,
        seed: a.seed,
        hashtag: a.hashtags[0].clone(),
        bin_seconds: a.bin_seconds,
        cycle,
        ..SynthConfig::default()
    };
    let records = if a.hashtags.len() == 1 {
        dataio::generate_synthetic(&base)?
    } else {
        dataio::generate_corpus(&CorpusConfig {
            base,
            hashtags: a.hashtags,
            participation: a.participation,
            seed: a.seed,
        })?
    };
    records.write_ndjson(create(&a.out)?)?;
    eprintln!("wrote {} events to {}", records.len(), a.out.display());
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    let records = read_records(&a.input)?;
    let binned = dataio::bin_records(&records, &a.hashtag, a.bin_seconds, a.columns)?;
    dataio::write_matrix_csv(&binned.matrix, create(&a.out)?)?;
    if let Some(path) = &a.cumulative {
        let tagged = dataio::AdoptionRecords {
            events: records.events.into_iter().filter(|e| e.hashtag == a.hashtag).collect(),
        };
        dataio::write_cumulative_csv(&dataio::cumulative_counts(&tagged, a.bin_seconds)?, create(path)?)?;
    }
    let (n, m) = binned.matrix.shape();
    eprintln!(
        "{n}x{m} matrix with {} ones ({:.4} density)",
        binned.matrix.nnz(),
        binned.matrix.density()
    );
    Ok(())
}

#[derive(Serialize)]
struct FactorDump {
    d: usize,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    iterations_run: usize,
    converged: bool,
}

fn rows_of(m: &hcwmf::DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn train(a: TrainArgs) -> Result<()> {
    let x = dataio::read_matrix_csv(open(&a.matrix)?)?;
    let cfg = TrainConfig {
        d: a.d,
        gamma1: a.gamma1,
        gamma2: a.gamma2,
        mu: a.mu,
        lambda: a.lambda,
        max_iters: a.max_iters,
        rel_tol: a.rel_tol,
        seed: a.seed,
    };
    let masks = MaskPair::unmasked(&x);
    let (f, trace) = factorization::train(&x, &masks, &cfg)?;
    trace.write_csv(create(&a.trace)?)?;

    let dump = FactorDump {
        d: cfg.d,
        u: rows_of(&f.u),
        v: rows_of(&f.v),
        iterations_run: trace.iterations_run,
        converged: trace.converged,
    };
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            serde_json::to_writer(&mut w, &dump)?;
            w.flush()?;
        }
        None => {
            serde_json::to_writer(io::stdout().lock(), &dump)?;
            println!();
        }
    }
    if let Some(path) = &a.predictions {
        let mut p = factorization::predict(&f);
        if a.clamp {
            p = p.map(|v| v.clamp(0.0, 1.0));
        }
        let mut w = csv::Writer::from_writer(create(path)?);
        for i in 0..p.rows() {
            w.write_record(p.row(i).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    eprintln!(
        "{} iterations, final objective {:.6}, converged: {}",
        trace.iterations_run,
        trace.objective_per_iter.last().copied().unwrap_or(f64::NAN),
        trace.converged
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let x = dataio::read_matrix_csv(open(&a.matrix)?)?;
    let dataset = a.dataset.clone().unwrap_or_else(|| {
        a.matrix
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "matrix".into())
    });
    let cfg = SweepConfig {
        dataset,
        methods: a.methods,
        fractions: a.fractions,
        dims: a.dims,
        base: TrainConfig {
            gamma1: a.gamma1,
            gamma2: a.gamma2,
            mu: a.mu,
            lambda: a.lambda,
            max_iters: a.max_iters,
            rel_tol: a.rel_tol,
            ..TrainConfig::default()
        },
        ar_order: a.ar_order,
        clamp_predictions: a.clamp,
        seed: a.seed,
    };
    cfg.base.validate()?;
    let table = harness::run_sweep(&x, &cfg)?;
    table.write_csv(create(&a.out)?)?;
    for &d in &cfg.dims {
        if let Some(trend) = table.nondecreasing_in_fraction(Method::Hcwmf, d) {
            eprintln!("hCWMF RMSE non-decreasing in held-out fraction at d={d}: {trend}");
        }
    }
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} cells failed; see the error column");
    }
    Ok(())
}

fn ttest(a: TtestArgs) -> Result<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        bail!("alpha must lie in (0, 1), got {}", a.alpha);
    }
    let records = read_records(&a.records)?;
    let cv = stats::build_consistency_vectors(&records, a.seed)?;
    let to_f = |v: &[u32]| v.iter().map(|&c| f64::from(c)).collect::<Vec<_>>();
    let result = stats::welch_ttest_one_sided(&to_f(&cv.hc_u), &to_f(&cv.hc_r))?.at_level(a.alpha);
    let json = serde_json::to_string(&result)?;
    println!("{json}");
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        writeln!(w, "{json}")?;
        w.flush()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Ttest(a) => ttest(a),
    }
}
