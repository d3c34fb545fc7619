//! Trending-hashtag adoption prediction with consistency-regularized
//! weighted matrix factorization (hCWMF).
//!
//! A user × time-bin binary matrix `X` is factorized as `UVᵀ` with
//! non-negative factors. Known cells are weighted by an indicator matrix `W`,
//! and a second term pulls predictions toward 1 after each user's first
//! adoption, weighted by a decaying attenuation matrix `G`:
//!
//! ```text
//! min ‖W ⊙ (X − UVᵀ)‖² + γ1‖U‖² + γ2‖V‖² + μ‖G ⊙ (1 − UVᵀ)‖²
//! ```
//!
//! The crate also carries the comparison baselines, the masked-RMSE
//! evaluation sweep, a one-sided Welch t-test for the consistency
//! hypothesis, and a seeded generator for synthetic trend corpora.
//!
//! ```
//! use hcwmf::{dataio, factorization, harness, masks};
//!
//! let corpus = dataio::generate_synthetic(&dataio::SynthConfig {
//!     n_users: 40,
//!     n_bins: 24,
//!     repeat_prob: 0.5,
//!     ..Default::default()
//! })?;
//! let x = dataio::bin_records(&corpus, "#trend", 3600, None)?.matrix;
//! let (train, held) = harness::split_mask(&x, &harness::SplitSpec { fraction: 20.0, seed: 1 })?;
//! let masks = masks::MaskPair::build(&train, &held)?;
//! let cfg = factorization::TrainConfig { d: 4, max_iters: 50, ..Default::default() };
//! let (factors, trace) = factorization::train(&train, &masks, &cfg)?;
//! assert_eq!(trace.iterations_run, trace.objective_per_iter.len());
//! let preds = factorization::predict_cells(&factors, held.iter());
//! let score = harness::rmse(&preds, &vec![1.0; preds.len()])?;
//! assert!(score.is_finite());
//! # Ok::<(), hcwmf::Error>(())
//! ```

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dataio;
pub mod error;
pub mod factorization;
pub mod harness;
pub mod linalg;
pub mod masks;
pub mod stats;

pub use error::{Error, Result};
pub use factorization::{FactorPair, TrainConfig, TrainTrace};
pub use harness::{Method, ResultsTable, SweepConfig};
pub use linalg::{DenseMatrix, SparseBinaryMatrix};
pub use masks::{HeldOutSet, MaskPair};
