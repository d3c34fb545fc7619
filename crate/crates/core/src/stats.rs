//! One-sided Welch t-test for the consistency hypothesis (users repeat
//! their own hashtags more than they share hashtags with a random user).

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::AdoptionRecords;
use crate::error::{Error, Result};

const CF_TOL: f64 = 1e-12;
const CF_MAX_TERMS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyVectors {
    /// Per user: distinct hashtags the user adopted at least twice.
    pub hc_u: Vec<u32>,
    /// Per user: hashtags shared with a randomly drawn other user.
    pub hc_r: Vec<u32>,
    /// User ids in the order of the two vectors.
    pub users: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    #[serde(rename = "t")]
    pub t_stat: f64,
    #[serde(rename = "df")]
    pub degrees_freedom: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
}

impl TTestResult {
    pub fn at_level(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self.reject = self.p_value < alpha;
        self
    }
}

struct UserHashtags {
    users: Vec<String>,
    /// Per user, hashtag -> number of events.
    usage: Vec<BTreeMap<String, u32>>,
}

fn group_by_user(records: &AdoptionRecords) -> Result<UserHashtags> {
    let mut by_user: BTreeMap<&str, BTreeMap<String, u32>> = BTreeMap::new();
    let mut hashtags = BTreeSet::new();
    for e in &records.events {
        *by_user
            .entry(e.user.as_str())
            .or_default()
            .entry(e.hashtag.clone())
            .or_insert(0) += 1;
        hashtags.insert(e.hashtag.as_str());
    }
    if by_user.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "consistency vectors need at least 2 users, got {}",
            by_user.len()
        )));
    }
    if hashtags.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "consistency vectors need at least 2 hashtags, got {}",
            hashtags.len()
        )));
    }
    let (users, usage) = by_user.into_iter().map(|(u, h)| (u.to_string(), h)).unzip();
    Ok(UserHashtags { users, usage })
}

fn partner_overlaps(grouped: &UserHashtags, seed: u64) -> Vec<u32> {
    let n = grouped.users.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut r = rng.gen_range(0..n - 1);
            if r >= i {
                r += 1;
            }
            let theirs = &grouped.usage[r];
            grouped.usage[i].keys().filter(|h| theirs.contains_key(*h)).count() as u32
        })
        .collect()
}

/// One element per user with at least one record, users in sorted order.
pub fn build_consistency_vectors(records: &AdoptionRecords, seed: u64) -> Result<ConsistencyVectors> {
    let grouped = group_by_user(records)?;
    let hc_u = grouped
        .usage
        .iter()
        .map(|h| h.values().filter(|&&c| c >= 2).count() as u32)
        .collect();
    let hc_r = partner_overlaps(&grouped, seed);
    Ok(ConsistencyVectors {
        hc_u,
        hc_r,
        users: grouped.users,
    })
}

/// Just the random-partner overlap vector; two draws with different seeds
/// form a null control for the test.
pub fn partner_overlap_vector(records: &AdoptionRecords, seed: u64) -> Result<Vec<u32>> {
    Ok(partner_overlaps(&group_by_user(records)?, seed))
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch statistic and Welch–Satterthwaite degrees of freedom, with the
/// upper-tail p-value for H1: mean(a) > mean(b). `alpha` defaults to 0.01.
pub fn welch_ttest_one_sided(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "each sample needs at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample value".into()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let sa = va / a.len() as f64;
    let sb = vb / b.len() as f64;
    if sa + sb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    let p = student_t_upper_tail(t, df)?;
    Ok(TTestResult {
        t_stat: t,
        degrees_freedom: df,
        p_value: p,
        alpha: 0.0,
        reject: false,
    }
    .at_level(0.01))
}

/// `P(T > t)` for Student's t with `df` degrees of freedom.
pub fn student_t_upper_tail(t: f64, df: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("t statistic must be finite, got {t}")));
    }
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::InvalidInput(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    // Two-sided tail mass beyond |t|, split in half.
    let x = df / (df + t * t);
    let half_tail = 0.5 * regularized_incomplete_beta(x, df / 2.0, 0.5);
    Ok(if t > 0.0 { half_tail } else { 1.0 - half_tail })
}

/// `I_x(a, b)` via the continued fraction, using the reflection
/// `I_x(a,b) = 1 − I_{1−x}(b,a)` on whichever side converges faster.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Modified Lentz evaluation.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_TERMS {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_TOL {
            return h;
        }
    }
    log::warn!("incomplete beta continued fraction hit {CF_MAX_TERMS} terms (x={x}, a={a}, b={b})");
    h
}

/// Lanczos approximation (g = 7, 9 coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
