//! Significance tests and correlation.
//!
//! The two resampling tests draw a fresh ChaCha8 stream per iteration,
//! seeded from `splitmix64(seed ^ iteration)`. Iterations are therefore
//! independent of scheduling: the same seed gives bit-identical p-values
//! sequentially, in parallel, and for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::RNG_NAME;
use crate::error::{Error, Result};
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Bootstrap,
    Ztest,
    ApproxRandomization,
}

/// Outcome of one significance test. Resampling tests record their seed,
/// iteration count and RNG discipline so runs can be reproduced exactly.
#[derive(Debug, Clone, Serialize)]
pub struct SignificanceResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significant_at: Option<f64>,
}

impl SignificanceResult {
    pub fn with_level(mut self, level: f64) -> SignificanceResult {
        self.significant_at = Some(level);
        self
    }

    pub fn is_significant(&self) -> Option<bool> {
        self.significant_at.map(|a| self.p_value < a)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream for resampling iteration `i`.
fn stream(seed: u64, i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ i.wrapping_mul(0xA076_1D64_78BD_642F)))
}

fn ratio(stats: &[(f64, f64)]) -> f64 {
    let num: f64 = stats.iter().map(|s| s.0).sum();
    let den: f64 = stats.iter().map(|s| s.1).sum();
    100.0 * num / den
}

/// Paired bootstrap over segments for ratio metrics, one-sided for
/// "system A scores lower than system B". Each iteration resamples segment
/// indices with replacement and recomputes both corpus ratios;
/// `p = (#{A ≥ B} + 1) / (iterations + 1)`.
pub fn paired_bootstrap(
    per_segment_a: &[(f64, f64)],
    per_segment_b: &[(f64, f64)],
    iterations: u64,
    seed: u64,
) -> Result<SignificanceResult> {
    let n = per_segment_a.len();
    if n != per_segment_b.len() {
        return Err(Error::Precondition(format!(
            "bootstrap: segment counts differ ({} vs {})",
            n,
            per_segment_b.len()
        )));
    }
    if n == 0 || iterations == 0 {
        return Err(Error::Precondition("bootstrap: empty input".into()));
    }
    let statistic = ratio(per_segment_a) - ratio(per_segment_b);
    let hits: u64 = exec::map_range(iterations, |i| {
        let mut rng = stream(seed, i);
        let mut num_a = 0.0;
        let mut den_a = 0.0;
        let mut num_b = 0.0;
        let mut den_b = 0.0;
        for _ in 0..n {
            let k = rng.gen_range(0..n);
            num_a += per_segment_a[k].0;
            den_a += per_segment_a[k].1;
            num_b += per_segment_b[k].0;
            den_b += per_segment_b[k].1;
        }
        u64::from(num_a / den_a >= num_b / den_b)
    })
    .into_iter()
    .sum();
    Ok(SignificanceResult {
        test: TestKind::Bootstrap,
        statistic,
        p_value: (hits + 1) as f64 / (iterations + 1) as f64,
        iterations: Some(iterations),
        seed: Some(seed),
        rng: Some(RNG_NAME.to_string()),
        significant_at: None,
    })
}

/// Pooled two-proportion z-test, one-tailed for
/// "proportion A is lower than proportion B". The statistic is z and
/// `p = Φ(z)`.
pub fn ztest_proportions(
    count_a: u64,
    total_a: u64,
    count_b: u64,
    total_b: u64,
) -> Result<SignificanceResult> {
    if total_a == 0 || total_b == 0 {
        return Err(Error::Precondition("ztest: totals must be positive".into()));
    }
    if count_a > total_a || count_b > total_b {
        return Err(Error::Precondition("ztest: count exceeds total".into()));
    }
    let pa = count_a as f64 / total_a as f64;
    let pb = count_b as f64 / total_b as f64;
    let pooled = (count_a + count_b) as f64 / (total_a + total_b) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / total_a as f64 + 1.0 / total_b as f64)).sqrt();
    let (z, p) = if se == 0.0 {
        // pooled proportion 0 or 1: both proportions equal by construction,
        // otherwise the difference is categorical
        if pa == pb {
            (0.0, 0.5)
        } else if pa < pb {
            (f64::NEG_INFINITY, 0.0)
        } else {
            (f64::INFINITY, 1.0)
        }
    } else {
        let z = (pa - pb) / se;
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (z, normal.cdf(z))
    };
    Ok(SignificanceResult {
        test: TestKind::Ztest,
        statistic: z,
        p_value: p,
        iterations: None,
        seed: None,
        rng: None,
        significant_at: None,
    })
}

/// Approximate randomization over paired per-segment values, one-sided for
/// "mean of A exceeds mean of B". Each iteration swaps each pair with
/// probability 1/2; `p = (#{resampled diff ≥ observed} + 1) / (iterations + 1)`.
pub fn approx_randomization(
    per_segment_a: &[f64],
    per_segment_b: &[f64],
    iterations: u64,
    seed: u64,
) -> Result<SignificanceResult> {
    let n = per_segment_a.len();
    if n != per_segment_b.len() {
        return Err(Error::Precondition(format!(
            "approximate randomization: segment counts differ ({} vs {})",
            n,
            per_segment_b.len()
        )));
    }
    if n == 0 || iterations == 0 {
        return Err(Error::Precondition(
            "approximate randomization: empty input".into(),
        ));
    }
    let observed = mean_diff(per_segment_a, per_segment_b, None);
    let hits: u64 = exec::map_range(iterations, |i| {
        let mut rng = stream(seed, i);
        let flips: Vec<bool> = (0..n).map(|_| rng.gen::<bool>()).collect();
        u64::from(mean_diff(per_segment_a, per_segment_b, Some(&flips)) >= observed)
    })
    .into_iter()
    .sum();
    Ok(SignificanceResult {
        test: TestKind::ApproxRandomization,
        statistic: observed,
        p_value: (hits + 1) as f64 / (iterations + 1) as f64,
        iterations: Some(iterations),
        seed: Some(seed),
        rng: Some(RNG_NAME.to_string()),
        significant_at: None,
    })
}

fn mean_diff(a: &[f64], b: &[f64], flips: Option<&[bool]>) -> f64 {
    let n = a.len() as f64;
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for k in 0..a.len() {
        let flip = flips.is_some_and(|f| f[k]);
        if flip {
            sum_a += b[k];
            sum_b += a[k];
        } else {
            sum_a += a[k];
            sum_b += b[k];
        }
    }
    (sum_a - sum_b) / n
}

/// Sample Pearson correlation. Requires at least three points and
/// non-constant inputs.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Precondition("pearson: length mismatch".into()));
    }
    if x.len() < 3 {
        return Err(Error::Precondition(
            "pearson: need at least 3 points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for k in 0..x.len() {
        let dx = x[k] - mx;
        let dy = y[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Precondition(
            "pearson: correlation undefined for constant input".into(),
        ));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}
