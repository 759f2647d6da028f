//! Permutation tests, bootstrap confidence intervals and pointwise curve
//! bands over repeated-run metrics.
//!
//! All routines are seed-deterministic. Each iteration draws from its own
//! counter-based substream of the seed, so results do not depend on
//! execution order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named group of per-run metric values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunGroup {
    pub name: String,
    pub values: Vec<f64>,
}

impl RunGroup {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("run group must be non-empty"));
        }
        Ok(RunGroup { name: name.into(), values })
    }
}

/// Reporting default; not applied inside any computation.
pub const SIGNIFICANCE_THRESHOLD: f64 = 0.01;

fn substream(seed: u64, iteration: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    rng
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTestResult {
    pub statistic: f64,
    pub p: f64,
    pub iterations: u64,
    pub seed: u64,
    pub groups: [String; 2],
}

/// One-sided permutation test of `mean(a) - mean(b)` with add-one
/// smoothing: `p = (1 + #{d* > d}) / (1 + iterations)`. The smoothing
/// keeps p strictly positive; the minimum attainable p is
/// `1 / (1 + iterations)`, reached when no permutation beats the observed
/// difference.
pub fn permutation_test(
    a: &RunGroup,
    b: &RunGroup,
    iterations: u64,
    seed: u64,
) -> Result<PermutationTestResult> {
    if a.values.len() < 2 || b.values.len() < 2 {
        return Err(Error::invalid("permutation test needs at least 2 values per group"));
    }
    if iterations == 0 {
        return Err(Error::invalid("iterations must be positive"));
    }
    let observed = mean(&a.values) - mean(&b.values);
    let mut pooled: Vec<f64> = a.values.iter().chain(&b.values).copied().collect();
    let na = a.values.len();
    let mut exceed = 0u64;
    for it in 0..iterations {
        let mut rng = substream(seed, it);
        pooled.shuffle(&mut rng);
        let d = mean(&pooled[..na]) - mean(&pooled[na..]);
        if d > observed {
            exceed += 1;
        }
    }
    Ok(PermutationTestResult {
        statistic: observed,
        p: (1 + exceed) as f64 / (1 + iterations) as f64,
        iterations,
        seed,
        groups: [a.name.clone(), b.name.clone()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub lo: f64,
    pub hi: f64,
    pub point_estimate: f64,
    pub iterations: u64,
    pub seed: u64,
    pub rejected_draws: u64,
}

/// Linear-interpolation percentile of a sorted slice, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// 95% bootstrap interval of a per-case metric. Each iteration draws
/// `k ~ U{1..N}` cases with replacement; draws that sample only one class
/// (or on which the metric is undefined) are rejected and redrawn.
pub fn bootstrap_ci<F>(
    per_case_values: &[f64],
    labels: &[u8],
    metric: F,
    iterations: u64,
    seed: u64,
) -> Result<BootstrapResult>
where
    F: Fn(&[f64], &[u8]) -> Option<f64>,
{
    if per_case_values.len() != labels.len() {
        return Err(Error::invalid("values and labels differ in length"));
    }
    if iterations < 100 {
        return Err(Error::invalid("bootstrap needs at least 100 iterations"));
    }
    let n = per_case_values.len();
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClass);
    }
    let point_estimate = metric(per_case_values, labels)
        .ok_or_else(|| Error::invalid("metric undefined on the full dataset"))?;

    // cap on redraws per iteration so a pathological metric cannot hang
    const MAX_REDRAWS: u64 = 10_000;
    let mut stats = Vec::with_capacity(iterations as usize);
    let mut rejected = 0u64;
    for it in 0..iterations {
        let mut rng = substream(seed, it);
        let mut accepted = None;
        for _ in 0..MAX_REDRAWS {
            let k = rng.gen_range(1..=n);
            let mut vals = Vec::with_capacity(k);
            let mut labs = Vec::with_capacity(k);
            for _ in 0..k {
                let i = rng.gen_range(0..n);
                vals.push(per_case_values[i]);
                labs.push(labels[i]);
            }
            if !labs.contains(&0) || !labs.contains(&1) {
                rejected += 1;
                continue;
            }
            match metric(&vals, &labs) {
                Some(v) => {
                    accepted = Some(v);
                    break;
                }
                None => rejected += 1,
            }
        }
        let v = accepted.ok_or_else(|| Error::invalid("metric undefined for all draws"))?;
        stats.push(v);
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(BootstrapResult {
        lo: percentile(&stats, 0.025),
        hi: percentile(&stats, 0.975),
        point_estimate,
        iterations,
        seed,
        rejected_draws: rejected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub lo: f64,
    pub median: f64,
    pub hi: f64,
}

fn step_at(points: &[(f64, f64)], x: f64) -> f64 {
    let mut y = 0.0;
    for &(px, py) in points {
        if px <= x {
            y = py.max(y);
        } else {
            break;
        }
    }
    y
}

/// Pointwise 95% band over a family of step curves, resampled onto a
/// shared grid: percentiles 2.5 / 50 / 97.5 at each grid point.
pub fn band(curves: &[Vec<(f64, f64)>], grid: &[f64]) -> Result<Vec<BandPoint>> {
    if curves.len() < 2 {
        return Err(Error::invalid("band needs at least 2 curves"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("band grid is empty"));
    }
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        let mut ys: Vec<f64> = curves.iter().map(|c| step_at(c, x)).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(BandPoint {
            x,
            lo: percentile(&ys, 0.025),
            median: percentile(&ys, 0.5),
            hi: percentile(&ys, 0.975),
        });
    }
    Ok(out)
}
