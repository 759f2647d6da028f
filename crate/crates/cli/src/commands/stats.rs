//! `rga permtest` and `rga bootstrap`: resampling statistics over per-run
//! or per-case metric values read from small value files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use rga_core::metrics::auroc;
use rga_core::stats::{bootstrap_ci, permutation_test, RunGroup};

use super::write_json_pretty;

/// Read a list of numbers: either a JSON array or one value per line.
fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading values from {}", path.display()))?;
    if let Ok(values) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(values);
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().with_context(|| format!("bad value {l:?} in {}", path.display())))
        .collect()
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "group".into())
}

pub fn run_permtest(
    group_a: &Path,
    group_b: &Path,
    iterations: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let a = RunGroup::new(stem(group_a), read_values(group_a)?)?;
    let b = RunGroup::new(stem(group_b), read_values(group_b)?)?;
    let result = permutation_test(&a, &b, iterations, seed)?;
    let json = serde_json::to_string_pretty(&result)?;
    println!("{json}");
    if let Some(path) = out {
        write_json_pretty(path, &result)?;
    }
    Ok(())
}

/// Read per-case `score,label` pairs, one per line (label 0 or 1).
fn read_scored(path: &Path) -> Result<(Vec<f64>, Vec<u8>)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scores from {}", path.display()))?;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if line.starts_with("score") {
            continue; // header
        }
        let (s, l) = line
            .split_once(',')
            .with_context(|| format!("expected score,label but got {line:?}"))?;
        scores.push(s.trim().parse::<f64>()?);
        let label: u8 = l.trim().parse()?;
        if label > 1 {
            bail!("label must be 0 or 1, got {label}");
        }
        labels.push(label);
    }
    if scores.is_empty() {
        bail!("{} contains no data", path.display());
    }
    Ok((scores, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BootstrapMetric {
    /// Case-level AUROC over resampled cases.
    Auroc,
    /// Mean score over resampled positive-and-negative draws.
    Mean,
}

pub fn run_bootstrap(
    values: &Path,
    metric: BootstrapMetric,
    iterations: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let (scores, labels) = read_scored(values)?;
    let f = |vals: &[f64], labs: &[u8]| -> Option<f64> {
        match metric {
            BootstrapMetric::Auroc => auroc(vals, labs).ok(),
            BootstrapMetric::Mean => Some(vals.iter().sum::<f64>() / vals.len() as f64),
        }
    };
    let result = bootstrap_ci(&scores, &labels, f, iterations, seed)?;
    let json = serde_json::to_string_pretty(&result)?;
    println!("{json}");
    if let Some(path) = out {
        write_json_pretty(path, &result)?;
    }
    Ok(())
}
