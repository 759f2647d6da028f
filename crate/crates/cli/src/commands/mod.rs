//! Subcommand implementations. Each command validates inputs up front
//! (exit 1 on failure), then processes cases in a bounded worker pool;
//! per-case failures never abort the batch — they are recorded in the
//! results file and reported through exit code 2.

pub mod annotate;
pub mod efficiency;
pub mod evaluate;
pub mod extract;
pub mod parse_reports;
pub mod stats;
pub mod synth;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifest::CaseRecord;

/// Run `f` over the cases with at most `jobs` workers (0 = one per CPU).
/// Results come back in manifest order; errors are stringified so one bad
/// case cannot abort the batch.
pub fn for_each_case<T, F>(
    records: &[CaseRecord],
    jobs: usize,
    f: F,
) -> Result<Vec<std::result::Result<T, String>>>
where
    T: Send,
    F: Fn(&CaseRecord) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(|| {
        records
            .par_iter()
            .map(|r| f(r).map_err(|e| format!("{e:#}")))
            .collect()
    }))
}

/// One line in a JSONL results file: either the payload or the failure.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum CaseLine<T: Serialize> {
    Ok(T),
    Err { case_id: String, error: String },
}

/// Write per-case results as JSON Lines in manifest order. Returns true if
/// any case failed.
pub fn write_jsonl<T: Serialize>(
    path: &Path,
    records: &[CaseRecord],
    results: Vec<std::result::Result<T, String>>,
) -> Result<bool> {
    let mut text = String::new();
    let mut any_failed = false;
    for (record, result) in records.iter().zip(results) {
        let line = match result {
            Ok(v) => serde_json::to_string(&CaseLine::Ok(v))?,
            Err(error) => {
                any_failed = true;
                serde_json::to_string(&CaseLine::<()>::Err {
                    case_id: record.case_id.clone(),
                    error,
                })?
            }
        };
        text.push_str(&line);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(any_failed)
}

/// Write (x, y) curve samples as a two-column CSV with header.
pub fn write_curve_csv(path: &Path, header: &str, points: &[(f64, f64)]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for (x, y) in points {
        text.push_str(&format!("{x},{y}\n"));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
