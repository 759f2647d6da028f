//! `rga parse-reports`: run score extraction over every report in the
//! manifest. When all cases carry `n_sig_override` as a truth count, a
//! confusion matrix of predicted versus true counts is emitted as well.

use std::fs;
use std::path::Path;

use anyhow::Result;

use rga_core::reports::{evaluate_counts, extract, LanguageProfile, ReportExtraction};

use crate::manifest::{load_report, Manifest};

use super::{for_each_case, write_json_pretty, write_jsonl};

pub fn run(manifest: &Manifest, out_dir: &Path, jobs: usize) -> Result<bool> {
    fs::create_dir_all(out_dir)?;
    let base = manifest.base_dir.clone();
    let results = for_each_case(&manifest.records, jobs, |record| {
        let report = load_report(record, &base)?;
        Ok(extract(&report, LanguageProfile::Both))
    })?;

    // keep a copy for the confusion matrix before the lines are written out
    let extractions: Vec<Option<ReportExtraction>> =
        results.iter().map(|r| r.as_ref().ok().cloned()).collect();
    let any_failed = write_jsonl(&out_dir.join("extractions.jsonl"), &manifest.records, results)?;

    let truth: Vec<(u32, u32)> = manifest
        .records
        .iter()
        .zip(&extractions)
        .filter_map(|(record, e)| {
            Some((e.as_ref()?.n_sig, record.n_sig_override?))
        })
        .collect();
    if !truth.is_empty() && truth.len() == manifest.records.len() {
        let predicted: Vec<u32> = truth.iter().map(|&(p, _)| p).collect();
        let actual: Vec<u32> = truth.iter().map(|&(_, t)| t).collect();
        let matrix = evaluate_counts(&predicted, &actual)?;
        fs::write(out_dir.join("confusion.txt"), format!("{matrix}"))?;
        write_json_pretty(&out_dir.join("confusion.json"), &matrix)?;
    }
    Ok(any_failed)
}
