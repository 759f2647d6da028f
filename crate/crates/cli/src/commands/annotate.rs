//! `rga annotate`: run the full report-guided pipeline per case and write
//! the resulting label masks plus a JSONL outcome log.

use std::fs;
use std::path::Path;

use anyhow::Result;

use rga_core::annotate::{annotate_case, AnnotationOutcome, CaseInput};
use rga_core::extraction::ExtractionConfig;
use rga_core::volume::write_label_volume;

use crate::manifest::{load_ensemble, load_report, Manifest};

use super::{for_each_case, write_jsonl};

pub fn run(
    manifest: &Manifest,
    out_dir: &Path,
    jobs: usize,
    cfg: &ExtractionConfig,
) -> Result<bool> {
    let masks_dir = out_dir.join("masks");
    fs::create_dir_all(&masks_dir)?;
    let base = manifest.base_dir.clone();
    let results = for_each_case(&manifest.records, jobs, |record| {
        let ensemble = load_ensemble(record, &base)?;
        let report = match (&record.n_sig_override, &record.report) {
            (Some(_), _) => None,
            (None, Some(_)) => Some(load_report(record, &base)?),
            (None, None) => None, // annotate_case reports the error
        };
        let input = CaseInput {
            case_id: record.case_id.clone(),
            ensemble,
            report,
            n_sig_override: record.n_sig_override,
        };
        let outcome: AnnotationOutcome = annotate_case(&input, cfg)?;
        if let Some(mask) = &outcome.mask {
            write_label_volume(mask, &masks_dir.join(&record.case_id))?;
        }
        Ok(outcome)
    })?;
    write_jsonl(&out_dir.join("outcomes.jsonl"), &manifest.records, results)
}
