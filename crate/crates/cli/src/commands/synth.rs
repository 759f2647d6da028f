//! `rga synth`: materialize a synthetic scenario — confidence volumes,
//! ground-truth labels, report texts, a case manifest, and the true
//! significant-finding counts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use rga_core::synthetic::{generate_case, ScenarioSpec};
use rga_core::volume::{write_label_volume, write_volume, VolumeKind};

use crate::manifest::{write_manifest, CaseRecord, ReportSource};

use super::{for_each_case, write_json_pretty};

#[derive(Debug, Serialize)]
struct TruthLine {
    case_id: String,
    true_n_sig: u32,
    num_gt_lesions: u32,
}

pub fn run(scenario_path: &Path, out_dir: &Path, jobs: usize, seed: Option<u64>) -> Result<bool> {
    let text = fs::read_to_string(scenario_path)
        .with_context(|| format!("reading scenario {}", scenario_path.display()))?;
    let mut scenario: ScenarioSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing scenario {}", scenario_path.display()))?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    scenario.validate()?;

    for sub in ["volumes", "gt", "reports"] {
        fs::create_dir_all(out_dir.join(sub))?;
    }

    // placeholder records so the worker-pool helper drives one job per case
    let stubs: Vec<CaseRecord> = (0..scenario.num_cases)
        .map(|i| CaseRecord {
            case_id: format!("case-{i:04}"),
            volume_paths: vec![PathBuf::new()],
            report: None,
            gt_path: None,
            n_sig_override: None,
        })
        .collect();
    let scenario_ref = &scenario;
    let results = for_each_case(&stubs, jobs, |stub| {
        let index: usize = stub.case_id.trim_start_matches("case-").parse()?;
        let case = generate_case(scenario_ref, index)?;
        write_volume(
            &case.confidence,
            VolumeKind::Confidence,
            &out_dir.join("volumes").join(&case.case_id),
        )?;
        write_label_volume(&case.gt, &out_dir.join("gt").join(&case.case_id))?;
        let report_path = out_dir.join("reports").join(format!("{}.txt", case.case_id));
        fs::write(&report_path, &case.report.body)?;
        Ok((
            CaseRecord {
                case_id: case.case_id.clone(),
                volume_paths: vec![PathBuf::from(format!("volumes/{}.json", case.case_id))],
                report: Some(ReportSource::Path {
                    path: PathBuf::from(format!("reports/{}.txt", case.case_id)),
                }),
                gt_path: Some(PathBuf::from(format!("gt/{}.json", case.case_id))),
                n_sig_override: None,
            },
            TruthLine {
                case_id: case.case_id,
                true_n_sig: case.true_n_sig,
                num_gt_lesions: case.gt.num_labels(),
            },
        ))
    })?;

    let mut records = Vec::new();
    let mut truth_lines = String::new();
    for result in results {
        // generation is deterministic; any failure is a hard error
        let (record, truth) = result.map_err(anyhow::Error::msg)?;
        truth_lines.push_str(&serde_json::to_string(&truth)?);
        truth_lines.push('\n');
        records.push(record);
    }
    write_manifest(&records, &out_dir.join("manifest.jsonl"))?;
    fs::write(out_dir.join("truth.jsonl"), truth_lines)?;
    write_json_pretty(&out_dir.join("scenario.json"), &scenario)?;
    Ok(false)
}
