//! JSON Lines case manifest: one `CaseRecord` per line, plus loading of
//! the per-case inputs it references.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rga_core::reports::Report;
use rga_core::volume::{read_confidence_volume, read_label_volume, LabelVolume, Volume};

/// Report attached to a case: inline text or a file path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportSource {
    Text { text: String },
    Path { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    /// Ensemble members; at least one confidence volume.
    pub volume_paths: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sig_override: Option<u32>,
}

/// A manifest plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub records: Vec<CaseRecord>,
    pub base_dir: PathBuf,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CaseRecord = serde_json::from_str(line)
            .with_context(|| format!("manifest {} line {}", path.display(), lineno + 1))?;
        if record.volume_paths.is_empty() {
            bail!("case {} has no confidence volumes", record.case_id);
        }
        if !seen.insert(record.case_id.clone()) {
            bail!("duplicate case_id {} in manifest", record.case_id);
        }
        records.push(record);
    }
    if records.is_empty() {
        bail!("manifest {} contains no cases", path.display());
    }
    let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    Ok(Manifest { records, base_dir })
}

pub fn write_manifest(records: &[CaseRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing manifest {}", path.display()))?;
    Ok(())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_report(record: &CaseRecord, base: &Path) -> Result<Report> {
    let source = record
        .report
        .as_ref()
        .with_context(|| format!("case {} has no report", record.case_id))?;
    let body = match source {
        ReportSource::Text { text } => text.clone(),
        ReportSource::Path { path } => {
            let p = resolve(base, path);
            fs::read_to_string(&p)
                .with_context(|| format!("case {}: reading report {}", record.case_id, p.display()))?
        }
    };
    Ok(Report::new(&record.case_id, body)?)
}

pub fn load_ensemble(record: &CaseRecord, base: &Path) -> Result<Vec<Volume>> {
    record
        .volume_paths
        .iter()
        .map(|p| {
            let p = resolve(base, p);
            read_confidence_volume(&p)
                .with_context(|| format!("case {}: reading volume {}", record.case_id, p.display()))
        })
        .collect()
}

pub fn load_gt(record: &CaseRecord, base: &Path) -> Result<LabelVolume> {
    let p = record
        .gt_path
        .as_ref()
        .with_context(|| format!("case {} has no ground-truth path", record.case_id))?;
    let p = resolve(base, p);
    Ok(read_label_volume(&p)
        .with_context(|| format!("case {}: reading ground truth {}", record.case_id, p.display()))?)
}
