//! Report-guided automatic annotation: combine ensemble confidence maps,
//! extracted lesion candidates, and the report's significant-finding count
//! into a voxel-level label mask.
//!
//! The report count `n_sig` caps the candidate list: the `n_sig` highest
//! ranking candidates become labels 1..n_sig. Cases whose reports yield no
//! scores, or that produce fewer candidates than findings, are excluded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{extract_dynamic, ExtractionConfig, LesionCandidate};
use crate::reports::{extract, ExtractionStatus, LanguageProfile, Report};
use crate::volume::{LabelVolume, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "reason")]
pub enum AnnotationStatus {
    /// Mask with exactly `n_sig` labels produced.
    Annotated,
    /// Case dropped; `reason` says why.
    Excluded(ExclusionReason),
    /// Report-negative case: explicit all-zero mask.
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    /// No scores could be extracted from the report.
    EmptyReport,
    /// Fewer lesion candidates than significant report findings.
    TooFewCandidates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationOutcome {
    pub case_id: String,
    pub status: AnnotationStatus,
    /// Written via the on-disk volume format, not JSON.
    #[serde(skip)]
    pub mask: Option<LabelVolume>,
    /// Candidates kept into the mask, in label order.
    pub kept: Vec<LesionCandidate>,
    pub n_sig: u32,
    /// Size of the candidate set before report masking.
    pub num_candidates: usize,
}

/// Voxelwise arithmetic mean of ensemble members. All maps must share the
/// grid.
pub fn ensemble_average(maps: &[Volume]) -> Result<Volume> {
    let Some(first) = maps.first() else {
        return Err(Error::invalid("ensemble is empty"));
    };
    for (i, m) in maps.iter().enumerate().skip(1) {
        if !m.same_grid(first) {
            return Err(Error::GridMismatch(format!(
                "ensemble member {i} differs in dims or spacing"
            )));
        }
    }
    let inv = 1.0 / maps.len() as f64;
    let data = (0..first.len())
        .map(|v| (maps.iter().map(|m| m.data()[v] as f64).sum::<f64>() * inv) as f32)
        .collect();
    Volume::new_confidence(first.dims(), first.spacing_mm(), data)
}

fn rasterize(
    case_id: &str,
    kept: &[LesionCandidate],
    dims: (usize, usize, usize),
    spacing_mm: (f64, f64, f64),
) -> Result<LabelVolume> {
    let mut mask = LabelVolume::zeros(dims, spacing_mm)?;
    for (rank, c) in kept.iter().enumerate() {
        let label = rank as u32 + 1;
        for &v in &c.voxels {
            if v >= mask.data().len() {
                return Err(Error::invalid(format!(
                    "{case_id}: candidate voxel index {v} outside grid"
                )));
            }
            mask.data_mut()[v] = label;
        }
    }
    Ok(mask)
}

/// Apply the report count to a ranked candidate list. `candidates` must be
/// sorted descending by ranking key (as `extract_dynamic` returns them).
pub fn report_guided_annotation(
    case_id: &str,
    candidates: &[LesionCandidate],
    n_sig: u32,
    dims: (usize, usize, usize),
    spacing_mm: (f64, f64, f64),
) -> Result<AnnotationOutcome> {
    let num_candidates = candidates.len();
    if n_sig == 0 {
        return Ok(AnnotationOutcome {
            case_id: case_id.to_string(),
            status: AnnotationStatus::Negative,
            mask: Some(LabelVolume::zeros(dims, spacing_mm)?),
            kept: Vec::new(),
            n_sig,
            num_candidates,
        });
    }
    if num_candidates < n_sig as usize {
        return Ok(AnnotationOutcome {
            case_id: case_id.to_string(),
            status: AnnotationStatus::Excluded(ExclusionReason::TooFewCandidates),
            mask: None,
            kept: Vec::new(),
            n_sig,
            num_candidates,
        });
    }
    let kept: Vec<LesionCandidate> = candidates[..n_sig as usize].to_vec();
    let mask = rasterize(case_id, &kept, dims, spacing_mm)?;
    Ok(AnnotationOutcome {
        case_id: case_id.to_string(),
        status: AnnotationStatus::Annotated,
        mask: Some(mask),
        kept,
        n_sig,
        num_candidates,
    })
}

/// Inputs for annotating one case: ensemble members plus either a report
/// or a precomputed significant-finding count.
#[derive(Debug, Clone)]
pub struct CaseInput {
    pub case_id: String,
    pub ensemble: Vec<Volume>,
    pub report: Option<Report>,
    pub n_sig_override: Option<u32>,
}

/// Full per-case pipeline: ensemble average, dynamic candidate extraction,
/// report parsing, report-guided masking.
pub fn annotate_case(input: &CaseInput, cfg: &ExtractionConfig) -> Result<AnnotationOutcome> {
    let conf = ensemble_average(&input.ensemble)?;
    let candidates = extract_dynamic(&conf, cfg)?;
    let n_sig = match input.n_sig_override {
        Some(n) => n,
        None => {
            let report = input
                .report
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("{}: no report and no n_sig override", input.case_id)))?;
            let extraction = extract(report, LanguageProfile::Both);
            if extraction.status == ExtractionStatus::Empty {
                return Ok(AnnotationOutcome {
                    case_id: input.case_id.clone(),
                    status: AnnotationStatus::Excluded(ExclusionReason::EmptyReport),
                    mask: None,
                    kept: Vec::new(),
                    n_sig: 0,
                    num_candidates: candidates.len(),
                });
            }
            extraction.n_sig
        }
    };
    report_guided_annotation(&input.case_id, &candidates, n_sig, conf.dims(), conf.spacing_mm())
}
