//! `rga eval-localisation` and `rga eval-detection`: lesion-level FROC
//! metrics with and without report masking, and case-level ROC metrics
//! with a DSC report of the kept annotations.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use rga_core::annotate::ensemble_average;
use rga_core::extraction::{extract_dynamic, ExtractionConfig, LesionCandidate};
use rga_core::metrics::{
    auroc, case_score, dsc_report, froc, pauc, roc_curve, sensitivity_at_fp,
    specificity_at_sensitivity, DscSummary, FrocCurve, HitCriterion,
};
use rga_core::reports::{extract, ExtractionStatus, LanguageProfile};
use rga_core::volume::LabelVolume;

use crate::config::EffectiveConfig;
use crate::manifest::{load_ensemble, load_gt, load_report, Manifest};

use super::{for_each_case, write_json_pretty, write_jsonl};

struct EvalCase {
    candidates: Vec<LesionCandidate>,
    n_sig: u32,
    gt: LabelVolume,
}

#[derive(Debug, Serialize)]
struct CaseSummary {
    case_id: String,
    num_candidates: usize,
    n_sig: u32,
    num_kept: usize,
    num_gt_lesions: u32,
}

/// Shared per-case evaluation pipeline: ensemble average, dynamic
/// extraction, report count, ground truth.
fn load_cases(
    manifest: &Manifest,
    jobs: usize,
    cfg: &ExtractionConfig,
) -> Result<Vec<std::result::Result<EvalCase, String>>> {
    let base = manifest.base_dir.clone();
    for_each_case(&manifest.records, jobs, |record| {
        let conf = ensemble_average(&load_ensemble(record, &base)?)?;
        let candidates = extract_dynamic(&conf, cfg)?;
        let n_sig = match record.n_sig_override {
            Some(n) => n,
            None => {
                let extraction = extract(&load_report(record, &base)?, LanguageProfile::Both);
                if extraction.status == ExtractionStatus::Empty {
                    anyhow::bail!("no scores could be extracted from the report");
                }
                extraction.n_sig
            }
        };
        let gt = load_gt(record, &base)?;
        if !gt.same_grid_as_volume(&conf) {
            anyhow::bail!("ground truth grid differs from confidence grid");
        }
        Ok(EvalCase { candidates, n_sig, gt })
    })
}

fn kept(case: &EvalCase) -> Vec<LesionCandidate> {
    let n = (case.n_sig as usize).min(case.candidates.len());
    case.candidates[..n].to_vec()
}

fn write_froc_csv(path: &Path, curve: &FrocCurve) -> Result<()> {
    let mut text = String::from("threshold,fp_per_case,sensitivity\n");
    for p in &curve.points {
        text.push_str(&format!("{},{},{}\n", p.threshold, p.fp_per_case, p.sensitivity));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct LocalisationMetrics {
    num_cases: usize,
    num_failed_cases: usize,
    num_gt_lesions: usize,
    pauc_unfiltered: f64,
    pauc_filtered: f64,
    sensitivity_at_fp: Vec<(f64, f64, f64)>, // (budget, unfiltered, filtered)
}

pub fn run_localisation(
    manifest: &Manifest,
    out_dir: &Path,
    jobs: usize,
    cfg: &EffectiveConfig,
) -> Result<bool> {
    fs::create_dir_all(out_dir)?;
    let results = load_cases(manifest, jobs, &cfg.extraction)?;
    let cases: Vec<&EvalCase> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let num_failed = results.len() - cases.len();
    if cases.is_empty() {
        anyhow::bail!("no case could be evaluated");
    }

    let unfiltered: Vec<(Vec<LesionCandidate>, LabelVolume)> =
        cases.iter().map(|c| (c.candidates.clone(), c.gt.clone())).collect();
    let filtered: Vec<(Vec<LesionCandidate>, LabelVolume)> =
        cases.iter().map(|c| (kept(c), c.gt.clone())).collect();
    let curve_u = froc(&unfiltered, cfg.hit_iou, HitCriterion::Iou)?;
    let curve_f = froc(&filtered, cfg.hit_iou, HitCriterion::Iou)?;
    write_froc_csv(&out_dir.join("froc_unfiltered.csv"), &curve_u)?;
    write_froc_csv(&out_dir.join("froc_filtered.csv"), &curve_f)?;

    let budgets = [0.25, 0.5, 1.0, 2.0];
    let metrics = LocalisationMetrics {
        num_cases: cases.len(),
        num_failed_cases: num_failed,
        num_gt_lesions: curve_u.num_gt_lesions,
        pauc_unfiltered: pauc(&curve_u, 0.0, 1.0)?,
        pauc_filtered: pauc(&curve_f, 0.0, 1.0)?,
        sensitivity_at_fp: budgets
            .iter()
            .map(|&b| {
                Ok((
                    b,
                    sensitivity_at_fp(&curve_u, b)?,
                    sensitivity_at_fp(&curve_f, b)?,
                ))
            })
            .collect::<Result<_>>()?,
    };
    write_json_pretty(&out_dir.join("metrics.json"), &metrics)?;

    let summaries: Vec<std::result::Result<CaseSummary, String>> = manifest
        .records
        .iter()
        .zip(&results)
        .map(|(record, r)| {
            r.as_ref()
                .map(|c| CaseSummary {
                    case_id: record.case_id.clone(),
                    num_candidates: c.candidates.len(),
                    n_sig: c.n_sig,
                    num_kept: (c.n_sig as usize).min(c.candidates.len()),
                    num_gt_lesions: c.gt.num_labels(),
                })
                .map_err(Clone::clone)
        })
        .collect();
    write_jsonl(&out_dir.join("cases.jsonl"), &manifest.records, summaries)
}

#[derive(Debug, Serialize)]
struct DetectionMetrics {
    num_cases: usize,
    num_failed_cases: usize,
    auroc: f64,
    pauc_froc: f64,
    sensitivity_at_1_fp: Option<f64>,
    specificity_at_sensitivity_0_9: Option<f64>,
    dsc: DscSummary,
}

pub fn run_detection(
    manifest: &Manifest,
    out_dir: &Path,
    jobs: usize,
    cfg: &EffectiveConfig,
) -> Result<bool> {
    fs::create_dir_all(out_dir)?;
    let results = load_cases(manifest, jobs, &cfg.extraction)?;
    let cases: Vec<&EvalCase> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let num_failed = results.len() - cases.len();
    if cases.is_empty() {
        anyhow::bail!("no case could be evaluated");
    }

    let scores: Vec<f64> = cases.iter().map(|c| case_score(&c.candidates)).collect();
    let labels: Vec<u8> = cases.iter().map(|c| (c.gt.num_labels() > 0) as u8).collect();
    let roc = roc_curve(&scores, &labels)?;
    let mut roc_csv = String::from("threshold,fpr,tpr\n");
    for p in &roc.points {
        roc_csv.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    fs::write(out_dir.join("roc.csv"), roc_csv)?;

    let unfiltered: Vec<(Vec<LesionCandidate>, LabelVolume)> =
        cases.iter().map(|c| (c.candidates.clone(), c.gt.clone())).collect();
    let annotated: Vec<(Vec<LesionCandidate>, LabelVolume)> =
        cases.iter().map(|c| (kept(c), c.gt.clone())).collect();
    let curve = froc(&unfiltered, cfg.hit_iou, HitCriterion::Iou)?;
    let metrics = DetectionMetrics {
        num_cases: cases.len(),
        num_failed_cases: num_failed,
        auroc: auroc(&scores, &labels)?,
        pauc_froc: pauc(&curve, 0.0, 1.0)?,
        sensitivity_at_1_fp: sensitivity_at_fp(&curve, 1.0).ok(),
        specificity_at_sensitivity_0_9: specificity_at_sensitivity(&roc, 0.9).ok(),
        dsc: dsc_report(&annotated, cfg.hit_iou, HitCriterion::Iou, true)?,
    };
    write_json_pretty(&out_dir.join("metrics.json"), &metrics)?;
    Ok(num_failed > 0)
}
