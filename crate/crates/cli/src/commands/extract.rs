//! `rga extract`: lesion candidates per case via the dynamic method or one
//! of the baselines (static threshold, Otsu, dynamic-fast).

use std::fs;
use std::path::Path;

use anyhow::{bail, Result};
use serde::Serialize;

use rga_core::annotate::ensemble_average;
use rga_core::extraction::{
    extract_dynamic, extract_dynamic_fast, extract_static, otsu_threshold, ExtractionConfig,
    LesionCandidate,
};

use crate::manifest::{load_ensemble, Manifest};

use super::{for_each_case, write_jsonl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Dynamic,
    DynamicFast,
    Static,
    Otsu,
}

#[derive(Debug, Serialize)]
struct CaseCandidates {
    case_id: String,
    method: String,
    /// Global threshold the method applied, when it has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    num_candidates: usize,
    candidates: Vec<LesionCandidate>,
}

pub fn run(
    manifest: &Manifest,
    out_dir: &Path,
    jobs: usize,
    cfg: &ExtractionConfig,
    method: Method,
    threshold: Option<f64>,
) -> Result<bool> {
    if method == Method::Static && threshold.is_none() {
        bail!("--threshold is required for the static method");
    }
    fs::create_dir_all(out_dir)?;
    let base = manifest.base_dir.clone();
    let results = for_each_case(&manifest.records, jobs, |record| {
        let conf = ensemble_average(&load_ensemble(record, &base)?)?;
        let (candidates, used_threshold) = match method {
            Method::Dynamic => (extract_dynamic(&conf, cfg)?, None),
            Method::DynamicFast => (extract_dynamic_fast(&conf, cfg)?, {
                let max = conf.data().iter().cloned().fold(0.0f32, f32::max) as f64;
                Some(cfg.rel_threshold * max)
            }),
            Method::Static => {
                let t = threshold.unwrap();
                (extract_static(&conf, t, cfg)?, Some(t))
            }
            Method::Otsu => {
                let t = otsu_threshold(&conf)?;
                (extract_static(&conf, t, cfg)?, Some(t))
            }
        };
        Ok(CaseCandidates {
            case_id: record.case_id.clone(),
            method: format!("{method:?}").to_lowercase(),
            threshold: used_threshold,
            num_candidates: candidates.len(),
            candidates,
        })
    })?;
    write_jsonl(&out_dir.join("candidates.jsonl"), &manifest.records, results)
}
