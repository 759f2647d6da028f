//! Localisation, segmentation, lesion-level (FROC/pAUC) and case-level
//! (ROC/AUROC) evaluation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::LesionCandidate;
use crate::volume::{voxel_volume_cm3, LabelVolume};

/// Overlap measure used to decide whether a candidate hits a ground-truth
/// lesion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HitCriterion {
    #[default]
    Iou,
    Dice,
}

/// Default hit rule: IoU of at least 0.10.
pub const DEFAULT_HIT_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    /// 0-based rank of the candidate in its (sorted) list.
    pub candidate_rank: usize,
    pub gt_label: u32,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    /// Ranks of candidates that claimed no lesion (false positives).
    pub unmatched_candidates: Vec<usize>,
    /// Ground-truth labels no candidate claimed (misses).
    pub unmatched_gt: Vec<u32>,
}

fn overlap_score(a: &[usize], b: &[usize], criterion: HitCriterion) -> f64 {
    // both inputs sorted
    let mut inter = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    match criterion {
        HitCriterion::Iou => {
            let union = a.len() + b.len() - inter;
            if union == 0 {
                0.0
            } else {
                inter as f64 / union as f64
            }
        }
        HitCriterion::Dice => {
            if a.is_empty() && b.is_empty() {
                0.0
            } else {
                2.0 * inter as f64 / (a.len() + b.len()) as f64
            }
        }
    }
}

/// Greedy one-to-one matching in descending candidate rank: each candidate
/// claims the unclaimed ground-truth lesion with the highest overlap, if
/// that overlap reaches `hit_threshold`. Ties go to the lower label.
pub fn match_candidates(
    candidates: &[LesionCandidate],
    gt: &LabelVolume,
    hit_threshold: f64,
    criterion: HitCriterion,
) -> Result<MatchResult> {
    let grid_len = gt.data().len();
    for c in candidates {
        if c.voxels.iter().any(|&v| v >= grid_len) {
            return Err(Error::GridMismatch(format!(
                "candidate voxel index outside grid of {grid_len} voxels"
            )));
        }
    }
    let gt_voxels = gt.label_voxels();
    let mut claimed = vec![false; gt_voxels.len()];
    let mut pairs = Vec::new();
    let mut unmatched_candidates = Vec::new();
    for (rank, cand) in candidates.iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for (li, voxels) in gt_voxels.iter().enumerate() {
            if claimed[li] {
                continue;
            }
            let ov = overlap_score(&cand.voxels, voxels, criterion);
            if ov >= hit_threshold && best.map_or(true, |(b, _)| ov > b) {
                best = Some((ov, li));
            }
        }
        match best {
            Some((ov, li)) => {
                claimed[li] = true;
                pairs.push(MatchPair {
                    candidate_rank: rank,
                    gt_label: li as u32 + 1,
                    overlap: ov,
                });
            }
            None => unmatched_candidates.push(rank),
        }
    }
    let unmatched_gt = claimed
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| i as u32 + 1)
        .collect();
    Ok(MatchResult {
        pairs,
        unmatched_candidates,
        unmatched_gt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrocPoint {
    pub threshold: f64,
    pub fp_per_case: f64,
    pub sensitivity: f64,
}

/// Free-response ROC curve: lesion sensitivity against false positives per
/// case, swept over candidate confidence thresholds. Points are sorted by
/// ascending `fp_per_case` with non-decreasing sensitivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrocCurve {
    pub points: Vec<FrocPoint>,
    pub num_cases: usize,
    pub num_gt_lesions: usize,
}

impl FrocCurve {
    /// Step-function sensitivity at a given FP/case budget (0 before the
    /// first point, last value held beyond the curve).
    pub fn sensitivity_at_fp(&self, fp: f64) -> f64 {
        let mut s = 0.0f64;
        for p in &self.points {
            if p.fp_per_case <= fp {
                s = s.max(p.sensitivity);
            }
        }
        s
    }

    pub fn points_xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.fp_per_case, p.sensitivity)).collect()
    }
}

/// Build the FROC curve for a set of cases. Matching runs once on the full
/// candidate sets; the threshold sweep then recounts hits and false
/// positives by confidence.
pub fn froc(
    cases: &[(Vec<LesionCandidate>, LabelVolume)],
    hit_threshold: f64,
    criterion: HitCriterion,
) -> Result<FrocCurve> {
    if cases.is_empty() {
        return Err(Error::invalid("froc needs at least one case"));
    }
    let mut matched_conf: Vec<f64> = Vec::new();
    let mut unmatched_conf: Vec<f64> = Vec::new();
    let mut total_gt = 0usize;
    for (candidates, gt) in cases {
        total_gt += gt.num_labels() as usize;
        let m = match_candidates(candidates, gt, hit_threshold, criterion)?;
        for p in &m.pairs {
            matched_conf.push(candidates[p.candidate_rank].peak_confidence as f64);
        }
        for &r in &m.unmatched_candidates {
            unmatched_conf.push(candidates[r].peak_confidence as f64);
        }
    }
    if total_gt == 0 {
        return Err(Error::invalid("froc needs at least one ground-truth lesion"));
    }
    let mut thresholds: BTreeSet<u64> = BTreeSet::new();
    for &c in matched_conf.iter().chain(&unmatched_conf) {
        thresholds.insert(c.to_bits());
    }
    let n_cases = cases.len() as f64;
    let mut points: Vec<FrocPoint> = thresholds
        .into_iter()
        .rev() // descending threshold: fp and sensitivity both grow
        .map(|bits| {
            let t = f64::from_bits(bits);
            let hits = matched_conf.iter().filter(|&&c| c >= t).count();
            let fps = unmatched_conf.iter().filter(|&&c| c >= t).count();
            FrocPoint {
                threshold: t,
                fp_per_case: fps as f64 / n_cases,
                sensitivity: hits as f64 / total_gt as f64,
            }
        })
        .collect();
    // collapse duplicate fp values, keeping the best sensitivity (lowest threshold)
    points.dedup_by(|b, a| {
        if a.fp_per_case == b.fp_per_case {
            *a = *b;
            true
        } else {
            false
        }
    });
    Ok(FrocCurve {
        points,
        num_cases: cases.len(),
        num_gt_lesions: total_gt,
    })
}

/// Partial area under the step-interpolated FROC curve over the FP/case
/// interval `[lo, hi]`. Sensitivity is held constant between points
/// (right-continuous step) and past the last point.
pub fn pauc(curve: &FrocCurve, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::invalid("pauc requires lo < hi"));
    }
    if curve.points.is_empty() {
        return Err(Error::invalid("pauc of an empty curve"));
    }
    let mut area = 0.0;
    let mut x = lo;
    let mut s = curve.sensitivity_at_fp(lo);
    for p in &curve.points {
        if p.fp_per_case <= x {
            continue;
        }
        let next = p.fp_per_case.min(hi);
        area += s * (next - x);
        x = next;
        s = s.max(p.sensitivity);
        if x >= hi {
            break;
        }
    }
    if x < hi {
        area += s * (hi - x);
    }
    Ok(area)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Case-level ROC curve from (0,0) to (1,1). Tied scores are grouped so
/// the trapezoidal area matches the Mann-Whitney convention (ties counted
/// half).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    pub fn points_xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.fpr, p.tpr)).collect()
    }
}

pub fn roc_curve(case_scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if case_scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..case_scores.len()).collect();
    order.sort_by(|&a, &b| case_scores[b].partial_cmp(&case_scores[a]).unwrap().then(a.cmp(&b)));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let score = case_scores[order[i]];
        // consume the whole tie group at once
        while i < order.len() && case_scores[order[i]] == score {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: score,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(RocCurve { points })
}

/// Area under the ROC curve by trapezoidal integration; equals the
/// normalised Mann-Whitney U statistic with ties counted half.
pub fn auroc(case_scores: &[f64], labels: &[u8]) -> Result<f64> {
    let curve = roc_curve(case_scores, labels)?;
    let mut area = 0.0;
    for w in curve.points.windows(2) {
        area += (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0;
    }
    Ok(area)
}

/// Case-level likelihood: the maximum candidate peak confidence, 0 when no
/// candidates were extracted.
pub fn case_score(candidates: &[LesionCandidate]) -> f64 {
    candidates
        .iter()
        .map(|c| c.peak_confidence as f64)
        .fold(0.0, f64::max)
}

/// Dice similarity coefficient between two binary masks (nonzero =
/// foreground). Two empty masks agree perfectly: 1.0.
pub fn dice(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::GridMismatch(format!(
            "dice over {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let mut inter = 0usize;
    let mut na = 0usize;
    let mut nb = 0usize;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (fa, fb) = (x > 0, y > 0);
        na += fa as usize;
        nb += fb as usize;
        inter += (fa && fb) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

/// Dice between a candidate's voxel set and one ground-truth lesion.
pub fn dice_voxel_sets(a: &[usize], b: &[usize]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    overlap_score(a, b, HitCriterion::Dice)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DscSummary {
    pub mean: f64,
    pub std: f64,
    /// Per-lesion DSC values in evaluation order.
    pub per_lesion: Vec<f64>,
    /// (ground-truth lesion volume in cm^3, DSC) pairs.
    pub by_volume: Vec<(f64, f64)>,
    pub num_matched: usize,
    pub num_missed: usize,
}

/// Aggregate segmentation quality over matched lesions. When
/// `include_missed` is set, ground-truth lesions no candidate claimed are
/// scored as DSC 0.
pub fn dsc_report(
    cases: &[(Vec<LesionCandidate>, LabelVolume)],
    hit_threshold: f64,
    criterion: HitCriterion,
    include_missed: bool,
) -> Result<DscSummary> {
    let mut per_lesion = Vec::new();
    let mut by_volume = Vec::new();
    let mut num_matched = 0usize;
    let mut num_missed = 0usize;
    for (candidates, gt) in cases {
        let gt_voxels = gt.label_voxels();
        let vox_cm3 = voxel_volume_cm3(gt.spacing_mm());
        let m = match_candidates(candidates, gt, hit_threshold, criterion)?;
        for p in &m.pairs {
            let gt_set = &gt_voxels[(p.gt_label - 1) as usize];
            let d = dice_voxel_sets(&candidates[p.candidate_rank].voxels, gt_set);
            per_lesion.push(d);
            by_volume.push((gt_set.len() as f64 * vox_cm3, d));
            num_matched += 1;
        }
        if include_missed {
            for &label in &m.unmatched_gt {
                let gt_set = &gt_voxels[(label - 1) as usize];
                per_lesion.push(0.0);
                by_volume.push((gt_set.len() as f64 * vox_cm3, 0.0));
                num_missed += 1;
            }
        }
    }
    let n = per_lesion.len() as f64;
    let mean = if per_lesion.is_empty() {
        0.0
    } else {
        per_lesion.iter().sum::<f64>() / n
    };
    let std = if per_lesion.len() < 2 {
        0.0
    } else {
        (per_lesion.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    Ok(DscSummary {
        mean,
        std,
        per_lesion,
        by_volume,
        num_matched,
        num_missed,
    })
}

/// Step-interpolated lookup of sensitivity at an FP/case budget.
pub fn sensitivity_at_fp(curve: &FrocCurve, fp: f64) -> Result<f64> {
    if fp < 0.0 {
        return Err(Error::UnreachableOperatingPoint(format!("fp budget {fp} < 0")));
    }
    Ok(curve.sensitivity_at_fp(fp))
}

/// Highest specificity achieving sensitivity >= `value` on a ROC curve.
pub fn specificity_at_sensitivity(curve: &RocCurve, value: f64) -> Result<f64> {
    curve
        .points
        .iter()
        .filter(|p| p.tpr >= value)
        .map(|p| 1.0 - p.fpr)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
        .ok_or_else(|| {
            Error::UnreachableOperatingPoint(format!("no point reaches sensitivity {value}"))
        })
}
