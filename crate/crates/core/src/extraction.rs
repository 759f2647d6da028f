//! Lesion candidate extraction from voxel-level confidence maps.
//!
//! The dynamic method repeatedly takes the most confident remaining voxel
//! as a peak, grows the candidate over all connected voxels with at least
//! `rel_threshold` (default 40%) of that peak's confidence, removes the
//! candidate from a working copy and continues until the next peak falls
//! below `min_peak` or `max_lesions` candidates were accepted. Candidates
//! of `min_voxels` or fewer voxels are discarded; they are zeroed like
//! accepted ones so the same peak is not rediscovered, but do not count
//! toward `max_lesions`.
//!
//! Three baselines are provided: a static threshold, Otsu's method and
//! `dynamic-fast` (a single global threshold at `rel_threshold` times the
//! volume maximum, then island labelling).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{connected_components, voxel_volume_cm3, Connectivity, Volume};

/// Ranking key for ordering candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RankBy {
    #[default]
    PeakConfidence,
    MeanConfidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    /// Grow candidates down to this fraction of the peak confidence.
    pub rel_threshold: f64,
    /// Stop after this many accepted candidates.
    pub max_lesions: usize,
    /// Candidates with this many voxels or fewer are discarded.
    pub min_voxels: usize,
    /// Absolute confidence floor below which no further peaks are taken.
    pub min_peak: f64,
    pub connectivity: Connectivity,
    pub rank_by: RankBy,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            rel_threshold: 0.40,
            max_lesions: 5,
            min_voxels: 10,
            min_peak: 0.10,
            connectivity: Connectivity::TwentySix,
            rank_by: RankBy::PeakConfidence,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.rel_threshold && self.rel_threshold < 1.0) {
            return Err(Error::invalid("rel_threshold must lie in (0, 1)"));
        }
        if self.max_lesions == 0 {
            return Err(Error::invalid("max_lesions must be positive"));
        }
        if !(0.0..1.0).contains(&self.min_peak) {
            return Err(Error::invalid("min_peak must lie in [0, 1)"));
        }
        Ok(())
    }
}

mod rle {
    //! Run-length encoding for sorted voxel index lists, used in the JSON
    //! form of candidates: `[start, len, start, len, ...]`.
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn encode(sorted: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut it = sorted.iter().copied();
        let Some(first) = it.next() else { return out };
        let (mut start, mut len) = (first, 1usize);
        for v in it {
            if v == start + len {
                len += 1;
            } else {
                out.push(start);
                out.push(len);
                start = v;
                len = 1;
            }
        }
        out.push(start);
        out.push(len);
        out
    }

    pub fn decode(runs: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for pair in runs.chunks_exact(2) {
            out.extend(pair[0]..pair[0] + pair[1]);
        }
        out
    }

    pub fn serialize<S: Serializer>(voxels: &[usize], s: S) -> Result<S::Ok, S::Error> {
        encode(voxels).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        Ok(decode(&Vec::<usize>::deserialize(d)?))
    }
}

/// A connected voxel region extracted from a confidence map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionCandidate {
    /// Sorted linear voxel indices, run-length encoded in JSON.
    #[serde(rename = "voxels_rle", with = "rle")]
    pub voxels: Vec<usize>,
    pub peak_index: usize,
    pub peak_confidence: f32,
    pub mean_confidence: f32,
    pub volume_cm3: f64,
}

impl LesionCandidate {
    fn from_voxels(mut voxels: Vec<usize>, conf: &Volume) -> Self {
        voxels.sort_unstable();
        let mut peak_index = voxels[0];
        let mut peak = conf.data()[peak_index];
        let mut sum = 0.0f64;
        for &v in &voxels {
            let c = conf.data()[v];
            sum += c as f64;
            if c > peak {
                peak = c;
                peak_index = v;
            }
        }
        LesionCandidate {
            peak_index,
            peak_confidence: peak,
            mean_confidence: (sum / voxels.len() as f64) as f32,
            volume_cm3: voxels.len() as f64 * voxel_volume_cm3(conf.spacing_mm()),
            voxels,
        }
    }

    pub fn rank_key(&self, rank_by: RankBy) -> f32 {
        match rank_by {
            RankBy::PeakConfidence => self.peak_confidence,
            RankBy::MeanConfidence => self.mean_confidence,
        }
    }
}

fn sort_candidates(candidates: &mut [LesionCandidate], rank_by: RankBy) {
    // key descending; ties by larger volume, then lower peak index
    candidates.sort_by(|a, b| {
        b.rank_key(rank_by)
            .partial_cmp(&a.rank_key(rank_by))
            .unwrap()
            .then(b.voxels.len().cmp(&a.voxels.len()))
            .then(a.peak_index.cmp(&b.peak_index))
    });
}

/// Grow the connected region containing `peak` over voxels with value at
/// least `floor` in `values`.
fn grow_region(conf: &Volume, values: &[f32], peak: usize, floor: f32, conn: Connectivity) -> Vec<usize> {
    let mut seen = vec![false; values.len()];
    let mut region = Vec::new();
    let mut queue = VecDeque::from([peak]);
    seen[peak] = true;
    while let Some(v) = queue.pop_front() {
        region.push(v);
        for nb in conf.neighbours(v, conn) {
            if !seen[nb] && values[nb] >= floor {
                seen[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    region
}

/// Iterative peak-relative candidate extraction. Returns candidates in
/// descending ranking-key order.
pub fn extract_dynamic(conf: &Volume, cfg: &ExtractionConfig) -> Result<Vec<LesionCandidate>> {
    cfg.validate()?;
    conf.check_confidence_range()?;
    let mut working = conf.data().to_vec();
    let mut out = Vec::new();
    loop {
        if out.len() >= cfg.max_lesions {
            break;
        }
        let (peak, peak_value) = {
            let mut best = 0usize;
            let mut best_v = working[0];
            for (i, &v) in working.iter().enumerate() {
                if v > best_v {
                    best = i;
                    best_v = v;
                }
            }
            (best, best_v)
        };
        if (peak_value as f64) < cfg.min_peak || peak_value <= 0.0 {
            break;
        }
        let floor = (cfg.rel_threshold * peak_value as f64) as f32;
        let region = grow_region(conf, &working, peak, floor, cfg.connectivity);
        for &v in &region {
            working[v] = 0.0;
        }
        if region.len() > cfg.min_voxels {
            out.push(LesionCandidate::from_voxels(region, conf));
        }
    }
    sort_candidates(&mut out, cfg.rank_by);
    Ok(out)
}

/// Static-threshold baseline: binarise at `threshold` (inclusive), label
/// the islands, keep those above the voxel-count floor.
pub fn extract_static(conf: &Volume, threshold: f64, cfg: &ExtractionConfig) -> Result<Vec<LesionCandidate>> {
    cfg.validate()?;
    if !(0.0 < threshold && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    conf.check_confidence_range()?;
    let mask_data: Vec<f32> = conf
        .data()
        .iter()
        .map(|&v| if (v as f64) >= threshold { 1.0 } else { 0.0 })
        .collect();
    let mask = Volume::new(conf.dims(), conf.spacing_mm(), mask_data)?;
    let labels = connected_components(&mask, cfg.connectivity)?;
    let mut out: Vec<LesionCandidate> = labels
        .label_voxels()
        .into_iter()
        .filter(|voxels| voxels.len() > cfg.min_voxels)
        .map(|voxels| LesionCandidate::from_voxels(voxels, conf))
        .collect();
    sort_candidates(&mut out, cfg.rank_by);
    Ok(out)
}

/// Single global threshold at `rel_threshold` times the volume maximum,
/// then island labelling. Empty when the global maximum is below
/// `min_peak`.
pub fn extract_dynamic_fast(conf: &Volume, cfg: &ExtractionConfig) -> Result<Vec<LesionCandidate>> {
    cfg.validate()?;
    conf.check_confidence_range()?;
    let (_, global_max) = conf.argmax();
    if (global_max as f64) < cfg.min_peak || global_max <= 0.0 {
        return Ok(Vec::new());
    }
    extract_static(conf, cfg.rel_threshold * global_max as f64, cfg)
}

/// Otsu's threshold over a 256-bin histogram on [0, 1]: the boundary that
/// maximises between-class variance, ties broken toward the lower
/// threshold.
pub fn otsu_threshold(conf: &Volume) -> Result<f64> {
    conf.check_confidence_range()?;
    let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
    for &v in conf.data() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        return Err(Error::ConstantVolume);
    }
    let mut hist = [0u64; 256];
    for &v in conf.data() {
        hist[((v as f64 * 256.0) as usize).min(255)] += 1;
    }
    let total = conf.len() as f64;
    let total_sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| (i as f64 + 0.5) * h as f64)
        .sum();
    let mut best_t = 0usize;
    let mut best_var = f64::NEG_INFINITY;
    let mut w0 = 0.0f64;
    let mut sum0 = 0.0f64;
    // class 0 = bins 0..=t, class 1 = bins t+1..=255
    for t in 0..255 {
        w0 += hist[t] as f64;
        sum0 += (t as f64 + 0.5) * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (total_sum - sum0) / w1;
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if var > best_var {
            best_var = var;
            best_t = t;
        }
    }
    if best_var == f64::NEG_INFINITY {
        return Err(Error::ConstantVolume);
    }
    Ok((best_t as f64 + 1.0) / 256.0)
}
