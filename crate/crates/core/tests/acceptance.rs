//! Acceptance gate: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`); a failed criterion fails its test.
//!
//! Oracles here are written independently of the library internals:
//! repeated-scan region growing, per-threshold recounting, pairwise
//! U-statistics, and direct set arithmetic.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rga_core::annotate::{report_guided_annotation, AnnotationStatus, ExclusionReason};
use rga_core::efficiency::{efficiency_ratio, required_annotations, BudgetPoint};
use rga_core::extraction::{extract_dynamic, ExtractionConfig, LesionCandidate};
use rga_core::metrics::{auroc, dice, froc, pauc, HitCriterion};
use rga_core::reports::{
    extract, extract_scores_section, split_sections, DceSign, LanguageProfile, Report,
};
use rga_core::stats::{bootstrap_ci, permutation_test, RunGroup};
use rga_core::synthetic::{
    generate_case, generate_phantom, generate_report, true_n_sig, PhantomSpec, PlantedLesion,
    ReportVariant, ScenarioSpec, TrueFinding,
};
use rga_core::volume::{LabelVolume, Volume};

const FIG_LEFT: &str = "Index lesion mark1: peripheral zone right apex. \
T2W/DWI/DCE score: 4/4/+. Minimal ADC value: 821 (normally at least 950). \
Risk category: intermediate/high-grade cancer (PI-RADS v2 category: 4).";

const FIG_RIGHT: &str = "Finding nr. 1: peripheral zone right posterior mid-base prostate. \
Score T2W: 5, Score DCE: +, Score DWI: 5, minimal ADC value 665. \
Lesion best fits significant prostate cancer (PIRADS 5).";

#[test]
fn criterion_01_printed_report_sections_parse_exactly() {
    let left = Report::new("left", FIG_LEFT).unwrap();
    let sections = split_sections(&left, LanguageProfile::Both);
    assert_eq!(sections.len(), 1);
    let s = extract_scores_section(&sections[0]).unwrap();
    assert_eq!(
        (s.pirads, s.t2w, s.dwi, s.dce),
        (Some(4), Some(4), Some(4), Some(DceSign::Positive))
    );

    let right = Report::new("right", FIG_RIGHT).unwrap();
    let sections = split_sections(&right, LanguageProfile::Both);
    assert_eq!(sections.len(), 1);
    let s = extract_scores_section(&sections[0]).unwrap();
    assert_eq!(
        (s.pirads, s.t2w, s.dwi, s.dce),
        (Some(5), Some(5), Some(5), Some(DceSign::Positive))
    );

    let both = Report::new("both", format!("{FIG_LEFT}\n\n{FIG_RIGHT}")).unwrap();
    let e = extract(&both, LanguageProfile::Both);
    assert_eq!(e.n_sig, 2);
    println!("ACCEPTANCE 1 printed-section golden parse: PASS");
}

#[test]
fn criterion_02_grammar_round_trip_1000_reports() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for i in 0..1000 {
        let n = rng.gen_range(0..=4);
        let findings: Vec<TrueFinding> = (0..n)
            .map(|_| {
                let pirads = rng.gen_range(2..=5);
                TrueFinding {
                    pirads,
                    t2w: rng.gen_range(1..=5),
                    dwi: rng.gen_range(1..=5),
                    dce: if rng.gen_bool(0.5) { DceSign::Positive } else { DceSign::Negative },
                }
            })
            .collect();
        let variant = match i % 3 {
            0 => ReportVariant::Sectioned,
            1 => ReportVariant::Joint,
            _ => ReportVariant::Grouped,
        };
        let report = generate_report("case", &findings, variant).unwrap();
        let extraction = extract(&report, LanguageProfile::Both);
        assert_eq!(
            extraction.n_sig,
            true_n_sig(&findings, variant),
            "report {i} ({variant:?}):\n{}",
            report.body
        );
    }
    println!("ACCEPTANCE 2 grammar round trip 1000 reports: PASS");
}

/// Repeated-scan region growing: independent of the library's BFS.
fn oracle_region(
    dims: (usize, usize, usize),
    values: &[f32],
    peak: usize,
    floor: f32,
) -> Vec<usize> {
    let probe = Volume::new(dims, (1.0, 1.0, 1.0), values.to_vec()).unwrap();
    let mut inside = vec![false; values.len()];
    inside[peak] = true;
    loop {
        let mut changed = false;
        for v in 0..values.len() {
            if inside[v] || values[v] < floor {
                continue;
            }
            if probe
                .neighbours(v, rga_core::volume::Connectivity::TwentySix)
                .iter()
                .any(|&nb| inside[nb])
            {
                inside[v] = true;
                changed = true;
            }
        }
        if !changed {
            return (0..values.len()).filter(|&v| inside[v]).collect();
        }
    }
}

fn oracle_dynamic(conf: &Volume, cfg: &ExtractionConfig) -> Vec<Vec<usize>> {
    let mut working = conf.data().to_vec();
    let mut out = Vec::new();
    while out.len() < cfg.max_lesions {
        let (peak, value) = working.iter().enumerate().fold((0, f32::NEG_INFINITY), |acc, (i, &v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
        if (value as f64) < cfg.min_peak || value <= 0.0 {
            break;
        }
        let region = oracle_region(
            conf.dims(),
            &working,
            peak,
            (cfg.rel_threshold * value as f64) as f32,
        );
        for &v in &region {
            working[v] = 0.0;
        }
        if region.len() > cfg.min_voxels {
            out.push(region);
        }
    }
    out
}

#[test]
fn criterion_03_dynamic_extraction_planted_blob_oracle() {
    let dims = (40, 40, 20);
    let spacing = (1.0, 1.0, 2.0);
    // well-separated placement slots: >= 20 voxels (>6 sigma) apart
    let slots = [
        (10, 10, 5),
        (30, 10, 5),
        (10, 30, 5),
        (30, 30, 15),
        (10, 10, 15),
        (30, 10, 15),
    ];
    // floor above 0.4 * max amplitude, below the smallest planted peak:
    // Gaussian tail remnants stay out while every planted core is found
    let cfg = ExtractionConfig { min_peak: 0.45, ..ExtractionConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for phantom_idx in 0..200 {
        let count = phantom_idx % 6; // 0..=5 planted lesions
        let lesions: Vec<PlantedLesion> = (0..count)
            .map(|k| PlantedLesion {
                center: slots[k],
                sigma_mm: (
                    1.5 + rng.gen_range(0.0..0.5),
                    1.5 + rng.gen_range(0.0..0.5),
                    3.0 + rng.gen_range(0.0..1.0),
                ),
                amplitude: 0.55 + rng.gen_range(0.0..0.4),
            })
            .collect();
        let spec = PhantomSpec {
            dims,
            spacing_mm: spacing,
            lesions,
            background_level: 0.01,
            seed: phantom_idx as u64,
            significance_cut: 0.5,
        };
        let (conf, gt) = generate_phantom(&spec).unwrap();
        let candidates = extract_dynamic(&conf, &cfg).unwrap();
        assert_eq!(candidates.len(), count, "phantom {phantom_idx}");
        for c in &candidates {
            assert_ne!(gt.data()[c.peak_index], 0, "phantom {phantom_idx}: peak outside 1-sigma mask");
        }
        let oracle = oracle_dynamic(&conf, &cfg);
        assert_eq!(candidates.len(), oracle.len());
        for (c, o) in candidates.iter().zip(&oracle) {
            assert_eq!(&c.voxels, o, "phantom {phantom_idx}");
        }
    }
    println!("ACCEPTANCE 3 dynamic extraction planted-blob oracle (200 phantoms): PASS");
}

#[test]
fn criterion_04_forty_percent_rule_unit_anchors() {
    let cfg = ExtractionConfig::default();

    // plateau: one candidate covering it
    let dims = (8, 8, 8);
    let mut data = vec![0.0f32; 512];
    for z in 2..6 {
        for y in 2..6 {
            for x in 2..6 {
                data[x + 8 * (y + 8 * z)] = 1.0;
            }
        }
    }
    let conf = Volume::new_confidence(dims, (1.0, 1.0, 1.0), data).unwrap();
    let candidates = extract_dynamic(&conf, &cfg).unwrap();
    assert_eq!(candidates.len(), 1);
    assert_eq!(candidates[0].voxels.len(), 64);
    assert_eq!(candidates[0].peak_confidence, 1.0);

    // a 10-voxel blob at spacing (0.5, 0.5, 3.6) is discarded; its volume
    // bound is 10 * 0.5 * 0.5 * 3.6 mm^3 = 0.009 cm^3
    let spacing = (0.5, 0.5, 3.6);
    let mut data = vec![0.0f32; 10 * 10 * 4];
    for x in 0..10 {
        data[x] = 0.9; // 10 voxels in a row at z = 0, y = 0
    }
    let tiny = Volume::new_confidence((10, 10, 4), spacing, data).unwrap();
    assert!(extract_dynamic(&tiny, &cfg).unwrap().is_empty());
    let bound = 10.0 * rga_core::volume::voxel_volume_cm3(spacing);
    assert!((bound - 0.009).abs() < 1e-12);

    // a 6th peak is never extracted
    let dims = (40, 8, 8);
    let mut data = vec![0.0f32; 40 * 8 * 8];
    for (k, &peak) in [0.9f32, 0.85, 0.8, 0.75, 0.7, 0.65].iter().enumerate() {
        // 12-voxel boxes, spaced apart along x
        for dx in 0..3 {
            for dy in 0..2 {
                for dz in 0..2 {
                    data[(k * 6 + dx) + 40 * ((2 + dy) + 8 * (2 + dz))] = peak;
                }
            }
        }
    }
    let six = Volume::new_confidence(dims, (1.0, 1.0, 1.0), data).unwrap();
    let candidates = extract_dynamic(&six, &cfg).unwrap();
    assert_eq!(candidates.len(), 5);
    assert!((candidates[4].peak_confidence - 0.7).abs() < 1e-6);
    println!("ACCEPTANCE 4 40%-rule unit anchors: PASS");
}

#[test]
fn criterion_05_report_masking_reduces_false_positives() {
    let scenario = ScenarioSpec {
        num_cases: 100,
        decoys_per_case: 2.0,
        seed: 2718,
        ..ScenarioSpec::default()
    };
    let cfg = ExtractionConfig::default();
    let mut unfiltered = Vec::new();
    let mut filtered = Vec::new();
    for i in 0..scenario.num_cases {
        let case = generate_case(&scenario, i).unwrap();
        let candidates = extract_dynamic(&case.confidence, &cfg).unwrap();
        let extraction = extract(&case.report, LanguageProfile::Both);
        let n_sig = extraction.n_sig as usize;

        // exclusion triggers exactly when candidate count < n_sig
        let outcome = report_guided_annotation(
            &case.case_id,
            &candidates,
            extraction.n_sig,
            case.confidence.dims(),
            case.confidence.spacing_mm(),
        )
        .unwrap();
        let expect_excluded = n_sig > 0 && candidates.len() < n_sig;
        assert_eq!(
            outcome.status == AnnotationStatus::Excluded(ExclusionReason::TooFewCandidates),
            expect_excluded,
            "case {i}"
        );

        let kept = candidates[..n_sig.min(candidates.len())].to_vec();
        unfiltered.push((candidates, case.gt.clone()));
        filtered.push((kept, case.gt));
    }

    // FP/case of the filtered pipeline <= unfiltered at every threshold
    let curve_u = froc(&unfiltered, 0.10, HitCriterion::Iou).unwrap();
    let curve_f = froc(&filtered, 0.10, HitCriterion::Iou).unwrap();
    let thresholds: Vec<f64> = curve_u
        .points
        .iter()
        .chain(&curve_f.points)
        .map(|p| p.threshold)
        .collect();
    let fp_at = |cases: &[(Vec<LesionCandidate>, LabelVolume)], t: f64| -> usize {
        // oracle: re-match and count unmatched candidates above t
        cases
            .iter()
            .map(|(cands, gt)| {
                let m = rga_core::metrics::match_candidates(cands, gt, 0.10, HitCriterion::Iou)
                    .unwrap();
                m.unmatched_candidates
                    .iter()
                    .filter(|&&r| cands[r].peak_confidence as f64 >= t)
                    .count()
            })
            .sum()
    };
    for &t in &thresholds {
        assert!(
            fp_at(&filtered, t) <= fp_at(&unfiltered, t),
            "filtered FPs exceed unfiltered at threshold {t}"
        );
    }

    // hits on the top-n_sig candidates are unchanged by masking
    for ((all, gt), (kept, _)) in unfiltered.iter().zip(&filtered) {
        let m_all = rga_core::metrics::match_candidates(all, gt, 0.10, HitCriterion::Iou).unwrap();
        let m_kept = rga_core::metrics::match_candidates(kept, gt, 0.10, HitCriterion::Iou).unwrap();
        let top: Vec<_> = m_all.pairs.iter().filter(|p| p.candidate_rank < kept.len()).collect();
        assert_eq!(top.len(), m_kept.pairs.len());
        for (a, b) in top.iter().zip(&m_kept.pairs) {
            assert_eq!((a.candidate_rank, a.gt_label), (b.candidate_rank, b.gt_label));
        }
    }
    println!("ACCEPTANCE 5 report masking FP reduction (100 cases): PASS");
}

fn random_cases(rng: &mut ChaCha8Rng) -> Vec<(Vec<LesionCandidate>, LabelVolume)> {
    let dims = (12, 12, 6);
    let n_vox = 12 * 12 * 6;
    let n_cases = rng.gen_range(2..=5);
    (0..n_cases)
        .map(|_| {
            let mut labels = vec![0u32; n_vox];
            let n_gt = rng.gen_range(0..=2);
            for l in 1..=n_gt {
                let start = rng.gen_range(0..n_vox - 40);
                for v in start..start + rng.gen_range(10..30) {
                    labels[v] = l;
                }
            }
            let gt = LabelVolume::new(dims, (1.0, 1.0, 1.0), labels).unwrap();
            let n_cand = rng.gen_range(0..=4);
            let mut candidates: Vec<LesionCandidate> = (0..n_cand)
                .map(|_| {
                    let start = rng.gen_range(0..n_vox - 40);
                    let voxels: Vec<usize> = (start..start + rng.gen_range(8..30)).collect();
                    let peak = rng.gen_range(0.2..1.0f32);
                    LesionCandidate {
                        peak_index: voxels[0],
                        peak_confidence: peak,
                        mean_confidence: peak * 0.8,
                        volume_cm3: voxels.len() as f64 * 0.001,
                        voxels,
                    }
                })
                .collect();
            candidates.sort_by(|a, b| b.peak_confidence.partial_cmp(&a.peak_confidence).unwrap());
            (candidates, gt)
        })
        .collect()
}

/// Independent greedy matcher + per-threshold recount of the FROC curve.
fn oracle_froc(
    cases: &[(Vec<LesionCandidate>, LabelVolume)],
    hit: f64,
) -> Vec<(f64, f64, f64)> {
    let mut matched = Vec::new();
    let mut unmatched = Vec::new();
    let mut total_gt = 0usize;
    for (cands, gt) in cases {
        let gt_sets: Vec<HashSet<usize>> = gt
            .label_voxels()
            .into_iter()
            .map(|v| v.into_iter().collect())
            .collect();
        total_gt += gt_sets.len();
        let mut claimed = vec![false; gt_sets.len()];
        for c in cands {
            let cset: HashSet<usize> = c.voxels.iter().copied().collect();
            let mut best: Option<(usize, f64)> = None;
            for (g, gset) in gt_sets.iter().enumerate() {
                if claimed[g] {
                    continue;
                }
                let inter = cset.intersection(gset).count() as f64;
                let union = (cset.len() + gset.len()) as f64 - inter;
                let iou = if union > 0.0 { inter / union } else { 0.0 };
                if iou >= hit && best.map_or(true, |(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            match best {
                Some((g, _)) => {
                    claimed[g] = true;
                    matched.push(c.peak_confidence as f64);
                }
                None => unmatched.push(c.peak_confidence as f64),
            }
        }
    }
    let mut thresholds: Vec<f64> = matched.iter().chain(&unmatched).copied().collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    for t in thresholds {
        let hits = matched.iter().filter(|&&c| c >= t).count() as f64;
        let fps = unmatched.iter().filter(|&&c| c >= t).count() as f64;
        let point = (t, fps / cases.len() as f64, hits / total_gt as f64);
        if let Some(last) = points.last_mut() {
            if last.1 == point.1 {
                *last = point;
                continue;
            }
        }
        points.push(point);
    }
    points
}

fn oracle_pauc(points: &[(f64, f64, f64)], lo: f64, hi: f64) -> f64 {
    // step integration by left-to-right scan
    let mut area = 0.0;
    let mut x = lo;
    let mut s = points.iter().filter(|p| p.1 <= lo).map(|p| p.2).fold(0.0, f64::max);
    for p in points {
        if p.1 <= x {
            continue;
        }
        let next = p.1.min(hi);
        area += s * (next - x);
        x = next;
        s = s.max(p.2);
        if x >= hi {
            break;
        }
    }
    if x < hi {
        area += s * (hi - x);
    }
    area
}

#[test]
fn criterion_06_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..25 {
        let cases = random_cases(&mut rng);
        let total_gt: u32 = cases.iter().map(|(_, gt)| gt.num_labels()).sum();
        if total_gt == 0 {
            continue;
        }
        let curve = froc(&cases, 0.10, HitCriterion::Iou).unwrap();
        let oracle = oracle_froc(&cases, 0.10);
        assert_eq!(curve.points.len(), oracle.len(), "trial {trial}");
        for (p, o) in curve.points.iter().zip(&oracle) {
            assert!((p.fp_per_case - o.1).abs() < 1e-9, "trial {trial}");
            assert!((p.sensitivity - o.2).abs() < 1e-9, "trial {trial}");
        }
        let a = pauc(&curve, 0.0, 1.0).unwrap();
        let b = oracle_pauc(&oracle, 0.0, 1.0);
        assert!((a - b).abs() < 1e-9, "trial {trial}: pauc {a} vs {b}");

        // auroc equals the pairwise U-statistic
        let n = rng.gen_range(6..20);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        labels[0] = 1; // both classes guaranteed
        let a = auroc(&scores, &labels).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, (&si, &li)) in scores.iter().zip(&labels).enumerate() {
            for (&sj, &lj) in scores.iter().zip(&labels).skip(i + 1) {
                let (pos, neg) = match (li, lj) {
                    (1, 0) => (si, sj),
                    (0, 1) => (sj, si),
                    _ => continue,
                };
                den += 1.0;
                num += if pos > neg {
                    1.0
                } else if pos == neg {
                    0.5
                } else {
                    0.0
                };
            }
        }
        assert!((a - num / den).abs() < 1e-9, "trial {trial}: auroc");
    }

    // dice symmetry and range over 10,000 random mask pairs
    let dims = (8, 8, 4);
    for _ in 0..10_000 {
        let mask = |rng: &mut ChaCha8Rng| {
            let data: Vec<u32> = (0..256).map(|_| rng.gen_bool(0.3) as u32).collect();
            LabelVolume::new(dims, (1.0, 1.0, 1.0), data).unwrap()
        };
        let a = mask(&mut rng);
        let b = mask(&mut rng);
        let d_ab = dice(&a, &b).unwrap();
        let d_ba = dice(&b, &a).unwrap();
        assert_eq!(d_ab, d_ba);
        assert!((0.0..=1.0).contains(&d_ab));
        // direct set oracle
        let sa: HashSet<usize> = a.data().iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, _)| i).collect();
        let sb: HashSet<usize> = b.data().iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, _)| i).collect();
        let expected = if sa.is_empty() && sb.is_empty() {
            1.0
        } else {
            2.0 * sa.intersection(&sb).count() as f64 / (sa.len() + sb.len()) as f64
        };
        assert!((d_ab - expected).abs() < 1e-12);
    }
    println!("ACCEPTANCE 6 metric oracles (froc/pauc/auroc/dice): PASS");
}

#[test]
fn criterion_07_permutation_test_calibration() {
    let iterations = 1999u64;
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut below = 0usize;
    let trials = 1000;
    for trial in 0..trials {
        let a = RunGroup::new("a", (0..15).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let b = RunGroup::new("b", (0..15).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let r = permutation_test(&a, &b, iterations, trial as u64).unwrap();
        if r.p < 0.05 {
            below += 1;
        }
    }
    let fraction = below as f64 / trials as f64;
    assert!(
        (0.03..=0.07).contains(&fraction),
        "null rejection rate {fraction} outside [0.03, 0.07]"
    );

    let hi = RunGroup::new("hi", vec![1.0, 1.0, 1.0]).unwrap();
    let lo = RunGroup::new("lo", vec![0.0, 0.0, 0.0]).unwrap();
    let r = permutation_test(&hi, &lo, 10_000, 1).unwrap();
    assert_eq!(r.p, 1.0 / 10_001.0);
    println!("ACCEPTANCE 7 permutation-test calibration (1000 null trials): PASS");
}

#[test]
fn criterion_08_bootstrap_contract() {
    let constant = |vals: &[f64], _: &[u8]| Some(vals.iter().sum::<f64>() / vals.len() as f64);
    let values = vec![0.75; 12];
    let labels: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
    let r = bootstrap_ci(&values, &labels, constant, 500, 3).unwrap();
    assert_eq!((r.lo, r.hi), (0.75, 0.75));

    // every accepted draw holds both classes (checked inside the metric)
    let checked = |vals: &[f64], labs: &[u8]| {
        assert!(labs.contains(&0) && labs.contains(&1));
        constant(vals, labs)
    };
    let scores = vec![0.9, 0.8, 0.3, 0.2];
    let labels = vec![1u8, 1, 0, 0];
    bootstrap_ci(&scores, &labels, checked, 500, 4).unwrap();

    let many: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
    let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
    let r1 = bootstrap_ci(&many, &labels, constant, 1000, 99).unwrap();
    let r2 = bootstrap_ci(&many, &labels, constant, 1000, 99).unwrap();
    assert_eq!(r1.lo.to_bits(), r2.lo.to_bits());
    assert_eq!(r1.hi.to_bits(), r2.hi.to_bits());
    println!("ACCEPTANCE 8 bootstrap contract: PASS");
}

#[test]
fn criterion_09_efficiency_equation() {
    let points = vec![
        BudgetPoint::new(100, 0.70).unwrap(),
        BudgetPoint::new(300, 0.80).unwrap(),
    ];
    let at_a = required_annotations(&points, 0.70).unwrap().n_semi;
    assert!((at_a - 100.0).abs() < 1e-9);
    let mid = required_annotations(&points, 0.75).unwrap().n_semi;
    assert!((mid - (100.0f64 * 300.0).sqrt()).abs() < 1e-9);
    assert!((mid - 173.2).abs() < 0.1);
    let ratio = efficiency_ratio(300.0, 173.2).unwrap();
    assert!((ratio - 1.732).abs() < 0.001);
    println!("ACCEPTANCE 9 efficiency equation anchors: PASS");
}
