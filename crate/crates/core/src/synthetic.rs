//! Deterministic synthetic phantoms, Rician noise, and report text —
//! the desk-scale oracle the rest of the pipeline is validated against.
//!
//! A phantom is a clamped sum of anisotropic Gaussian bumps over a uniform
//! background; its ground truth labels the 1σ (Mahalanobis) ellipsoid of
//! every lesion whose amplitude reaches the significance cut. Lesions below
//! the cut still appear in the confidence map — they act as planted false
//! positives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reports::{DceSign, Report};
use crate::volume::{LabelVolume, Volume};

/// One planted Gaussian lesion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedLesion {
    /// Center in voxel coordinates.
    pub center: (usize, usize, usize),
    /// Per-axis standard deviation in millimetres.
    pub sigma_mm: (f64, f64, f64),
    /// Peak confidence contribution, in (0, 1].
    pub amplitude: f64,
}

fn default_significance_cut() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: (usize, usize, usize),
    pub spacing_mm: (f64, f64, f64),
    pub lesions: Vec<PlantedLesion>,
    /// Uniform confidence floor, in [0, 0.05].
    pub background_level: f64,
    pub seed: u64,
    /// Lesions with amplitude below this receive no ground-truth label.
    #[serde(default = "default_significance_cut")]
    pub significance_cut: f64,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let (nx, ny, nz) = self.dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::invalid("phantom dims must be positive"));
        }
        if !(0.0..=0.05).contains(&self.background_level) {
            return Err(Error::invalid("background_level must lie in [0, 0.05]"));
        }
        for (i, l) in self.lesions.iter().enumerate() {
            if l.center.0 >= nx || l.center.1 >= ny || l.center.2 >= nz {
                return Err(Error::invalid(format!("lesion {i} center outside grid")));
            }
            if !(l.amplitude > 0.0 && l.amplitude <= 1.0) {
                return Err(Error::invalid(format!("lesion {i} amplitude must lie in (0, 1]")));
            }
            if l.amplitude <= self.background_level {
                return Err(Error::invalid(format!(
                    "lesion {i} amplitude must exceed the background level"
                )));
            }
            let (sx, sy, sz) = l.sigma_mm;
            if !(sx > 0.0 && sy > 0.0 && sz > 0.0) {
                return Err(Error::invalid(format!("lesion {i} sigma must be positive")));
            }
        }
        Ok(())
    }
}

/// Squared Mahalanobis distance of voxel `(x, y, z)` from a lesion center,
/// in physical coordinates.
fn mahalanobis_sq(
    lesion: &PlantedLesion,
    spacing: (f64, f64, f64),
    x: usize,
    y: usize,
    z: usize,
) -> f64 {
    let dx = (x as f64 - lesion.center.0 as f64) * spacing.0 / lesion.sigma_mm.0;
    let dy = (y as f64 - lesion.center.1 as f64) * spacing.1 / lesion.sigma_mm.1;
    let dz = (z as f64 - lesion.center.2 as f64) * spacing.2 / lesion.sigma_mm.2;
    dx * dx + dy * dy + dz * dz
}

/// Render the phantom: confidence map plus ground-truth labels for the
/// significant lesions (labelled 1.. in spec order).
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(Volume, LabelVolume)> {
    spec.validate()?;
    let (nx, ny, nz) = spec.dims;
    let mut conf = vec![spec.background_level as f32; nx * ny * nz];
    let mut labels = vec![0u32; nx * ny * nz];
    let mut next_label = 0u32;
    for lesion in &spec.lesions {
        let significant = lesion.amplitude >= spec.significance_cut;
        if significant {
            next_label += 1;
        }
        let mut i = 0usize;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let m2 = mahalanobis_sq(lesion, spec.spacing_mm, x, y, z);
                    conf[i] += (lesion.amplitude * (-0.5 * m2).exp()) as f32;
                    if significant && m2 <= 1.0 && labels[i] == 0 {
                        labels[i] = next_label;
                    }
                    i += 1;
                }
            }
        }
    }
    for v in &mut conf {
        *v = v.clamp(0.0, 1.0);
    }
    let conf = Volume::new_confidence(spec.dims, spec.spacing_mm, conf)?;
    let gt = LabelVolume::new(spec.dims, spec.spacing_mm, labels)?;
    Ok((conf, gt))
}

/// Rician magnitude noise: `out = sqrt((in + σφ₁)² + (σφ₂)²)` with two
/// independent standard-normal draws per voxel. Output is non-negative by
/// construction; `sigma = 0` reduces to `|in|`.
pub fn rician_noise(v: &Volume, sigma: f64, seed: u64) -> Result<Volume> {
    if sigma < 0.0 {
        return Err(Error::invalid("noise sigma must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = v
        .data()
        .iter()
        .map(|&x| {
            let phi1: f64 = rng.sample(StandardNormal);
            let phi2: f64 = rng.sample(StandardNormal);
            let re = x as f64 + sigma * phi1;
            let im = sigma * phi2;
            (re * re + im * im).sqrt() as f32
        })
        .collect();
    Volume::new(v.dims(), v.spacing_mm(), data)
}

/// Scores of one finding to render into report text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueFinding {
    pub pirads: u8,
    pub t2w: u8,
    pub dwi: u8,
    pub dce: DceSign,
}

impl TrueFinding {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("pirads", self.pirads), ("t2w", self.t2w), ("dwi", self.dwi)] {
            if !(1..=5).contains(&v) {
                return Err(Error::invalid(format!("{name} score must lie in 1..=5")));
            }
        }
        Ok(())
    }

    pub fn is_significant(&self) -> bool {
        self.pirads >= 4
    }
}

/// Report phrasing variants, mirroring the section styles seen in clinical
/// practice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportVariant {
    /// One Dutch-style section per finding with individual scores.
    #[default]
    Sectioned,
    /// English-style sections with a joint `T2W/DWI/DCE score:` line.
    Joint,
    /// The first two findings share one `afwijking i+j` section.
    Grouped,
}

fn section_sectioned(idx: usize, f: &TrueFinding) -> String {
    format!(
        "Afwijking nr. {n}: perifere zone links. Score T2W: {t2w}, Score DWI: {dwi}, \
         Score DCE: {dce}. Conclusie: PI-RADS {p}.\n",
        n = idx,
        t2w = f.t2w,
        dwi = f.dwi,
        dce = f.dce,
        p = f.pirads
    )
}

fn section_joint(idx: usize, f: &TrueFinding) -> String {
    format!(
        "Lesion mark{n}: transition zone, well defined. T2W/DWI/DCE score: \
         {t2w}/{dwi}/{dce}. Lesion best fits (PI-RADS v2 category: {p}).\n",
        n = idx,
        t2w = f.t2w,
        dwi = f.dwi,
        dce = f.dce,
        p = f.pirads
    )
}

fn section_grouped(i: usize, j: usize, f: &TrueFinding) -> String {
    format!(
        "Afwijking {i}+{j}: twee aangrenzende haarden. Score T2W: {t2w}, Score DWI: {dwi}, \
         Score DCE: {dce}. Conclusie: PI-RADS {p}.\n",
        t2w = f.t2w,
        dwi = f.dwi,
        dce = f.dce,
        p = f.pirads
    )
}

/// Render `findings` as report text in the requested variant. The grouped
/// variant merges the first two findings under one `afwijking i+j` header,
/// keeping the scores of the higher-PI-RADS member; with fewer than two
/// findings it degrades to `Sectioned`. Zero findings yield an explicitly
/// negative report (one PI-RADS 2 section).
pub fn generate_report(
    case_id: &str,
    findings: &[TrueFinding],
    variant: ReportVariant,
) -> Result<Report> {
    for f in findings {
        f.validate()?;
    }
    let mut body = String::from("Prostaat MRI.\n");
    if findings.is_empty() {
        body.push_str(
            "Regio 1: geen aankleuring, geen diffusierestrictie. Conclusie: PI-RADS 2.\n",
        );
        return Report::new(case_id, body);
    }
    match variant {
        ReportVariant::Sectioned => {
            for (i, f) in findings.iter().enumerate() {
                body.push_str(&section_sectioned(i + 1, f));
            }
        }
        ReportVariant::Joint => {
            for (i, f) in findings.iter().enumerate() {
                body.push_str(&section_joint(i + 1, f));
            }
        }
        ReportVariant::Grouped => {
            if findings.len() < 2 {
                body.push_str(&section_sectioned(1, &findings[0]));
            } else {
                let merged = if findings[1].pirads > findings[0].pirads {
                    findings[1]
                } else {
                    findings[0]
                };
                body.push_str(&section_grouped(1, 2, &merged));
                for (i, f) in findings.iter().enumerate().skip(2) {
                    body.push_str(&section_sectioned(i + 1, f));
                }
            }
        }
    }
    Report::new(case_id, body)
}

/// Number of significant findings a well-formed generated report encodes.
/// For the grouped variant the merged pair counts with multiplicity 2 when
/// its higher PI-RADS is significant.
pub fn true_n_sig(findings: &[TrueFinding], variant: ReportVariant) -> u32 {
    if variant == ReportVariant::Grouped && findings.len() >= 2 {
        let merged_p = findings[0].pirads.max(findings[1].pirads);
        let head = if merged_p >= 4 { 2 } else { 0 };
        head + findings[2..].iter().filter(|f| f.is_significant()).count() as u32
    } else {
        findings.iter().filter(|f| f.is_significant()).count() as u32
    }
}

/// A fully materialized synthetic case.
#[derive(Debug, Clone)]
pub struct SyntheticCase {
    pub case_id: String,
    pub confidence: Volume,
    pub gt: LabelVolume,
    pub report: Report,
    pub true_n_sig: u32,
}

/// Scenario-level knobs for batch generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub num_cases: usize,
    pub dims: (usize, usize, usize),
    pub spacing_mm: (f64, f64, f64),
    pub max_lesions: usize,
    /// Probability that a planted lesion is significant (PI-RADS ≥ 4).
    pub p_significant: f64,
    /// Mean number of sub-cut decoy blobs per case (planted false
    /// positives, present in confidence but not in ground truth).
    pub decoys_per_case: f64,
    pub background_level: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            num_cases: 50,
            dims: (32, 32, 16),
            spacing_mm: (0.5, 0.5, 3.6),
            max_lesions: 3,
            p_significant: 0.7,
            decoys_per_case: 1.0,
            background_level: 0.02,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_cases == 0 {
            return Err(Error::invalid("scenario needs at least 1 case"));
        }
        if !(0.0..=1.0).contains(&self.p_significant) {
            return Err(Error::invalid("p_significant must lie in [0, 1]"));
        }
        if self.decoys_per_case < 0.0 || self.noise_sigma < 0.0 {
            return Err(Error::invalid("decoys_per_case and noise_sigma must be non-negative"));
        }
        if self.max_lesions + self.decoys_per_case.ceil() as usize > 8 {
            return Err(Error::invalid("at most 8 blobs per case (placement grid size)"));
        }
        Ok(())
    }
}

const SIGNIFICANT_CUT: f64 = 0.5;

/// Place lesion centers on a jittered grid so blobs stay well separated.
fn place_centers(
    rng: &mut ChaCha8Rng,
    dims: (usize, usize, usize),
    count: usize,
) -> Vec<(usize, usize, usize)> {
    let slots = [
        (0.25, 0.25, 0.3),
        (0.75, 0.75, 0.7),
        (0.25, 0.75, 0.7),
        (0.75, 0.25, 0.3),
        (0.5, 0.5, 0.5),
        (0.25, 0.5, 0.5),
        (0.75, 0.5, 0.5),
        (0.5, 0.25, 0.7),
    ];
    let mut order: Vec<usize> = (0..slots.len()).collect();
    // Fisher-Yates on the slot order keeps placement varied across cases
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    (0..count.min(slots.len()))
        .map(|k| {
            let (fx, fy, fz) = slots[order[k]];
            (
                (fx * (dims.0 - 1) as f64).round() as usize,
                (fy * (dims.1 - 1) as f64).round() as usize,
                (fz * (dims.2 - 1) as f64).round() as usize,
            )
        })
        .collect()
}

/// Generate one case from a per-case substream of the scenario seed.
pub fn generate_case(scenario: &ScenarioSpec, case_index: usize) -> Result<SyntheticCase> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(1 + case_index as u64);

    let n_lesions = rng.gen_range(0..=scenario.max_lesions);
    let whole_decoys = scenario.decoys_per_case.floor();
    let extra = rng.gen_bool(scenario.decoys_per_case - whole_decoys) as usize;
    let n_decoys = whole_decoys as usize + extra;
    let centers = place_centers(&mut rng, scenario.dims, n_lesions + n_decoys);

    let mut lesions = Vec::new();
    let mut findings = Vec::new();
    for (k, &center) in centers.iter().enumerate() {
        let sigma = (
            1.0 + rng.gen_range(0.0..1.0),
            1.0 + rng.gen_range(0.0..1.0),
            3.0 + rng.gen_range(0.0..3.0),
        );
        if k < n_lesions {
            let significant = rng.gen_bool(scenario.p_significant);
            let amplitude = if significant {
                0.6 + rng.gen_range(0.0..0.35)
            } else {
                // insignificant (PI-RADS 3) lesion: visible in confidence,
                // below the cut so it carries no ground-truth label
                0.42 + rng.gen_range(0.0..0.06)
            };
            lesions.push(PlantedLesion { center, sigma_mm: sigma, amplitude });
            let (pirads, t2w, dwi, dce) = if significant {
                let p = if rng.gen_bool(0.5) { 4 } else { 5 };
                (p, p, p, DceSign::Positive)
            } else {
                (3, 3, 2, DceSign::Negative)
            };
            findings.push(TrueFinding { pirads, t2w, dwi, dce });
        } else {
            // decoy: visible in confidence, below the significance cut
            lesions.push(PlantedLesion {
                center,
                sigma_mm: sigma,
                amplitude: 0.2 + rng.gen_range(0.0..0.2),
            });
        }
    }

    let spec = PhantomSpec {
        dims: scenario.dims,
        spacing_mm: scenario.spacing_mm,
        lesions,
        background_level: scenario.background_level,
        seed: scenario.seed,
        significance_cut: SIGNIFICANT_CUT,
    };
    let (mut confidence, gt) = generate_phantom(&spec)?;
    if scenario.noise_sigma > 0.0 {
        let noise_seed = scenario.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(1 + case_index as u64));
        confidence = rician_noise(&confidence, scenario.noise_sigma, noise_seed)?;
        for v in confidence.data_mut() {
            *v = v.clamp(0.0, 1.0);
        }
    }

    let case_id = format!("case-{case_index:04}");
    let variant = match case_index % 3 {
        0 => ReportVariant::Sectioned,
        1 => ReportVariant::Joint,
        _ => {
            if findings.len() >= 2 {
                ReportVariant::Grouped
            } else {
                ReportVariant::Sectioned
            }
        }
    };
    let report = generate_report(&case_id, &findings, variant)?;
    Ok(SyntheticCase {
        case_id,
        confidence,
        gt,
        report,
        true_n_sig: true_n_sig(&findings, variant),
    })
}
