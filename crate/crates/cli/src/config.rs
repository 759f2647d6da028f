//! Effective run configuration: built-in defaults, overridden by a JSON
//! config file, overridden by command-line flags. Every run writes a
//! machine-readable run manifest carrying the configuration hash so
//! identical manifests imply byte-identical results.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rga_core::extraction::ExtractionConfig;
use rga_core::metrics::DEFAULT_HIT_THRESHOLD;
use rga_core::volume::Connectivity;

/// Optional overrides from a JSON config file.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub rel_threshold: Option<f64>,
    pub max_lesions: Option<usize>,
    pub min_voxels: Option<usize>,
    pub min_peak: Option<f64>,
    pub connectivity: Option<u8>,
    pub hit_iou: Option<f64>,
    pub seed: Option<u64>,
    pub iterations: Option<u64>,
}

/// Flag-level overrides shared by all subcommands.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlagOverrides {
    pub rel_threshold: Option<f64>,
    pub max_lesions: Option<usize>,
    pub min_voxels: Option<usize>,
    pub min_peak: Option<f64>,
    pub connectivity: Option<u8>,
    pub hit_iou: Option<f64>,
    pub seed: Option<u64>,
    pub iterations: Option<u64>,
}

/// Fully resolved configuration used by a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub extraction: ExtractionConfig,
    pub hit_iou: f64,
    pub seed: u64,
    pub iterations: u64,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        EffectiveConfig {
            extraction: ExtractionConfig::default(),
            hit_iou: DEFAULT_HIT_THRESHOLD,
            seed: 0,
            iterations: 10_000,
        }
    }
}

pub fn resolve_config(config_path: Option<&Path>, flags: &FlagOverrides) -> Result<EffectiveConfig> {
    let mut cfg = EffectiveConfig::default();
    if let Some(path) = config_path {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let file: FileConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        apply_file(&mut cfg, &file)?;
    }
    apply_flags(&mut cfg, flags)?;
    cfg.extraction.validate()?;
    Ok(cfg)
}

fn apply_file(cfg: &mut EffectiveConfig, f: &FileConfig) -> Result<()> {
    let flags = FlagOverrides {
        rel_threshold: f.rel_threshold,
        max_lesions: f.max_lesions,
        min_voxels: f.min_voxels,
        min_peak: f.min_peak,
        connectivity: f.connectivity,
        hit_iou: f.hit_iou,
        seed: f.seed,
        iterations: f.iterations,
    };
    apply_flags(cfg, &flags)
}

fn apply_flags(cfg: &mut EffectiveConfig, f: &FlagOverrides) -> Result<()> {
    if let Some(v) = f.rel_threshold {
        cfg.extraction.rel_threshold = v;
    }
    if let Some(v) = f.max_lesions {
        cfg.extraction.max_lesions = v;
    }
    if let Some(v) = f.min_voxels {
        cfg.extraction.min_voxels = v;
    }
    if let Some(v) = f.min_peak {
        cfg.extraction.min_peak = v;
    }
    if let Some(v) = f.connectivity {
        cfg.extraction.connectivity = Connectivity::from_u8(v)?;
    }
    if let Some(v) = f.hit_iou {
        cfg.hit_iou = v;
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    if let Some(v) = f.iterations {
        cfg.iterations = v;
    }
    Ok(())
}

/// Written once per run next to the result files. Contains no timestamps:
/// identical run manifests must imply byte-identical outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: EffectiveConfig,
    pub config_sha256: String,
}

pub fn write_run_manifest(out_dir: &Path, command: &str, cfg: &EffectiveConfig) -> Result<()> {
    let config_json = serde_json::to_string(cfg)?;
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    hasher.update(b"\n");
    hasher.update(config_json.as_bytes());
    let digest = hasher.finalize();
    let manifest = RunManifest {
        tool: "rga".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config: *cfg,
        config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
    };
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("run_manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
