//! `rga efficiency`: annotation-efficiency analysis from a CSV of
//! (annotation budget, performance) points.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use rga_core::efficiency::{
    efficiency_ratio, interpolated_curve, required_annotations, BudgetPoint,
};

use super::{write_curve_csv, write_json_pretty};

fn read_points(path: &Path) -> Result<Vec<BudgetPoint>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading budget points from {}", path.display()))?;
    let mut points = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if line.starts_with("n_manual") {
            continue; // header
        }
        let (n, p) = line
            .split_once(',')
            .with_context(|| format!("expected n_manual,performance but got {line:?}"))?;
        points.push(BudgetPoint::new(n.trim().parse()?, p.trim().parse()?)?);
    }
    if points.is_empty() {
        bail!("{} contains no points", path.display());
    }
    Ok(points)
}

#[derive(Debug, Serialize)]
struct EfficiencyReport {
    target_performance: f64,
    n_semi: f64,
    bracket: (usize, usize),
    ambiguous: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_supervised: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    efficiency_ratio: Option<f64>,
}

pub fn run(
    points_path: &Path,
    target: f64,
    n_supervised: Option<f64>,
    out_dir: Option<&Path>,
) -> Result<()> {
    let points = read_points(points_path)?;
    let required = required_annotations(&points, target)?;
    if required.ambiguous {
        eprintln!(
            "warning: budget performance is non-monotone; using the lowest-n bracket {:?}",
            required.bracket
        );
    }
    let report = EfficiencyReport {
        target_performance: target,
        n_semi: required.n_semi,
        bracket: required.bracket,
        ambiguous: required.ambiguous,
        n_supervised,
        efficiency_ratio: n_supervised
            .map(|n| efficiency_ratio(n, required.n_semi))
            .transpose()?,
    };
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        write_json_pretty(&dir.join("efficiency.json"), &report)?;
        let curve = interpolated_curve(&points, 32)?;
        write_curve_csv(&dir.join("budget_curve.csv"), "n_manual,performance", &curve)?;
    }
    Ok(())
}
