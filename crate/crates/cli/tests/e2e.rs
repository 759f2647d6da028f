//! End-to-end tests of the `rga` binary, including acceptance criterion 10
//! (byte-identical reruns of the full pipeline under a fixed seed).

use std::fs;
use std::path::Path;
use std::process::Command;

fn rga() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rga"))
}

fn run_ok(cmd: &mut Command) {
    let output = cmd.output().expect("spawning rga");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Recursively collect (relative path, bytes) for every file under `dir`.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn run_pipeline(root: &Path, scenario: &Path) {
    let data = root.join("data");
    run_ok(rga().args(["synth", "--scenario"]).arg(scenario).arg("--out").arg(&data));
    let manifest = data.join("manifest.jsonl");
    run_ok(rga().args(["annotate", "--manifest"]).arg(&manifest).arg("--out").arg(root.join("annotate")));
    run_ok(rga()
        .args(["eval-localisation", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(root.join("eval-localisation")));
    run_ok(rga()
        .args(["eval-detection", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(root.join("eval-detection")));
}

#[test]
fn criterion_10_end_to_end_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("scenario.json");
    fs::write(&scenario, r#"{"num_cases": 30, "seed": 1234, "noise_sigma": 0.01}"#).unwrap();

    let run_a = tmp.path().join("a");
    let run_b = tmp.path().join("b");
    fs::create_dir_all(&run_a).unwrap();
    fs::create_dir_all(&run_b).unwrap();
    run_pipeline(&run_a, &scenario);
    run_pipeline(&run_b, &scenario);

    let snap_a = snapshot(&run_a);
    let snap_b = snapshot(&run_b);
    assert!(!snap_a.is_empty());
    assert_eq!(snap_a.len(), snap_b.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in snap_a.iter().zip(&snap_b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between identical-seed runs");
    }
    println!("ACCEPTANCE 10 end-to-end determinism (30 cases, 2 runs): PASS");
}

#[test]
fn parse_reports_on_printed_sections() {
    let tmp = tempfile::tempdir().unwrap();
    let left = "Index lesion mark1: peripheral zone right apex. \
T2W/DWI/DCE score: 4/4/+. Minimal ADC value: 821 (normally at least 950). \
Risk category: intermediate/high-grade cancer (PI-RADS v2 category: 4).";
    let right = "Finding nr. 1: peripheral zone right posterior mid-base prostate. \
Score T2W: 5, Score DCE: +, Score DWI: 5, minimal ADC value 665. \
Lesion best fits significant prostate cancer (PIRADS 5).";
    let manifest = tmp.path().join("manifest.jsonl");
    let lines = [
        serde_json::json!({"case_id": "left", "volume_paths": ["none.json"], "report": {"text": left}}),
        serde_json::json!({"case_id": "right", "volume_paths": ["none.json"], "report": {"text": right}}),
    ];
    fs::write(
        &manifest,
        lines.map(|l| l.to_string()).join("\n") + "\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    run_ok(rga().args(["parse-reports", "--manifest"]).arg(&manifest).arg("--out").arg(&out));
    let text = fs::read_to_string(out.join("extractions.jsonl")).unwrap();
    let rows: Vec<serde_json::Value> =
        text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for (row, pirads) in rows.iter().zip([4u64, 5]) {
        assert_eq!(row["n_sig"], 1);
        assert_eq!(row["findings"][0]["pirads"], pirads);
        assert_eq!(row["findings"][0]["t2w"], pirads);
        assert_eq!(row["findings"][0]["dwi"], pirads);
        assert_eq!(row["findings"][0]["dce"], "+");
    }
}

#[test]
fn empty_manifest_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = tmp.path().join("empty.jsonl");
    fs::write(&manifest, "").unwrap();
    let output = rga()
        .args(["annotate", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("no cases"));
}

#[test]
fn per_case_failures_exit_two_and_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("scenario.json");
    fs::write(&scenario, r#"{"num_cases": 3, "seed": 5}"#).unwrap();
    let data = tmp.path().join("data");
    run_ok(rga().args(["synth", "--scenario"]).arg(&scenario).arg("--out").arg(&data));

    // corrupt one case's volume path
    let manifest_path = data.join("manifest.jsonl");
    let text = fs::read_to_string(&manifest_path).unwrap();
    let patched = text.replacen("volumes/case-0001.json", "volumes/missing.json", 1);
    assert_ne!(text, patched);
    fs::write(&manifest_path, patched).unwrap();

    let out = tmp.path().join("out");
    let output = rga()
        .args(["annotate", "--manifest"])
        .arg(&manifest_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let results = fs::read_to_string(out.join("outcomes.jsonl")).unwrap();
    let rows: Vec<serde_json::Value> =
        results.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1]["error"].as_str().unwrap().contains("missing.json"));
    assert!(rows[0].get("error").is_none());
    assert!(rows[2].get("error").is_none());
}

#[test]
fn efficiency_subcommand_matches_worked_example() {
    let tmp = tempfile::tempdir().unwrap();
    let points = tmp.path().join("points.csv");
    fs::write(&points, "n_manual,performance\n100,0.70\n300,0.80\n").unwrap();
    let output = rga()
        .args(["efficiency", "--points"])
        .arg(&points)
        .args(["--target", "0.75", "--n-supervised", "300"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("efficiency JSON on stdout");
    assert!((report["n_semi"].as_f64().unwrap() - 173.205).abs() < 0.01);
    assert!((report["efficiency_ratio"].as_f64().unwrap() - 1.732).abs() < 0.001);
}

#[test]
fn flag_overrides_beat_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("scenario.json");
    fs::write(&scenario, r#"{"num_cases": 4, "seed": 11}"#).unwrap();
    let data = tmp.path().join("data");
    run_ok(rga().args(["synth", "--scenario"]).arg(&scenario).arg("--out").arg(&data));

    let config = tmp.path().join("config.json");
    fs::write(&config, r#"{"max_lesions": 1}"#).unwrap();
    let out = tmp.path().join("out");
    run_ok(rga()
        .args(["extract", "--manifest"])
        .arg(data.join("manifest.jsonl"))
        .arg("--out")
        .arg(&out)
        .arg("--config")
        .arg(&config)
        .args(["--max-lesions", "2"]));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["extraction"]["max_lesions"], 2);
    let rows = fs::read_to_string(out.join("candidates.jsonl")).unwrap();
    for line in rows.lines() {
        let row: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(row["num_candidates"].as_u64().unwrap() <= 2);
    }
}
