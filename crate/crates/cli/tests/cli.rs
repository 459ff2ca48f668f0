use std::path::Path;
use std::process::{Command, Output};

fn mcassm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcassm")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = mcassm(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

/// Data rows of a CSV with `#` comments and one header line.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn optimize_prints_eigenvalue_ratio_for_psk() {
    let out = ok(&["optimize", "--family", "psk", "-M", "16"]);
    let lam: Vec<f64> = out.lines().next().unwrap()["lambda = [".len()..].trim_end_matches(']').split(", ").map(|x| x.parse().unwrap()).collect();
    let iota: Vec<f64> = out.lines().nth(1).unwrap()["iota_opt = [".len()..].trim_end_matches(']').split(", ").map(|x| x.parse().unwrap()).collect();
    assert!((iota[1] - lam[0] / lam[1]).abs() < 1e-5 * iota[1]);
}

#[test]
fn optimize_writes_candidate_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("design.json");
    ok(&["optimize", "--family", "qam", "--out", path.to_str().unwrap()]);
    let doc: serde_json::Value = serde_json::from_str(&read(&path)).unwrap();
    assert_eq!(doc["candidates"].as_array().unwrap().len(), 5);
    assert_eq!(doc["W"].as_array().unwrap().len(), 4);
    assert_eq!(doc["config_digest"].as_str().unwrap().len(), 64);
    let sel = doc["selected"].as_u64().unwrap() as usize;
    let best = doc["candidates"].as_array().unwrap().iter().map(|c| c["min_ed"].as_f64().unwrap()).fold(0.0, f64::max);
    assert_eq!(doc["candidates"][sel]["min_ed"].as_f64().unwrap(), best);
}

#[test]
fn missing_scenario_file_is_named() {
    let o = mcassm(&["optimize", "--scenario", "/definitely/not/here.csv"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/definitely/not/here.csv"));
}

#[test]
fn simulate_is_reproducible_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path, w: &str| {
        vec!["simulate", "--family", "qam", "--snr", "-5:5:5", "--symbols", "20000", "--seed", "3", "--workers", w, "--out"]
            .into_iter()
            .map(String::from)
            .chain([p.to_str().unwrap().to_string()])
            .collect::<Vec<_>>()
    };
    let run = |v: Vec<String>| ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    run(args(&a, "1"));
    run(args(&b, "3"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = read(&a);
    assert!(text.starts_with("# config_digest="));
    assert!(text.contains("snr_db,bits,errors,ber"));
    assert_eq!(rows(&text).len(), 3);
}

#[test]
fn abep_three_points_decrease() {
    let out = ok(&["abep", "--family", "psk", "--snr", "0:5:10"]);
    let u: Vec<f64> = rows(&out).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(u.len(), 3);
    assert!(u[0] > u[1] && u[1] > u[2]);
}

#[test]
fn ed_sweep_peaks_near_ratio() {
    let out = ok(&["ed-sweep", "--family", "psk", "--iota2", "1:1000:61"]);
    let pts: Vec<(f64, f64)> = rows(&out).iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(pts.len(), 61);
    let peak = pts.iter().cloned().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    // reference link ratio is about 41.7; grid step is a factor of 10^0.05
    assert!((peak.0 / 41.67).ln().abs() < 0.12, "{peak:?}");
}

#[test]
fn aggregation_beats_conventional_on_synthetic_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let links = dir.path().join("links.csv");
    ok(&["synth", "--count", "20", "--seed", "1000", "--out", links.to_str().unwrap()]);
    let agg = |baseline: &str| -> Vec<f64> {
        let out = ok(&["scenario-sweep", "--scenario", links.to_str().unwrap(), "--family", "qam", "--snr", "0:5:20", "--baseline", baseline]);
        rows(&out).iter().map(|r| r[1].parse().unwrap()).collect()
    };
    let (mca, ssm) = (agg("mca"), agg("ssm"));
    assert_eq!(mca.len(), 5);
    for (a, b) in mca.iter().zip(&ssm) {
        assert!(a < b, "{a} vs {b}");
    }
}

#[test]
fn scenario_sweep_writes_per_link_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    ok(&["scenario-sweep", "--synth", "4", "--snr", "0:10:20", "--out", out.to_str().unwrap()]);
    let per_link = read(&out);
    assert!(per_link.contains("link_id,snr_db,uub,snr_at_target"));
    assert_eq!(rows(&per_link).len(), 12);
    let agg = read(&dir.path().join("sweep.aggregate.csv"));
    assert!(agg.starts_with("# config_digest="));
    assert_eq!(rows(&agg).len(), 3);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"family": "qam", "M": 16, "snr": "0:1:3"}"#).unwrap();
    let from_file = ok(&["abep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(rows(&from_file).len(), 4);
    let overridden = ok(&["abep", "--config", cfg.to_str().unwrap(), "--snr", "0:1:1"]);
    assert_eq!(rows(&overridden).len(), 2);
    assert_eq!(rows(&from_file)[0], rows(&overridden)[0]);
}

#[test]
fn dump_effective_and_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let eff = dir.path().join("eff.json");
    let out = ok(&["abep", "--json", "--snr", "0", "--dump-effective", eff.to_str().unwrap()]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["uub"].as_array().unwrap().len(), 1);
    let e: serde_json::Value = serde_json::from_str(&read(&eff)).unwrap();
    assert_eq!(e["eigvals"].as_array().unwrap().len(), 4);
    assert_eq!(e["g"].as_array().unwrap().len(), 4);
}

#[test]
fn loads_json_records_and_selects_link() {
    let dir = tempfile::tempdir().unwrap();
    let links = dir.path().join("links.json");
    ok(&["synth", "--count", "3", "--json", "--seed", "5", "--out", links.to_str().unwrap()]);
    let a = ok(&["abep", "--scenario", links.to_str().unwrap(), "--link", "synth-6", "--snr", "10"]);
    let b = ok(&["abep", "--scenario", links.to_str().unwrap(), "--snr", "10"]);
    assert_ne!(rows(&a), rows(&b));
    let o = mcassm(&["abep", "--scenario", links.to_str().unwrap(), "--link", "nope"]);
    assert!(!o.status.success());
}
