use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn memswitch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memswitch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Copy of a shipped config with some task fields replaced.
fn variant(name: &str, dir: &Path, edits: &[(&str, Value)]) -> PathBuf {
    let text = std::fs::read_to_string(configs().join(name)).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    for (k, val) in edits {
        v["task"][*k] = val.clone();
    }
    let out = dir.join(name);
    std::fs::write(&out, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    out
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Data rows of a CSV with `#` metadata, as string cells keyed by header.
fn csv_rows(p: &Path) -> Vec<Vec<(String, String)>> {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn cell<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap().1
}

#[test]
fn synthesize_reports_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let out = memswitch(&[
        "synthesize",
        "--config",
        path_str(&configs().join("vteam_reset.json")),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = read_json(&dir.path().join("vteam_reset_report.json"));
    assert_eq!(report["case"], "Case3_LowAlpha");
    assert!(rel(num(&report["lambda1_SV2"]), 2.168e-3) < 1e-2);
    assert_eq!(report["feasible"], true);
    let mut keys: Vec<_> = report.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "case",
            "energy_J",
            "feasible",
            "lambda1_SV2",
            "min_T_s",
            "tc_s"
        ]
    );
    assert!(dir.path().join("vteam_reset_protocol.csv").exists());
    assert_eq!(
        csv_rows(&dir.path().join("vteam_reset_profile.csv")).len(),
        1001
    );
}

#[test]
fn infeasible_budget_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(
        "vteam_reset.json",
        dir.path(),
        &[("programming_time_s", 1e-6.into())],
    );
    let out = memswitch(&[
        "synthesize",
        "--config",
        path_str(&cfg),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report = read_json(&dir.path().join("vteam_reset_report.json"));
    assert_eq!(report["feasible"], false);
    assert!(rel(num(&report["min_T_s"]), 5.493e-6) < 1e-3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("shortest switching time"));
}

#[test]
fn malformed_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"model": {"kind": "vteam"}, "task": {}}"#).unwrap();
    let out = memswitch(&["synthesize", "--config", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing field"));

    let cfg = variant("vteam_reset.json", dir.path(), &[("unexpected", 1.into())]);
    let out = memswitch(&["synthesize", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}

#[test]
fn zero_voltage_protocol_costs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let proto = dir.path().join("rest.csv");
    std::fs::write(&proto, "# hold\nduration_s,voltage_V\n1e-6,0\n2e-6,0.0\n").unwrap();
    let out = memswitch(&[
        "simulate",
        "--config",
        path_str(&configs().join("vteam_reset.json")),
        "--protocol",
        path_str(&proto),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("vteam_reset_trace.csv"));
    let last = rows.last().unwrap();
    assert_eq!(cell(last, "q_J").parse::<f64>().unwrap(), 0.0);
    assert_eq!(cell(last, "x").parse::<f64>().unwrap(), 0.1);
}

#[test]
fn synthesized_protocol_round_trips_through_simulation() {
    for name in [
        "vteam_reset.json",
        "vteam_reset_alpha2.json",
        "balance_set.json",
    ] {
        let dir = tempfile::tempdir().unwrap();
        let d = path_str(dir.path());
        let cfg = configs().join(name);
        assert!(
            memswitch(&["synthesize", "--config", path_str(&cfg), "--out-dir", d])
                .status
                .success()
        );
        let stem = name.trim_end_matches(".json");
        let proto = dir.path().join(format!("{stem}_protocol.csv"));
        let mut args = vec![
            "simulate",
            "--config",
            path_str(&cfg),
            "--protocol",
            path_str(&proto),
            "--out-dir",
            d,
        ];
        if name == "balance_set.json" {
            args.extend(["--rate-mode", "one-sided"]);
        }
        let out = memswitch(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let predicted =
            num(&read_json(&dir.path().join(format!("{stem}_report.json")))["energy_J"]);
        let simulated =
            num(&read_json(&dir.path().join(format!("{stem}_summary.json")))["energy_J"]);
        assert!(
            rel(simulated, predicted) < 1e-3,
            "{name}: {simulated} vs {predicted}"
        );
    }
}

#[test]
fn balance_protocol_under_full_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = path_str(dir.path());
    let cfg = configs().join("balance_set.json");
    assert!(
        memswitch(&["synthesize", "--config", path_str(&cfg), "--out-dir", d])
            .status
            .success()
    );
    let proto = dir.path().join("balance_set_protocol.csv");
    assert!(memswitch(&[
        "simulate",
        "--config",
        path_str(&cfg),
        "--protocol",
        path_str(&proto),
        "--out-dir",
        d
    ])
    .status
    .success());
    let summary = read_json(&dir.path().join("balance_set_summary.json"));
    assert!((num(&summary["final_x"]) - 0.9).abs() < 2e-2);
    let sw = &summary["level_switches"][0];
    assert!(rel(num(&sw["t_s"]), 24.7) < 1e-2);
}

#[test]
fn summary_records_level_switch() {
    let dir = tempfile::tempdir().unwrap();
    let d = path_str(dir.path());
    let cfg = variant(
        "vteam_reset.json",
        dir.path(),
        &[("programming_time_s", 6e-6.into())],
    );
    assert!(
        memswitch(&["synthesize", "--config", path_str(&cfg), "--out-dir", d])
            .status
            .success()
    );
    let proto = dir.path().join("vteam_reset_protocol.csv");
    assert!(memswitch(&[
        "simulate",
        "--config",
        path_str(&cfg),
        "--protocol",
        path_str(&proto),
        "--out-dir",
        d
    ])
    .status
    .success());
    let summary = read_json(&dir.path().join("vteam_reset_summary.json"));
    let sw = &summary["level_switches"][0];
    assert_eq!(sw["from"], "state_dependent");
    assert_eq!(sw["to"], "upper_bound");
    assert!(rel(num(&sw["t_s"]), 2.726e-6) < 1e-2);
}

#[test]
fn amplitude_sweep_energy_peaks_at_two_over_eta() {
    let dir = tempfile::tempdir().unwrap();
    let out = memswitch(&[
        "sweep",
        "--config",
        path_str(&configs().join("balance_set.json")),
        "--axis",
        "V0",
        "--from",
        "0.05",
        "--to",
        "1.0",
        "--points",
        "96",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("balance_set_sweep.csv"));
    assert_eq!(rows.len(), 96);
    let peak = rows
        .iter()
        .max_by(|a, b| {
            let q = |r: &Vec<(String, String)>| cell(r, "const_energy_J").parse::<f64>().unwrap();
            q(a).total_cmp(&q(b))
        })
        .unwrap();
    assert!((cell(peak, "const_v_V").parse::<f64>().unwrap() - 0.4).abs() < 1e-9);
}

#[test]
fn time_sweep_optimal_energy_flat_beyond_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = memswitch(&[
        "sweep",
        "--config",
        path_str(&configs().join("vteam_reset.json")),
        "--axis",
        "T",
        "--from",
        "22e-6",
        "--to",
        "200e-6",
        "--points",
        "12",
        "--log",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&dir.path().join("vteam_reset_sweep.csv"));
    let energies: Vec<&str> = rows.iter().map(|r| cell(r, "opt_energy_J")).collect();
    assert!(energies.iter().all(|e| *e == energies[0]), "{energies:?}");
    assert!(rows.iter().all(|r| cell(r, "opt_case") == "Case2_LowAlpha"));

    let out = memswitch(&[
        "sweep",
        "--config",
        path_str(&configs().join("vteam_reset.json")),
        "--axis",
        "T",
        "--from",
        "1e-6",
        "--to",
        "1e-6",
        "--points",
        "1",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&dir.path().join("vteam_reset_sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(cell(&rows[0], "status"), "infeasible");
}

#[test]
fn compare_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let d = path_str(dir.path());
    let ratio = |cfg: &Path| {
        let out = memswitch(&["compare", "--config", path_str(cfg), "--out-dir", d]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        num(&v["constant_over_optimal"])
    };
    assert!(rel(ratio(&configs().join("balance_set.json")), 1.023) < 5e-3);

    let t_min = 5.4930614433405496e-6;
    let at_min = variant(
        "vteam_reset.json",
        dir.path(),
        &[("programming_time_s", t_min.into())],
    );
    assert!((ratio(&at_min) - 1.0).abs() < 1e-6);

    let long = variant(
        "vteam_reset_alpha3.json",
        dir.path(),
        &[("programming_time_s", 1e-4.into())],
    );
    assert!(ratio(&long) > 2.0);

    let at_50 = variant(
        "vteam_reset.json",
        dir.path(),
        &[("programming_time_s", 50e-6.into())],
    );
    assert!(rel(ratio(&at_50), 1.179) < 5e-3);
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("vteam_reset.json");
    for d in [&a, &b] {
        assert!(memswitch(&[
            "synthesize",
            "--config",
            path_str(&cfg),
            "--out-dir",
            path_str(d.path())
        ])
        .status
        .success());
    }
    for f in [
        "vteam_reset_protocol.csv",
        "vteam_reset_profile.csv",
        "vteam_reset_report.json",
    ] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}
