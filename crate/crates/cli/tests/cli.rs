use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn boxreg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boxreg"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (h, rows) = csv(path);
    let i = h.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn simulate_writes_series_comparison_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = boxreg(
        &["simulate", "--anchors", "2", "--steps", "10", "--losses", "iou,giou,interpiou:alpha=0.98", "--plot"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for label in ["iou", "giou", "interpiou_a0.98"] {
        let (h, rows) = csv(&dir.path().join(format!("simulate_{label}.csv")));
        assert_eq!(h[0], "step");
        assert_eq!(h.len(), 1 + boxreg::METRIC_NAMES.len());
        assert_eq!(rows.len(), 11);
        assert!(rows.iter().enumerate().all(|(i, r)| r[0] == i.to_string()));
    }
    let (h, _) = csv(&dir.path().join("comparison.csv"));
    assert_eq!(h, ["step", "iou", "giou", "interpiou_a0.98"]);
    let svg = fs::read_to_string(dir.path().join("comparison.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);

    let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 0);
    assert_eq!(m["config"]["scenario"]["n_anchors"], 2);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 5);
    assert!(m["duration_secs"].as_f64().unwrap() >= 0.0);
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["simulate", "--anchors", "3", "--steps", "15", "--seed", "42", "--losses", "diou,dinterpiou"];
    assert!(boxreg(&args, a.path()).status.success());
    assert!(boxreg(&args, b.path()).status.success());
    for f in ["simulate_diou.csv", "simulate_dinterpiou_0.5_0.99.csv", "comparison.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = boxreg(&["simulate", "--anchors", "1", "--steps", "5", "--losses", "iou", "--format", "json"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("simulate_iou.json")).unwrap()).unwrap();
    assert_eq!(v["columns"][0], "step");
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn enlargement_draws_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let steps = 25;
    let out = boxreg(&["enlargement", "--steps", "25", "--losses", "giou,interpiou"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for label in ["giou", "interpiou_a0.98"] {
        let svg = fs::read_to_string(dir.path().join(format!("enlargement_{label}.svg"))).unwrap();
        assert_eq!(svg.matches("<rect").count(), steps + 2);
        assert_eq!(svg.matches("stroke=\"black\"").count(), 1);
        assert_eq!(svg.matches("stroke=\"red\"").count(), 1);
        assert_eq!(svg.matches("stroke=\"green\"").count(), 1);
        let path = dir.path().join(format!("enlargement_{label}.csv"));
        let (h, rows) = csv(&path);
        assert_eq!(h, ["step", "cx", "cy", "w", "h", "loss", "iou", "r_diff"]);
        assert_eq!(rows.len(), steps + 1);
        assert!(column(&path, "r_diff")[0].abs() < 1e-15);
    }
    assert!(dir.path().join("enlargement_summary.csv").exists());
}

#[test]
fn landscape_envelope_and_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = boxreg(&["landscape"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("landscape.csv");
    let (h, rows) = csv(&path);
    assert_eq!(rows.len(), 101);
    assert_eq!(&h[..4], ["step", "t", "iou_value", "iou"]);
    let dynamic = column(&path, "dinterpiou_0_0.99");
    let fixed = column(&path, "interpiou_a0.99");
    assert!(dynamic.iter().zip(&fixed).all(|(d, s)| d >= s));
    for name in &h[3..] {
        assert_eq!(*column(&path, name).last().unwrap(), 0.0, "{name}");
    }
    assert!(dir.path().join("landscape.svg").exists());
}

#[test]
fn landscape_replays_from_manifest() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = boxreg(&["landscape", "--alphas", "0.5,0.8", "--clamps", "0.2:0.9", "--points", "31"], a.path());
    assert!(first.status.success());
    let manifest = a.path().join("manifest.json");
    let again = boxreg(&["landscape", "--config", manifest.to_str().unwrap()], b.path());
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    let f = "landscape.csv";
    assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
}

#[test]
fn gradcheck_small_run_is_quick() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let out = boxreg(&["gradcheck", "--pairs", "10"], dir.path());
    assert!(t.elapsed() < Duration::from_secs(1));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = csv(&dir.path().join("gradcheck.csv"));
    assert_eq!(rows.len(), 11);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("dinterpiou"));
}

#[test]
fn alpha_bound_reports_zero_for_overlaps() {
    let dir = tempfile::tempdir().unwrap();
    let out = boxreg(&["alpha-bound", "--pairs", "500", "--seed", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("alpha_bound.csv");
    let bound = column(&path, "bound");
    let above = column(&path, "iou_above");
    assert_eq!(bound.len(), 500);
    assert!(above.iter().all(|&v| v > 0.0));
    let (h, rows) = csv(&path);
    let (pc, gc) = (h.iter().position(|c| c == "pred_cx").unwrap(), h.iter().position(|c| c == "gt_cx").unwrap());
    let mut overlapping = 0;
    for (r, b) in rows.iter().zip(&bound) {
        let v: Vec<f64> = r[pc..gc + 4].iter().map(|x| x.parse().unwrap()).collect();
        let p = boxreg::BBox::new(v[0], v[1], v[2], v[3]).unwrap();
        let g = boxreg::BBox::new(v[4], v[5], v[6], v[7]).unwrap();
        if boxreg::iou(&p, &g) > 0.0 {
            overlapping += 1;
            assert_eq!(*b, 0.0);
        }
    }
    assert!(overlapping > 0);
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"adam": {"lr": -1.0}}"#).unwrap();
    let out = boxreg(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lr"));

    let out = boxreg(&["simulate", "--losses", "nope"], dir.path());
    assert!(!out.status.success());
    let out = boxreg(&["simulate", "--gt-area", "1/0"], dir.path());
    assert!(!out.status.success());
}
