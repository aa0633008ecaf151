use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hairlab::tractlab::build_unit_sequences;
use serde_json::Value;

fn hairlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hairlab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().expect("object").keys().cloned().collect();
    k.sort();
    k
}

fn schema() -> BTreeMap<String, Vec<String>> {
    serde_json::from_str(include_str!("golden/schema.json")).unwrap()
}

fn write_plan(dir: &Path, perturb: bool) -> String {
    let mut plan = build_unit_sequences(2, 1e-6).unwrap();
    if perturb {
        plan = plan.perturb_eps(0, 1e6f64.ln()).unwrap();
    }
    let p = dir.join(if perturb { "bad.json" } else { "plan.json" });
    fs::write(&p, plan.to_json()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn golden_schemas() {
    let want = schema();
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("orbit", vec!["orbit", "--z0", "3.54", "--horizon", "6"]),
        ("classify", vec!["classify", "--z0", "3.54", "--horizon", "15", "--R2", "6"]),
        ("headstart", vec!["headstart", "--w", "6", "--zeta", "2"]),
        ("maxmod", vec!["maxmod", "--family", "fatou", "--lambda", "1", "--r", "1,2"]),
        ("semiconj", vec!["semiconj", "--family", "fatou", "--lambda", "1", "--samples", "100"]),
        ("omega", vec!["omega", "--eps", "0.1", "--delta", "0.2", "--r", "1"]),
        ("ahlfors", vec!["ahlfors", "--a", "1", "--b", "20"]),
    ];
    for (name, args) in cases {
        let out = hairlab(&args);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(keys(&v), want[name], "{name}");
        assert_eq!(v["version"], 1);
    }
    let orbit = json(&hairlab(&["orbit", "--z0", "3.54", "--horizon", "6"]));
    let steps = orbit["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 7);
    assert_eq!(steps[0]["rep"], "plain");
    assert_eq!(steps[6]["rep"], "lifted");
}

#[test]
fn plan_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_plan(dir.path(), false);
    let out = hairlab(&["tract", "verify", &good]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(keys(&v), schema()["tract_verify"]);
    assert_eq!(v["holds"], true);
    let bad = write_plan(dir.path(), true);
    let out = hairlab(&["tract", "verify", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["holds"], false);
    let missing = dir.path().join("none.json");
    assert_eq!(hairlab(&["tract", "verify", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn usage_exit_codes() {
    assert_eq!(hairlab(&["orbit", "--z0", "3.54"]).status.code(), Some(0));
    assert_eq!(hairlab(&["orbit", "--z0", "1", "--bogus"]).status.code(), Some(2));
    assert_eq!(hairlab(&["orbit", "--z0", "nan"]).status.code(), Some(2));
    assert_eq!(hairlab(&["classify", "--z0", "1", "--R", "0.5"]).status.code(), Some(2));
    assert_eq!(hairlab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn hair_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("h.csv");
    let rep = dir.path().join("r.json");
    let out = hairlab(&["hair", "--points", "8", "--out", csv.to_str().unwrap(), "--report", rep.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,re,im,fast_level"));
    assert_eq!(lines.count(), 8);
    let v: Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(keys(&v), schema()["hair_report"]);
}

fn render(dir: &Path, tag: &str, threads: &str, window: &str, size: &str) -> (Vec<u8>, String, Value) {
    let png = dir.join(format!("{tag}.png"));
    let csv = dir.join(format!("{tag}.csv"));
    let out = Command::new(env!("CARGO_BIN_EXE_hairlab"))
        .env("HAIRLAB_THREADS", threads)
        .args(["render", &format!("--window={window}"), "--width", size, "--height", size, "--horizon", "20"])
        .args(["--out", png.to_str().unwrap(), "--csv", csv.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    (fs::read(&png).unwrap(), fs::read_to_string(&csv).unwrap(), json(&out))
}

#[test]
fn render_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = render(dir.path(), "a", "1", "-2,8,-4,4", "48");
    let b = render(dir.path(), "b", "4", "-2,8,-4,4", "48");
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(keys(&a.2), schema()["render"]);
    assert_eq!(a.2["nesting_violations"], 0);
    assert!(a.0.starts_with(b"\x89PNG"));
}

#[test]
fn single_pixel_renders() {
    // q_a ≈ 0.2592 and q_r ≈ 2.5426 for λ = 0.2
    let dir = tempfile::tempdir().unwrap();
    let (_, csv, _) = render(dir.path(), "qa", "1", "0.2092,0.3092,-0.05,0.05", "1");
    assert!(csv.lines().nth(1).unwrap().contains(",non-escaping,"), "{csv}");
    let (_, csv, _) = render(dir.path(), "qr", "1", "3.4926,3.5926,-0.05,0.05", "1");
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains(",fast,"), "{csv}");
}
