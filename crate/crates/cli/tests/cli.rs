use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn isoreal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isoreal"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn classify_cos_saddle() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isoreal(tmp.path(), &["classify", "--potential", "cos-saddle", "--out-dir", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(tmp.path().join("out/critical.json"));
    let pts = r["critical_points"].as_array().unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0]["class"], "saddle");
    assert!(pts[0]["location"][0].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(pts[0]["laplacian_check"]["passes"], true);
}

#[test]
fn classify_cubic_finds_one_degenerate_point() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isoreal(tmp.path(), &["classify", "--potential", "cubic-degenerate", "--out-dir", "out"]);
    assert_eq!(code(&o), 0);
    let r = json(tmp.path().join("out/critical.json"));
    let pts = r["critical_points"].as_array().unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0]["class"], "degenerate");
}

#[test]
fn input_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isoreal(tmp.path(), &["classify", "--potential", "grid:missing.csv", "--out-dir", "out"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));
    for args in [
        &["classify", "--potential", "no-such-potential"][..],
        &["classify", "--grid", "4"],
        &["classify", "--atol", "-1"],
        &["rectify", "--potential", "cos-saddle", "--grid", "33"],
        &["portrait", "--ring-count", "0"],
        &["portrait", "--potential", "separable:poly(0,0,0.5)|poly(0,0,-0.5)|poly(0,0,0.5)"],
        &["probe", "torus", "--potential", "cos-saddle"],
        &["frobnicate"],
    ] {
        let o = isoreal(tmp.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn config_file_round_trips_and_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["synthesize", "--potential", "cubic-degenerate", "--box", "0.1,0.9,0.1,0.9", "--grid", "12", "--out-dir", "a"];
    assert_eq!(code(&isoreal(tmp.path(), &args)), 0);
    let written = fs::read_to_string(tmp.path().join("a/config.json")).unwrap();
    let o = isoreal(tmp.path(), &["synthesize", "--config", "a/config.json", "--out-dir", "b"]);
    assert_eq!(code(&o), 0);
    // only out_dir differs between the two effective configs
    let (mut x, mut y) = (json(tmp.path().join("a/config.json")), json(tmp.path().join("b/config.json")));
    x["out_dir"] = Value::Null;
    y["out_dir"] = Value::Null;
    assert_eq!(x, y);
    assert_eq!(
        fs::read(tmp.path().join("a/sigma.csv")).unwrap(),
        fs::read(tmp.path().join("b/sigma.csv")).unwrap()
    );
    assert!(written.contains("\"grid\": 12"));

    fs::write(tmp.path().join("bad.json"), r#"{"potential": "plane", "gird": 10}"#).unwrap();
    assert_eq!(code(&isoreal(tmp.path(), &["classify", "--config", "bad.json"])), 2);
}

#[test]
fn outputs_are_deterministic_and_confined_to_out_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str, workers: &str| {
        let args = [
            "synthesize", "--potential", "cos-saddle", "--box", "0.2,2.8,0.2,2.8", "--grid", "16", "--check-div",
            "--workers", workers, "--out-dir", dir,
        ];
        let o = isoreal(tmp.path(), &args);
        assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    };
    run("one", "1");
    run("two", "2");
    for f in ["sigma.csv", "divergence.json"] {
        assert_eq!(
            fs::read(tmp.path().join("one").join(f)).unwrap(),
            fs::read(tmp.path().join("two").join(f)).unwrap(),
            "{f}"
        );
    }
    let mut entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    entries.sort();
    assert_eq!(entries, ["one", "two"]);
}

#[test]
fn synthesize_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isoreal(
        tmp.path(),
        &["synthesize", "--potential", "plane", "--box", "0,1,0,1", "--grid", "9", "--out-dir", "p"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(json(tmp.path().join("p/divergence.json"))["max"].as_f64().unwrap(), 0.0);

    let o = isoreal(
        tmp.path(),
        &["synthesize", "--potential", "cubic-degenerate", "--box", "0.01,1,0.01,1", "--grid", "30", "--out-dir", "c"],
    );
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_path(tmp.path().join("c/sigma.csv")).unwrap();
    let max = rdr
        .records()
        .map(|r| r.unwrap()[4].parse::<f64>().unwrap())
        .fold(0.0f64, f64::max);
    assert!(max <= 16.0 + 1e-6 && max > 0.9, "{max}");
}

#[test]
fn probes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isoreal(tmp.path(), &["probe", "saddle", "--potential", "cos-saddle", "--out-dir", "s"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(tmp.path().join("s/probe-saddle.json"))["report"]["verdict"], "bounded");

    let o = isoreal(tmp.path(), &["probe", "saddle", "--potential", "counterexample-iii", "--out-dir", "c"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(tmp.path().join("c/probe-saddle.json"))["report"]["verdict"], "diverging");

    let o = isoreal(tmp.path(), &["probe", "torus", "--potential", "separable:x1-cos", "--out-dir", "t"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(tmp.path().join("t/probe-torus.json"))["realizable"], false);

    let o = isoreal(
        tmp.path(),
        &["probe", "stable", "--potential", "cubic-degenerate", "--box", "0,1,-1,0", "--point", "0,0", "--out-dir", "q"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(json(tmp.path().join("q/probe-stable.json"))["report"]["verdict"], "diverging");

    let o = isoreal(tmp.path(), &["probe", "bouFG", "--potential", "separable:cos-pair", "--out-dir", "b"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(tmp.path().join("b/probe-boufg.json"))["verdict"], "bounded");
}

#[test]
fn portrait_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isoreal(tmp.path(), &["portrait", "--potential", "cos-saddle", "--out-dir", "p"]);
    assert_eq!(code(&o), 0);
    let svg = fs::read_to_string(tmp.path().join("p/portrait.svg")).unwrap();
    assert_eq!(svg.matches("class=\"manifold ").count(), 2);
    assert!(svg.matches("class=\"trajectory\"").count() >= 16);
    assert!(svg.contains("class=\"equipotential\"") && svg.contains("stroke-dasharray"));

    let o = isoreal(tmp.path(), &["portrait", "--potential", "cubic-degenerate", "--out-dir", "c"]);
    assert_eq!(code(&o), 0);
    let svg = fs::read_to_string(tmp.path().join("c/portrait.svg")).unwrap();
    assert!(svg.contains("sink behavior in {x&gt;0,y&lt;0}"));
}

#[test]
fn rectify_and_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isoreal(
        tmp.path(),
        &["rectify", "--potential", "separable:linear-x", "--box", "-1,1,-1,1", "--grid", "11", "--out-dir", "r"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(tmp.path().join("r/rectify.json"));
    assert!(d["diagnostics"]["max_dev_e1"].as_f64().unwrap() < 1e-10);

    let o = isoreal(tmp.path(), &["flow", "--potential", "cubic-degenerate", "--x", "0.5,0.25", "--out-dir", "f"]);
    assert_eq!(code(&o), 0);
    let t = json(tmp.path().join("f/trajectory.json"));
    assert!((t["hit"]["tau"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let csv = fs::read_to_string(tmp.path().join("f/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,u,W\n"));
}
