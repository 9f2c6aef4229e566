use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const E1: &str = r#"{"instance": {"source": "inline", "n": 2, "marked": 0, "f": [0, 1, 2, 3]}}"#;

fn adsearch(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adsearch"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("machine-readable error")
}

#[test]
fn spectrum_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), E1);
    let out = adsearch(
        &["spectrum", "--config", "config.json", "--out", "o"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("o/spectrum.csv"));
    assert_eq!(
        header,
        ["s", "lambda_0", "lambda_1", "lambda_2", "lambda_3", "gap"]
    );
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.len() == 6));
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    for r in &rows {
        assert!((r[5] - (r[2] - r[1])).abs() <= 1e-15);
    }
    let raw = fs::read_to_string(dir.path().join("o/spectrum.csv")).unwrap();
    assert!(!raw.contains('\r'));
    assert!(fs::read_to_string(dir.path().join("o/spectrum.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn envelope_summary_for_e1() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), E1);
    let refused = adsearch(
        &["envelope", "--config", "config.json", "--out", "o"],
        dir.path(),
    );
    assert!(!refused.status.success());
    assert_eq!(stderr_json(&refused)["error"], "unsupported-regime");

    let out = adsearch(
        &[
            "envelope",
            "--config",
            "config.json",
            "--out",
            "o",
            "--width-threshold",
            "1.5",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/envelope.json")).unwrap())
            .unwrap();
    let keys: Vec<&str> = summary
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    let mut expected = vec!["m", "g_min", "a", "b", "T_closed_form", "T_integral"];
    expected.sort();
    let mut got = keys.clone();
    got.sort();
    assert_eq!(got, expected);
    assert!((summary["m"].as_f64().unwrap() - 2.91548).abs() < 1e-5);
    assert!(summary["a"].as_f64().unwrap() < summary["b"].as_f64().unwrap());

    let (header, rows) = read_csv(&dir.path().join("o/envelope.csv"));
    assert_eq!(header, ["s", "envelope", "exact_gap"]);
    for r in &rows {
        assert!(r[1] <= r[2] + 1e-9, "envelope above gap at s = {}", r[0]);
    }
}

#[test]
fn run_reaches_marked_state_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "--n",
        "4",
        "--epsilon",
        "0.05",
        "--schedule",
        "global,local-exact",
    ];
    let a = adsearch(&[&args[..], &["--out", "a"]].concat(), dir.path());
    let b = adsearch(&[&args[..], &["--out", "b"]].concat(), dir.path());
    assert!(a.status.success() && b.status.success());

    let results: Vec<Value> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/results.json")).unwrap())
            .unwrap();
    let find = |kind: &str| results.iter().find(|r| r["kind"] == kind).unwrap();
    let local = find("local-exact");
    let global = find("global");
    assert!(local["fidelity"].as_f64().unwrap() >= 0.9);
    assert!(local["T"].as_f64().unwrap() <= global["T"].as_f64().unwrap());
    assert_eq!(local["epsilon"].as_f64().unwrap(), 0.05);

    for name in [
        "schedule_local-exact_eps0.05.csv",
        "trace_local-exact_eps0.05.csv",
        "schedule_global_eps0.05.csv",
        "trace_global_eps0.05.csv",
        "results.json",
    ] {
        let x = fs::read(dir.path().join("a").join(name)).unwrap();
        let y = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }

    let (header, rows) = read_csv(&dir.path().join("a/trace_local-exact_eps0.05.csv"));
    assert_eq!(header, ["t", "s", "ground_overlap", "norm_drift"]);
    assert!(rows.len() <= 1024);
    assert!(rows
        .iter()
        .all(|r| r[3] <= 1e-8 && (0.0..=1.0).contains(&r[2])));
    let text = fs::read_to_string(dir.path().join("a/schedule_local-exact_eps0.05.csv")).unwrap();
    assert!(text.starts_with("# kind=local-exact,epsilon=0.05,T="));
}

#[test]
fn mingap_writes_location() {
    let dir = tempfile::tempdir().unwrap();
    let out = adsearch(&["mingap", "--n", "4", "--out", "o"], dir.path());
    assert!(out.status.success());
    let mg: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/mingap.json")).unwrap())
            .unwrap();
    assert!((mg["g_min"].as_f64().unwrap() - 0.25).abs() < 1e-9);
    assert!((mg["s_star"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn bad_input_reports_json_error() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        r#"{"instance": {"source": "inline", "n": 2, "marked": 0, "f": [0, 1, 2]}}"#,
    );
    let out = adsearch(
        &["spectrum", "--config", "config.json", "--out", "o"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "instance");

    write_config(dir.path(), r#"{"bogus": 1}"#);
    let out = adsearch(&["spectrum", "--config", "config.json"], dir.path());
    assert_eq!(stderr_json(&out)["error"], "config");

    let out = adsearch(&["run", "--seed", "3", "--out", "o"], dir.path());
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "config");
}

#[test]
fn seeded_noise_source_is_overridable() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        r#"{"instance": {"source": "noise", "n": 3, "marked": 1,
            "model": {"kind": "uniform-interval", "low": 1.0, "high": 3.0, "seed": 7}}}"#,
    );
    let run = |seed: &str, out: &str| {
        let o = adsearch(
            &[
                "mingap",
                "--config",
                "config.json",
                "--seed",
                seed,
                "--out",
                out,
            ],
            dir.path(),
        );
        assert!(o.status.success());
        fs::read_to_string(dir.path().join(out).join("mingap.json")).unwrap()
    };
    assert_eq!(run("7", "a"), run("7", "b"));
    assert_ne!(run("7", "a"), run("8", "c"));
}
