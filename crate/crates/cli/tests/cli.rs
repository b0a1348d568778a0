use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sns")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn run_in(dir: &Path, cmd: &str, config: &str, out: &str) -> Output {
    sns(&[cmd, "--config", config, "--out", dir.join(out).to_str().unwrap()])
}

const SMALL: &str = r#"{
  "grid": {"d": 2, "N": 8},
  "solver": {"nu": 0.1, "dt": 0.01, "T": 0.2},
  "noise": {"K": 2, "sigma": [0.1, 0.1]},
  "initial": {"kind": "random-decay", "amplitude": 0.5, "decay": 1.5},
  "ensemble": {"paths": 1, "base_seed": 42}
}"#;

#[test]
fn simulate_zero_data_writes_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"grid":{"d":2,"N":8},"solver":{"nu":0.1,"dt":0.01,"T":0.05},"noise":{"K":2,"sigma":[0.1,0.1]}}"#,
    );
    let o = run_in(dir.path(), "simulate", &cfg, "out");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/path_0.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,norm_h"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let cols: Vec<_> = row.split(',').collect();
        for c in &cols[1..6] {
            assert_eq!(c.parse::<f64>().unwrap(), 0.0);
        }
    }
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["status"]["status"], "survived");
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    assert_eq!(code(&run_in(dir.path(), "simulate", &cfg, "a")), 0);
    assert_eq!(code(&sns(&["--threads", "1", "simulate", "--config", &cfg, "--out", dir.path().join("b").to_str().unwrap()])), 0);
    let a = fs::read(dir.path().join("a/path_0.csv")).unwrap();
    let b = fs::read(dir.path().join("b/path_0.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn missing_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", "{\n  \"grid\": {\"d\": 2, \"N\": 8},\n  \"solver\": {\"dt\": 0.01, \"T\": 0.2}\n}\n");
    let o = run_in(dir.path(), "simulate", &cfg, "out");
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`nu`") && err.contains("line 3"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    let bad = write_config(dir.path(), "bad.json", "\u{feff}not json at all");
    assert_eq!(code(&run_in(dir.path(), "simulate", &bad, "out")), 1);
    assert_eq!(code(&sns(&["simulate", "--config", "/nonexistent/config.json"])), 1);
}

#[test]
fn overflow_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"grid":{"d":2,"N":8},"solver":{"nu":0.1,"dt":0.01,"T":0.2,"overflow_guard":1.0},
            "initial":{"kind":"single-mode","amplitude":2.0}}"#,
    );
    let o = run_in(dir.path(), "simulate", &cfg, "out");
    assert_eq!(code(&o), 2);
    assert!(dir.path().join("out/path_0.csv").exists());
}

#[test]
fn verify_default_and_degenerate_noise() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.json", SMALL);
    let o = sns(&["verify", "--samples", "20", "--config", &good, "--out", dir.path().join("v").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    let oracle = report["spectral"].as_array().unwrap().iter().find(|c| c["name"] == "oracle-N4").unwrap();
    assert_eq!(oracle["passed"], true);
    assert!(dir.path().join("v/verify.json").exists());

    let zero = write_config(dir.path(), "zero.json", &SMALL.replace("[0.1, 0.1]", "[0.0, 0.0]"));
    let o = sns(&["verify", "--samples", "5", "--config", &zero, "--out", dir.path().join("z").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("positivity"));
}

#[test]
fn constants_prints_one_report_per_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let o = sns(&["constants", "--samples", "10", "--config", &cfg, "--out", dir.path().join("k").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 10);
    for l in &lines {
        for key in ["id", "samples", "max_ratio", "seed", "grid"] {
            assert!(l.get(key).is_some(), "{key}");
        }
    }
}

const ENSEMBLE: &str = r#"{
  "grid": {"d": 2, "N": 8},
  "solver": {"nu": 1.0, "dt": 0.01, "T": 0.1},
  "noise": {"K": 2, "sigma": [0.1, 0.1]},
  "initial": {"kind": "single-mode", "mode": [2, 2], "amplitude": 1.0, "relative_to": "delta"},
  "ensemble": {"paths": 30, "base_seed": 7, "bdg_sweep": true},
  "bound": {"C1": 0.01, "C2": 1.0, "epsilon": 0.5}
}"#;

#[test]
fn minimal_ensemble_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", ENSEMBLE);
    let o = run_in(dir.path(), "ensemble", &cfg, "out");
    let out = dir.path().join("out");
    let csvs = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "csv").count();
    assert_eq!(csvs, 30);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!((summary["bound_value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    for key in ["config", "noise", "bound_params", "paths", "survivors", "p_hat", "ci", "supermartingale", "seeds"] {
        assert!(summary.get(key).is_some(), "{key}");
    }
    assert_eq!(summary["seeds"]["base"], 7);
    assert_eq!(summary["bdg_sweep"].as_array().unwrap().len(), 4);
    // Dissipation dominates the first step, so the sup is the initial norm;
    // 30 survivors leave a Wilson lower edge near 0.89 against a bound of 0.5.
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // Thread count does not change the summary.
    let o4 = sns(&["--threads", "3", "ensemble", "--config", &cfg, "--out", dir.path().join("t3").to_str().unwrap()]);
    assert_eq!(code(&o4), 0);
    assert_eq!(fs::read(out.join("summary.json")).unwrap(), fs::read(dir.path().join("t3/summary.json")).unwrap());
}

#[test]
fn ensemble_needs_thirty_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", &ENSEMBLE.replace("\"paths\": 30", "\"paths\": 29"));
    assert_eq!(code(&run_in(dir.path(), "ensemble", &cfg, "out")), 1);
}

#[test]
fn statistical_failure_exits_with_four() {
    // Data near the threshold with strong noise: many paths cross, and the
    // sup statistic exceeds (E||u0||)^lambda.
    let dir = tempfile::tempdir().unwrap();
    let text = ENSEMBLE
        .replace("\"amplitude\": 1.0, \"relative_to\": \"delta\"", "\"amplitude\": 0.9, \"relative_to\": \"threshold\"")
        .replace("[0.1, 0.1]", "[1.0, 1.0]")
        .replace("\"nu\": 1.0", "\"nu\": 0.001");
    let cfg = write_config(dir.path(), "e.json", &text);
    let o = run_in(dir.path(), "ensemble", &cfg, "out");
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stdout));
}

#[cfg(unix)]
#[test]
fn read_only_output_is_an_io_error() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", ENSEMBLE);
    let ro = dir.path().join("ro");
    fs::create_dir(&ro).unwrap();
    fs::set_permissions(&ro, fs::Permissions::from_mode(0o555)).unwrap();
    if fs::write(ro.join("probe"), b"x").is_ok() {
        // Running with privileges that ignore permissions.
        return;
    }
    let o = sns(&["ensemble", "--config", &cfg, "--out", ro.to_str().unwrap()]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
}

fn parse_bound_csv(text: &str) -> (Vec<(String, f64)>, Vec<[f64; 3]>) {
    let (head, curve) = text.split_once("\n\n").unwrap();
    let params = head.lines().skip(1).map(|l| {
        let (k, v) = l.split_once(',').unwrap();
        (k.to_owned(), v.parse().unwrap())
    });
    let rows = curve.lines().skip(1).map(|l| {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        [v[0], v[1], v[2]]
    });
    (params.collect(), rows.collect())
}

#[test]
fn bound_table() {
    let o = sns(&["bound", "--c1", "0.01", "--c2", "1", "--sigma", "0.1,0.1", "--epsilon", "0.3"]);
    assert_eq!(code(&o), 0);
    let (params, rows) = parse_bound_csv(&String::from_utf8(o.stdout).unwrap());
    let get = |k: &str| params.iter().find(|(n, _)| n == k).unwrap().1;
    assert_eq!(get("r"), 4.0);
    assert!((get("lambda") - 1.0 / 6.0).abs() < 1e-15);
    let delta = get("delta");
    let at_delta = rows.iter().find(|r| r[0] == delta).unwrap();
    assert!((at_delta[2] - 0.3).abs() <= 1e-12 * 0.3);
    assert!(rows.windows(2).all(|w| w[1][1] <= w[0][1]));

    let hm = sns(&["bound", "--hm", "3", "--c3", "0.5", "--sigma", "0.1,0.1"]);
    assert_eq!(code(&hm), 0);
}

#[test]
fn bound_domain_errors() {
    assert_eq!(code(&sns(&["bound", "--c1", "0.01", "--sigma", "0,0"])), 1);
    assert_eq!(code(&sns(&["bound", "--c1", "0.01", "--b", "2", "--sigma", "0.1"])), 1);
    assert_eq!(code(&sns(&["bound", "--sigma", "0.1"])), 1);
    assert_eq!(code(&sns(&["bound", "--c1", "0.01", "--sigma", "0.1", "--epsilon", "1"])), 1);
}
