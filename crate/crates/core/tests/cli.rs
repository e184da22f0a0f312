//! The `fewboson` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fewboson(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fewboson"))
        .args(args)
        .arg("--quiet")
        .current_dir(dir)
        .env_remove("FEWBOSON_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(2)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn scan_writes_one_row_per_value_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "scan.toml",
        "N = 5\nn = 6\nscan.axis = \"g0\"\nscan.values = [0.2, 0.8, 4.7, 15, 194]\noutput.artifacts = [\"rho1\", \"occupations\"]\n",
    );
    for out in ["a", "b"] {
        let o = fewboson(
            &["scan", "--config", &cfg, "--out", out, "--jobs", "2"],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read_to_string(tmp.path().join("a/scan.csv")).unwrap();
    let lines: Vec<&str> = a.lines().collect();
    assert!(lines[0].starts_with("# config_hash="));
    assert_eq!(lines[1], "g0,E,n0,mean_x,residual,iterations");
    let rows = data_rows(&a);
    assert_eq!(rows.len(), 5);
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec![0.2, 0.8, 4.7, 15.0, 194.0]
    );
    assert!(rows.windows(2).all(|w| w[0][1] < w[1][1]));

    for name in [
        "scan.csv",
        "summary.json",
        "rho1_000.csv",
        "occupations_004.csv",
    ] {
        let x = fs::read(tmp.path().join("a").join(name)).unwrap();
        let y = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let rho1 = fs::read_to_string(tmp.path().join("a/rho1_002.csv")).unwrap();
    assert_eq!(rho1.lines().nth(1), Some("x,rho1"));
    assert!(!tmp.path().join("a/failures.json").exists());
}

#[test]
fn converge_without_interaction_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "N = 3\nn = 20\ng0 = 0\n");
    let o = fewboson(&["converge", "--config", &cfg, "--out", "out"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("out/converge.csv")).unwrap();
    assert_eq!(
        text.lines().nth(1),
        Some("n,E,n0,mean_x,residual,iterations")
    );
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 20);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (k + 1) as f64);
        assert!((r[1] - 1.5).abs() < 1e-10);
    }
}

#[test]
fn solve_writes_summary_and_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.toml",
        "N = 2\nn = 4\ng0 = 1.0\nh = 2\noutput.dir = \"from-config\"\noutput.artifacts = [\"rho1\", \"rho2\", \"occupations\", \"orbitals\", \"tensor\"]\n",
    );
    let o = fewboson(&["solve", "--config", &cfg], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("from-config");
    for (name, header) in [
        ("rho1.csv", "x,rho1"),
        ("rho2.csv", "x1,x2,rho2"),
        ("occupations.csv", "a,n_a"),
        ("orbitals.csv", "x,U,phi0,phi1,phi2,phi3"),
        ("tensor.csv", "i,j,k,l,value"),
    ] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        let mut lines = text.lines();
        assert!(
            lines.next().unwrap().starts_with("# config_hash="),
            "{name}"
        );
        assert_eq!(lines.next(), Some(header), "{name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "solve");
    assert_eq!(summary["config"]["trap"]["h"], 2.0);
    assert_eq!(summary["version"], env!("CARGO_PKG_VERSION"));
    let result = &summary["results"][0];
    assert!(result["residual"].as_f64().unwrap() <= 1e-10);
    assert!(result["n0"].as_f64().unwrap() < 1.0);
}

#[test]
fn environment_variable_sets_the_default_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", "N = 2\nn = 2\n");
    let o = Command::new(env!("CARGO_BIN_EXE_fewboson"))
        .args(["solve", "--quiet", "--config", &cfg])
        .current_dir(tmp.path())
        .env("FEWBOSON_OUT", "env-out")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("env-out/summary.json").exists());
}

#[test]
fn invalid_configs_exit_with_status_one() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("N = 3\nn = 10\nalpha = 1.2\n", "alpha"),
        ("N = 0\nn = 10\n", "N"),
        ("N = 2\nn = 3\nbogus = 1\n", "bogus"),
    ] {
        let cfg = write_config(tmp.path(), "bad.toml", text);
        let o = fewboson(&["solve", "--config", &cfg, "--out", "x"], tmp.path());
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(
            String::from_utf8_lossy(&o.stderr).contains(needle),
            "{text}"
        );
    }
}

#[test]
fn missing_config_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fewboson(&["solve", "--config", "does-not-exist.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn non_convergence_exits_with_status_two_and_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "hard.toml",
        "N = 3\nn = 10\ng0 = 50\nsolver.max_iter = 3\nscan.axis = \"n\"\nscan.values = [1, 10]\n",
    );
    let o = fewboson(&["scan", "--config", &cfg, "--out", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let failures: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/failures.json")).unwrap())
            .unwrap();
    assert_eq!(failures.as_array().unwrap().len(), 1);
    assert_eq!(failures[0]["axis_value"], 10.0);
    let scan = fs::read_to_string(tmp.path().join("out/scan.csv")).unwrap();
    assert_eq!(scan.lines().count(), 4);
    assert!(scan.lines().nth(3).unwrap().starts_with("10,NaN"));
}

#[test]
fn oracle_reports_the_fermionized_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "o.toml", "N = 5\nn = 5\n");
    let o = fewboson(&["oracle", "--config", &cfg, "--out", "out"], tmp.path());
    assert!(o.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/summary.json")).unwrap())
            .unwrap();
    assert!((summary["energy_tg"].as_f64().unwrap() - 12.5).abs() < 1e-6);
    assert_eq!(summary["humps"], 5);
    assert!(tmp.path().join("out/tg_rho1.csv").exists());
}

#[test]
fn table1_prints_every_row() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fewboson(&["table1"], tmp.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.contains("-47.88"));
}
