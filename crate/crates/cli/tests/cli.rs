use std::path::Path;
use std::process::{Command, Output};

fn fockslice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockslice"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(dir: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(dir.join("convergence.csv")).unwrap();
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn kerr_preset_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("kerr");
    let o = fockslice(&["run", "--preset", "kerr", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["construction", "N", "re", "im", "abs_error", "runtime_ms"]);
    let ns: Vec<&str> = rows[1..].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(ns, ["8", "16", "32", "64", "128"]);
    assert!(rows[1..].iter().all(|r| r[0] == "theorem1"));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    let order_line = summary.lines().find(|l| l.starts_with("fitted order")).unwrap();
    let order: f64 = order_line.split_whitespace().last().unwrap().parse().unwrap();
    assert!(order >= 0.8, "{summary}");
    assert!(summary.contains("required"));
}

#[test]
fn free_preset_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("free");
    let o = fockslice(&["run", "--preset", "free", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = csv_rows(&out);
    let last: f64 = rows.last().unwrap()[4].parse().unwrap();
    assert!(last < 1e-6);
    assert!(stdout(&o).contains("closed-form free kernel"));
}

#[test]
fn malformed_config_leaves_no_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "preset = \"kerr\"\nn_list = [8, 32, 16, 64]\n").unwrap();
    let out = tmp.path().join("out");
    let o = fockslice(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());

    let o = fockslice(&["run", "--preset", "kerr", "--override", "cutoff", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = fockslice(&["run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn identical_configs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("h.toml");
    std::fs::write(&cfg, "preset = \"harmonic\"\nn_list = [4, 8, 16, 32]\nradial_order = 60\nangular_order = 48\n").unwrap();
    let mut tables = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let o = fockslice(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let rows: Vec<Vec<String>> = csv_rows(&out).into_iter().map(|mut r| {
            r.pop();
            r
        }).collect();
        tables.push(rows);
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn threshold_and_numeric_failures_have_distinct_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = fockslice(&[
        "run", "--preset", "harmonic", "--out", out.to_str().unwrap(),
        "--override", "thresholds.min_order=5.0",
        "--override", "n_list=[4, 8, 16, 32]",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(out.join("summary.txt").exists());
    assert!(stdout(&o).contains("FAIL"));

    let out = tmp.path().join("n");
    let o = fockslice(&[
        "run", "--preset", "kerr", "--out", out.to_str().unwrap(),
        "--override", "radial_order=3", "--override", "angular_order=4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn verify_defaults_pass() {
    let o = fockslice(&["verify", "--preset", "kerr"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for name in ["ccr_interior", "overlap_law", "symbol_round_trips", "norm_majorization", "compose_oracle", "route_agreement"] {
        assert!(text.lines().any(|l| l.starts_with("PASS") && l.contains(name)), "{name}: {text}");
    }
}

#[test]
fn verify_reports_overlap_failure_at_small_cutoff() {
    let o = fockslice(&[
        "verify", "--preset", "kerr",
        "--override", "cutoff=4",
        "--override", "psi_in=[[0.8, 0.0]]",
        "--override", "psi_out=[[0.8, 0.0]]",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let line = stdout(&o).lines().find(|l| l.contains("overlap_law")).unwrap().to_string();
    assert!(line.starts_with("FAIL") && line.contains("tail bound"), "{line}");
}
