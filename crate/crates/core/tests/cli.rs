use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pinsec"))
}

fn config_file(dir: &std::path::Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

const SMALL: &str = r#"
[scenario]
rho = 0.3
[sweep]
axis = "rate_threshold"
values = [0.0, 0.5, 1.0]
methods = ["chebyshev", "independence", "mc-pinching"]
mc_samples = 5000
"#;

#[test]
fn sweep_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), SMALL);
    let out = run(&["sweep", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis_name,axis_value,method,sop,std_error,rho,rho_source,diagnostics"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    assert!(rows[0].starts_with("rate_threshold,0,chebyshev,"));
    assert!(rows.iter().all(|r| r.contains(",0.3,given,")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), SMALL);
    let a = run(&["sweep", cfg.to_str().unwrap()]).stdout;
    let b = run(&["sweep", cfg.to_str().unwrap()]).stdout;
    assert_eq!(a, b);
    let out = dir.path().join("mc.csv");
    let status = bin()
        .args(["mc", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let first = std::fs::read(&out).unwrap();
    bin()
        .args(["mc", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("RAYON_NUM_THREADS", "1")
        .status()
        .unwrap();
    assert_eq!(first, std::fs::read(&out).unwrap());
}

#[test]
fn seed_and_set_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let base = run(&["mc", cfg]).stdout;
    let reseeded = run(&["mc", cfg, "--seed", "77"]).stdout;
    assert_ne!(base, reseeded);
    let via_set = run(&["mc", cfg, "--set", "sweep.seed=77"]).stdout;
    assert_eq!(reseeded, via_set);
    // the dedicated flag wins over --set
    let both = run(&["mc", cfg, "--set", "sweep.seed=5", "--seed", "77"]).stdout;
    assert_eq!(reseeded, both);
    let rho = String::from_utf8(run(&["sweep", cfg, "--set", "scenario.rho=0.6"]).stdout).unwrap();
    assert!(rho.lines().skip(1).all(|r| r.contains(",0.6,given,")));
}

#[test]
fn validate_rejects_oversized_error_halfwidth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), "[scenario]\nerror_halfwidth_m = 10.5\n");
    let out = run(&["validate", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("delta <= D/2"), "{err}");
}

#[test]
fn validate_accepts_the_default_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), "[sweep]\nrho_samples = 20000\n");
    let out = run(&["validate", cfg.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "{err}");
    assert!(err.contains("status:"), "{err}");
}

#[test]
fn unknown_method_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), "[sweep]\nmethods = [\"chebyshev\", \"simpson\"]\n");
    let out = run(&["sweep", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sweep.methods[1]"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), "[scenario]\nsnr = 3.0\n");
    let out = run(&["sweep", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("snr"));
}

#[test]
fn dump_pdf_writes_two_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), "");
    let out = run(&["dump-pdf", "bob", cfg.to_str().unwrap(), "--points", "51"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with(|c: char| c.is_alphabetic())).collect();
    assert_eq!(data.len(), 51);
    for line in data {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 2);
        assert!(cols[1] >= 0.0);
    }
    let bad = run(&["dump-pdf", "carol", cfg.to_str().unwrap()]);
    assert!(!bad.status.success());
}
