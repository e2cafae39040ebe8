use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mcnls(task: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{task}.toml"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_mcnls"))
        .arg(task)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn report_value(stdout: &[u8], key: &str) -> String {
    let text = String::from_utf8_lossy(stdout);
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
        .to_string()
}

#[test]
fn gn_defaults_recover_closed_form_constant() {
    let dir = TempDir::new().unwrap();
    let out = mcnls("gn", "", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a_star: f64 = report_value(&out.stdout, "a_star_discrete").parse().unwrap();
    let exact = std::f64::consts::PI.powi(2) / 4.0;
    assert!((a_star / exact - 1.0).abs() < 1e-5);

    let profile = mcnls::io::read_profile(fs::File::open(dir.path().join("out/profile.bin")).unwrap()).unwrap();
    assert_eq!(profile.a_star_discrete, a_star);
    let csv = fs::read_to_string(dir.path().join("out/profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# mcnls "));
    assert_eq!(lines.next(), Some("x,re,im"));
    assert_eq!(lines.count(), 2048);
}

#[test]
fn classify_zero_coupling() {
    let dir = TempDir::new().unwrap();
    let out = mcnls("classify", "[potential]\noffset = 0.0\n", dir.path(), &[]);
    assert!(out.status.success());
    assert_eq!(report_value(&out.stdout, "regime"), "SubcriticalNoMin");
}

#[test]
fn failed_expectation_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let out = mcnls("classify", "[potential]\noffset = 0.0\n[classify]\nexpect = \"Critical\"\n", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL regime"));
}

#[test]
fn sweep_without_wells_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = mcnls("sweep", "[potential]\n", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("potential.wells"), "{err}");
}

#[test]
fn unparsable_config_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = mcnls("gn", "[grid]\nhalf_width = \"wide\"\n", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("half_width"));
}

const SOLVE: &str = r#"
[grid]
half_width = 16.0
points = 1024

[potential]
wells = [{ center = [0.5], p = 4.0, lambda = 1.0 }]
offset = 2.0
"#;

#[test]
fn solve_outputs_are_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let ra = mcnls("solve", SOLVE, a.path(), &[]);
    let rb = mcnls("solve", SOLVE, b.path(), &[]);
    assert!(ra.status.success() && rb.status.success());
    for name in ["trace.csv", "solution.csv", "solution.bin", "solve_report.txt"] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
    let trace = fs::read_to_string(a.path().join("out/trace.csv")).unwrap();
    assert_eq!(trace.lines().nth(1), Some("iteration,energy,kinetic,residual,tau,norm"));
    assert_eq!(report_value(&ra.stdout, "status"), "Converged");
}

#[test]
fn seed_enters_the_provenance_hash() {
    let dir = TempDir::new().unwrap();
    let cfg = "[potential]\noffset = 0.0\n";
    let a = mcnls("classify", cfg, dir.path(), &[]);
    let b = mcnls("classify", cfg, dir.path(), &["--seed", "5"]);
    assert_ne!(report_value(&a.stdout, "provenance"), report_value(&b.stdout, "provenance"));
}

#[test]
fn short_sweep_writes_deterministic_table() {
    let cfg = r#"
[grid]
half_width = 16.0
points = 1024

[potential]
wells = [{ center = [0.0], p = 4.0, lambda = 1.0 }]

[sweep]
gaps = [1e-1, 5e-2]
"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    mcnls("sweep", cfg, a.path(), &[]);
    mcnls("sweep", cfg, b.path(), &[]);
    let x = fs::read_to_string(a.path().join("out/sweep.csv")).unwrap();
    let y = fs::read_to_string(b.path().join("out/sweep.csv")).unwrap();
    assert_eq!(x, y);
    let mut lines = x.lines();
    assert!(lines.next().unwrap().starts_with("# mcnls "));
    assert!(lines.next().unwrap().starts_with("delta,energy,kinetic,ratio_E,ratio_kin,z_hat,dist_L2,dist_H1,mass_in_ball,status"));
    assert_eq!(lines.count(), 2);
}
