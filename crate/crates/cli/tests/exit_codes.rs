use std::path::Path;
use std::process::Command;

fn bkdv(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bkdv"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

const SMALL: &str = r#"
[nonlinearity]
power = 2

[grid]
length = 80.0
points = 512

[solver]
dt = 2e-3
t_end = 2.0
output_stride = 250

[bottom]
family = "zero"

[modulation]
alpha = 0.1

[initial]
c0 = 1.0
a0 = -10.0
perturbation = 1e-3

[tolerances]
param_abs = 1e-3
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn compare_passes_then_fails_on_a_tight_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = write(tmp.path(), "ok.toml", SMALL);
    let out = tmp.path().join("run");
    let (code, stdout) = bkdv(&[
        "compare",
        "--config",
        &ok,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert!(out.join("modulation.csv").exists());
    let tight = write(
        tmp.path(),
        "tight.toml",
        &SMALL.replace("param_abs = 1e-3", "param_abs = 1e-3\nxi_k = 1e-6"),
    );
    let (code, stdout) = bkdv(&["compare", "--config", &tight]);
    assert_eq!(code, 1, "{stdout}");
    assert!(stdout.contains("FAIL sup xi H1"));
}

#[test]
fn runtime_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent.toml");
    assert_eq!(bkdv(&["compare", "--config", missing.to_str().unwrap()]).0, 2);
    let bad = write(
        tmp.path(),
        "bad.toml",
        &format!("{SMALL}\n[window]\nc3 = 1.0\nextra = 2\n"),
    );
    assert_eq!(bkdv(&["compare", "--config", &bad]).0, 2);
    let ok = write(tmp.path(), "ok.toml", SMALL);
    assert_eq!(bkdv(&["sweep", "--config", &ok]).0, 2);
}

#[test]
fn sweep_records_every_value() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = write(tmp.path(), "ok.toml", SMALL);
    let out = tmp.path().join("sweep");
    let (code, stdout) = bkdv(&[
        "sweep",
        "--config",
        &ok,
        "--axis",
        "alpha",
        "--values",
        "0.1,0.2",
        "--threads",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(out.join("run001").join("summary.json").exists());
}

#[test]
fn profile_dump_writes_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = write(tmp.path(), "ok.toml", SMALL);
    let (code, _) = bkdv(&[
        "profile-dump",
        "--config",
        &ok,
        "--c",
        "1.5",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(tmp.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("x,Q,zeta_tr,zeta_n,d2Q_dc2\n"));
    assert_eq!(csv.lines().count(), 513);
}
