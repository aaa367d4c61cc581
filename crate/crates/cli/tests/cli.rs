use std::fs;
use std::path::{Path, PathBuf};

use assert_cmd::Command;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn study(kind: &str, config: &Path, out: &Path, extra: &[&str]) -> assert_cmd::assert::Assert {
    Command::cargo_bin("qispline")
        .unwrap()
        .args(["study", kind, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .assert()
}

#[test]
fn p_study_passes_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    study("p", &configs().join("p_study.toml"), &out, &[]).code(0);
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("degree,dim,error,ratio"));
    assert_eq!(lines.count(), 7);
    assert!(!csv.contains('\r'));
}

#[test]
fn mesh_and_dim_reports_pass_on_shipped_configs() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in ["thb_mesh.toml", "lr_strip.toml"] {
        let out = dir.path().join("mesh.csv");
        study("mesh", &configs().join(cfg), &out, &[]).code(0);
        assert!(fs::read_to_string(&out).unwrap().starts_with("quantity,p,gamma,value,bound,pass\n"));
        study("dim", &configs().join(cfg), &out, &[]).code(0);
        assert!(fs::read_to_string(&out).unwrap().starts_with("quantity,value,bound,pass\n"));
    }
}

#[test]
fn failed_expectation_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    fs::write(
        &cfg,
        "[space]\nkind = \"tps\"\ndegree = [1, 1]\nelements = [4, 4]\n\n[study]\np = \"inf\"\nlevels = 3\n\n[study.expect]\norder = [5.0, 6.0]\n",
    )
    .unwrap();
    let out = dir.path().join("h.csv");
    study("h", &cfg, &out, &[]).code(2).stdout(predicates::str::contains("FAIL fitted_order"));
    assert!(fs::read_to_string(&out).unwrap().starts_with("level,elements,dofs,h_max,error,order,rhs,effectivity\n"));
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    study("h", &dir.path().join("missing.toml"), &out, &[]).code(1);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[space]\nkind = \"tps\"\ndegree = [2]\nelements = [4]\n\n[study]\nfunction = \"nope\"\n").unwrap();
    study("h", &bad, &out, &[]).code(1);
    fs::write(&bad, "[space]\nkind = \"tps\"\ndegree = [2]\nelements = [4]\n\n[study]\ndegrees = [2, 11]\n").unwrap();
    study("p", &bad, &out, &[]).code(1);
}

#[test]
fn unknown_subcommand_is_rejected() {
    Command::cargo_bin("qispline").unwrap().args(["study", "q"]).assert().failure();
}

#[test]
fn csv_identical_across_thread_counts_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.toml");
    fs::write(
        &cfg,
        "[space]\nkind = \"thb\"\ndegree = [2, 2]\nelements = [2, 2]\n[[space.levels]]\ncells = [{ lo = [0, 0], hi = [2, 2] }]\n\n[study]\nfunction = \"runge\"\np = 2\nq = 2\nlevels = 3\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (threads, seed) in [("1", "7"), ("1", "7"), ("4", "7"), ("3", "11")] {
        let out = dir.path().join(format!("h_{threads}_{seed}.csv"));
        study("h", &cfg, &out, &["--threads", threads, "--seed", seed]).code(0);
        outputs.push(fs::read(&out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}
