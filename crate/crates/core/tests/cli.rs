use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ris-pkg");

const STATIC: &str = "# small static run\n[static-kgr-bdr]\nseed = 7\ntrials = 4\nn_bits = 400\nsnr_db = 15, 20\n";

fn run(dir: &Path, config: &str, extra: &[&str], threads: Option<&str>) -> Output {
    let cfg = dir.join("exp.cfg");
    fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(BIN);
    cmd.arg("run").arg(&cfg).args(extra);
    if let Some(t) = threads {
        cmd.env("RIS_PKG_THREADS", t);
    } else {
        cmd.env_remove("RIS_PKG_THREADS");
    }
    cmd.output().unwrap()
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    v.retain(|n| n.ends_with(".csv"));
    v.sort();
    v
}

#[test]
fn writes_named_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(dir.path(), STATIC, &["--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1);
    let text = fs::read_to_string(out.join("static-kgr-bdr_7.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("snr_db,L,kgr_bits_per_s,bdr_with_ris,bdr_without_ris"));
    let kgr: Vec<&str> = lines.take(4).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(kgr, ["250", "166.667", "125", "100"]);
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(dir.path(), STATIC, &["--out", a.to_str().unwrap()], Some("1")).status.code(), Some(0));
    assert_eq!(run(dir.path(), STATIC, &["--out", b.to_str().unwrap()], Some("4")).status.code(), Some(0));
    let name = "static-kgr-bdr_7.csv";
    assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(dir.path(), STATIC, &["--seed", "99", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv_files(&out), ["static-kgr-bdr_99.csv"]);
}

#[test]
fn config_errors_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    for (text, needle) in [
        ("[no-such-scenario]\nseed = 1\ntrials = 1\n", "no-such-scenario"),
        ("[risl]\nseed = 1\ntrials = 2\nseed = 3\n", "line 4"),
        ("[static-kgr-bdr]\nseed = 1\ntrials = 2\nL = banana\n", "L"),
        ("[mi-estimate]\nseed = 1\ntrials = 2\nbogus = 1\n", "bogus"),
        ("[mi-estimate]\ntrials = 2\n", "seed"),
    ] {
        let r = run(dir.path(), text, &["--out", o], None);
        assert_eq!(r.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&r.stderr).contains(needle), "{text}: {}", String::from_utf8_lossy(&r.stderr));
        assert!(csv_files(&out).is_empty());
    }
    let r = run(dir.path(), STATIC, &["--out", o], Some("zero"));
    assert_eq!(r.status.code(), Some(2));
    let missing = Command::new(BIN).args(["run", "/nonexistent/exp.cfg"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("taken");
    fs::write(&blocker, "not a directory").unwrap();
    let r = run(dir.path(), STATIC, &["--out", blocker.join("sub").to_str().unwrap()], None);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn selftest_passes() {
    let o = Command::new(BIN).arg("selftest").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 failed"));
}
