use std::path::PathBuf;
use std::process::{Command, Output};

fn tmpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmpc")).args(args).env_remove("TMPC_SEED").env_remove("TMPC_CONFIG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn dataset() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-subset").display().to_string()
}

#[test]
fn verify_dist_small_prime() {
    let o = tmpc(&["verify", "dist", "--p", "31"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("report format=tmpc/1"));
    assert!(text.lines().any(|l| l.starts_with("summary") && l.contains("mismatches=0")), "{text}");
}

#[test]
fn bad_configuration_exits_2() {
    assert_eq!(tmpc(&["bench", "div", "--prime", "12"]).status.code(), Some(2));
    assert_eq!(tmpc(&["no-such-command"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "colour = 3\n").unwrap();
    let o = tmpc(&["--config", cfg.to_str().unwrap(), "verify", "dist"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("tmpc: "));
}

#[test]
fn reconstruct_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a").display().to_string();
    let b = dir.path().join("b").display().to_string();
    assert_eq!(tmpc(&["share", "--values", "1,2,3", "--out", &a]).status.code(), Some(0));
    assert_eq!(tmpc(&["--seed", "9", "share", "--values", "1,2,3", "--out", &b]).status.code(), Some(0));
    let ok = tmpc(&["reconstruct", &format!("{a}-P1.tmpc"), &format!("{a}-P2.tmpc"), &format!("{a}-P3.tmpc")]);
    assert_eq!(ok.status.code(), Some(0));
    let ints: Vec<String> =
        stdout(&ok).lines().filter(|l| l.starts_with("value")).map(|l| l.split("int=").nth(1).unwrap().split(' ').next().unwrap().to_string()).collect();
    assert_eq!(ints, ["1", "2", "3"]);
    let mixed = tmpc(&["reconstruct", &format!("{a}-P1.tmpc"), &format!("{b}-P2.tmpc"), &format!("{a}-P3.tmpc")]);
    assert_eq!(mixed.status.code(), Some(4), "{}", String::from_utf8_lossy(&mixed.stderr));
}

#[test]
fn cleartext_training_runs() {
    let o = tmpc(&["train", "--mode", "cleartext-ref", "--dataset", &dataset(), "--train-limit", "512", "--test-limit", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("summary") && l.contains("test_acc=")), "{text}");
}

#[test]
fn env_vars_mirror_flags() {
    let o = Command::new(env!("CARGO_BIN_EXE_tmpc")).args(["bench", "elem", "--fn", "inv", "--n", "50"]).env("TMPC_PRIME", "12").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
