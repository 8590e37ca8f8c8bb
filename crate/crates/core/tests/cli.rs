use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
env = "gridworld-goal"
n_init = 300
n_per_iter = 100
budget = 500
buffer_capacity = 250
npg_steps = 2
policy_hidden = [8]
value_hidden = [8]

[npg]
n_traj = 8
fisher_states = 50

[model]
hidden = [8]

[model.train]
max_steps = 20
min_steps = 5

[eval]
episodes = 5
"#;

fn mbrl(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbrl"))
        .args(args)
        .env("MBRL_OUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn tiny_config(dir: &Path) -> String {
    let p = dir.join("tiny.toml");
    std::fs::write(&p, TINY).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn train_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    for out in ["a", "b"] {
        let out = dir.path().join(out);
        let o = mbrl(dir.path(), &["train", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let run = "pal-gridworld-goal-seed3";
    let a = std::fs::read(dir.path().join("a").join(run).join("log.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b").join(run).join("log.csv")).unwrap();
    assert_eq!(a, b);
    for f in ["policy.ckpt", "ensemble.ckpt", "manifest.json", "summary.json"] {
        assert!(dir.path().join("a").join(run).join(f).exists(), "{f} missing");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let o = mbrl(dir.path(), &["train", "--config", &cfg, "--solver", "nope"]);
    assert_eq!(code(&o), 2);
    let o = mbrl(dir.path(), &["verify", "all", "--trials", "0"]);
    assert_eq!(code(&o), 2);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "env = \"gridworld-goal\"\nbudget = 10\nn_init = 300\n").unwrap();
    let o = mbrl(dir.path(), &["train", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = mbrl(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_passes_and_corrupted_bound_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbrl(dir.path(), &["verify", "all", "--trials", "40", "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("verify-seed4").join("sweep.csv").exists());

    let bad = dir.path().join("bad");
    let o = mbrl(dir.path(), &["verify", "all", "--trials", "40", "--seed", "4", "--corrupt-bound-scale", "0.01", "--out", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let v = std::fs::read_to_string(bad.join("verify-seed4").join("violation.json")).unwrap();
    assert!(v.contains("instance"), "{v}");
}

#[test]
fn diagnose_exact_model_and_horizon_clamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let o = mbrl(dir.path(), &["train", "--config", &cfg, "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ckpt = dir.path().join("pal-gridworld-goal-seed1");
    let ck = ckpt.to_str().unwrap();

    let o = mbrl(dir.path(), &["diagnose", ck, "--exact-model", "-t", "10", "-n", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(ckpt.join("profile.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 11);
    for row in rows {
        let cols: Vec<f64> = row.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert!(cols.iter().all(|c| *c == 0.0), "{row}");
    }

    let clamped = dir.path().join("clamped.csv");
    let o = mbrl(dir.path(), &["diagnose", ck, "-t", "500", "-n", "2", "--out", clamped.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("clamped"));

    // no checkpoint there
    let o = mbrl(dir.path(), &["diagnose", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
