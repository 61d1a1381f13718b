use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn dualmass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualmass")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn ground_state_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = config("reference.json");
    let o = dualmass(&["--config", cfg.to_str().unwrap(), "--out", out, "ground-state", "--lambda", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,v,dv"));
    let side = read_json(&dir.path().join("profile.json"));
    for key in ["lambda", "v0", "mass_dual", "mass_v", "grad_sq", "energy", "pohozaev_residual"] {
        assert!(side[key].is_number(), "missing {key}");
    }
    assert!(side["tail"]["A"].is_number() && side["tail"]["kappa"].is_number());
    assert!(side["pohozaev_residual"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&dualmass(&["ground-state", "--lambda", "0"])), 64);
    assert_eq!(code(&dualmass(&["normalize", "--c", "-3"])), 64);
    assert_eq!(code(&dualmass(&["no-such-command"])), 64);
    assert_eq!(code(&dualmass(&["--config", "/nonexistent.json", "classify"])), 64);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(config("reference.json")).unwrap().replacen('{', "{\"extra\": 1,", 1);
    std::fs::write(&bad, text).unwrap();
    assert_eq!(code(&dualmass(&["--config", bad.to_str().unwrap(), "classify"])), 64);
    assert_eq!(code(&dualmass(&["--help"])), 0);
}

#[test]
fn identity_cubic_matches_pinned_v0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("identity_cubic.json");
    let o = dualmass(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "ground-state", "--lambda", "1"]);
    assert_eq!(code(&o), 0);
    let v0 = read_json(&dir.path().join("profile.json"))["v0"].as_f64().unwrap();
    // scipy DOP853 at rtol 1e-13
    assert!((v0 / 4.337_387_679_977_0 - 1.0).abs() < 1e-9, "v0 = {v0}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cfg = config("case_vi.json");
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let o = dualmass(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--threads", threads, "branch"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        files.push((
            std::fs::read(dir.path().join("branch.csv")).unwrap(),
            std::fs::read(dir.path().join("mass_map.json")).unwrap(),
        ));
    }
    assert!(files[0] == files[1]);
}

#[test]
fn normalize_case_i_finds_a_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("case_i.json");
    let o = dualmass(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "normalize", "--c", "1.0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let roots = read_json(&dir.path().join("roots.json"));
    let roots = roots.as_array().unwrap();
    assert!(!roots.is_empty());
    for r in roots {
        assert_eq!(r["c"].as_f64(), Some(1.0));
        assert!(dir.path().join(r["profile"].as_str().unwrap()).exists());
    }
}

#[test]
fn normalize_huge_mass_in_mixed_case_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("case_iv_1.json");
    let o = dualmass(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "normalize", "--c", "1e9"]);
    assert_eq!(code(&o), 3);
    let payload = read_json(&dir.path().join("no_root.json"));
    assert_eq!(payload["verdict"], "nonexistence expected");
    assert_eq!(payload["case"], "iv_1");
}

#[test]
fn classify_and_asymptotics_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&dualmass(&["--out", out, "classify"])), 0);
    assert_eq!(read_json(&dir.path().join("classification.json"))["case"], "iv_1");
    assert_eq!(code(&dualmass(&["--out", out, "asymptotics", "--regime", "small"])), 0);
    let csv = std::fs::read_to_string(dir.path().join("asymptotics_small_lambda.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("lambda,sup_diff,l2_diff,sup_ratio,mass_ratio,regime"));
    assert!(read_json(&dir.path().join("supnorm_band_small_lambda.json"))["passed"].as_bool().unwrap());
}

#[test]
fn verify_all_passes_on_shipped_configs() {
    for name in ["reference.json", "case_i.json", "case_ii.json", "case_iv_1.json", "case_vi.json", "identity_cubic.json"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(name);
        let o = dualmass(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "verify", "--suite", "all"]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stdout));
        let verdict = read_json(&dir.path().join("verdict.json"));
        let checks = verdict["checks"].as_array().unwrap();
        assert_eq!(checks.len(), 25);
        assert!(checks.iter().all(|c| c["status"] == "pass"));
    }
}
