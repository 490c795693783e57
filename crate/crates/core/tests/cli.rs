use std::path::Path;
use std::process::{Command, Output};

fn ltsurf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltsurf")).args(args).output().unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn scenarios_lists_registry_with_variants() {
    let out = ltsurf(&["scenarios"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let entries = v.as_array().unwrap();
    assert!(entries.len() >= 7);
    assert!(entries.iter().all(|e| e["variant"].is_string() && e["theorem"].is_string()));
    assert_eq!(entries[0]["name"], "tanaka_bm");
}

#[test]
fn verify_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ltsurf(&[
        "verify", "--scenario", "glued_quadratic_jump", "--dt", "0.01", "--paths", "5", "--seed", "3", "--out", d,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "paths.csv");
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "path_id,lhs,term_martingale,term_generator,term_local_time,term_jumps,rhs,residual"
    );
    assert_eq!(csv.lines().count(), 6);
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["provenance"]["config"]["seed"], 3);
    assert_eq!(summary["n_paths"], 5);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "scenario = \"tanaka_bm\"\ndt = 0.01\npaths = 4\n[params]\nlevel = 0.5\n").unwrap();
    let out = ltsurf(&["verify", "--config", cfg.to_str().unwrap(), "--paths", "2", "--param", "sigma=0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n_paths"], 2);
    assert_eq!(v["provenance"]["resolved_params"]["level"], 0.5);
    assert_eq!(v["provenance"]["resolved_params"]["sigma"], 0.5);
}

#[test]
fn exit_codes() {
    assert_eq!(ltsurf(&["verify", "--scenario", "nope"]).status.code(), Some(2));
    assert_eq!(ltsurf(&["verify", "--scenario", "tanaka_bm", "--dt", "-1"]).status.code(), Some(2));
    assert_eq!(ltsurf(&["verify", "--scenario", "tanaka_bm", "--param", "bogus=1"]).status.code(), Some(2));
    let incompatible = ltsurf(&[
        "verify", "--scenario", "glued_quadratic_jump", "--variant", "ltc_diffusion", "--dt", "0.01",
    ]);
    assert_eq!(incompatible.status.code(), Some(3));
    let blowup = ltsurf(&[
        "verify", "--scenario", "tanaka_bm", "--param", "mu=1e308", "--param", "x0=1e308", "--dt", "0.01",
    ]);
    assert_eq!(blowup.status.code(), Some(4), "{}", String::from_utf8_lossy(&blowup.stderr));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = ltsurf(&[
            "verify", "--scenario", "surfaces_strong", "--dt", "0.001", "--paths", "24", "--seed", "5", "--threads",
            threads, "--out", dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
        (read(dir.path(), "paths.csv"), read(dir.path(), "summary.json"))
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn other_subcommands_run() {
    let sim = ltsurf(&["simulate", "--scenario", "glued_quadratic_jump", "--dt", "0.25", "--paths", "2"]);
    assert!(sim.status.success());
    let text = String::from_utf8(sim.stdout).unwrap();
    assert!(text.starts_with("path_id,k,t,jump,b,y,z,a,x,a_left,x_left"));

    let lt = ltsurf(&["localtime", "--scenario", "tanaka_bm", "--dt", "0.001", "--paths", "50", "--bandwidth", "0.05"]);
    assert!(lt.status.success());
    let v: serde_json::Value = serde_json::from_slice(&lt.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);

    let env = ltsurf(&["envelope", "--scenario", "peskir_diffusion", "--grid", "4", "--m", "1,10"]);
    assert!(env.status.success());
    let v: serde_json::Value = serde_json::from_slice(&env.stdout).unwrap();
    assert_eq!(v["monotone"], true);

    let conv = ltsurf(&["converge", "--scenario", "smooth_quadratic", "--dts", "0.01", "--paths", "5"]);
    assert_eq!(conv.status.code(), Some(2));
}
