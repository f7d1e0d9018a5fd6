//! End-to-end tests of the command-line interface: exit codes, output file
//! contracts, and flag/config-file equivalence.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nshr"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nshr-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

const HEADER: &str = "t,obj_gap,env_gap,grad_norm,x_norm,x1,x2,t_xdot_norm,rel_obj,rel_grad,lyapunov";

#[test]
fn validate_satisfied_exits_zero() {
    let out = bin()
        .args(["validate", "--assumption", "B", "--alpha", "4", "--p", "0.5", "--c", "0.01"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("assumption=B"));
    assert!(stdout.contains("satisfied=true"));
    assert!(stdout.contains("zeta=0.5"));
}

#[test]
fn validate_unsatisfied_exits_three() {
    let out = bin()
        .args(["validate", "--assumption", "B", "--alpha", "4", "--p", "1.5", "--c", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("satisfied=false"));
}

#[test]
fn usage_errors_exit_two() {
    let out = bin().args(["simulate", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = bin().args(["bench", "--plan", "no_such_plan"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_with_unknown_key_exits_two() {
    let dir = tmpdir("badcfg");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "alhpa=4\n").unwrap();
    let out = bin()
        .args(["validate", "--assumption", "B"])
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alhpa"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bench_vary_beta_writes_four_csvs_and_metadata() {
    let dir = tmpdir("bench");
    let out = bin()
        .args(["bench", "--plan", "vary_beta", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let mut csvs: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    csvs.sort();
    assert_eq!(csvs.len(), 4);
    for csv in &csvs {
        let lines = csv_lines(csv);
        assert_eq!(lines[0], HEADER);
        assert_eq!(lines.len(), 601, "{}", csv.display());
    }
    let meta = std::fs::read_to_string(dir.join("vary_beta_metadata.txt")).unwrap();
    assert!(meta.contains("plan=vary_beta"));
    assert!(meta.contains("samples=600"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_flags_and_config_file_are_equivalent() {
    let dir_a = tmpdir("sim-flags");
    let dir_b = tmpdir("sim-config");
    let args = [
        ("alpha", "4.5"),
        ("beta", "0.5"),
        ("p", "0.4"),
        ("c", "0.02"),
        ("t-end", "10"),
        ("samples", "120"),
        ("x0", "3,-2"),
    ];
    let mut flag_cmd = bin();
    flag_cmd.arg("simulate");
    for (k, v) in args {
        flag_cmd.arg(format!("--{k}")).arg(v);
    }
    let out = flag_cmd.arg("--out").arg(&dir_a).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // Same run via a config file, with deliberately different flag values on
    // the command line: the config file wins.
    let cfg = dir_b.join("run.cfg");
    let mut text = String::from("# equivalence check\n");
    for (k, v) in args {
        text.push_str(&format!("{k}={v}\n"));
    }
    std::fs::write(&cfg, text).unwrap();
    let out = bin()
        .args(["simulate", "--alpha", "9", "--samples", "7", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir_b)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let a = std::fs::read(dir_a.join("custom_nshr.csv")).unwrap();
    let b = std::fs::read(dir_b.join("custom_nshr.csv")).unwrap();
    assert_eq!(a, b, "flag-driven and config-driven runs must be byte-identical");
    std::fs::remove_dir_all(&dir_a).ok();
    std::fs::remove_dir_all(&dir_b).ok();
}

#[test]
fn dnshr_subcommand_writes_csv() {
    let dir = tmpdir("dnshr");
    let out = bin()
        .args(["dnshr", "--h", "0.01", "--n", "3000", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let lines = csv_lines(&dir.join("custom_dnshr.csv"));
    assert_eq!(lines[0], HEADER);
    assert!(lines.len() > 10);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_rejects_inconsistent_parameters() {
    // A start time before the schedule's domain is a runtime failure (the
    // parameters parse but the model rejects them): exit 1.
    let out = bin()
        .args(["simulate", "--t0", "0", "--out", "/tmp/nshr-cli-unused"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}
