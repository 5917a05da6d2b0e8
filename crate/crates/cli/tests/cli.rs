use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn insider(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_insider"))
        .args(args)
        .env_remove("INSIDER_SEED")
        .env_remove("INSIDER_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn expect_at_baseline_passes() {
    let out = insider(&["expect"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("# insider expect"));
    assert!(csv.contains("rho,mu,sigma,T,M,E_I,E_HS,E_AK,E_RV,method"));
    assert!(csv.contains("closed-form"));
    assert!(csv.contains("quadrature"));
}

#[test]
fn same_seed_gives_byte_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (target, workers) in [(&a, "1"), (&b, "2")] {
        let out = insider(&[
            "jump",
            "--paths",
            "2000",
            "--steps",
            "128",
            "--seed",
            "7",
            "--workers",
            workers,
            "--csv",
            target.to_str().unwrap(),
        ]);
        assert!(code(&out) <= 1, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    // the echoed configuration differs only in worker count and destination
    let strip = |bytes: &[u8]| {
        String::from_utf8(bytes.to_vec())
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# workers") && !l.starts_with("# csv"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let run = || {
        insider(&[
            "converge",
            "--paths",
            "50",
            "--steps-list",
            "64,128,256",
            "--seed",
            "3",
        ])
        .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn drift_not_above_rate_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "[market]\nwealth = 1.0\nrate = 0.05\ndrift = 0.05\nvolatility = 0.2\nhorizon = 1.0\n",
    );
    let out = insider(&["expect", "-c", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu > rho"));
    assert_eq!(code(&insider(&["expect", "--drift", "0.01"])), 2);
}

#[test]
fn short_steps_list_is_a_usage_error() {
    assert_eq!(code(&insider(&["converge", "--steps-list", "256,1024"])), 2);
}

#[test]
fn skorokhod_scheme_with_indicator_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "indicator.toml",
        "[strategy]\nkind = \"full-information\"\n\n[run]\ninterpretations = [\"skorokhod\"]\npaths = 10\nsteps_list = [64, 128, 256]\n",
    );
    let out = insider(&["converge", "-c", &cfg]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn jump_probe_needs_enough_paths() {
    assert_eq!(code(&insider(&["jump", "--paths", "999"])), 2);
    let out = insider(&["jump", "--paths", "5000", "--steps", "128"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_input_is_a_usage_error() {
    assert_eq!(code(&insider(&["expect", "--no-such-flag"])), 2);
    assert_eq!(
        code(&insider(&["conjecture", "--steps-list", "256,abc"])),
        2
    );
    assert_eq!(code(&insider(&["conjecture", "--steps-list", "256"])), 2);
    assert_eq!(
        code(&insider(&["expect", "-c", "/nonexistent/config.toml"])),
        2
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", "[market]\nwealthh = 1.0\n");
    assert_eq!(code(&insider(&["expect", "-c", &cfg])), 2);
}

#[test]
fn debt_regime_is_flagged() {
    let out = insider(&[
        "expect",
        "--rate",
        "0.04",
        "--drift",
        "0.05",
        "--volatility",
        "2.5",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("debt"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("-0.58315"));
}

#[test]
fn every_subcommand_documents_its_flags() {
    for (cmd, flags) in [
        ("expect", &["--monte-carlo", "--paths", "--steps"][..]),
        ("converge", &["--interp", "--steps-list", "--paths"]),
        ("jump", &["--paths", "--steps"]),
        ("conjecture", &["--steps-list", "--affine-control"]),
        ("ordering-sweep", &["--sets"]),
    ] {
        let out = insider(&[cmd, "--help"]);
        assert_eq!(code(&out), 0);
        let help = String::from_utf8(out.stdout).unwrap();
        for flag in flags.iter().chain(&[
            "--config",
            "--seed",
            "--workers",
            "--csv",
            "--json",
            "--wealth",
        ]) {
            assert!(help.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
}

#[test]
fn flag_overrides_environment_seed() {
    let run = |env_seed: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_insider"));
        cmd.args(["jump", "--paths", "1000", "--steps", "64"])
            .env_remove("INSIDER_WORKERS");
        match env_seed {
            Some(s) => cmd.env("INSIDER_SEED", s),
            None => cmd.env_remove("INSIDER_SEED"),
        };
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        cmd.output().unwrap().stdout
    };
    let from_env = run(Some("11"), None);
    assert_eq!(from_env, run(None, Some("11")));
    assert_eq!(run(Some("99"), Some("11")), from_env);
    assert_ne!(run(Some("99"), None), from_env);
}

#[test]
fn ordering_sweep_and_conjecture_complete() {
    let out = insider(&["ordering-sweep", "--sets", "50"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count(),
        51
    );
    let out = insider(&["conjecture", "--paths", "200", "--steps-list", "64,256"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("affine-control"));
}

#[test]
fn json_summary_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("out.json");
    let out = insider(&["expect", "--json", json.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let value: serde_json::Value = serde_json::from_slice(&fs::read(json).unwrap()).unwrap();
    assert!(value.is_object() || value.is_array());
}
