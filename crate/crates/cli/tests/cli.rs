use std::process::Command;

fn pilotforge() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pilotforge"))
}

#[test]
fn lists_presets() {
    let out = pilotforge().arg("list-presets").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "fig1\nfig2\nfig3\nfig5\nfig6\n");
}

#[test]
fn bad_arguments_exit_with_usage() {
    for args in [vec!["run"], vec!["run", "--preset", "fig1", "--config", "x"], vec!["frobnicate"], vec!["run", "--preset", "fig1", "--trials", "many"]] {
        let out = pilotforge().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("--help"), "{args:?}");
    }
}

#[test]
fn runtime_failures_exit_one() {
    let out = pilotforge().args(["run", "--preset", "fig9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
    let out = pilotforge().args(["run", "--config", "/nonexistent/scenario.cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let status = pilotforge()
            .env("PILOTFORGE_THREADS", threads)
            .args(["run", "--preset", "fig2", "--trials", "12", "--seed", "5", "--out"])
            .arg(path)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("scenario,method,tau,nrf,trials,seed,"));
    assert_eq!(text.lines().count(), 1 + 9 * 3);

    let stdout = pilotforge()
        .args(["run", "--preset", "fig2", "--trials", "12", "--seed", "5"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(stdout.stdout).unwrap(), text);
}

#[test]
fn config_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(
        &cfg,
        "name = small\ncells = 2\nusers = 2\nantennas = 4\nrf_chains = 2\nprofile = identity-rx\n\
         combiners = fd, magiq\npilots = eigen, random\nsweep = tau\nvalues = 2, 4\ntrials = 4\nseed = 3\n",
    )
    .unwrap();
    let out = pilotforge().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 4);
    assert!(text.lines().skip(1).all(|l| l.starts_with("small,")));
    assert!(text.contains("eigen/magiq"));
}

#[test]
fn selftest_passes() {
    let out = pilotforge().arg("selftest").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
