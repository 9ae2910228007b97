use std::path::Path;
use std::process::{Command, Output};

fn engel_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_engel-lab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_exit_codes() {
    assert_eq!(code(&engel_lab(&["verify", "--preset", "darboux"])), 0);
    assert_eq!(code(&engel_lab(&["verify", "--preset", "lorentz-magnetic", "--kappa", "-0.5"])), 0);
    let bad = engel_lab(&["verify", "--preset", "integrable-counterexample"]);
    assert_eq!(code(&bad), 1);
    assert!(stderr(&bad).contains("fail"));
}

#[test]
fn verify_emits_versioned_json() {
    let o = engel_lab(&["verify", "--preset", "cartan-r3", "--samples", "50"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "verification");
    assert_eq!(v["result"]["summary"]["pass"], true);
    assert_eq!(v["parameters"]["samples"], 50);
}

#[test]
fn classify_summaries() {
    for (kappa, want) in [("1", "Elliptic"), ("-1", "Parabolic (genuine)")] {
        let o = engel_lab(&["classify", "--preset", "lorentz-magnetic", "--kappa", kappa, "-T", "30"]);
        assert_eq!(code(&o), 0);
        assert!(stderr(&o).contains(want), "kappa {kappa}: {}", stderr(&o));
    }
    let o = engel_lab(&["classify", "--preset", "propellor-cat"]);
    assert!(stderr(&o).contains("Hyperbolic"), "{}", stderr(&o));
}

#[test]
fn orbit_csv_has_monotone_angle() {
    let o = engel_lab(&["orbit", "--preset", "lorentz-product", "--kappa", "-1", "-T", "10", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,u0,u1,u2,u3,m11,m12,m21,m22,angle");
    let angles: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(angles.len(), 1001);
    assert!(angles.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn rigidity_probe_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = engel_lab(&["rigidity", "--trials", "1000", "--seed", "11", "--out", d.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let read = |d: &Path| std::fs::read(d.join("rigidity.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    let v: serde_json::Value = serde_json::from_slice(&read(&a)).unwrap();
    assert_eq!(v["result"]["n_outside"], 0);
    assert_eq!(v["result"]["n_a_minus"], 0);
    assert_eq!(v["result"]["trials"].as_array().unwrap().len(), 1000);
}

#[test]
fn kappa_sweep_follows_sign_law() {
    let o = engel_lab(&["report", "--preset", "kappa-sweep", "--orbits", "2", "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let disc: f64 = r[1].parse().unwrap();
        let want = if disc > 0.0 {
            "Elliptic"
        } else if disc == 0.0 {
            "Parabolic (genuine)"
        } else {
            "Hyperbolic (genuine)"
        };
        assert_eq!(r[3], want);
    }
}

#[test]
fn manifest_drives_run() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("run.toml");
    let out = dir.path().join("out");
    std::fs::write(
        &manifest,
        format!(
            "preset = \"cartan-r3\"\nsamples = 20\nT = 10.0\nout = {:?}\nartifacts = [\"verification\", \"holonomy\"]\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = engel_lab(&["run", "--config", manifest.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("verification.json").exists());
    let h: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("holonomy.json")).unwrap()).unwrap();
    assert_eq!(h["result"]["class"]["class"], "Elliptic");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "preset = [1, 2\n").unwrap();
    let unknown_key = dir.path().join("unknown.toml");
    std::fs::write(&unknown_key, "preset = \"darboux\"\nwidth = 3\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["verify", "--preset", "nope"],
        vec!["verify"],
        vec!["verify", "--preset", "darboux", "--tol", "-1"],
        vec!["orbit", "--preset", "darboux", "--dt", "0"],
        vec!["verify", "--preset", "darboux", "--kappa", "abc"],
        vec!["verify", "--preset", "darboux", "--format", "csv"],
        vec!["run", "--preset", "darboux"],
        vec!["verify", "--config", "/nonexistent/run.toml"],
        vec!["verify", "--config", broken.to_str().unwrap()],
        vec!["verify", "--config", unknown_key.to_str().unwrap()],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = engel_lab(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).contains("panicked"), "{args:?}");
    }
}

#[test]
fn thread_count_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_engel-lab"))
        .args(["verify", "--preset", "darboux", "--samples", "10"])
        .env("ENGEL_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_engel-lab"))
        .args(["verify", "--preset", "darboux"])
        .env("ENGEL_LAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
