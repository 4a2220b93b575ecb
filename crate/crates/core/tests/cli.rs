use std::process::{Command, Output};

fn gwlimits(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwlimits")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_supercritical_and_boettcher() {
    let o = gwlimits(&["classify", "--law", "1:0.5,2:0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("field,value\n"));
    let alpha: f64 = text.lines().find_map(|l| l.strip_prefix("alpha,")).unwrap().parse().unwrap();
    assert!((alpha - 0.5f64.ln() / (1.0 / 1.5f64).ln()).abs() < 1e-12);
    assert!(text.contains("regime,SchroederSuper"));

    let o = gwlimits(&["classify", "--law", "2:0.5,3:0.5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["regime"], "Boettcher");
    assert!((v["beta"].as_f64().unwrap() - 2f64.ln() / 2.5f64.ln()).abs() < 1e-12);
}

#[test]
fn invalid_law_exits_2() {
    assert_eq!(gwlimits(&["classify", "--law", "0:1"]).status.code(), Some(2));
    assert_eq!(gwlimits(&["classify", "--law", "1:0.5,2:0.6"]).status.code(), Some(2));
    assert_eq!(gwlimits(&["pmf", "--law", "1:0.5,2:0.5"]).status.code(), Some(2));
}

#[test]
fn pmf_both_methods_agree() {
    let o = gwlimits(&["pmf", "--law", "1:0.5,2:0.5", "--n", "2", "--cap", "8", "--method", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,compose,dft,abs_diff"));
    let want = [0.0, 0.25, 0.375, 0.25, 0.125, 0.0, 0.0, 0.0, 0.0];
    for (line, w) in lines.zip(want) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - w).abs() < 1e-15);
        assert!((f[2] - w).abs() < 1e-12);
        assert!(f[3] < 1e-12);
    }
}

#[test]
fn rate_at_the_mean_is_zero() {
    let o = gwlimits(&[
        "rate", "--law", "1:0.5,2:0.5", "--kind", "offspring", "--k", "0", "--growth", "linear", "--b", "0",
        "--x-range", "1.5:1.5:1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "x,inner_rate,total_rate\n1.5,0,0\n");
}

#[test]
fn simulate_is_reproducible_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for (i, workers) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("mc{i}.json"));
        let o = gwlimits(&[
            "simulate", "--law", "1:0.5,2:0.5", "--task", "rn-tail", "--n", "8", "--reps", "20000", "--seed", "42",
            "--workers", workers, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        bodies.push(std::fs::read(&out).unwrap());
        let manifest: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join(format!("mc{i}.json.manifest.json"))).unwrap())
                .unwrap();
        assert_eq!(manifest["seeds"][0], 42);
        assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
    }
    assert_eq!(bodies[0], bodies[1]);
    let v: serde_json::Value = serde_json::from_slice(&bodies[0]).unwrap();
    assert!(v["result"]["estimate"].as_f64().unwrap() > 0.0);
    assert!(v["config"].get("workers").is_none());
}

#[test]
fn seed_from_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_gwlimits"))
            .args(["simulate", "--law", "1:0.5,2:0.5", "--n", "6", "--reps", "2000"])
            .env("GW_LIMITS_SEED", seed)
            .output()
            .unwrap()
    };
    let a = run("5");
    assert_eq!(a.stdout, run("5").stdout);
    assert_ne!(a.stdout, run("6").stdout);
    assert_eq!(run("x").status.code(), Some(2));
}

#[test]
fn failed_module_call_exits_3_and_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cond.json");
    let o = gwlimits(&[
        "simulate", "--law", "1:0.5,2:0.5", "--task", "cond-ldp", "--n", "4", "--k", "1", "--v", "1000", "--reps",
        "100", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn verify_only_filters() {
    let o = gwlimits(&["verify", "--only", "scalars,pmf-hand"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
    assert_eq!(gwlimits(&["verify", "--only", "nope"]).status.code(), Some(2));
}

#[test]
fn injected_fault_fails_locallimit() {
    let o = gwlimits(&["verify", "--only", "locallimit", "--inject-fault", "an-scale"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.starts_with("FAIL locallimit"), "{text}");
    assert_eq!(gwlimits(&["verify", "--only", "locallimit"]).status.code(), Some(0));
}
