use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("schwiso_cli_{tag}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schwiso"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &PathBuf, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn equilibria_prints_both_branches_and_writes_json() {
    let dir = workdir("equilibria");
    let cfg = write_config(
        &dir,
        &format!(r#"{{"output_dir": "{}"}}"#, dir.join("out").display()),
    );
    let out = run(&["--config", &cfg, "equilibria", "--c-ang", "3.0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.matches("R = ").count(), 2);
    assert!(stdout.contains("Unstable") && stdout.contains("Stable"));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/equilibria.json")).unwrap())
            .unwrap();
    assert_eq!(json["equilibria"].as_array().unwrap().len(), 2);
}

#[test]
fn em_diagram_reruns_byte_identical() {
    let dir = workdir("em");
    let mut files = Vec::new();
    for sub in ["a", "b"] {
        let cfg = write_config(
            &dir,
            &format!(r#"{{"output_dir": "{}"}}"#, dir.join(sub).display()),
        );
        let out = run(&[
            "--config",
            &cfg,
            "em-diagram",
            "--r-min",
            "0.5",
            "--r-max",
            "5.0",
            "--n",
            "300",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(fs::read(dir.join(sub).join("em_diagram.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.pop().unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("R,C,h,branch"));
    assert_eq!(lines.count(), 300);
}

#[test]
fn planar_and_simulate_artifacts_land_in_the_output_dir() {
    let dir = workdir("planar");
    let cfg = write_config(
        &dir,
        &format!(r#"{{"output_dir": "{}"}}"#, dir.join("out").display()),
    );
    let out = run(&[
        "--config",
        &cfg,
        "planar",
        "--c-ang",
        "3.0",
        "--h-list",
        "-0.5,-0.74",
        "--n",
        "64",
        "--svg",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("out/planar.csv").is_file());
    assert!(dir.join("out/planar.svg").is_file());

    let out = run(&[
        "--config",
        &cfg,
        "simulate",
        "--chart",
        "planar",
        "--c-ang",
        "2.0",
        "--state",
        "1.0,-0.5",
        "--span",
        "2.0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("out/simulate.csv").is_file());
}

#[test]
fn classify_reads_a_jobs_file() {
    let dir = workdir("classify");
    let cfg = write_config(
        &dir,
        &format!(r#"{{"output_dir": "{}"}}"#, dir.join("out").display()),
    );
    // Planar infall released from rest at the turning point of h = -1.
    let jobs = dir.join("jobs.json");
    fs::write(
        &jobs,
        r#"[{"C": 2.1723451177837885, "h": -1.0,
            "state0": {"r": 2.8569050956747155, "v": 0.0, "theta": 0.0, "w": 0.0}}]"#,
    )
    .unwrap();
    let out = run(&["--config", &cfg, "classify", "--jobs", jobs.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("out/fates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.contains("triple_collision_Qstar"), "{csv}");
    assert!(dir.join("out/fates.json").is_file());
}

#[test]
fn bad_inputs_exit_with_code_two() {
    let dir = workdir("bad");

    // Unknown configuration key.
    let cfg = write_config(&dir, r#"{"output_dir": "out", "bogus": 1}"#);
    let out = run(&["--config", &cfg, "equilibria"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown field `bogus`"), "{err}");

    // Invalid model parameters.
    let cfg = write_config(&dir, r#"{"params": {"M": -1.0}}"#);
    let out = run(&["--config", &cfg, "equilibria"]);
    assert_eq!(out.status.code(), Some(2));

    // Nonexistent saddle name.
    let cfg = write_config(
        &dir,
        &format!(r#"{{"output_dir": "{}"}}"#, dir.join("out").display()),
    );
    let out = run(&["--config", &cfg, "trace", "--name", "Qstar"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("no saddle named"), "{err}");

    // State length mismatch.
    let out = run(&[
        "--config",
        &cfg,
        "simulate",
        "--chart",
        "planar",
        "--state",
        "1.0",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Missing jobs file.
    let out = run(&["--config", &cfg, "classify", "--jobs", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(2));
}
