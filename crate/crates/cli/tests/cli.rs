use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn benchmark() -> Scenario {
    Scenario(std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/benchmark.scenario")).unwrap())
}

/// Scenario text edited by substitution, so tests stay close to the bundled file.
struct Scenario(String);

impl Scenario {
    fn replace(self, from: &str, to: &str) -> Scenario {
        assert!(self.0.contains(from), "pattern `{from}` not in scenario");
        Scenario(self.0.replacen(from, to, 1))
    }
}

/// Bundled scenario with fixed gains, so short horizons skip escalation.
fn fixed_gains() -> Scenario {
    benchmark()
        .replace(r#""gamma1": 1.0"#, r#""gamma1": 4.0"#)
        .replace(
            r#"{ "k": "auto", "escalation": { "factor": 2.0, "max_rounds": 12 } }"#,
            r#"{ "k": [[16.0, 16.0], [16.0, 16.0], [16.0, 16.0], [16.0, 16.0]] }"#,
        )
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path) -> Output {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--config", config.to_str().unwrap()]);
    Command::new(env!("CARGO_BIN_EXE_nashtrack")).args(&full).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn disconnected_graph_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let sc = benchmark().replace("[[1, 2, 1.0], [2, 3, 1.0], [3, 4, 1.0], [4, 1, 1.0]]", "[[1, 2, 1.0], [3, 4, 1.0]]");
    let out = run(&["solve-ne"], &write(&dir, "s.json", &sc.0));
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("disconnected"), "{}", text(&out.stderr));
}

#[test]
fn unstable_zero_dynamics_rejected() {
    let dir = TempDir::new().unwrap();
    let sc = benchmark().replace("[-1.0, 1.0, 0.5, 1.5, 0.2, -0.3]", "[0.5, 1.0, 0.5, 1.5, 0.2, -0.3]");
    let out = run(&["synthesize"], &write(&dir, "s.json", &sc.0));
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("g1 < 0"), "{}", text(&out.stderr));
}

#[test]
fn non_imaginary_spectrum_rejected() {
    let dir = TempDir::new().unwrap();
    let sc = benchmark().replace(
        r#"{ "preset": "benchmark" }"#,
        r#"{ "preset": "benchmark", "coeffs": [[1.0, 0.0, 0.0], [0.0, -4.0, 0.0, -5.0, 0.0]] }"#,
    );
    let out = run(&["synthesize"], &write(&dir, "s.json", &sc.0));
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).to_lowercase().contains("spectrum"), "{}", text(&out.stderr));
}

#[test]
fn wrong_internal_model_fails_checks() {
    let dir = TempDir::new().unwrap();
    let sc = benchmark().replace(
        r#"{ "preset": "benchmark" }"#,
        r#"{ "preset": "benchmark", "coeffs": [[0.0, -4.0, 0.0], [0.0, -4.0, 0.0, -5.0, 0.0]] }"#,
    );
    let out = run(&["check", "--t-final", "5"], &write(&dir, "s.json", &sc.0));
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("FAIL"));
}

#[test]
fn small_gamma2_only_warns() {
    let dir = TempDir::new().unwrap();
    let sc = benchmark().replace(r#""gamma2": "auto""#, r#""gamma2": 1.0"#);
    let out = run(&["solve-ne"], &write(&dir, "s.json", &sc.0));
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stderr).contains("warning"), "{}", text(&out.stderr));
}

#[test]
fn decoupled_equilibrium() {
    let dir = TempDir::new().unwrap();
    let sc = benchmark()
        .replace("[2.0, 4.0, -2.0, 1.0]", "[1.0, 1.0, 1.0, 1.0]")
        .replace("[2.0, 2.0, 2.0, 2.0]", "[0.0, 0.0, 0.0, 0.0]")
        .replace("[0.5, -0.5, 0.2, 0.0]", "[0.0, 0.0, 0.0, 0.0]");
    let out = run(&["solve-ne"], &write(&dir, "s.json", &sc.0));
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("p_star = [1.0, 1.0, 1.0, 1.0]"), "{}", text(&out.stdout));
}

#[test]
fn normalized_dump_round_trips() {
    let dir = TempDir::new().unwrap();
    let original = write(&dir, "s.json", &benchmark().0);
    let first = run(&["solve-ne", "--dump-normalized"], &original);
    assert!(first.status.success());
    let again = write(&dir, "n.json", &text(&first.stdout));
    let second = run(&["solve-ne", "--dump-normalized"], &again);
    assert_eq!(first.stdout, second.stdout);
    let a = run(&["solve-ne"], &original);
    let b = run(&["solve-ne"], &again);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn scalar_toy_output_map() {
    let dir = TempDir::new().unwrap();
    let toy = r#"{
      "game": { "kind": "quadratic", "h1": [1.0, 2.0], "h2": [0.0, 0.0], "h3": [0.0, 0.0] },
      "graph": { "edges": [[1, 2]] },
      "plant": {
        "kind": "custom",
        "f0": ["-z1 + v1"],
        "drift": ["x1 + z1"],
        "steady_zero": ["v1"],
        "im_coeffs": [[0.0]],
        "w_box": []
      },
      "exosystem": { "S": [[0.0]], "v0_box": [[1.0, 1.0]] },
      "internal_model": { "preset": "factorial" },
      "controller": { "k": [[2.0], [2.0]] },
      "sim": { "t_final": 1.0, "dt": 0.01, "seed": 0 }
    }"#;
    let out = run(&["synthesize"], &write(&dir, "toy.json", toy));
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout).matches("Psi = [1.0]").count(), 2, "{}", text(&out.stdout));
}

#[test]
fn csv_layout() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.json", &fixed_gains().0);
    let csv = dir.path().join("out.csv");
    let out = run(&["simulate", "--t-final", "1", "--out", csv.to_str().unwrap()], &cfg);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let body = std::fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "t");
    assert!(header.contains(&"y_1") && header.contains(&"e_4") && header.contains(&"ne_dist"), "{header:?}");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().all(|r| r.split(',').count() == header.len()));
    assert_eq!(rows.last().unwrap().split(',').next().unwrap().parse::<f64>().unwrap(), 1.0);
}

#[test]
fn sweep_writes_one_file_per_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.json", &fixed_gains().0);
    let csv = dir.path().join("run.csv");
    let out = run(&["simulate", "--t-final", "1", "--sweep", "seeds=2", "--out", csv.to_str().unwrap()], &cfg);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(dir.path().join("run-seed1.csv").exists());
    assert!(dir.path().join("run-seed2.csv").exists());
}
