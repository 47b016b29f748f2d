use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hitsim::io::read_columns;
use hitsim::scheme::LossCurve;

const SIMULATE: &str = r#"
[model]
alpha = 0.8
horizon = 2.0

[law]
kind = "reciprocal-exp"
rate = 1.0

[scheme]
kind = "bridge"

[mesh]
n = 200

[run]
particles = 100000
seed = 1
"#;

const STUDY: &str = r#"
[model]
alpha = 1.5
horizon = 0.008

[law]
kind = "gamma"
shape = 1.5
scale = 0.5

[scheme]
kind = "plain"

[mesh]
n_list = [25, 50, 100, 200]

[run]
particles = 2000
seed = 3
replicates = 2
"#;

fn hitsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitsim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_ok(args: &[&str]) -> String {
    let out = hitsim(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read_curve(path: &Path) -> LossCurve {
    LossCurve::read_csv(fs::File::open(path).map(std::io::BufReader::new).unwrap()).unwrap()
}

#[test]
fn simulate_writes_a_monotone_curve_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sim.toml", SIMULATE);
    let out = dir.path().join("out");
    run_ok(&["simulate", "--config", &config, "--out", out.to_str().unwrap()]);

    let curve = read_curve(&out.join("loss.csv"));
    assert_eq!(curve.values().len(), 201);
    assert!(curve.values().windows(2).all(|w| w[1] >= w[0]));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let l_t = summary["loss_at_evaluation"].as_f64().unwrap();
    assert!(l_t > 0.0 && l_t < 1.0, "{l_t}");
    assert_eq!(l_t, curve.terminal());
    assert!(out.join("timing.json").exists());
    let rate = read_columns(std::io::BufReader::new(fs::File::open(out.join("loss_rate.csv")).unwrap()), &["t", "dL"]).unwrap();
    assert_eq!(rate[0].len(), 201);
}

#[test]
fn single_step_mesh_gives_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "one.toml", &SIMULATE.replace("n = 200", "n = 1"));
    let out = dir.path().join("out");
    run_ok(&["simulate", "--config", &config, "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("loss.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "t,L");
    assert!(lines[1].ends_with(",0.0000000000000000e0"), "{}", lines[1]);
    assert!(!out.join("loss_rate.csv").exists());
}

#[test]
fn reruns_and_worker_counts_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "study.toml", STUDY);
    let runs: Vec<_> = [("a", "1"), ("b", "1"), ("c", "4")]
        .iter()
        .map(|(name, workers)| {
            let out = dir.path().join(name);
            run_ok(&["blowup", "--config", &config, "--out", out.to_str().unwrap(), "--workers", workers]);
            out
        })
        .collect();
    let files = ["metrics.csv", "order.json", "jumps.csv", "loss_n25.csv", "loss_n400.csv"];
    for f in files {
        let first = fs::read(runs[0].join(f)).unwrap();
        for r in &runs[1..] {
            assert_eq!(first, fs::read(r.join(f)).unwrap(), "{f}");
        }
    }
    let metrics = read_columns(
        std::io::BufReader::new(fs::File::open(runs[0].join("metrics.csv")).unwrap()),
        &["n", "d1", "d2", "d3"],
    )
    .unwrap();
    assert_eq!(metrics[0], vec![25.0, 50.0, 100.0, 200.0]);
}

#[test]
fn converge_writes_errors_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let text = STUDY.replace("alpha = 1.5", "alpha = 0.5").replace("\"plain\"", "\"bridge\"");
    let config = write_config(dir.path(), "conv.toml", &text);
    let out = dir.path().join("out");
    let stdout = run_ok(&["converge", "--config", &config, "--out", out.to_str().unwrap(), "--seed", "9"]);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(report["fitted_order"].as_f64().unwrap().is_finite());
    let errors = read_columns(
        std::io::BufReader::new(fs::File::open(out.join("errors.csv")).unwrap()),
        &["n", "error"],
    )
    .unwrap();
    assert_eq!(errors[0], vec![25.0, 50.0, 100.0, 200.0]);
    let order: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("order.json")).unwrap()).unwrap();
    assert_eq!(order, report);
}

#[test]
fn density_of_nearly_free_particles_peaks_at_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let text = SIMULATE
        .replace("alpha = 0.8", "alpha = 0.0")
        .replace("horizon = 2.0", "horizon = 0.001")
        .replace("kind = \"reciprocal-exp\"\nrate = 1.0", "kind = \"dirac\"\ny0 = 5.0")
        .replace("n = 200", "n = 10");
    let config = write_config(dir.path(), "dens.toml", &text);
    let out = dir.path().join("out");
    run_ok(&["density", "--config", &config, "--out", out.to_str().unwrap()]);
    let cols = read_columns(
        std::io::BufReader::new(fs::File::open(out.join("density.csv")).unwrap()),
        &["x", "density"],
    )
    .unwrap();
    let (mode, _) = cols[0]
        .iter()
        .zip(&cols[1])
        .fold((0.0, f64::NEG_INFINITY), |best, (&x, &d)| if d > best.1 { (x, d) } else { best });
    assert!((mode - 5.0).abs() < 0.2, "{mode}");
}

#[test]
fn density_without_survivors_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = STUDY.replace("alpha = 1.5", "alpha = 1000000.0").replace("n_list = [25, 50, 100, 200]", "n = 50");
    let config = write_config(dir.path(), "dead.toml", &text);
    let out = hitsim(&["density", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no survivors"));
}

#[test]
fn config_errors_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (SIMULATE.replace("particles = 100000", "particles = 0"), "run.particles"),
        (SIMULATE.replace("horizon = 2.0", "horizon = -2.0"), "model.horizon"),
        (SIMULATE.replace("alpha = 0.8", "alpha = "), "line 3"),
        (STUDY.replace("[25, 50, 100, 200]", "[25, 50, 75, 150]"), "mesh.n_list"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let config = write_config(dir.path(), &format!("bad{i}.toml"), text);
        let out = hitsim(&["converge", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{needle}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{needle}: {err}");
    }
    let out = hitsim(&["simulate", "--config", dir.path().join("missing.toml").to_str().unwrap(), "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn theory_prints_json() {
    let stdout = run_ok(&["theory", "--alpha", "1", "--beta", "1", "--b", "1", "--b-tilde", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!((v["t_star"].as_f64().unwrap() - 0.459_274_988_167_465).abs() < 1e-12);
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["extension_condition"], serde_json::Value::Bool(false));

    let stdout = run_ok(&["theory", "--alpha", "0.1", "--beta", "1", "--b", "1", "--b-hat", "0.01"]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["t_star"].as_f64().unwrap() > 0.0);

    let out = hitsim(&["theory", "--alpha", "1", "--beta", "1.5", "--b", "1", "--b-hat", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = hitsim(&["theory", "--alpha", "0", "--beta", "1", "--b", "1", "--b-hat", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn shipped_manifests_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let config = hitsim::cli::config::ExperimentConfig::load(&path).unwrap();
            if config.mesh.n_list.is_some() {
                config.study_setup().unwrap();
            } else {
                config.single_n().unwrap();
            }
            count += 1;
        }
    }
    assert!(count >= 5);
}
