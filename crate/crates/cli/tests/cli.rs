use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wsnhole(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsnhole"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"
node_counts = [150]
degrees = [6.0]
snapshots = [200]
"#;

#[test]
fn usage_errors_exit_with_1() {
    assert_eq!(code(&wsnhole(&[])), 1);
    assert_eq!(code(&wsnhole(&["frobnicate"])), 1);
    assert_eq!(code(&wsnhole(&["gen", "--nodes", "many"])), 1);
    assert_eq!(code(&wsnhole(&["--help"])), 0);
    assert_eq!(code(&wsnhole(&["--version"])), 0);
}

#[test]
fn runtime_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = wsnhole(&["--config", missing.to_str().unwrap(), "grid"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let bad = write_config(dir.path(), "unknown_key = 1\n");
    assert_eq!(code(&wsnhole(&["--config", &bad, "grid"])), 2);

    let out_dir = dir.path().join("out");
    let out = wsnhole(&["--out", out_dir.to_str().unwrap(), "layout", "--topology", "missing.txt"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn grid_where_every_cell_fails_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "node_counts = [50]\ndegrees = [0.5]\n");
    let out_dir = dir.path().join("grid");
    let out = wsnhole(&["--config", &config, "--out", out_dir.to_str().unwrap(), "grid"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("grid_manifest.json").is_file());
}

#[test]
fn gen_layout_detect_validate_render() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let gen_dir = dir.path().join("gen");
    let gen_dir_s = gen_dir.to_str().unwrap();
    let out = wsnhole(&["--config", &config, "--seed", "4", "--out", gen_dir_s, "gen"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["topology.txt", "placement_true.csv", "truth.png", "truth.json", "boundary_ids.txt", "gen_manifest.json"] {
        assert!(gen_dir.join(name).is_file(), "missing {name}");
    }
    let topology = gen_dir.join("topology.txt");
    let topology_s = topology.to_str().unwrap();

    let layout_dir = dir.path().join("layout");
    let out = wsnhole(&[
        "--config", &config, "--seed", "4", "--out", layout_dir.to_str().unwrap(),
        "layout", "--topology", topology_s,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(layout_dir.join("layout_manifest.json").is_file());
    let mut layouts: Vec<_> = fs::read_dir(&layout_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|f| f.starts_with("layout_iter") && f.ends_with(".csv"))
        .collect();
    layouts.sort();
    assert!(!layouts.is_empty());
    let layout = layout_dir.join(layouts.last().unwrap());
    let layout_s = layout.to_str().unwrap();

    let detect_dir = dir.path().join("detect");
    let truth = gen_dir.join("boundary_ids.txt");
    let out = wsnhole(&[
        "--config", &config, "--out", detect_dir.to_str().unwrap(),
        "detect", "--layout", layout_s, "--topology", topology_s,
        "--truth", truth.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("n,d,seed,snapshot_iter,TP,FN,FP,TN,sensitivity,specificity,detect_ms"));
    for name in ["detect.png", "detect.json", "boundary_ids.txt"] {
        assert!(detect_dir.join(name).is_file(), "missing {name}");
    }

    // Validating the true placement's own annotation is perfect.
    let placement = gen_dir.join("placement_true.csv");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(gen_dir.join("gen_manifest.json")).unwrap()).unwrap();
    let rs = manifest["generator"]["sensing_range"].as_f64().expect("sensing range in manifest");
    let out = wsnhole(&[
        "--config", &config, "validate",
        "--detection", gen_dir.join("truth.json").to_str().unwrap(),
        "--layout", placement.to_str().unwrap(),
        "--topology", topology_s,
        "--truth", truth.to_str().unwrap(),
        "--sensing-range", &rs.to_string(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let row = stdout.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(&fields[8..10], &["1.000000", "1.000000"], "{row}");

    let out = wsnhole(&[
        "--config", &config, "--out", detect_dir.to_str().unwrap(),
        "render", "--layout", layout_s, "--topology", topology_s,
        "--annotation", detect_dir.join("detect.json").to_str().unwrap(),
        "--overlay", "detection", "--name", "overlay.png",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(detect_dir.join("overlay.png").is_file());

    // An unknown overlay colour is a usage error.
    let out = wsnhole(&[
        "render", "--layout", layout_s, "--topology", topology_s,
        "--annotation", "x.json", "--overlay", "green",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn grid_is_reproducible_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = wsnhole(&["--config", &config, "--out", out_dir.to_str().unwrap(), "grid"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (
            String::from_utf8_lossy(&out.stdout).into_owned(),
            fs::read(out_dir.join("metrics.csv")).unwrap(),
        )
    };
    let (a, b) = (run("a"), run("b"));
    assert!(a.0.starts_with("n,d,cells,failed,mean_sensitivity,mean_specificity"));
    assert_eq!(a, b);
}
