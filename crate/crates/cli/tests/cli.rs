use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segnoise")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, n: &str) -> std::path::PathBuf {
    let out = dir.join("clean.json");
    let o = run(&["synth", "--seed", "9", "--n-images", n, "-o", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.json");
    std::fs::write(&spec, r#"{"n_images": 5, "seed": 4, "categories": 4, "supercategories": 2}"#).unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert!(run(&["synth", "--spec", p(&spec), "-o", p(&a)]).status.success());
    assert!(run(&["synth", "--spec", p(&spec), "-o", p(&b)]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn synth_render_writes_pgm_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let render = dir.path().join("img");
    assert!(run(&["synth", "--n-images", "2", "--render", p(&render), "-o", p(&out)]).status.success());
    let img = std::fs::read(render.join("000002.pgm")).unwrap();
    assert!(img.starts_with(b"P5\n640 480\n255\n"));
}

#[test]
fn corrupt_summary_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let clean = synth(dir.path(), "120");
    let out = dir.path().join("low.json");
    let o = run(&["corrupt", p(&clean), "--preset", "low", "--seed", "7", "-o", p(&out)]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let n = summary["instances_in"].as_f64().unwrap();
    let rate = summary["deleted"].as_f64().unwrap() / n;
    // Three binomial standard deviations around 0.05.
    assert!((rate - 0.05).abs() < 3.0 * (0.05f64 * 0.95 / n).sqrt(), "{rate}");
    let noisy = segnoise::parse_dataset(&std::fs::read(&out).unwrap()).unwrap();
    noisy.validate().unwrap();
    let log = std::fs::read_to_string(dir.path().join("low.changelog.jsonl")).unwrap();
    assert_eq!(log.lines().count() as f64, n);
}

#[test]
fn erosion_mode_logs_only_erosion() {
    let dir = tempfile::tempdir().unwrap();
    let clean = synth(dir.path(), "10");
    let out = dir.path().join("e.json");
    let log = dir.path().join("e.jsonl");
    let o = run(&["corrupt", p(&clean), "--mode", "erosion", "--scale", "3,1", "-o", p(&out), "--changelog", p(&log)]);
    assert!(o.status.success());
    for line in std::fs::read_to_string(&log).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["mode"], "erosion");
        assert_eq!(v["scale"]["op"], "erode");
        assert!(v["class_swap"].is_null() && v["localization"].is_null() && v["shift"].is_null());
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let clean = synth(dir.path(), "10");
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"preset": "high", "p_delete": 0.0, "seed": 1}"#).unwrap();
    let out = dir.path().join("o.json");
    let o = run(&["corrupt", p(&clean), "--config", p(&config), "--p-delete", "1", "-o", p(&out)]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["instances_out"], 0);
}

#[test]
fn eval_of_identical_files_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let clean = synth(dir.path(), "6");
    let report = dir.path().join("r.csv");
    let o = run(&["eval", p(&clean), p(&clean), "--band-d", "3", "-o", p(&report)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mAP"], 1.0);
    assert_eq!(v["boundary_mAP"], 1.0);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(json["band_width"], 3);
    let csv = std::fs::read_to_string(&report).unwrap();
    // 2 metrics x 10 thresholds x (all + 3 buckets + 10 categories), plus header.
    assert_eq!(csv.lines().count(), 1 + 2 * 10 * 14);
}

#[test]
fn prompts_jsonl_fields() {
    let dir = tempfile::tempdir().unwrap();
    let clean = synth(dir.path(), "3");
    let out = dir.path().join("p.jsonl");
    assert!(run(&["prompts", p(&clean), "--kind", "box", "--noisy", "-o", p(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for key in ["image_id", "annotation_id", "kind", "payload", "perturbed", "seed"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    assert_eq!(first["kind"], "box");
    assert_eq!(first["payload"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_rows_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let clean = synth(dir.path(), "12");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(run(&["sweep", p(&clean), "--seed", "3", "-o", p(&a)]).status.success());
    assert!(run(&["--workers", "2", "sweep", p(&clean), "--seed", "3", "-o", p(&b)]).status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 8);
    assert!(lines[1].starts_with("clean,3,mask,1.000000,"));
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let clean = synth(dir.path(), "4");
    let out = dir.path().join("o.json");
    let o = Command::new(env!("CARGO_BIN_EXE_segnoise"))
        .env("SEGNOISE_WORKERS", "2")
        .args(["corrupt", p(&clean), "--preset", "low", "-o", p(&out)])
        .output()
        .unwrap();
    assert!(o.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_segnoise"))
        .env("SEGNOISE_WORKERS", "many")
        .args(["corrupt", p(&clean), "-o", p(&out)])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let clean = synth(dir.path(), "2");
    let out = dir.path().join("o.json");

    let missing = run(&["corrupt", p(&dir.path().join("nope.json")), "-o", p(&out)]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty() && missing.stdout.is_empty());

    let garbage = dir.path().join("bad.json");
    std::fs::write(&garbage, b"{\"images\": [}").unwrap();
    assert_eq!(run(&["corrupt", p(&garbage), "-o", p(&out)]).status.code(), Some(1));

    assert_eq!(run(&["corrupt", p(&clean), "--p-class", "2", "-o", p(&out)]).status.code(), Some(1));
    assert_eq!(run(&["corrupt", p(&clean), "--mode", "sideways", "-o", p(&out)]).status.code(), Some(1));
    assert_eq!(run(&["corrupt", p(&clean), "-o", p(&clean)]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let unwritable = dir.path().join("no_such_dir").join("o.json");
    assert_eq!(run(&["corrupt", p(&clean), "-o", p(&unwritable)]).status.code(), Some(2));
}
