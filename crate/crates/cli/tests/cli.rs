use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use flyer_sdnn::io::{save_ann, AnnWeights};
use flyer_sdnn::math::SeededRng;
use flyer_sdnn::mlp::{Activation, DenseNet, GaussianHead, PolicyNet};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_flyer-sdnn"));
    c.env_remove("FLYER_SDNN_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn smoke_config(dir: &Path) -> PathBuf {
    let p = dir.join("smoke.json");
    std::fs::write(
        &p,
        r#"{"ppo": {"n_envs": 2, "n_steps": 8, "iterations": 1, "minibatch_size": 8, "epochs": 1},
            "seeds": [0, 1], "calibration_seeds": [0]}"#,
    )
    .unwrap();
    p
}

fn train_smoke(dir: &Path) -> PathBuf {
    let cfg = smoke_config(dir);
    let out = dir.join("train");
    let o = run(&["train", "--config", s(&cfg), "--out", s(&out), "--quiet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out.join("actor.json")
}

#[test]
fn train_writes_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let actor = train_smoke(dir.path());
    assert!(t0.elapsed().as_secs() < 60);
    for f in ["actor.json", "train_log.csv", "config.json"] {
        assert!(dir.path().join("train").join(f).exists(), "{f}");
    }
    let first = std::fs::read(&actor).unwrap();
    let again = dir.path().join("again");
    let o = run(&["train", "--config", s(&smoke_config(dir.path())), "--out", s(&again), "--quiet"]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(again.join("actor.json")).unwrap(), first);
    let resolved = dir.path().join("train/config.json");
    let o = run(&["train", "--config", s(&resolved), "--out", s(&dir.path().join("third")), "--quiet"]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(dir.path().join("third/actor.json")).unwrap(), first);
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["train", "--config", s(&dir.path().join("nope.json"))])), 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"ppo": {"gamma": 5.0}}"#).unwrap();
    assert_eq!(code(&run(&["train", "--config", s(&bad)])), 2);
    assert_eq!(code(&run(&["eval", "--weights", s(&dir.path().join("missing.json"))])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn convert_eval_compare_flow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let actor = train_smoke(d);
    let cfg = smoke_config(d);

    let o = run(&["convert", "--weights", s(&actor), "--config", s(&cfg), "--threshold", "0", "--out", s(&d.join("c0"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("c0/conversion_report.json")).unwrap()).unwrap();
    assert_eq!(rep["payload"]["equivalence"]["passed"], true);

    let o = run(&["convert", "--weights", s(&actor), "--config", s(&cfg), "--threshold", "0.1", "--out", s(&d.join("c1"))]);
    assert_eq!(code(&o), 0);
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("c1/conversion_report.json")).unwrap()).unwrap();
    assert_eq!(rep["payload"]["thresholds"]["input"], 0.1);
    assert_eq!(rep["payload"]["thresholds"]["hidden"], 0.1);

    let ann = d.join("e_ann");
    let o = run(&["eval", "--weights", s(&actor), "--task", "undock", "--seeds", "3", "--out", s(&ann)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let traces: Vec<_> = std::fs::read_dir(ann.join("traces")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(traces.len(), 3);
    assert!(traces.contains(&"ann_undock_0.csv".to_string()));
    for f in ["report.json", "report.csv", "report.txt", "position.svg", "orientation.svg", "config.json"] {
        assert!(ann.join(f).exists(), "{f}");
    }

    let sd = d.join("e_sdnn");
    let sdnn = d.join("c1/sdnn.json");
    let o = run(&[
        "eval", "--controller", "sdnn", "--mode", "float", "--threshold", "0", "--weights", s(&sdnn), "--task", "undock",
        "--seed-list", "0,1,2", "--out", s(&sd),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let cmp = d.join("cmp");
    let o = run(&["compare", s(&ann.join("report.json")), s(&sd.join("report.json")), "--out", s(&cmp)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(cmp.join("compare.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let col = |n: &str| row[header.iter().position(|h| *h == n).unwrap()].parse::<f64>().unwrap();
    assert!(col("final_position_m_delta").abs() <= 1e-3);
    assert!(col("rmse_position_m_delta").abs() <= 1e-3);
    assert!(col("final_orientation_deg_delta").abs() <= 1e-2);
    assert!(col("rmse_orientation_deg_delta").abs() <= 1e-2);
    assert!(cmp.join("scatter.csv").exists());

    let o = run(&["compare", s(&ann.join("report.json")), s(&ann.join("report.json")), "--out", s(&d.join("self"))]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(d.join("self/compare.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    for (h, v) in header.iter().zip(&row) {
        if h.ends_with("_delta") {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }

    assert_eq!(code(&run(&["compare", s(&ann.join("report.json"))])), 6);
    let other = d.join("e_other");
    let o = run(&["eval", "--weights", s(&actor), "--task", "undock", "--seeds", "2", "--out", s(&other)]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&run(&["compare", s(&ann.join("report.json")), s(&other.join("report.json")), "--out", s(&d.join("x"))])), 6);

    assert_eq!(code(&run(&["eval", "--weights", s(&actor), "--seed-list", "", "--out", s(&d.join("y"))])), 2);
    assert_eq!(code(&run(&["eval", "--weights", s(&actor), "--seeds", "0", "--out", s(&d.join("y"))])), 2);

    let text = std::fs::read_to_string(&sdnn).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["payload"]["params"]["layers"][0]["int_weights"][0] = serde_json::json!(3);
    let corrupt = d.join("corrupt.json");
    std::fs::write(&corrupt, serde_json::to_vec(&v).unwrap()).unwrap();
    assert_eq!(code(&run(&["eval", "--controller", "sdnn", "--weights", s(&corrupt), "--out", s(&d.join("z"))])), 5);
    let text = std::fs::read_to_string(&actor).unwrap();
    let corrupt_ann = d.join("corrupt_ann.json");
    std::fs::write(&corrupt_ann, text.replacen("\"checksum\": \"", "\"checksum\": \"0", 1)).unwrap();
    assert_eq!(code(&run(&["convert", "--weights", s(&corrupt_ann), "--out", s(&d.join("w"))])), 5);
}

#[test]
fn eval_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let actor = train_smoke(d);
    let a = d.join("a");
    let b = d.join("b");
    for out in [&a, &b] {
        let o = run(&["eval", "--weights", s(&actor), "--task", "all", "--seeds", "2", "--out", s(out)]);
        assert_eq!(code(&o), 0);
    }
    for f in ["traces/ann_random_1.csv", "traces/ann_undock_0.csv", "report.json", "report.csv", "position.svg"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn non_relu_source_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = SeededRng::new(0);
    let net = DenseNet::orthogonal(&[12, 64, 64, 6], Activation::Tanh, 1.0, 0.01, &mut rng).unwrap();
    let p = PolicyNet::new(net, GaussianHead::constant(6, 0.0)).unwrap();
    let path = dir.path().join("tanh.json");
    save_ann(&path, &AnnWeights::new(&p, None)).unwrap();
    let cfg = smoke_config(dir.path());
    let o = run(&["convert", "--weights", s(&path), "--config", s(&cfg), "--out", s(&dir.path().join("c"))]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn out_root_env_sets_default_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let root = dir.path().join("root");
    let o = bin().env("FLYER_SDNN_OUT", &root).args(["train", "--config", s(&cfg), "--quiet"]).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(root.join("train/actor.json").exists());
}

#[test]
fn verify_passes() {
    let o = run(&["verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().filter(|l| l.starts_with("PASS")).count(), 5);
}
