use std::path::Path;
use std::process::{Command, Output};

fn leaf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leaf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &[&str] = &[
    "--dataset",
    "synthetic:drug-like:300",
    "--models",
    "rf,log",
    "--k",
    "2,3",
    "--repetitions",
    "3",
    "--instances.count",
    "2",
    "--lime.samples",
    "300",
];

fn untimed(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (i, workers) in ["1", "0"].into_iter().enumerate() {
        let json = dir.path().join(format!("r{i}.json"));
        let csv = dir.path().join(format!("r{i}.csv"));
        let mut args = vec!["sweep", "--seed", "5", "--workers", workers];
        args.extend_from_slice(SMALL);
        args.extend(["--output.json", json.to_str().unwrap(), "--output.csv", csv.to_str().unwrap()]);
        let o = leaf(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push((untimed(&json), std::fs::read_to_string(&csv).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
    // 2 instances x 2 models x 2 explainers x 2 sizes x 3 repetitions, plus header.
    assert_eq!(reports[0].1.lines().count(), 1 + 2 * 2 * 2 * 2 * 3);
}

#[test]
fn sweep_requires_seed() {
    let mut args = vec!["sweep"];
    args.extend_from_slice(SMALL);
    let o = leaf(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
}

#[test]
fn sweep_prints_json_without_outputs() {
    let mut args = vec!["sweep", "--seed", "1", "--explainers", "shap", "--models", "rf"];
    args.extend_from_slice(&SMALL[..2]);
    args.extend(["--instances.count", "1", "--repetitions", "2"]);
    let o = leaf(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["cells"].as_array().unwrap().len(), 1);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# small audit\ndataset = synthetic:drug-like:300\nmodels = rf\nexplainers = lime\nk = 3\nrepetitions = 2\nlime.samples = 300\n",
    )
    .unwrap();
    let json = dir.path().join("out.json");
    let o = leaf(&[
        "explain",
        "--config",
        cfg.to_str().unwrap(),
        "--k",
        "2",
        "--output.json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = untimed(&json);
    assert_eq!(v["config"]["k"], serde_json::json!([2]));
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0]["k"], 2);
    assert_eq!(cells[0]["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_config_is_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "dataset = synthetic:drug-like:300\nno.such.key = 3\n").unwrap();
    let o = leaf(&["explain", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = leaf(&["explain", "--dataset", "synthetic:drug-like:300", "--k", "11"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_dataset_file_is_exit_two() {
    let o = leaf(&["explain", "--dataset", "/nonexistent/data.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn explain_prints_weights() {
    let o = leaf(&[
        "explain",
        "--dataset",
        "synthetic:drug-like:300",
        "--repetitions",
        "2",
        "--lime.samples",
        "300",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("[lime]") && out.contains("[shap]"), "{out}");
}

#[test]
fn verify_passes() {
    let o = leaf(&["verify", "--cases", "10", "--seed", "3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().count() >= 7);
    assert!(out.lines().all(|l| l.starts_with("PASS")), "{out}");
}

#[test]
fn train_prints_table() {
    let o = leaf(&["train", "--dataset", "synthetic:drug-like:300", "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    for family in ["lin", "log", "rf", "kn", "mlp"] {
        assert!(out.lines().any(|l| l.starts_with(family)), "{out}");
    }
}

#[test]
fn help_and_keys() {
    assert_eq!(leaf(&["--help"]).status.code(), Some(0));
    let o = leaf(&["keys"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("lime.samples"));
    assert_eq!(leaf(&["no-such-command"]).status.code(), Some(1));
}
