use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 7

[synth]
subjects = 6
duration_s = 20.0

[training]
epochs = 3
warmup_epochs = 1
batch_size = 64

[attacker]
epochs = 30

[predictor]
epochs = 1
hidden_dim = 8
max_train_segments = 500
"#;

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("config.toml"), config).unwrap();
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        let root = self.dir.path();
        Command::new(env!("CARGO_BIN_EXE_gaze-privacy"))
            .arg("--config")
            .arg(root.join("config.toml"))
            .arg("--data")
            .arg(root.join("data"))
            .arg("--output")
            .arg(root.join("out"))
            .args(args)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    }
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_writes_a_reproducible_corpus_and_guards_outputs() {
    let w = Workspace::new(SMALL);
    w.ok(&["synth"]);
    assert_eq!(csv_files(&w.path("data")).len(), 12);
    let manifest = std::fs::read(w.path("data/manifest.json")).unwrap();
    let m = json(&w.path("data/manifest.json"));
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["files"].as_array().unwrap().len(), 12);
    assert!(w.path("data/config.resolved.toml").exists());

    let again = w.run(&["synth"]);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));

    w.ok(&["--force", "synth"]);
    assert_eq!(std::fs::read(w.path("data/manifest.json")).unwrap(), manifest);
}

#[test]
fn full_pipeline_produces_report_and_figure_data() {
    let w = Workspace::new(SMALL);
    w.ok(&["synth"]);
    w.ok(&["train-ae"]);

    let log = std::fs::read_to_string(w.path("out/checkpoints/autoencoder_loss.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "epoch,sigma,mse,dtw,fgsm");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,0.0,") || lines[1].starts_with("0,0,"), "{}", lines[1]);
    let last_sigma: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(last_sigma, 0.1);
    assert_eq!(w.run(&["train-ae"]).status.code(), Some(2));

    w.ok(&["privatize"]);
    for level in ["AE-None", "AE-0.1", "AE-0.2"] {
        let files = csv_files(&w.path(&format!("out/privatized/{level}")));
        assert_eq!(files.len(), 12);
        assert!(files.iter().all(|f| f.ends_with(&format!("_{level}.csv"))), "{files:?}");
        let m = json(&w.path(&format!("out/privatized/{level}/manifest.json")));
        assert_eq!(m["level"], level);
        assert_eq!(m["files"].as_array().unwrap().len(), 12);
    }
    let none = std::fs::read(w.path("out/privatized/AE-None/S_1_S1_RAN_AE-None.csv")).unwrap();
    w.ok(&["--force", "privatize", "--level", "AE-None"]);
    assert_eq!(std::fs::read(w.path("out/privatized/AE-None/S_1_S1_RAN_AE-None.csv")).unwrap(), none);

    let out = w.ok(&["evaluate"]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.starts_with("Privacy Level"), "{table}");
    let report = json(&w.path("out/reports/report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["eer_chance"], 50.0);
    let n = report["num_test_subjects"].as_f64().unwrap();
    assert!((report["ir_chance"].as_f64().unwrap() - 100.0 / n).abs() < 1e-12);
    let levels = report["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 4);
    assert_eq!(levels[0]["name"], "Raw");
    assert_eq!(levels[0]["mse"], 0.0);
    for l in levels {
        for key in ["eer", "rank1_ir"] {
            let v = l[key].as_f64().unwrap();
            assert!((0.0..=100.0).contains(&v));
        }
        assert!(l["prediction_error"].as_f64().unwrap() > 0.0);
        let name = l["name"].as_str().unwrap();
        for prefix in ["scores", "roc", "mse", "prediction_cdf"] {
            assert!(w.path(&format!("out/reports/{prefix}_{name}.csv")).exists(), "{prefix}_{name}");
        }
    }
    let first = std::fs::read(w.path("out/reports/report.json")).unwrap();
    w.ok(&["--force", "evaluate"]);
    assert_eq!(std::fs::read(w.path("out/reports/report.json")).unwrap(), first);

    w.ok(&["train-attacker", "--level", "AE-0.2"]);
    assert!(w.path("out/checkpoints/attacker_AE-0.2.json").exists());

    let out = w.ok(&["report"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(" | ").map(str::trim).collect();
    assert_eq!(header, ["Privacy Level", "EER (%, ↓)", "IR (%, ↑)", "MSE", "Prediction Error"]);
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let w = Workspace::new("[training]\nepoch = 3\n");
    let out = w.run(&["synth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epoch"));

    let w = Workspace::new(SMALL);
    assert_eq!(w.run(&["train-ae"]).status.code(), Some(3));
    w.ok(&["synth"]);
    assert_eq!(w.run(&["privatize"]).status.code(), Some(3));
    assert_eq!(w.run(&["privatize", "--level", "AE-9"]).status.code(), Some(2));

    std::fs::write(w.path("bad.json"), "{\"schema_version\": 1,").unwrap();
    let bad = w.path("bad.json");
    assert_eq!(w.run(&["report", bad.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(w.run(&["no-such-command"]).status.code(), Some(2));
}
