use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 7
e0 = 2
es = 6
e_grow = 3
embed_dim = 8
hidden_dim = 16
vocab_a = 60
vocab_b = 60
chars_per_domain = 50
train_size = 80
dev_size = 20
test_size = 20
population = 150
"#;

fn tcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcl"))
        .args(args)
        .env_remove("TCL_SEED")
        .output()
        .unwrap()
}

fn stdout_line(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap().trim().to_string()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_reproducible_and_hashes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    stdout_line(&tcl(&["gen", "--config", s(&cfg), "--out", s(&a)]));
    stdout_line(&tcl(&["gen", "--config", s(&cfg), "--out", s(&b)]));
    for f in ["train.tsv", "dev.tsv", "test.tsv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["files"]["train"]["sentences"], 80);

    // Rerunning into the same directory refuses to clobber it.
    assert_eq!(tcl(&["gen", "--config", s(&cfg), "--out", s(&a)]).status.code(), Some(2));

    // A different seed changes the data but not the hash; a different config changes the hash.
    let c = dir.path().join("c");
    stdout_line(&tcl(&["gen", "--config", s(&cfg), "--seed", "8", "--out", s(&c)]));
    assert_ne!(fs::read(a.join("train.tsv")).unwrap(), fs::read(c.join("train.tsv")).unwrap());
    let m2: serde_json::Value = serde_json::from_slice(&fs::read(c.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], m2["config_hash"]);
    let other = dir.path().join("other.toml");
    fs::write(&other, format!("{TINY}noise_rate = 0.0\n")).unwrap();
    let d = dir.path().join("d");
    stdout_line(&tcl(&["gen", "--config", s(&other), "--out", s(&d)]));
    let m3: serde_json::Value = serde_json::from_slice(&fs::read(d.join("manifest.json")).unwrap()).unwrap();
    assert_ne!(manifest["config_hash"], m3["config_hash"]);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(tcl(&["gen", "--config", s(&missing)]).status.code(), Some(2));
    let cfg = write_config(dir.path(), TINY);
    let out = tcl(&["train", "--config", s(&cfg), "--mode", "baseline", "--metric", "bu"]);
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "lamda0 = 0.2\n").unwrap();
    assert_eq!(tcl(&["train", "--config", s(&bad)]).status.code(), Some(2));
    fs::write(&bad, "e0 = 0\n").unwrap();
    assert_eq!(tcl(&["train", "--config", s(&bad)]).status.code(), Some(2));
    let data = dir.path().join("x.tsv");
    fs::write(&data, "阿\tB\n里\tE\n").unwrap();
    assert_eq!(tcl(&["score", "--data", s(&data), "--metric", "bu"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.tsv");
    fs::write(&data, "阿 B\n").unwrap();
    let out = tcl(&["score", "--data", s(&data), "--metric", "length"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn model_free_scoring_writes_one_row_per_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.tsv");
    fs::write(&data, "我\tS\n喜\tB\n欢\tE\n\n阿\tS\n").unwrap();
    let out = tcl(&["score", "--data", s(&data), "--metric", "length"]);
    assert_eq!(stdout_line(&out), "sentence_id,score,metric\n0,3,length\n1,1,length");
    let csv = dir.path().join("r.csv");
    stdout_line(&tcl(&["score", "--data", s(&data), "--metric", "random", "--seed", "3", "--out", s(&csv)]));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 3);
}

fn runlog_without_clock(path: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            let obj = v.as_object_mut().unwrap();
            obj.remove("wall_ms");
            obj.remove("total_wall_ms");
            v
        })
        .collect()
}

#[test]
fn train_score_eval_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let data = dir.path().join("data");
    stdout_line(&tcl(&["gen", "--config", s(&cfg), "--out", s(&data)]));
    let runs = dir.path().join("runs");

    let tcl_run = PathBuf::from(stdout_line(&tcl(&[
        "train", "--config", s(&cfg), "--metric", "bu", "--out-dir", s(&runs),
    ])));
    let again = PathBuf::from(stdout_line(&tcl(&[
        "train", "--config", s(&cfg), "--metric", "bu", "--out-dir", s(&runs),
    ])));
    assert_ne!(tcl_run, again, "each run gets a fresh directory");
    for f in ["final.ckpt.json", "best.ckpt.json", "teacher.ckpt.json"] {
        assert_eq!(fs::read(tcl_run.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
    assert_eq!(runlog_without_clock(&tcl_run.join("runlog.jsonl")), runlog_without_clock(&again.join("runlog.jsonl")));

    let base = PathBuf::from(stdout_line(&tcl(&[
        "train", "--config", s(&cfg), "--mode", "baseline", "--es", "4", "--out-dir", s(&runs),
    ])));
    assert!(!base.join("teacher.ckpt.json").exists());

    let ckpt = tcl_run.join("final.ckpt.json");
    let dev = data.join("dev.tsv");
    let a = stdout_line(&tcl(&["score", "--checkpoint", s(&ckpt), "--data", s(&dev), "--metric", "bu", "--seed", "1"]));
    let b = stdout_line(&tcl(&["score", "--checkpoint", s(&ckpt), "--data", s(&dev), "--metric", "bu", "--seed", "1"]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 21);
    assert!(a.lines().skip(1).all(|l| l.ends_with(",bu")));

    let report: serde_json::Value = serde_json::from_str(&stdout_line(&tcl(&[
        "eval", "--checkpoint", s(&ckpt), "--data", s(&dev),
    ])))
    .unwrap();
    let f1 = report["cws"]["f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
    assert_eq!(report["sentences"], 20);

    let csv = stdout_line(&tcl(&[
        "report",
        s(&tcl_run.join("runlog.jsonl")),
        s(&base.join("runlog.jsonl")),
    ]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 6);
    assert_eq!(lines[0].split(',').count(), 5);
    assert!(lines[6].ends_with(",,"), "shorter run is padded: {}", lines[6]);
    let visits: Vec<u64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(visits.windows(2).all(|w| w[0] < w[1]));

    let single = stdout_line(&tcl(&["report", s(&base.join("runlog.jsonl"))]));
    assert_eq!(single.lines().next().unwrap().split(',').count(), 3);

    let broken = dir.path().join("broken.jsonl");
    fs::write(&broken, "{\"kind\":\"epoch\"}\n").unwrap();
    let out = tcl(&["report", s(&broken)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let gen = |env: Option<&str>, flag: Option<&str>, out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_tcl"));
        cmd.env_remove("TCL_SEED");
        if let Some(v) = env {
            cmd.env("TCL_SEED", v);
        }
        let out_dir = dir.path().join(out);
        cmd.args(["gen", "--config", s(&cfg), "--out", s(&out_dir)]);
        if let Some(v) = flag {
            cmd.args(["--seed", v]);
        }
        stdout_line(&cmd.output().unwrap());
        let m: serde_json::Value =
            serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
        m["seed"].as_u64().unwrap()
    };
    assert_eq!(gen(None, None, "a"), 7);
    assert_eq!(gen(Some("11"), None, "b"), 11);
    assert_eq!(gen(Some("11"), Some("12"), "c"), 12);
    let bad = Command::new(env!("CARGO_BIN_EXE_tcl"))
        .env("TCL_SEED", "x")
        .args(["gen", "--config", s(&cfg), "--out", s(&dir.path().join("d"))])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
