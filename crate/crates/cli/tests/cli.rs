use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_CONFIG: &str = "\
counts.anticipated = 40
counts.breaking = 30
counts.commemorative = 30
counts.meme = 30
counts.ongoing = 40
counts.atemporal = 60
seed = 3
train.epochs = 3
experiment.fractions = 0.2, 0.4
";

fn smlp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smlp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = smlp(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("small.conf"), SMALL_CONFIG).unwrap();
    dir
}

#[test]
fn full_pipeline() {
    let tmp = workspace();
    let d = tmp.path();
    let with = |args: &[&'static str]| -> Vec<&'static str> { [&["--config", "small.conf"][..], args].concat() };

    let stdout = ok(d, &with(&["generate", "--out", "inst.jsonl"]));
    assert!(stdout.contains("230 instances"), "{stdout}");
    assert_eq!(fs::read_to_string(d.join("inst.jsonl")).unwrap().lines().count(), 230);

    ok(d, &with(&["extract", "--instances", "inst.jsonl", "--out", "ds.tsv"]));
    ok(d, &with(&["split", "--dataset", "ds.tsv", "--out", "split.txt"]));
    let manifest = fs::read_to_string(d.join("split.txt")).unwrap();
    assert!(manifest.starts_with("#smlp-split v1"));

    ok(
        d,
        &with(&["train", "--dataset", "ds.tsv", "--manifest", "split.txt", "--out", "model.json", "--curve", "curve.csv"]),
    );
    let curve = fs::read_to_string(d.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 3);
    assert!(curve.starts_with("iteration,loss\n1,"));

    let stdout = ok(
        d,
        &with(&[
            "evaluate", "--checkpoint", "model.json", "--dataset", "ds.tsv", "--manifest", "split.txt", "--metrics",
            "metrics.csv", "--confusion", "confusion.csv",
        ]),
    );
    assert!(stdout.starts_with("MAP "), "{stdout}");
    assert_eq!(fs::read_to_string(d.join("metrics.csv")).unwrap().lines().count(), 1 + 6);
    let confusion = fs::read_to_string(d.join("confusion.csv")).unwrap();
    assert!(confusion.starts_with("actual,anticipated,breaking,commemorative,meme,ongoing,atemporal\n"));
    let test_rows: usize = confusion
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(1).map(|v| v.parse::<usize>().unwrap()))
        .sum();
    assert_eq!(test_rows, 69);

    ok(d, &with(&["compare-models", "--dataset", "ds.tsv", "--out", "models.csv"]));
    let models = fs::read_to_string(d.join("models.csv")).unwrap();
    assert_eq!(models.lines().count(), 1 + 18);
    assert!(models.contains("\ngaussian-nb,") && models.contains("\nmlp,") && models.contains("\ns-mlp,"));

    ok(
        d,
        &with(&["compare-optimizers", "--dataset", "ds.tsv", "--out-dir", "curves", "--methods", "adam,constant-sgd"]),
    );
    let mut files: Vec<String> = fs::read_dir(d.join("curves"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["adam_f20.csv", "adam_f40.csv", "constant-sgd_f20.csv", "constant-sgd_f40.csv"]);
}

#[test]
fn seed_flag_makes_runs_repeatable() {
    let tmp = workspace();
    let d = tmp.path();
    for out in ["a.jsonl", "b.jsonl"] {
        ok(d, &["--config", "small.conf", "--seed", "9", "generate", "--out", out]);
    }
    ok(d, &["--config", "small.conf", "--seed", "10", "generate", "--out", "c.jsonl"]);
    let read = |f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_ne!(read("a.jsonl"), read("c.jsonl"));
}

#[test]
fn ingest_builds_instances_from_a_log() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let mut log = String::from("AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n");
    for day in 1..=20 {
        log.push_str(&format!("1\tsolar eclipse\t2006-03-{day:02} 09:00:00\t1\thttp://eclipse.example/\n"));
        log.push_str(&format!("2\teclipse glasses\t2006-03-{day:02} 10:00:00\t2\thttp://eclipse.example/\n"));
    }
    log.push_str("3\tbroken line\n");
    fs::write(d.join("log.tsv"), log).unwrap();
    fs::write(
        d.join("docs.tsv"),
        "# date\ttext\n2004-01-15\ta solar eclipse is coming\n2006-02-10\tsolar eclipse viewing tips\n",
    )
    .unwrap();
    fs::write(d.join("map.tsv"), "solar eclipse\t2006-03-29\t2006-03-18\tanticipated\n").unwrap();
    let stdout = ok(
        d,
        &["ingest", "--log", "log.tsv", "--docs", "docs.tsv", "--mapping", "map.tsv", "--out", "inst.jsonl"],
    );
    assert!(stdout.contains("1 instances") && stdout.contains("1 malformed"), "{stdout}");
    ok(d, &["extract", "--instances", "inst.jsonl", "--out", "ds.tsv"]);
}

#[test]
fn invalid_config_exits_with_2() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    for (name, text) in [
        ("unknown.conf", "no.such.key = 1\n"),
        ("badvalue.conf", "train.epochs = many\n"),
        ("badarch.conf", "model.architecture = 28-64-5\n"),
    ] {
        fs::write(d.join(name), text).unwrap();
        let out = smlp(d, &["--config", name, "generate", "--out", "x.jsonl"]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!d.join("x.jsonl").exists());
    }
}

#[test]
fn missing_input_exits_with_3() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let out = smlp(d, &["split", "--dataset", "absent.tsv", "--out", "s.txt"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.tsv"));
    let out = smlp(d, &["--config", "absent.conf", "generate", "--out", "x.jsonl"]);
    assert_ne!(out.status.code(), Some(0));
}
