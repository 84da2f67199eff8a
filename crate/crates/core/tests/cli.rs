//! End-to-end runs of the `hatespeech` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hatespeech::cli::{read_manifest, sha256_file};
use hatespeech::corpus::{parse_hasoc, parse_olid, Task};
use hatespeech::synthetic::{generate, write_hasoc_tsv, SyntheticConfig};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hatespeech"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&[]).status.code(), Some(2));
    assert_eq!(bin(&["train"]).status.code(), Some(2));
    let help = bin(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for cmd in ["preprocess", "augment", "train", "eval", "explain", "report"] {
        assert!(stdout(&help).contains(cmd), "{cmd}");
    }
}

#[test]
fn preprocess_keeps_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("clean.tsv");
    let input = data("olid_sample.tsv");
    let before = sha256_file(&input).unwrap();
    let o = bin(&["preprocess", "--data", s(&input), "--task", "olid-b", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(sha256_file(&input).unwrap(), before);

    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n"));
    let cleaned = parse_olid(&out, Task::B).unwrap();
    let original = parse_olid(&input, Task::B).unwrap();
    assert_eq!(cleaned.len(), original.len());
    for (a, b) in cleaned.samples.iter().zip(&original.samples) {
        assert_eq!(a.raw_text, b.clean.as_str());
        assert_eq!(a.label, b.label);
    }
}

#[test]
fn augment_writes_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("aug.csv");
    let o = bin(&[
        "augment",
        "--data",
        s(&data("hasoc_sample.csv")),
        "--task",
        "hasoc-a",
        "--out",
        s(&out),
        "--lexicon",
        s(&data("lexicon/sample_terms.txt")),
        "--removals",
        s(&data("lexicon/sample_removals.txt")),
        "--continuations",
        s(&data("continuations.tsv")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("_id,text,task_1,task_2,provenance\n"));
    assert_eq!(text.matches(",generated\n").count(), 3);

    let merged = parse_hasoc(&out, Task::A).unwrap();
    let original = parse_hasoc(&data("hasoc_sample.csv"), Task::A).unwrap();
    assert!(merged.len() <= 3 * original.len());
    let mut texts: Vec<&str> = merged.samples.iter().map(|s| s.clean.as_str()).collect();
    texts.sort_unstable();
    texts.dedup();
    assert_eq!(texts.len(), merged.len());
    assert!(texts.contains(&"shoot now asshole booking was successful reference number is nlqra"));

    // refusing to overwrite the input, and needing a technique
    let o = bin(&[
        "augment",
        "--data",
        s(&out),
        "--task",
        "hasoc-a",
        "--out",
        s(&out),
        "--continuations",
        s(&data("continuations.tsv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin(&[
        "augment",
        "--data",
        s(&data("hasoc_sample.csv")),
        "--task",
        "hasoc-a",
        "--out",
        s(&dir.path().join("x.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

fn write_run(dir: &Path, extra: &str) -> PathBuf {
    let corpus = generate(&SyntheticConfig {
        train_size: 300,
        test_size: 100,
        ..SyntheticConfig::default()
    });
    write_hasoc_tsv(&corpus.train, &dir.join("train.tsv")).unwrap();
    write_hasoc_tsv(&corpus.test, &dir.join("test.tsv")).unwrap();
    let cfg = dir.join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# small synthetic run\n\
             data.train = train.tsv\n\
             data.test = test.tsv\n\
             data.task = hasoc-a\n\
             model.kind = bilstm\n\
             model.embed_dim = 16\n\
             model.hidden = 8\n\
             train.epochs = 2\n\
             train.seeds = 3, 4\n\
             output.dir = run\n\
             {extra}"
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn train_eval_explain_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_run(dir.path(), "");
    let train_digest = sha256_file(&dir.path().join("train.tsv")).unwrap();

    let o = bin(&["train", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("macro F1"));
    let run = dir.path().join("run");
    for f in [
        "manifest.json",
        "report.txt",
        "seed-3/model.ckpt",
        "seed-3/history.jsonl",
        "seed-4/model.ckpt",
    ] {
        assert!(run.join(f).exists(), "{f}");
    }
    assert_eq!(
        fs::read_to_string(run.join("seed-3/history.jsonl"))
            .unwrap()
            .lines()
            .count(),
        2
    );

    let manifest = read_manifest(&run).unwrap();
    assert_eq!(manifest.seeds, vec![3, 4]);
    assert_eq!(manifest.inputs.len(), 2);
    assert_eq!(manifest.inputs[0].sha256, train_digest);
    assert_eq!(sha256_file(&dir.path().join("train.tsv")).unwrap(), train_digest);
    assert_eq!(manifest.train_size + manifest.dev_size, 300);

    // same configuration, same bytes
    let first = fs::read(run.join("seed-3/model.ckpt")).unwrap();
    let o = bin(&["train", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(run.join("seed-3/model.ckpt")).unwrap(), first);
    assert_eq!(read_manifest(&run).unwrap(), manifest);

    let ckpt = run.join("seed-3/model.ckpt");
    let o = bin(&[
        "eval",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&dir.path().join("test.tsv")),
        "--task",
        "hasoc-a",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("macro F1") && out.contains(" (0)"), "{out}");
    assert!(out.contains("misclassified"));

    let html = dir.path().join("html");
    let o = bin(&[
        "explain",
        "--checkpoint",
        s(&ckpt),
        "--text",
        "some words here",
        "--out",
        s(&html),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(html.join("report-001.html").exists() && html.join("index.html").exists());

    let o = bin(&["report", s(&run), s(&run.join("manifest.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).matches("BiLSTM hasoc-a (2 runs)").count(), 2);
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("bogus.ckpt");
    fs::write(&bogus, b"not a model").unwrap();
    let o = bin(&["explain", "--checkpoint", s(&bogus), "--text", "hello"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus.ckpt"));

    let cfg = write_run(dir.path(), "train.batch_size = lots\n");
    let o = bin(&["train", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("train.batch_size"), "{}", stderr(&o));
}
