use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn segrefine(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_segrefine"));
    cmd.args(args).env_remove("SEGREFINE_CONFIG");
    if let Some(c) = config {
        cmd.env("SEGREFINE_CONFIG", c);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str], config: Option<&Path>) -> String {
    let out = segrefine(args, config);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

struct Workdir {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Workdir {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        Workdir { _tmp: tmp, root }
    }

    fn p(&self, name: &str) -> String {
        self.root.join(name).to_str().unwrap().to_string()
    }
}

/// Runs every stage by hand on a small synthetic corpus.
fn build(w: &Workdir) {
    let out = w.p("data");
    ok(
        &[
            "synth-gen",
            "--out-dir",
            &out,
            "--train",
            "300",
            "--dev",
            "40",
            "--test",
            "40",
            "--vocab-size",
            "60",
            "--alphabet",
            "80",
            "--seed",
            "3",
            "--p-merge",
            "0.1",
            "--p-split",
            "0.1",
        ],
        None,
    );
    let cfg = w.root.join("data/config.toml");
    let cfg = Some(cfg.as_path());
    ok(
        &[
            "train-baseline",
            "--train",
            &w.p("data/train.txt"),
            "--model",
            &w.p("perc.txt"),
            "--dict",
            &w.p("dict.txt"),
            "--epochs",
            "3",
            "--seed",
            "1",
        ],
        cfg,
    );
    ok(
        &[
            "learn-bpe",
            "--input",
            &w.p("data/train.txt"),
            "--merges",
            "80",
            "--out",
            &w.p("bpe.txt"),
        ],
        cfg,
    );
    ok(
        &[
            "make-labels",
            "--gold",
            &w.p("data/train.txt"),
            "--baseline",
            &w.p("data/train.baseline.txt"),
            "--bpe",
            &w.p("bpe.txt"),
            "--out-tokens",
            &w.p("tok.txt"),
            "--out-features",
            &w.p("feat.txt"),
            "--out-labels",
            &w.p("lab.txt"),
        ],
        cfg,
    );
    ok(
        &[
            "train-refiner",
            "--tokens",
            &w.p("tok.txt"),
            "--features",
            &w.p("feat.txt"),
            "--labels",
            &w.p("lab.txt"),
            "--dev-gold",
            &w.p("data/dev.txt"),
            "--dev-input",
            &w.p("data/dev.baseline.txt"),
            "--bpe",
            &w.p("bpe.txt"),
            "--model-out",
            &w.p("tagger.bin"),
            "--vocab-out",
            &w.p("vocab.txt"),
            "--seed",
            "5",
            "--epochs",
            "3",
            "--hidden",
            "16",
            "--layers",
            "2",
            "--batch",
            "16",
        ],
        cfg,
    );
}

#[test]
fn pipeline_equals_composition_and_reruns_are_identical() {
    let w = Workdir::new();
    build(&w);
    let cfg_path = w.root.join("data/config.toml");
    let cfg = Some(cfg_path.as_path());

    ok(
        &[
            "segment-baseline",
            "--model",
            &w.p("perc.txt"),
            "--dict",
            &w.p("dict.txt"),
            "--input",
            &w.p("data/test.txt"),
            "--out",
            &w.p("test.base.txt"),
        ],
        cfg,
    );
    ok(
        &[
            "refine",
            "--model",
            &w.p("tagger.bin"),
            "--vocab",
            &w.p("vocab.txt"),
            "--bpe",
            &w.p("bpe.txt"),
            "--input",
            &w.p("test.base.txt"),
            "--out",
            &w.p("test.ref.txt"),
        ],
        cfg,
    );
    ok(
        &[
            "pipeline",
            "--baseline-model",
            &w.p("perc.txt"),
            "--dict",
            &w.p("dict.txt"),
            "--bpe",
            &w.p("bpe.txt"),
            "--model",
            &w.p("tagger.bin"),
            "--vocab",
            &w.p("vocab.txt"),
            "--input",
            &w.p("data/test.txt"),
            "--out",
            &w.p("test.pipe.txt"),
        ],
        cfg,
    );
    let composed = fs::read(w.p("test.ref.txt")).unwrap();
    assert!(!composed.is_empty());
    assert_eq!(fs::read(w.p("test.pipe.txt")).unwrap(), composed);

    let report = ok(
        &[
            "evaluate",
            "--gold",
            &w.p("data/test.txt"),
            "--pred",
            &w.p("test.pipe.txt"),
            "--train-vocab",
            &w.p("data/train.vocab.txt"),
        ],
        None,
    );
    assert!(report.starts_with("precision: "));

    let again = Workdir::new();
    build(&again);
    for f in [
        "data/train.txt",
        "data/test.baseline.txt",
        "perc.txt",
        "bpe.txt",
        "tok.txt",
        "lab.txt",
        "tagger.bin",
        "vocab.txt",
    ] {
        assert_eq!(
            fs::read(w.p(f)).unwrap(),
            fs::read(again.p(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn apply_bpe_writes_parallel_files() {
    let w = Workdir::new();
    fs::write(w.p("c.txt"), "ab cd ab\nabc\n").unwrap();
    ok(
        &[
            "learn-bpe",
            "--input",
            &w.p("c.txt"),
            "--merges",
            "1",
            "--out",
            &w.p("bpe.txt"),
        ],
        None,
    );
    assert_eq!(
        fs::read_to_string(w.p("bpe.txt")).unwrap(),
        "BPE v1 1\na b</w>\n"
    );
    ok(
        &[
            "apply-bpe",
            "--bpe",
            &w.p("bpe.txt"),
            "--input",
            &w.p("c.txt"),
            "--out",
            &w.p("t.txt"),
            "--features",
            &w.p("f.txt"),
        ],
        None,
    );
    assert_eq!(
        fs::read_to_string(w.p("t.txt")).unwrap(),
        "ab c@@ d ab\na@@ b@@ c\n"
    );
    assert_eq!(
        fs::read_to_string(w.p("f.txt")).unwrap(),
        "0 1 1 0\n1 1 1\n"
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = segrefine(&["evaluate", "--frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn data_errors_name_the_file_and_line() {
    let w = Workdir::new();
    fs::write(w.p("g.txt"), "ab cd\nef\n").unwrap();
    fs::write(w.p("p.txt"), "ab cd\nfe\n").unwrap();
    fs::write(w.p("v.txt"), "ab\n").unwrap();
    let out = segrefine(
        &[
            "evaluate",
            "--gold",
            &w.p("g.txt"),
            "--pred",
            &w.p("p.txt"),
            "--train-vocab",
            &w.p("v.txt"),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains(&format!("{}:2:", w.p("p.txt"))), "{err}");

    fs::write(w.p("bad.txt"), "ab\n\ncd\n").unwrap();
    let out = segrefine(
        &[
            "learn-bpe",
            "--input",
            &w.p("bad.txt"),
            "--merges",
            "3",
            "--out",
            &w.p("b.txt"),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("{}:2:", w.p("bad.txt"))));
}

#[test]
fn bad_config_is_reported() {
    let w = Workdir::new();
    fs::write(w.p("cfg.toml"), "[tagger]\nhiden = 3\n").unwrap();
    fs::write(w.p("c.txt"), "ab\n").unwrap();
    let cfg = w.root.join("cfg.toml");
    let out = segrefine(
        &[
            "learn-bpe",
            "--input",
            &w.p("c.txt"),
            "--out",
            &w.p("b.txt"),
        ],
        Some(&cfg),
    );
    assert_eq!(out.status.code(), Some(1));
}
