//! Command line behavior on a small generated corpus.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FAST_CONFIG: &str = "\
paths.timed = timed
paths.punctuated = punct
paths.pretrained = pretrained.txt
paths.out = out
embeddings.dim = 16
embeddings.iters = 30
tagger.filters = 8
tagger.layers = 3x1,3x2
tagger.window = 100
tagger.epochs = 2
tagger.batch_size = 8
";

fn punctuate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_punctuate"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run punctuate")
}

fn ok(args: &[&str]) -> String {
    let out = punctuate(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], code: &str) -> String {
    let out = punctuate(args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with(&format!("error[{code}]: ")), "{args:?}: {err}");
    err
}

struct Sample {
    dir: TempDir,
}

impl Sample {
    fn new(conversations: usize) -> Self {
        let dir = TempDir::new().unwrap();
        let path = dir.path().to_str().unwrap().to_string();
        ok(&["make-sample", &path, "--conversations", &conversations.to_string()]);
        fs::write(dir.path().join("pipeline.conf"), FAST_CONFIG).unwrap();
        Sample { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn arg(&self, rel: &str) -> String {
        self.path(rel).to_str().unwrap().to_string()
    }

    fn run(&self, cmd: &[&str]) -> String {
        let conf = self.arg("pipeline.conf");
        let mut args = vec!["--config", conf.as_str()];
        args.extend_from_slice(cmd);
        ok(&args)
    }
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn prepare_writes_dataset_and_is_repeatable() {
    let s = Sample::new(10);
    s.run(&["prepare"]);
    let dist = read(&s.path("out/distribution.txt"));
    for sym in ["ε", ".", "?", ","] {
        assert!(dist.lines().any(|l| l.starts_with(&format!("{sym}\t"))), "{dist}");
    }
    let labeled = read(&s.path("out/labeled/conv001.tsv"));
    let first = labeled.lines().next().unwrap();
    assert_eq!(first.split('\t').count(), 5, "{first}");
    let splits: Vec<String> = ["train", "validation", "test"]
        .iter()
        .map(|p| read(&s.path(&format!("out/splits/{p}.txt"))))
        .collect();
    assert_eq!(splits.iter().map(|t| t.lines().count()).collect::<Vec<_>>(), [8, 1, 1]);
    s.run(&["prepare"]);
    for (p, before) in ["train", "validation", "test"].iter().zip(&splits) {
        assert_eq!(&read(&s.path(&format!("out/splits/{p}.txt"))), before);
    }
}

#[test]
fn mismatched_stems_are_listed() {
    let s = Sample::new(10);
    fs::remove_file(s.path("punct/conv003.txt")).unwrap();
    fs::write(s.path("punct/extra.txt"), "Hello.").unwrap();
    let conf = s.arg("pipeline.conf");
    let err = fails(&["--config", &conf, "prepare"], "stem-mismatch");
    assert!(err.contains("conv003") && err.contains("extra"), "{err}");
}

#[test]
fn config_errors_are_reported() {
    let s = Sample::new(10);
    let bad = s.path("bad.conf");
    fs::write(&bad, format!("{FAST_CONFIG}embeddings.mu = -1\n")).unwrap();
    fails(&["--config", bad.to_str().unwrap(), "retrofit"], "config");
    fs::write(&bad, format!("{FAST_CONFIG}tagger.colour = blue\n")).unwrap();
    let err = fails(&["--config", bad.to_str().unwrap(), "prepare"], "config");
    assert!(err.contains("tagger.colour"), "{err}");
    fs::write(&bad, FAST_CONFIG.replace("paths.pretrained = pretrained.txt\n", "")).unwrap();
    fails(&["--config", bad.to_str().unwrap(), "retrofit"], "config");
}

#[test]
fn stages_check_their_inputs() {
    let s = Sample::new(10);
    let conf = s.arg("pipeline.conf");
    fails(&["--config", &conf, "cooc"], "missing-input");
    fs::remove_file(s.path("pretrained.txt")).unwrap();
    s.run(&["prepare"]);
    s.run(&["cooc"]);
    fails(&["--config", &conf, "retrofit"], "missing-input");
}

#[test]
fn zero_mu_retrofit_equals_plain_training() {
    let s = Sample::new(10);
    fs::write(s.path("pipeline.conf"), format!("{FAST_CONFIG}embeddings.mu = 0\n")).unwrap();
    s.run(&["prepare"]);
    s.run(&["cooc"]);
    s.run(&["train-embeddings"]);
    s.run(&["retrofit"]);
    assert_eq!(
        read(&s.path("out/embeddings/trained.txt")),
        read(&s.path("out/embeddings/retrofitted.txt"))
    );
}

#[test]
fn full_chain_with_overrides() {
    let s = Sample::new(10);
    let out = s.arg("elsewhere");
    let conf = s.arg("pipeline.conf");
    let run = |cmd: &[&str]| {
        let mut args = vec!["--config", conf.as_str(), "--out", out.as_str(), "--seed", "3"];
        args.extend_from_slice(cmd);
        ok(&args)
    };
    for cmd in ["prepare", "cooc", "retrofit", "train-tagger"] {
        run(&[cmd]);
    }
    assert!(!s.path("out").exists());
    let log = read(&s.path("elsewhere/model/tagger.log"));
    let lrs: Vec<f64> = log.lines().map(|l| l.split('\t').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(lrs.len(), 2);
    assert!(lrs.windows(2).all(|w| w[1] <= w[0]));

    let summary = run(&["evaluate"]);
    assert!(summary.starts_with("tokens\t"), "{summary}");
    assert!(s.path("elsewhere/eval/confusion.tsv").exists());

    run(&["evaluate", "--self-test"]);
    let metrics = read(&s.path("elsewhere/eval/metrics.tsv"));
    for line in metrics.lines().skip(1) {
        let f1: f64 = line.split('\t').nth(3).unwrap().parse().unwrap();
        assert_eq!(f1, 1.0, "{line}");
    }

    let input = s.path("timed/conv002.txt");
    let text = run(&["predict", input.to_str().unwrap()]);
    let tokens = read(&input).lines().filter(|l| !l.trim().is_empty()).count();
    assert_eq!(text.split_whitespace().count(), tokens);

    let pairs = s.path("pairs.txt");
    fs::write(&pairs, "okay | okay\ncancel | cancer\n").unwrap();
    let report = run(&["similarity", pairs.to_str().unwrap()]);
    assert!(report.contains("okay | okay\t1.0000\t1.0000"), "{report}");
    assert_eq!(read(&s.path("elsewhere/similarity.tsv")), report);
    fs::write(&pairs, "okay | zebra crossing\n").unwrap();
    let err = fails(&["--config", &conf, "--out", &out, "similarity", pairs.to_str().unwrap()], "oov");
    assert!(err.contains("zebra") && err.contains("crossing"), "{err}");
}

#[test]
fn bundled_sample_matches_generator() {
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample");
    let fresh = TempDir::new().unwrap();
    ok(&["make-sample", fresh.path().to_str().unwrap()]);
    let mut compared = 0;
    for sub in ["", "timed", "punct"] {
        for entry in fs::read_dir(fresh.path().join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                let rel = path.strip_prefix(fresh.path()).unwrap();
                assert_eq!(read(&bundled.join(rel)), read(&path), "{}", rel.display());
                compared += 1;
            }
        }
    }
    assert_eq!(compared, 3 + 2 * 30);
}
