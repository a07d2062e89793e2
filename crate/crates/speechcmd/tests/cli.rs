mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{bin, scratch};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).current_dir(dir).args(args).output().expect("spawn speechcmd")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const FAST: &[&str] = &[
    "--seed",
    "4",
    "--set",
    "model.width=1",
    "--set",
    "train.epochs=1",
    "--set",
    "train.batches_per_epoch=2",
    "--set",
    "train.batch_size=12",
];

fn with(prefix: &[&str], rest: &[&str]) -> Vec<String> {
    prefix.iter().chain(rest).map(|s| s.to_string()).collect()
}

fn ok_with(dir: &Path, prefix: &[&str], rest: &[&str]) -> String {
    let args = with(prefix, rest);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(dir, &refs)
}

#[test]
fn full_pipeline_on_a_tiny_corpus() {
    let tmp = scratch();
    let d = tmp.path();
    ok(d, &["synth", "--out", "corpus", "--n-per-class", "4"]);
    ok(d, &["split", "--corpus", "corpus", "--out", "split/manifest.csv"]);
    let manifest = fs::read_to_string(d.join("split/manifest.csv")).unwrap();
    assert!(manifest.lines().count() > 48);

    let wav = manifest.lines().nth(1).unwrap().split(',').next().unwrap().to_string();
    let info = ok(d, &["inspect", &wav, "--plot", "spec.ppm"]);
    assert!(!info.is_empty());
    assert!(fs::read(d.join("spec.ppm")).unwrap().starts_with(b"P6"));

    ok(d, &["featurize", "--manifest", "split/manifest.csv", "--out", "feats", "--repr", "mfcc"]);
    assert!(fs::read_dir(d.join("feats")).unwrap().count() >= 48);

    ok(d, &["augment-preview", &wav, "--out", "preview", "--count", "2", "--noise", "corpus/_background_noise_"]);
    let wavs = fs::read_dir(d.join("preview"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav"))
        .count();
    assert_eq!(wavs, 2);
    assert!(d.join("preview/effective_config").exists());

    ok_with(d, FAST, &["train", "--manifest", "split/manifest.csv", "--out", "run"]);
    for f in ["model.scnn", "metrics.csv", "effective_config"] {
        assert!(d.join("run").join(f).exists(), "missing {f}");
    }
    ok_with(d, FAST, &["predict", "--checkpoint", "run/model.scnn", "--manifest", "split/manifest.csv", "--fold", "0", "--out", "a.csv"]);
    ok_with(d, FAST, &["predict", "--checkpoint", "run/model.scnn", "--manifest", "split/manifest.csv", "--fold", "0", "--out", "b.csv"]);
    // Same checkpoint and inputs give byte-identical predictions.
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());

    // Features that don't fit the checkpoint are refused up front.
    let out = run(d, &["--set", "features.representation=mfcc", "predict", "--checkpoint", "run/model.scnn", "--dir", "corpus/yes", "--out", "c.csv"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error kind=invalid_argument "), "{err}");

    ok(d, &["ensemble", "a.csv", "b.csv", "--out", "ens.csv"]);
    let report = ok(d, &["eval", "--predictions", "ens.csv", "--manifest", "split/manifest.csv", "--out", "eval"]);
    assert!(report.starts_with("accuracy: "), "{report}");
    assert!(d.join("eval/confusion.csv").exists());
}

#[test]
fn split_is_idempotent() {
    let tmp = scratch();
    let d = tmp.path();
    ok(d, &["synth", "--out", "corpus", "--n-per-class", "3"]);
    ok(d, &["split", "--corpus", "corpus", "--out", "one.csv"]);
    ok(d, &["split", "--corpus", "corpus", "--out", "two.csv"]);
    assert_eq!(fs::read(d.join("one.csv")).unwrap(), fs::read(d.join("two.csv")).unwrap());
}

#[test]
fn errors_are_one_structured_line() {
    let tmp = scratch();
    let d = tmp.path();
    let out = run(d, &["inspect", "does_not_exist.wav"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error kind=io message=\""), "{err}");

    fs::write(d.join("bad.wav"), b"RIFF\0\0\0\0WAVE").unwrap();
    let out = run(d, &["inspect", "bad.wav"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error kind=wav "), "{err}");

    let out = run(d, &["--set", "model.nope=3", "synth", "--out", "c"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error kind=config "), "{err}");
    assert!(!d.join("c").exists());
}
