//! Subcommand implementations. Each returns its results so callers other
//! than the binary can drive the pipeline.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use speechcmd_core::augment::augment_pipeline;
use speechcmd_core::dataset::{
    apply_cleaning, assign_folds, report_from_peaks, ClassLabel, CleanReport, Manifest, ManifestEntry, NUM_CLASSES,
};
use speechcmd_core::eval::{apply_unknown_threshold, confusion_matrix, ensemble_mean, predict_batch, ConfusionMatrix, Prediction};
use speechcmd_core::nn::{train, Model, TrainReport};
use speechcmd_core::rng;
use speechcmd_core::wav_io::{is_silence_candidate, peak_volume};
use speechcmd_core::AudioClip;

use crate::checkpoint;
use crate::config::ToolkitConfig;
use crate::corpus::{add_background_fragments, class_summary, read_wav, scan_corpus, write_wav, ClipStore};
use crate::error::{Error, IoContext, Result};
use crate::features::{eval_samples, FeatureConfig, PipelineSource, Representation};
use crate::manifest_csv;
use crate::ppm;
use crate::predictions::{self, PredictionRow};
use crate::synth::{synth_corpus, SynthConfig, SynthSummary};

pub const CHECKPOINT_FILE: &str = "model.scnn";
pub const METRICS_FILE: &str = "metrics.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const CONFUSION_FILE: &str = "confusion.csv";

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    let dir = parent_dir(path);
    std::fs::create_dir_all(&dir).at(&dir)
}

fn wav_err(path: &Path) -> impl Fn(speechcmd_core::wav_io::WavError) -> Error + '_ {
    move |source| Error::Wav { path: path.display().to_string(), source }
}

fn store_for(config: &ToolkitConfig) -> ClipStore {
    ClipStore::new(config.features.stft.sample_rate as usize)
}

pub fn cmd_synth(out_dir: &Path, n_per_class: usize, config: &ToolkitConfig) -> Result<SynthSummary> {
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be positive".into()));
    }
    let summary = synth_corpus(out_dir, &SynthConfig::new(n_per_class, config.seed))?;
    config.echo_into(out_dir)?;
    Ok(summary)
}

/// Clip statistics as text; optionally renders the configured representation
/// of the whole clip to a PPM image.
pub fn cmd_inspect(wav: &Path, config: &ToolkitConfig, plot: Option<&Path>) -> Result<String> {
    let clip = read_wav(wav)?;
    let peak = peak_volume(&clip).map_err(wav_err(wav))?;
    let silent = is_silence_candidate(&clip, config.silence_threshold).map_err(wav_err(wav))?;
    let mut out = String::new();
    let _ = writeln!(out, "path: {}", wav.display());
    let _ = writeln!(out, "sample_rate: {}", clip.sample_rate);
    let _ = writeln!(out, "samples: {}", clip.len());
    let _ = writeln!(out, "duration_s: {:.4}", clip.duration_secs());
    let _ = writeln!(out, "peak: {peak:.6}");
    let _ = writeln!(out, "silence_candidate: {silent}");
    if let Some(name) = wav.file_name().and_then(|n| n.to_str()) {
        if let Ok(id) = speechcmd_core::dataset::speaker_id(name) {
            let _ = writeln!(out, "speaker_id: {id}");
        }
    }
    if let Some(plot) = plot {
        // A waveform has no image of its own; plot its log-spectrogram.
        let mut features = config.features.clone();
        if features.representation == Representation::Wave {
            features.representation = Representation::LogSpec;
        }
        let map = features.map(&clip.samples)?;
        let _ = writeln!(out, "feature: {} {}x{}", map.kind.name(), map.rows, map.cols);
        ensure_parent(plot)?;
        std::fs::write(plot, ppm::render(&map)).at(plot)?;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SplitSummary {
    pub manifest: Manifest,
    pub silence_fragments: usize,
    pub skipped: Vec<(PathBuf, String)>,
}

/// Scans the corpus, adds silence fragments and assigns speaker-disjoint folds.
pub fn cmd_split(corpus: &Path, out_manifest: &Path, config: &ToolkitConfig) -> Result<SplitSummary> {
    let scan = scan_corpus(corpus)?;
    let mut manifest = scan.manifest;
    let store = store_for(config);
    let cap = config.cap_silence.then(|| manifest.median_class_count());
    let silence_fragments = add_background_fragments(&mut manifest, &store, cap)?;
    let manifest = assign_folds(&manifest, config.n_folds, config.seed)?;
    ensure_parent(out_manifest)?;
    manifest_csv::write(&manifest, out_manifest)?;
    config.echo_into(&parent_dir(out_manifest))?;
    Ok(SplitSummary { manifest, silence_fragments, skipped: scan.skipped })
}

pub fn split_report(summary: &SplitSummary) -> String {
    let m = &summary.manifest;
    let mut s = format!("entries: {}\nsilence_fragments: {}\n", m.entries.len(), summary.silence_fragments);
    for f in 0..m.n_folds as i32 {
        let _ = writeln!(s, "fold {f}: {} entries", m.fold_entries(f).count());
    }
    s.push_str(&class_summary(m));
    for (p, why) in &summary.skipped {
        let _ = writeln!(s, "skipped {}: {why}", p.display());
    }
    s
}

/// Ranks clips by peak volume and writes `path,peak,proposed` to
/// `report_path`. With `apply_to`, also writes the relabeled manifest there.
pub fn cmd_clean(
    manifest_path: &Path,
    config: &ToolkitConfig,
    report_path: &Path,
    apply_to: Option<&Path>,
) -> Result<CleanReport> {
    let manifest = manifest_csv::read(manifest_path)?;
    let store = store_for(config);
    let peaks = manifest
        .entries
        .par_iter()
        .map(|e| {
            let clip = store.get(&e.path)?;
            peak_volume(&clip).map_err(|source| Error::Wav { path: e.path.clone(), source })
        })
        .collect::<Result<Vec<f32>>>()?;
    let report = report_from_peaks(&manifest, &peaks, config.silence_threshold);
    let proposed: std::collections::HashSet<&str> =
        report.proposed.iter().map(|&i| manifest.entries[i].path.as_str()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["path", "peak", "proposed"]).expect("in-memory write");
    for (path, peak) in &report.ranked {
        w.write_record([path.as_str(), &peak.to_string(), if proposed.contains(path.as_str()) { "1" } else { "0" }])
            .expect("in-memory write");
    }
    ensure_parent(report_path)?;
    std::fs::write(report_path, w.into_inner().expect("in-memory flush")).at(report_path)?;
    if let Some(out) = apply_to {
        ensure_parent(out)?;
        manifest_csv::write(&apply_cleaning(&manifest, &report), out)?;
    }
    config.echo_into(&parent_dir(report_path))?;
    Ok(report)
}

/// File name for a manifest path: separators become `__`, a fragment index
/// becomes `_frag<i>`.
pub fn feature_file_stem(path: &str) -> String {
    let mut s = path.replace('#', "_frag").replace(['/', '\\'], "__").replace(':', "_");
    while s.starts_with('.') || s.starts_with('_') {
        s.remove(0);
    }
    s.strip_suffix(".wav").map(str::to_string).unwrap_or(s)
}

/// One SCFT file per entry (and a PPM per entry with `plot`), computed in
/// parallel with deterministic names.
pub fn cmd_featurize(manifest_path: &Path, config: &ToolkitConfig, out_dir: &Path, plot: bool) -> Result<usize> {
    config.features.validate()?;
    let manifest = manifest_csv::read(manifest_path)?;
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let store = store_for(config);
    let fc = &config.features;
    manifest.entries.par_iter().try_for_each(|e| -> Result<()> {
        let clip = store.get(&e.path)?;
        let samples = eval_samples(&clip, fc.input_samples());
        let stem = feature_file_stem(&e.path);
        let tensor = fc.tensor(&samples)?;
        let path = out_dir.join(format!("{stem}.scft"));
        std::fs::write(&path, tensor.to_bytes()).at(&path)?;
        if plot && fc.representation != Representation::Wave {
            let img = out_dir.join(format!("{stem}.ppm"));
            std::fs::write(&img, ppm::render(&fc.map(&samples)?)).at(&img)?;
        }
        Ok(())
    })?;
    config.echo_into(out_dir)?;
    Ok(manifest.entries.len())
}

fn load_noise_dir(dir: &Path) -> Result<Vec<AudioClip>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .at(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .at(dir)?;
    paths.retain(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")));
    paths.sort();
    paths.iter().map(|p| read_wav(p)).collect()
}

/// Writes `count` augmented variants of `wav` as `<stem>_aug<k>.wav`. Variant
/// `k` uses random stream `k` of `augment.seed`.
pub fn cmd_augment_preview(
    wav: &Path,
    noise_dir: Option<&Path>,
    count: usize,
    out_dir: &Path,
    config: &ToolkitConfig,
) -> Result<Vec<PathBuf>> {
    let clip = read_wav(wav)?;
    let pool = match noise_dir {
        Some(d) => load_noise_dir(d)?,
        None => Vec::new(),
    };
    let mut aug = config.augment;
    if pool.is_empty() {
        aug.noise_max = 0.0;
    }
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let stem = wav.file_stem().map_or("clip".into(), |s| s.to_string_lossy().into_owned());
    let mut written = Vec::with_capacity(count);
    for k in 0..count {
        let mut r = rng::stream(aug.seed, k as u64);
        let samples = augment_pipeline(&clip, &pool, &aug, &mut r)?;
        let out = out_dir.join(format!("{stem}_aug{k}.wav"));
        write_wav(&clip.with_samples(samples), &out)?;
        written.push(out);
    }
    config.echo_into(out_dir)?;
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub checkpoint: PathBuf,
    pub model: Model<f32>,
}

fn metrics_csv(report: &TrainReport) -> String {
    let opt = |v: Option<f32>| v.map_or(String::new(), |x| x.to_string());
    let mut s = String::from("epoch,train_loss,train_accuracy,heldout_accuracy\n");
    for e in &report.epochs {
        let _ = writeln!(s, "{},{},{},{}", e.epoch, e.train_loss, opt(e.train_accuracy), opt(e.heldout_accuracy));
    }
    s
}

fn noise_pool(manifest: &Manifest, store: &ClipStore) -> Result<Vec<AudioClip>> {
    manifest.silence_sources.iter().map(|p| store.get(p).map(|c| (*c).clone())).collect()
}

/// Trains the configured model with `train.fold_out` held out and writes
/// `model.scnn` and `metrics.csv` into `out_dir`.
pub fn cmd_train(manifest_path: &Path, config: &ToolkitConfig, out_dir: &Path) -> Result<TrainOutcome> {
    config.validate_model()?;
    let manifest = manifest_csv::read(manifest_path)?;
    let store = store_for(config);
    let paths: Vec<&str> = manifest.entries.iter().map(|e| e.path.as_str()).collect();
    store.preload(&paths)?;
    let pool = noise_pool(&manifest, &store)?;
    let mut aug = config.augment;
    if pool.is_empty() {
        aug.noise_max = 0.0;
    }
    let mut source = PipelineSource {
        store: &store,
        noise_pool: &pool,
        features: config.features.clone(),
        augment: config.train.augment.then_some(aug),
    };
    let mut model = Model::new(&config.model_spec()?, config.seed)?;
    let fold_out = (config.train.fold_out >= 0).then_some(config.train.fold_out);
    let report = train(&mut model, &manifest, fold_out, &mut source, &config.train_config()).map_err(|e| match e {
        speechcmd_core::nn::TrainError::Features(inner) => inner,
        other => Error::Train(other.to_string()),
    })?;
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let ckpt = out_dir.join(CHECKPOINT_FILE);
    checkpoint::save(&model, &ckpt)?;
    let metrics = out_dir.join(METRICS_FILE);
    std::fs::write(&metrics, metrics_csv(&report)).at(&metrics)?;
    config.echo_into(out_dir)?;
    Ok(TrainOutcome { report, checkpoint: ckpt, model })
}

/// What to run a checkpoint over.
#[derive(Debug, Clone)]
pub enum PredictInputs {
    /// Manifest entries, optionally only one fold; `fname` is the entry path.
    Manifest { path: PathBuf, fold: Option<i32> },
    /// Every `.wav` in a directory; `fname` is the file name.
    Directory(PathBuf),
}

fn check_input_shape(model: &Model<f32>, features: &FeatureConfig) -> Result<()> {
    let want = features.input_shape();
    if model.input_shape() != want.as_slice() {
        return Err(Error::InvalidArgument(format!(
            "checkpoint expects input {:?} but the feature config yields {want:?}",
            model.input_shape()
        )));
    }
    Ok(())
}

/// Softmax predictions of `model` for `(fname, clip path)` pairs, computed
/// in parallel chunks and returned in input order.
pub fn predict_paths(
    model: &Model<f32>,
    items: &[(String, String)],
    store: &ClipStore,
    features: &FeatureConfig,
    source_model: &str,
) -> Result<Vec<Prediction>> {
    check_input_shape(model, features)?;
    let chunks: Vec<Result<Vec<Prediction>>> = items
        .par_chunks(16)
        .map(|chunk| {
            let mut m = model.clone();
            let feats = chunk
                .iter()
                .map(|(_, p)| {
                    let clip = store.get(p)?;
                    features.extract(&eval_samples(&clip, features.input_samples()))
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&[f32]> = feats.iter().map(Vec::as_slice).collect();
            Ok(predict_batch(&mut m, &refs, source_model)?)
        })
        .collect();
    let mut out = Vec::with_capacity(items.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

fn rows_from(items: &[(String, String)], preds: &[Prediction], tau: f32) -> Vec<PredictionRow> {
    items
        .iter()
        .zip(preds)
        .map(|((fname, _), p)| PredictionRow {
            fname: fname.clone(),
            label: ClassLabel::ALL[apply_unknown_threshold(p, tau)],
            probs: Some(p.probs),
        })
        .collect()
}

pub fn cmd_predict(
    checkpoint_path: &Path,
    inputs: &PredictInputs,
    config: &ToolkitConfig,
    out_csv: &Path,
) -> Result<Vec<PredictionRow>> {
    let model = checkpoint::load(checkpoint_path)?;
    let want = config.features.input_shape();
    if want != model.input_shape() {
        return Err(Error::InvalidArgument(format!(
            "{} features have shape {want:?} but the checkpoint expects {:?}",
            config.features.representation,
            model.input_shape()
        )));
    }
    let items: Vec<(String, String)> = match inputs {
        PredictInputs::Manifest { path, fold } => manifest_csv::read(path)?
            .entries
            .into_iter()
            .filter(|e| fold.is_none_or(|f| e.fold == f))
            .map(|e| (e.path.clone(), e.path))
            .collect(),
        PredictInputs::Directory(dir) => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .at(dir)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()
                .at(dir)?;
            files.retain(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")));
            files.sort();
            files
                .into_iter()
                .map(|p| {
                    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    (name, p.to_string_lossy().into_owned())
                })
                .collect()
        }
    };
    let store = store_for(config);
    let name = checkpoint_path.display().to_string();
    let preds = predict_paths(&model, &items, &store, &config.features, &name)?;
    let rows = rows_from(&items, &preds, config.unknown_threshold);
    ensure_parent(out_csv)?;
    predictions::write(&rows, out_csv)?;
    config.echo_into(&parent_dir(out_csv))?;
    Ok(rows)
}

/// Averages the probability columns of several prediction files. Every file
/// must list the same fnames; output follows the first file's row order.
pub fn ensemble_rows(files: &[(String, Vec<PredictionRow>)], tau: f32) -> Result<Vec<PredictionRow>> {
    let (_, first) = files.first().ok_or_else(|| Error::InvalidArgument("no prediction files given".into()))?;
    let mut tables = Vec::with_capacity(files.len());
    for (name, rows) in files {
        let mut table: HashMap<&str, [f32; NUM_CLASSES]> = HashMap::with_capacity(rows.len());
        for r in rows {
            let p = r
                .probs
                .ok_or_else(|| Error::MismatchedPredictionFiles(format!("{name} has no probability columns")))?;
            if table.insert(r.fname.as_str(), p).is_some() {
                return Err(Error::MismatchedPredictionFiles(format!("{name} lists {} twice", r.fname)));
            }
        }
        if rows.len() != first.len() {
            return Err(Error::MismatchedPredictionFiles(format!(
                "{name} has {} rows, expected {}",
                rows.len(),
                first.len()
            )));
        }
        tables.push((name.as_str(), table));
    }
    first
        .iter()
        .map(|r| {
            let members = tables
                .iter()
                .map(|(name, t)| {
                    let p = t.get(r.fname.as_str()).ok_or_else(|| {
                        Error::MismatchedPredictionFiles(format!("{name} has no row for {}", r.fname))
                    })?;
                    Ok(Prediction::new(*p, *name)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let mean = ensemble_mean(&members)?;
            Ok(PredictionRow {
                fname: r.fname.clone(),
                label: ClassLabel::ALL[apply_unknown_threshold(&mean, tau)],
                probs: Some(mean.probs),
            })
        })
        .collect()
}

pub fn cmd_ensemble(inputs: &[PathBuf], config: &ToolkitConfig, out_csv: &Path) -> Result<Vec<PredictionRow>> {
    let files = inputs
        .iter()
        .map(|p| Ok((p.display().to_string(), predictions::read(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let rows = ensemble_rows(&files, config.unknown_threshold)?;
    ensure_parent(out_csv)?;
    predictions::write(&rows, out_csv)?;
    config.echo_into(&parent_dir(out_csv))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
}

impl EvalReport {
    pub fn table(&self) -> String {
        let m = &self.confusion;
        let mut s = format!("accuracy: {:.4} ({}/{})\n\n{:<8} {:>6} {:>7} {:>8}\n", self.accuracy, m.correct(), m.total(), "class", "total", "correct", "recall");
        for c in ClassLabel::ALL {
            let total = m.row_total(c.index());
            let correct = m.counts[c.index()][c.index()];
            let recall = if total == 0 { String::from("-") } else { format!("{:.4}", correct as f64 / total as f64) };
            let _ = writeln!(s, "{:<8} {total:>6} {correct:>7} {recall:>8}", c.name());
        }
        s
    }

    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in ClassLabel::ALL {
            s.push(',');
            s.push_str(c.name());
        }
        s.push('\n');
        for c in ClassLabel::ALL {
            s.push_str(c.name());
            for v in &self.confusion.counts[c.index()] {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Scores `rows` against the classes recorded in `manifest`.
pub fn evaluate_rows(rows: &[PredictionRow], manifest: &Manifest) -> Result<EvalReport> {
    let truth: BTreeMap<&str, &ManifestEntry> = manifest.entries.iter().map(|e| (e.path.as_str(), e)).collect();
    let pairs = rows
        .iter()
        .map(|r| {
            let e = truth
                .get(r.fname.as_str())
                .ok_or_else(|| Error::InvalidArgument(format!("{} is not in the manifest", r.fname)))?;
            Ok((e.class.index(), r.label.index()))
        })
        .collect::<Result<Vec<_>>>()?;
    let confusion = confusion_matrix(&pairs)?;
    Ok(EvalReport { accuracy: confusion.accuracy(), confusion })
}

/// Writes `report.txt` and `confusion.csv` into `out_dir`.
pub fn cmd_eval(predictions_path: &Path, manifest_path: &Path, config: &ToolkitConfig, out_dir: &Path) -> Result<EvalReport> {
    let rows = predictions::read(predictions_path)?;
    let manifest = manifest_csv::read(manifest_path)?;
    let report = evaluate_rows(&rows, &manifest)?;
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let p = out_dir.join(REPORT_FILE);
    std::fs::write(&p, report.table()).at(&p)?;
    let p = out_dir.join(CONFUSION_FILE);
    std::fs::write(&p, report.confusion_csv()).at(&p)?;
    config.echo_into(out_dir)?;
    Ok(report)
}
