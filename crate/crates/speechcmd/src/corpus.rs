//! Corpus directory scanning and clip loading.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use speechcmd_core::dataset::{speaker_id, ClassLabel, Manifest, ManifestEntry, BACKGROUND_DIR};
use speechcmd_core::wav_io::parse_wav;
use speechcmd_core::AudioClip;

use crate::error::{Error, IoContext, Result};

/// Outcome of [`scan_corpus`]: the manifest plus files that were skipped.
#[derive(Debug, Default)]
pub struct ScanResult {
    pub manifest: Manifest,
    pub skipped: Vec<(PathBuf, String)>,
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().replace('\\', "/")
}

fn sorted_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .at(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .at(dir)?;
    out.sort();
    Ok(out)
}

fn is_wav(p: &Path) -> bool {
    p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

/// One entry per `<root>/<label>/<file>.wav`; `_background_noise_` files
/// become silence sources. Paths are `root` joined with the relative path.
/// Files whose names carry no speaker id are skipped and reported.
pub fn scan_corpus(root: &Path) -> Result<ScanResult> {
    let mut result = ScanResult::default();
    let mut entries = Vec::new();
    for dir in sorted_dir(root)? {
        if !dir.is_dir() {
            continue;
        }
        let label = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        for file in sorted_dir(&dir)?.into_iter().filter(|p| is_wav(p)) {
            if label == BACKGROUND_DIR {
                result.manifest.silence_sources.push(path_string(&file));
                continue;
            }
            let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            match speaker_id(&name) {
                Ok(id) => entries.push(ManifestEntry::new(path_string(&file), label.as_str(), id)),
                Err(e) => result.skipped.push((file.clone(), e.to_string())),
            }
        }
    }
    if entries.is_empty() && result.manifest.silence_sources.is_empty() {
        return Err(Error::EmptyCorpus(root.to_path_buf()));
    }
    result.manifest.entries = entries;
    Ok(result)
}

pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let bytes = std::fs::read(path).at(path)?;
    let mut clip = parse_wav(&bytes).map_err(|source| Error::Wav { path: path_string(path), source })?;
    clip.source_path = Some(path_string(path));
    Ok(clip)
}

pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<()> {
    std::fs::write(path, speechcmd_core::wav_io::write_wav(clip)).at(path)
}

/// Caches decoded recordings and serves manifest paths, including
/// `<recording>#<index>` fragments.
#[derive(Debug)]
pub struct ClipStore {
    fragment_samples: usize,
    cache: RwLock<HashMap<String, Arc<AudioClip>>>,
}

impl ClipStore {
    pub fn new(fragment_samples: usize) -> Self {
        ClipStore { fragment_samples, cache: RwLock::new(HashMap::new()) }
    }

    fn recording(&self, path: &str) -> Result<Arc<AudioClip>> {
        if let Some(c) = self.cache.read().expect("cache lock").get(path) {
            return Ok(c.clone());
        }
        let clip = Arc::new(read_wav(Path::new(path))?);
        self.cache.write().expect("cache lock").insert(path.to_string(), clip.clone());
        Ok(clip)
    }

    /// The clip for a manifest path.
    pub fn get(&self, path: &str) -> Result<Arc<AudioClip>> {
        let probe = ManifestEntry::new(path, "", "");
        match probe.fragment() {
            Some((rec, index)) => {
                let full = self.recording(rec)?;
                let start = index * self.fragment_samples;
                let end = start + self.fragment_samples;
                if end > full.len() {
                    return Err(Error::InvalidArgument(format!(
                        "fragment {index} of {rec} exceeds its {} samples",
                        full.len()
                    )));
                }
                let mut clip = full.with_samples(full.samples[start..end].to_vec());
                clip.source_path = Some(path.to_string());
                Ok(Arc::new(clip))
            }
            None => self.recording(path),
        }
    }

    /// Decodes every path in parallel, failing on the first error in input order.
    pub fn preload(&self, paths: &[&str]) -> Result<()> {
        let loaded: Vec<Result<()>> = paths
            .par_iter()
            .map(|p| {
                let rec = ManifestEntry::new(*p, "", "").fragment().map_or(*p, |(r, _)| r).to_string();
                self.recording(&rec).map(|_| ())
            })
            .collect();
        loaded.into_iter().collect()
    }
}

/// Adds silence entries cut from the background recordings: fragments are
/// taken round-robin across recordings until `cap` entries exist (`None`
/// takes every fragment).
pub fn add_background_fragments(manifest: &mut Manifest, store: &ClipStore, cap: Option<usize>) -> Result<usize> {
    let mut available = Vec::new();
    for rec in &manifest.silence_sources {
        available.push(store.recording(rec)?.len() / store.fragment_samples);
    }
    let sources = manifest.silence_sources.clone();
    let total: usize = available.iter().sum();
    let limit = cap.map_or(total, |c| c.min(total));
    let mut taken = vec![0usize; sources.len()];
    let mut added = 0;
    'outer: for round in 0.. {
        let mut progressed = false;
        for (i, _) in sources.iter().enumerate() {
            if added == limit {
                break 'outer;
            }
            if round < available[i] {
                taken[i] += 1;
                added += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    for (rec, &n) in sources.iter().zip(&taken) {
        manifest.add_silence_fragments(rec, n);
    }
    Ok(added)
}

/// Per-class counts as `label count` lines.
pub fn class_summary(manifest: &Manifest) -> String {
    let counts = manifest.class_counts();
    ClassLabel::ALL
        .iter()
        .map(|c| format!("{:<8} {}\n", c.name(), counts[c.index()]))
        .collect()
}
