//! Corpus bookkeeping: the 12-class label map, speaker ids, speaker-disjoint
//! folds, low-volume cleaning and class-balanced batch sampling.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::rng::{self, Rng};
use crate::wav_io::{peak_volume, AudioClip, WavError};

pub const NUM_CLASSES: usize = 12;
/// Folder holding long background recordings.
pub const BACKGROUND_DIR: &str = "_background_noise_";
/// Speaker id given to silence fragments cut from background recordings.
pub const BACKGROUND_SPEAKER: &str = "_background_";
pub const UNASSIGNED_FOLD: i32 = -1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("filename {0:?} does not follow <speaker>_nohash_<n>.wav")]
    UnparseableFilename(String),
    #[error("entry {0:?} has no speaker id")]
    MissingSpeakerId(String),
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("batch size {0} is not a positive multiple of 12")]
    BatchNotMultipleOf12(usize),
    #[error("class {0} has no training entries")]
    ClassEmpty(ClassLabel),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("class index {0} out of range")]
    ClassIndexOutOfRange(usize),
}

/// The twelve competition classes, in their stable index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Yes,
    No,
    Up,
    Down,
    Left,
    Right,
    On,
    Off,
    Stop,
    Go,
    Silence,
    Unknown,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; NUM_CLASSES] = [
        ClassLabel::Yes,
        ClassLabel::No,
        ClassLabel::Up,
        ClassLabel::Down,
        ClassLabel::Left,
        ClassLabel::Right,
        ClassLabel::On,
        ClassLabel::Off,
        ClassLabel::Stop,
        ClassLabel::Go,
        ClassLabel::Silence,
        ClassLabel::Unknown,
    ];

    /// The ten spoken keywords.
    pub const KEYWORDS: [ClassLabel; 10] = [
        ClassLabel::Yes,
        ClassLabel::No,
        ClassLabel::Up,
        ClassLabel::Down,
        ClassLabel::Left,
        ClassLabel::Right,
        ClassLabel::On,
        ClassLabel::Off,
        ClassLabel::Stop,
        ClassLabel::Go,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self, DatasetError> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or(DatasetError::ClassIndexOutOfRange(index))
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Yes => "yes",
            ClassLabel::No => "no",
            ClassLabel::Up => "up",
            ClassLabel::Down => "down",
            ClassLabel::Left => "left",
            ClassLabel::Right => "right",
            ClassLabel::On => "on",
            ClassLabel::Off => "off",
            ClassLabel::Stop => "stop",
            ClassLabel::Go => "go",
            ClassLabel::Silence => "silence",
            ClassLabel::Unknown => "unknown",
        }
    }

    /// Parses a class name as printed by [`ClassLabel::name`].
    pub fn from_name(name: &str) -> Result<Self, DatasetError> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == name)
            .ok_or_else(|| DatasetError::UnknownClass(name.to_string()))
    }

    /// Total map from a corpus folder name: keywords to themselves, the
    /// background folder (and `silence`) to silence, everything else unknown.
    pub fn from_raw_label(raw: &str) -> Self {
        if raw == BACKGROUND_DIR {
            return ClassLabel::Silence;
        }
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == raw)
            .unwrap_or(ClassLabel::Unknown)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One labeled clip.
///
/// Silence fragments use `path` = `<recording>#<index>`; see
/// [`fragment_path`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub raw_label: String,
    pub class: ClassLabel,
    pub speaker_id: String,
    pub fold: i32,
}

impl ManifestEntry {
    pub fn new(path: impl Into<String>, raw_label: impl Into<String>, speaker_id: impl Into<String>) -> Self {
        let raw_label = raw_label.into();
        ManifestEntry {
            path: path.into(),
            class: ClassLabel::from_raw_label(&raw_label),
            raw_label,
            speaker_id: speaker_id.into(),
            fold: UNASSIGNED_FOLD,
        }
    }

    /// Splits a fragment path into recording path and fragment index.
    pub fn fragment(&self) -> Option<(&str, usize)> {
        let (base, idx) = self.path.rsplit_once('#')?;
        Some((base, idx.parse().ok()?))
    }
}

pub fn fragment_path(recording: &str, index: usize) -> String {
    format!("{recording}#{index}")
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub n_folds: usize,
    /// Background recordings available for silence fragments and noise mixing.
    pub silence_sources: Vec<String>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Manifest {
            entries,
            n_folds: 0,
            silence_sources: Vec::new(),
        }
    }

    /// Per-class entry counts, indexed by class.
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for e in &self.entries {
            counts[e.class.index()] += 1;
        }
        counts
    }

    pub fn fold_entries(&self, fold: i32) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.fold == fold)
    }

    /// Adds silence entries for fragments `0..n_fragments` of `recording`.
    pub fn add_silence_fragments(&mut self, recording: &str, n_fragments: usize) {
        for i in 0..n_fragments {
            self.entries.push(ManifestEntry {
                path: fragment_path(recording, i),
                raw_label: BACKGROUND_DIR.to_string(),
                class: ClassLabel::Silence,
                speaker_id: BACKGROUND_SPEAKER.to_string(),
                fold: UNASSIGNED_FOLD,
            });
        }
    }

    /// Median of the non-zero non-silence class counts (lower median).
    pub fn median_class_count(&self) -> usize {
        let counts = self.class_counts();
        let mut c: Vec<usize> = ClassLabel::ALL
            .iter()
            .filter(|&&l| l != ClassLabel::Silence)
            .map(|l| counts[l.index()])
            .filter(|&n| n > 0)
            .collect();
        if c.is_empty() {
            return 0;
        }
        c.sort_unstable();
        c[(c.len() - 1) / 2]
    }

    /// Returns the speakers found in more than one fold, ignoring the
    /// background pseudo-speaker and unassigned entries.
    pub fn speakers_in_multiple_folds(&self) -> Vec<String> {
        let mut seen: BTreeMap<&str, BTreeSet<i32>> = BTreeMap::new();
        for e in &self.entries {
            if e.speaker_id != BACKGROUND_SPEAKER && e.fold != UNASSIGNED_FOLD {
                seen.entry(e.speaker_id.as_str()).or_default().insert(e.fold);
            }
        }
        seen.into_iter()
            .filter(|(_, folds)| folds.len() > 1)
            .map(|(s, _)| s.to_string())
            .collect()
    }
}

/// Speaker id from a `<id>_nohash_<n>.wav` filename (a leading directory is
/// ignored).
pub fn speaker_id(filename: &str) -> Result<&str, DatasetError> {
    let name = filename.rsplit(['/', '\\']).next().unwrap_or(filename);
    let bad = || DatasetError::UnparseableFilename(filename.to_string());
    let (id, rest) = name.split_once("_nohash_").ok_or_else(bad)?;
    if id.is_empty() || id.contains('_') || rest.is_empty() {
        return Err(bad());
    }
    Ok(id)
}

/// Deals shuffled speakers round-robin into `k` folds.
///
/// Background fragments are not a real speaker: they are dealt round-robin one
/// fragment at a time so every fold gets silence examples.
pub fn assign_folds(manifest: &Manifest, k: usize, seed: u64) -> Result<Manifest, DatasetError> {
    if k < 2 {
        return Err(DatasetError::TooFewFolds(k));
    }
    let mut speakers = BTreeSet::new();
    for e in &manifest.entries {
        if e.speaker_id.is_empty() {
            return Err(DatasetError::MissingSpeakerId(e.path.clone()));
        }
        if e.speaker_id != BACKGROUND_SPEAKER {
            speakers.insert(e.speaker_id.as_str());
        }
    }
    let mut order: Vec<&str> = speakers.into_iter().collect();
    let mut rng = rng::seeded(seed);
    rng::shuffle(&mut rng, &mut order);
    let fold_of: BTreeMap<&str, i32> = order
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, (i % k) as i32))
        .collect();

    let mut out = manifest.clone();
    out.n_folds = k;
    let mut background = 0usize;
    for e in &mut out.entries {
        e.fold = if e.speaker_id == BACKGROUND_SPEAKER {
            background += 1;
            ((background - 1) % k) as i32
        } else {
            fold_of[e.speaker_id.as_str()]
        };
    }
    Ok(out)
}

/// Outcome of a low-volume scan; nothing is changed until
/// [`apply_cleaning`] is called.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CleanReport {
    /// Indices of entries proposed for relabeling as silence.
    pub proposed: Vec<usize>,
    /// `(path, peak)` for every entry, ascending by peak.
    pub ranked: Vec<(String, f32)>,
}

#[derive(Debug, Error)]
pub enum CleanError<E> {
    #[error("loading {path}: {source}")]
    Load { path: String, source: E },
    #[error("{path}: {source}")]
    Wav { path: String, source: WavError },
}

/// Ranks entries by peak volume and proposes those under `threshold`.
pub fn clean_low_volume<E, F>(
    manifest: &Manifest,
    threshold: f32,
    mut loader: F,
) -> Result<CleanReport, CleanError<E>>
where
    F: FnMut(&ManifestEntry) -> Result<AudioClip, E>,
{
    let mut peaks = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let clip = loader(e).map_err(|source| CleanError::Load {
            path: e.path.clone(),
            source,
        })?;
        let peak = peak_volume(&clip).map_err(|source| CleanError::Wav {
            path: e.path.clone(),
            source,
        })?;
        peaks.push(peak);
    }
    Ok(report_from_peaks(manifest, &peaks, threshold))
}

/// Builds the report from precomputed peaks (one per entry, same order).
pub fn report_from_peaks(manifest: &Manifest, peaks: &[f32], threshold: f32) -> CleanReport {
    let proposed = peaks
        .iter()
        .enumerate()
        .filter(|(i, &p)| p < threshold && manifest.entries[*i].class != ClassLabel::Silence)
        .map(|(i, _)| i)
        .collect();
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| peaks[a].total_cmp(&peaks[b]).then(a.cmp(&b)));
    CleanReport {
        proposed,
        ranked: order
            .into_iter()
            .map(|i| (manifest.entries[i].path.clone(), peaks[i]))
            .collect(),
    }
}

/// Relabels the proposed entries as silence.
pub fn apply_cleaning(manifest: &Manifest, report: &CleanReport) -> Manifest {
    let mut out = manifest.clone();
    for &i in &report.proposed {
        if let Some(e) = out.entries.get_mut(i) {
            e.class = ClassLabel::Silence;
        }
    }
    out
}

/// Endless stream of class-balanced batches over the training folds.
///
/// Each class keeps its own shuffled deck; a deck that runs out is reshuffled
/// and dealing continues.
#[derive(Debug)]
pub struct BalancedBatches<'a> {
    manifest: &'a Manifest,
    decks: Vec<Vec<usize>>,
    cursors: Vec<usize>,
    per_class: usize,
    rng: Rng,
}

impl<'a> BalancedBatches<'a> {
    pub fn new(
        manifest: &'a Manifest,
        fold_out: Option<i32>,
        batch_size: usize,
        rng: Rng,
    ) -> Result<Self, DatasetError> {
        if batch_size == 0 || batch_size % NUM_CLASSES != 0 {
            return Err(DatasetError::BatchNotMultipleOf12(batch_size));
        }
        let mut decks: Vec<Vec<usize>> = (0..NUM_CLASSES).map(|_| Vec::new()).collect();
        for (i, e) in manifest.entries.iter().enumerate() {
            if Some(e.fold) != fold_out {
                decks[e.class.index()].push(i);
            }
        }
        if let Some(c) = decks.iter().position(Vec::is_empty) {
            return Err(DatasetError::ClassEmpty(ClassLabel::ALL[c]));
        }
        let mut batches = BalancedBatches {
            manifest,
            decks,
            cursors: alloc::vec![0; NUM_CLASSES],
            per_class: batch_size / NUM_CLASSES,
            rng,
        };
        for c in 0..NUM_CLASSES {
            rng::shuffle(&mut batches.rng, &mut batches.decks[c]);
        }
        Ok(batches)
    }

    /// Entries per class in each batch.
    pub fn per_class(&self) -> usize {
        self.per_class
    }

    /// Number of training entries per class.
    pub fn class_sizes(&self) -> [usize; NUM_CLASSES] {
        let mut out = [0; NUM_CLASSES];
        for (c, d) in self.decks.iter().enumerate() {
            out[c] = d.len();
        }
        out
    }

    /// Next batch as manifest indices, grouped by class.
    pub fn next_indices(&mut self) -> Vec<usize> {
        let mut batch = Vec::with_capacity(self.per_class * NUM_CLASSES);
        for c in 0..NUM_CLASSES {
            for _ in 0..self.per_class {
                if self.cursors[c] == self.decks[c].len() {
                    rng::shuffle(&mut self.rng, &mut self.decks[c]);
                    self.cursors[c] = 0;
                }
                batch.push(self.decks[c][self.cursors[c]]);
                self.cursors[c] += 1;
            }
        }
        batch
    }
}

impl<'a> Iterator for BalancedBatches<'a> {
    type Item = Vec<&'a ManifestEntry>;

    fn next(&mut self) -> Option<Self::Item> {
        let manifest = self.manifest;
        Some(self.next_indices().into_iter().map(|i| &manifest.entries[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn corpus(speakers: usize, per_speaker_class: usize) -> Manifest {
        let mut entries = Vec::new();
        for s in 0..speakers {
            for class in ClassLabel::ALL.iter().filter(|&&c| c != ClassLabel::Silence) {
                let raw = if *class == ClassLabel::Unknown { "bed" } else { class.name() };
                for r in 0..per_speaker_class {
                    let id = format!("{s:08x}");
                    entries.push(ManifestEntry::new(format!("{raw}/{id}_nohash_{r}.wav"), raw, id));
                }
            }
        }
        let mut m = Manifest::new(entries);
        m.add_silence_fragments("_background_noise_/white.wav", 6);
        m
    }

    #[test]
    fn label_map() {
        assert_eq!(ClassLabel::from_raw_label("down"), ClassLabel::Down);
        assert_eq!(ClassLabel::from_raw_label("bed"), ClassLabel::Unknown);
        assert_eq!(ClassLabel::from_raw_label(BACKGROUND_DIR), ClassLabel::Silence);
        for (i, c) in ClassLabel::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(ClassLabel::from_raw_label(c.name()), *c);
            assert_eq!(ClassLabel::from_name(c.name()).unwrap(), *c);
        }
        assert!(ClassLabel::from_index(12).is_err());
    }

    #[test]
    fn speaker_ids() {
        assert_eq!(speaker_id("00f0204f_nohash_0.wav").unwrap(), "00f0204f");
        assert_eq!(speaker_id("00f0204f_nohash_3.wav").unwrap(), "00f0204f");
        assert_eq!(speaker_id("down/1e4064b8_nohash_0.wav").unwrap(), "1e4064b8");
        assert!(matches!(
            speaker_id("clip_000044442.wav"),
            Err(DatasetError::UnparseableFilename(_))
        ));
        assert!(speaker_id("_nohash_0.wav").is_err());
    }

    #[test]
    fn folds() {
        let m = corpus(8, 2);
        let a = assign_folds(&m, 4, 7).unwrap();
        assert_eq!(a, assign_folds(&m, 4, 7).unwrap());
        assert!(a.speakers_in_multiple_folds().is_empty());
        for f in 0..4 {
            let speakers: BTreeSet<&str> = a
                .fold_entries(f)
                .filter(|e| e.speaker_id != BACKGROUND_SPEAKER)
                .map(|e| e.speaker_id.as_str())
                .collect();
            assert_eq!(speakers.len(), 2);
            assert!(a.fold_entries(f).any(|e| e.class == ClassLabel::Silence));
        }
        assert_eq!(assign_folds(&m, 1, 0), Err(DatasetError::TooFewFolds(1)));
        let mut missing = m.clone();
        missing.entries[0].speaker_id.clear();
        assert!(matches!(assign_folds(&missing, 4, 0), Err(DatasetError::MissingSpeakerId(_))));
    }

    #[test]
    fn cleaning_is_propose_then_apply() {
        let m = Manifest::new(vec![
            ManifestEntry::new("yes/a_nohash_0.wav", "yes", "a"),
            ManifestEntry::new("no/b_nohash_0.wav", "no", "b"),
            ManifestEntry::new("up/c_nohash_0.wav", "up", "c"),
        ]);
        let peaks = [0.3f32, 0.0, 0.1];
        let report = clean_low_volume::<(), _>(&m, 0.01, |e| {
            let i = m.entries.iter().position(|x| x == e).unwrap();
            Ok(AudioClip::new(vec![peaks[i], -peaks[i] / 2.0], 16000).unwrap())
        })
        .unwrap();
        assert_eq!(report.proposed, vec![1]);
        let ranked: Vec<f32> = report.ranked.iter().map(|r| r.1).collect();
        assert_eq!(ranked, vec![0.0, 0.1, 0.3]);
        let applied = apply_cleaning(&m, &report);
        assert_eq!(applied.entries[1].class, ClassLabel::Silence);
        assert_eq!(m.entries[1].class, ClassLabel::No);
    }

    #[test]
    fn batches() {
        let m = assign_folds(&corpus(8, 1), 4, 1).unwrap();
        let mut b = BalancedBatches::new(&m, Some(0), 24, rng::seeded(0)).unwrap();
        for _ in 0..50 {
            let batch = b.next().unwrap();
            assert_eq!(batch.len(), 24);
            for c in ClassLabel::ALL {
                assert_eq!(batch.iter().filter(|e| e.class == c).count(), 2);
            }
            assert!(batch.iter().all(|e| e.fold != 0));
        }
        assert_eq!(
            BalancedBatches::new(&m, Some(0), 30, rng::seeded(0)).err(),
            Some(DatasetError::BatchNotMultipleOf12(30))
        );
        let no_silence = Manifest::new(m.entries.iter().filter(|e| e.class != ClassLabel::Silence).cloned().collect());
        assert_eq!(
            BalancedBatches::new(&no_silence, None, 12, rng::seeded(0)).err(),
            Some(DatasetError::ClassEmpty(ClassLabel::Silence))
        );
    }

    #[test]
    fn fragment_paths() {
        let mut m = Manifest::default();
        m.add_silence_fragments("_background_noise_/pink.wav", 2);
        assert_eq!(m.entries[1].fragment(), Some(("_background_noise_/pink.wav", 1)));
        assert_eq!(ManifestEntry::new("yes/a_nohash_0.wav", "yes", "a").fragment(), None);
    }
}
