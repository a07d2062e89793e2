//! Synthetic stand-in corpus of tone patterns.
//!
//! Keyword class `i` is a dual tone at `(300 + 150i, 800 + 100i)` Hz, shifted
//! by a per-speaker pitch factor and a per-utterance jitter, with a slow
//! vibrato, inside a randomly placed envelope over light white noise. The
//! unknown class uses random tone pairs in 2000–3500 Hz, spread over a few
//! non-keyword folders. `_background_noise_` holds seeded white noise.

use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng as _;
use speechcmd_core::dataset::{ClassLabel, BACKGROUND_DIR};
use speechcmd_core::rng::{self, Rng};
use speechcmd_core::AudioClip;

use crate::corpus::write_wav;
use crate::error::{IoContext, Result};

pub const SAMPLE_RATE: u32 = 16_000;
pub const UNKNOWN_FOLDERS: [&str; 4] = ["bed", "bird", "cat", "dog"];
pub const NOISE_FILES: usize = 2;
const MAX_SPEAKERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_per_class: usize,
    pub seed: u64,
    /// Relative pitch spread between speakers.
    pub speaker_spread: f64,
    /// Relative pitch jitter between utterances of one speaker.
    pub utterance_jitter: f64,
    /// Peak of the additive white noise in every clip.
    pub noise_floor: f64,
}

impl SynthConfig {
    pub fn new(n_per_class: usize, seed: u64) -> Self {
        SynthConfig { n_per_class, seed, speaker_spread: 0.02, utterance_jitter: 0.005, noise_floor: 0.01 }
    }
}

/// What [`synth_corpus`] wrote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSummary {
    pub keyword_files: usize,
    pub unknown_files: usize,
    pub noise_files: usize,
    pub speakers: Vec<String>,
}

pub fn keyword_tones(class: usize) -> (f64, f64) {
    (300.0 + 150.0 * class as f64, 800.0 + 100.0 * class as f64)
}

fn utterance(rng: &mut Rng, f1: f64, f2: f64, noise_floor: f64) -> Vec<f32> {
    let n = SAMPLE_RATE as usize;
    let sr = SAMPLE_RATE as f64;
    let dur = rng.random_range(0.5..0.8);
    let start = rng.random_range(0.05..(0.95 - dur));
    let amp = rng.random_range(0.3..0.8);
    let vib_rate = rng.random_range(3.0..7.0);
    let vib_phase = rng.random_range(0.0..TAU);
    let (mut p1, mut p2) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
    let ramp = 0.05;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sr;
        let vib = 1.0 + 0.005 * (TAU * vib_rate * t + vib_phase).sin();
        p1 += TAU * f1 * vib / sr;
        p2 += TAU * f2 * vib / sr;
        let local = t - start;
        let env = if local < 0.0 || local > dur {
            0.0
        } else {
            let edge = local.min(dur - local);
            if edge < ramp { 0.5 - 0.5 * (std::f64::consts::PI * edge / ramp).cos() } else { 1.0 }
        };
        let noise = noise_floor * rng.random_range(-1.0..1.0);
        out.push((amp * env * (0.6 * p1.sin() + 0.4 * p2.sin()) + noise) as f32);
    }
    out
}

fn hex_id(rng: &mut Rng) -> String {
    format!("{:08x}", rng.random::<u32>())
}

/// Writes the corpus under `out_dir`. Output is a pure function of the
/// config.
pub fn synth_corpus(out_dir: &Path, config: &SynthConfig) -> Result<SynthSummary> {
    let mut rng = rng::seeded(config.seed);
    let n_speakers = config.n_per_class.clamp(1, MAX_SPEAKERS);
    let mut speakers = Vec::with_capacity(n_speakers);
    let mut pitch = Vec::with_capacity(n_speakers);
    while speakers.len() < n_speakers {
        let id = hex_id(&mut rng);
        if !speakers.contains(&id) {
            speakers.push(id);
            pitch.push(1.0 + rng.random_range(-config.speaker_spread..=config.speaker_spread));
        }
    }
    let mut keyword_files = 0;
    let mut unknown_files = 0;
    let write = |folder: &str, name: String, samples: Vec<f32>| -> Result<()> {
        let dir = out_dir.join(folder);
        std::fs::create_dir_all(&dir).at(&dir)?;
        let clip = AudioClip::new(samples, SAMPLE_RATE).expect("non-empty clip");
        write_wav(&clip, &dir.join(name))
    };
    for class in ClassLabel::KEYWORDS {
        let (f1, f2) = keyword_tones(class.index());
        for j in 0..config.n_per_class {
            let s = j % n_speakers;
            let jitter = 1.0 + rng.random_range(-config.utterance_jitter..=config.utterance_jitter);
            let k = pitch[s] * jitter;
            let samples = utterance(&mut rng, f1 * k, f2 * k, config.noise_floor);
            write(class.name(), format!("{}_nohash_{}.wav", speakers[s], j / n_speakers), samples)?;
            keyword_files += 1;
        }
    }
    for j in 0..config.n_per_class {
        let s = j % n_speakers;
        let f1 = rng.random_range(2000.0..3500.0);
        let f2 = rng.random_range(2000.0..3500.0);
        let samples = utterance(&mut rng, f1, f2, config.noise_floor);
        let folder = UNKNOWN_FOLDERS[j % UNKNOWN_FOLDERS.len()];
        write(folder, format!("{}_nohash_{}.wav", speakers[s], j / n_speakers), samples)?;
        unknown_files += 1;
    }
    // Enough one-second fragments for a silence class as large as the others.
    let seconds = config.n_per_class.div_ceil(NOISE_FILES) + 1;
    for f in 0..NOISE_FILES {
        let level = rng.random_range(0.05..0.2);
        let samples: Vec<f32> = (0..seconds * SAMPLE_RATE as usize)
            .map(|_| (level * rng.random_range(-1.0..1.0)) as f32)
            .collect();
        write(BACKGROUND_DIR, format!("white_noise_{f}.wav"), samples)?;
    }
    Ok(SynthSummary { keyword_files, unknown_files, noise_files: NOISE_FILES, speakers })
}
