//! Turning clips into model inputs.

use std::fmt;
use std::str::FromStr;

use speechcmd_core::augment::{augment_pipeline, fix_length, AugmentConfig};
use speechcmd_core::dataset::{ClassLabel, ManifestEntry};
use speechcmd_core::dsp::{
    log_mel_spectrogram, log_spectrogram, mel_spectrogram, mfcc, power_to_db_with, stft, FeatureMap,
    StftConfig,
};
use speechcmd_core::nn::FeatureSource;
use speechcmd_core::rng::{self, Rng};
use speechcmd_core::AudioClip;

use crate::corpus::ClipStore;
use crate::error::{Error, Result};
use crate::scft::{ScftTensor, KIND_WAVE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Fixed-length raw waveform.
    Wave,
    LogSpec,
    Db,
    Mel,
    LogMel,
    Mfcc,
}

impl Representation {
    pub const ALL: [Representation; 6] = [
        Representation::Wave,
        Representation::LogSpec,
        Representation::Db,
        Representation::Mel,
        Representation::LogMel,
        Representation::Mfcc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Wave => "wave",
            Representation::LogSpec => "logspec",
            Representation::Db => "db",
            Representation::Mel => "mel",
            Representation::LogMel => "logmel",
            Representation::Mfcc => "mfcc",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Representation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown representation {s:?} (wave, logspec, db, mel, logmel, mfcc)")))
    }
}

/// Everything needed to compute one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub representation: Representation,
    pub stft: StftConfig,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub n_coeffs: usize,
    pub db_ref: f64,
    /// `None` disables the dynamic-range clamp.
    pub top_db: Option<f64>,
    /// Samples fed to the waveform model.
    pub wave_length: usize,
    /// Samples fed to the spectral front ends.
    pub clip_length: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            representation: Representation::Wave,
            stft: StftConfig::default(),
            n_mels: 40,
            fmin: 0.0,
            fmax: 8000.0,
            n_coeffs: 13,
            db_ref: 1.0,
            top_db: Some(80.0),
            wave_length: 16384,
            clip_length: 16000,
        }
    }
}

impl FeatureConfig {
    /// Length every clip is fixed to before featurizing.
    pub fn input_samples(&self) -> usize {
        match self.representation {
            Representation::Wave => self.wave_length,
            _ => self.clip_length,
        }
    }

    /// Per-example model input shape (channel first).
    pub fn input_shape(&self) -> Vec<usize> {
        let frames = self.stft.n_frames(self.clip_length);
        match self.representation {
            Representation::Wave => vec![1, self.wave_length],
            Representation::LogSpec | Representation::Db => vec![1, self.stft.n_bins(), frames],
            Representation::Mel | Representation::LogMel => vec![1, self.n_mels, frames],
            Representation::Mfcc => vec![1, self.n_coeffs, frames],
        }
    }

    pub fn map(&self, samples: &[f32]) -> Result<FeatureMap> {
        let s = &self.stft;
        Ok(match self.representation {
            Representation::Wave => {
                return Err(Error::InvalidArgument("waveform input has no feature map".into()));
            }
            Representation::LogSpec => log_spectrogram(samples, s)?,
            Representation::Db => {
                power_to_db_with(&stft(samples, s)?, self.db_ref, speechcmd_core::dsp::DEFAULT_AMIN, self.top_db)?
            }
            Representation::Mel => mel_spectrogram(samples, s, self.n_mels, self.fmin, self.fmax)?,
            Representation::LogMel => log_mel_spectrogram(samples, s, self.n_mels, self.fmin, self.fmax)?,
            Representation::Mfcc => mfcc(samples, s, self.n_mels, self.n_coeffs)?,
        })
    }

    /// Model input for samples that already have [`Self::input_samples`] length.
    pub fn extract(&self, samples: &[f32]) -> Result<Vec<f32>> {
        match self.representation {
            Representation::Wave => Ok(samples.to_vec()),
            _ => Ok(self.map(samples)?.values),
        }
    }

    pub fn tensor(&self, samples: &[f32]) -> Result<ScftTensor> {
        match self.representation {
            Representation::Wave => ScftTensor::new(KIND_WAVE, &[samples.len()], samples.to_vec()),
            _ => Ok(ScftTensor::from_feature_map(&self.map(samples)?)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stft.validate()?;
        if self.representation != Representation::Wave && self.clip_length < self.stft.win_length {
            return Err(Error::InvalidArgument(format!(
                "clip_length {} shorter than the window {}",
                self.clip_length, self.stft.win_length
            )));
        }
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return Err(Error::InvalidArgument("need 0 < n_coeffs <= n_mels".into()));
        }
        if self.wave_length == 0 || self.clip_length == 0 {
            return Err(Error::InvalidArgument("clip lengths must be positive".into()));
        }
        Ok(())
    }
}

/// Deterministic length fix used for evaluation: clips longer than `target`
/// are centre-cropped, shorter ones padded with leading zeros.
pub fn eval_samples(clip: &AudioClip, target: usize) -> Vec<f32> {
    let n = clip.samples.len();
    if n > target {
        let start = (n - target) / 2;
        clip.samples[start..start + target].to_vec()
    } else {
        fix_length(&clip.samples, target, &mut rng::seeded(0))
    }
}

/// Feature source for training and evaluation over a clip store.
#[derive(Debug)]
pub struct PipelineSource<'a> {
    pub store: &'a ClipStore,
    pub noise_pool: &'a [AudioClip],
    pub features: FeatureConfig,
    /// `None` trains on length-fixed clips only.
    pub augment: Option<AugmentConfig>,
}

impl FeatureSource for PipelineSource<'_> {
    type Error = Error;

    fn train_features(&mut self, entry: &ManifestEntry, rng: &mut Rng) -> Result<Vec<f32>> {
        let clip = self.store.get(&entry.path)?;
        let target = self.features.input_samples();
        let samples = match self.augment {
            // Silence is background noise already; only its length is fixed.
            Some(cfg) if entry.class != ClassLabel::Silence => {
                augment_pipeline(&clip, self.noise_pool, &AugmentConfig { target_length: target, ..cfg }, rng)?
            }
            _ => fix_length(&clip.samples, target, rng),
        };
        self.features.extract(&samples)
    }

    fn eval_features(&mut self, entry: &ManifestEntry) -> Result<Vec<f32>> {
        let clip = self.store.get(&entry.path)?;
        self.features.extract(&eval_samples(&clip, self.features.input_samples()))
    }
}
