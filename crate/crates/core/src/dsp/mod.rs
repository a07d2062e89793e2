//! Time-frequency analysis.
//!
//! Internals run in `f64`; [`FeatureMap`] stores `f32`.

mod dct;
mod fft;
mod mel;
mod spectrogram;
mod window;

use alloc::vec::Vec;

use thiserror::Error;

pub use dct::{dct_ii, log_mel_spectrogram, mfcc};
pub use fft::{dft, fft, fft_in_place, transform, Complex};
pub use mel::{hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, MelFilterbank};
pub use spectrogram::{
    log_spectrogram, power_to_db, power_to_db_with, stft, DEFAULT_AMIN, DEFAULT_TOP_DB, LOG_FLOOR,
};
pub use window::{hamming_window, HAMMING_A0};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("window length {0} is too small (need at least 2)")]
    LengthTooSmall(usize),
    #[error("FFT length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),
    #[error("signal has {len} samples, shorter than the {win}-sample window")]
    SignalTooShort { len: usize, win: usize },
    #[error("reference power must be positive")]
    NonPositiveRef,
    #[error("negative frequency {0} Hz")]
    NegativeFrequency(f64),
    #[error("negative mel value {0}")]
    NegativeMel(f64),
    #[error("invalid filterbank range: {0}")]
    InvalidRange(&'static str),
    #[error("requested {n_out} coefficients from {len} inputs")]
    InvalidOutputCount { n_out: usize, len: usize },
    #[error("invalid STFT configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Framing and transform sizes for the STFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub win_length: usize,
    pub hop_length: usize,
    pub fft_size: usize,
    pub sample_rate: u32,
    /// Permit a non-power-of-two `fft_size`, computed by direct DFT.
    pub exact_dft: bool,
}

impl Default for StftConfig {
    /// 25 ms window, 10 ms hop at 16 kHz.
    fn default() -> Self {
        StftConfig {
            win_length: 400,
            hop_length: 160,
            fft_size: 512,
            sample_rate: 16000,
            exact_dft: false,
        }
    }
}

impl StftConfig {
    /// Power-of-two transform size.
    pub fn new(
        win_length: usize,
        hop_length: usize,
        fft_size: usize,
        sample_rate: u32,
    ) -> Result<Self, DspError> {
        let c = StftConfig {
            win_length,
            hop_length,
            fft_size,
            sample_rate,
            exact_dft: false,
        };
        c.validate()?;
        Ok(c)
    }

    /// Transform size equal to the window, any length. Used to reach
    /// resolutions such as 241 bins (a 480-point transform).
    pub fn exact(win_length: usize, hop_length: usize, sample_rate: u32) -> Result<Self, DspError> {
        let c = StftConfig {
            win_length,
            hop_length,
            fft_size: win_length,
            sample_rate,
            exact_dft: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if self.hop_length == 0 {
            return Err(DspError::InvalidConfig("hop_length must be positive"));
        }
        if self.hop_length > self.win_length {
            return Err(DspError::InvalidConfig("hop_length exceeds win_length"));
        }
        if self.win_length > self.fft_size {
            return Err(DspError::InvalidConfig("win_length exceeds fft_size"));
        }
        if self.win_length < 2 {
            return Err(DspError::LengthTooSmall(self.win_length));
        }
        if self.sample_rate == 0 {
            return Err(DspError::InvalidConfig("sample_rate must be positive"));
        }
        if !self.exact_dft && !self.fft_size.is_power_of_two() {
            return Err(DspError::NonPowerOfTwoLength(self.fft_size));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// `1 + (n - win) / hop`, or 0 when the signal is shorter than a window.
    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.win_length {
            0
        } else {
            1 + (n_samples - self.win_length) / self.hop_length
        }
    }
}

/// What a [`FeatureMap`] holds. The discriminant is the SCFT kind byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FeatureKind {
    Power = 0,
    LogPower = 1,
    Decibel = 2,
    Mel = 3,
    LogMel = 4,
    Mfcc = 5,
}

impl FeatureKind {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => FeatureKind::Power,
            1 => FeatureKind::LogPower,
            2 => FeatureKind::Decibel,
            3 => FeatureKind::Mel,
            4 => FeatureKind::LogMel,
            5 => FeatureKind::Mfcc,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Power => "power",
            FeatureKind::LogPower => "log_power",
            FeatureKind::Decibel => "decibel",
            FeatureKind::Mel => "mel",
            FeatureKind::LogMel => "log_mel",
            FeatureKind::Mfcc => "mfcc",
        }
    }
}

/// Row-major grid: rows are frequency, mel or cepstral bins, columns are frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
    pub kind: FeatureKind,
    pub config: StftConfig,
}

impl FeatureMap {
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Values of one time frame, top to bottom.
    pub fn column(&self, col: usize) -> Vec<f32> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn max(&self) -> f32 {
        self.values.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn min(&self) -> f32 {
        self.values.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
