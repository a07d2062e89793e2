use alloc::vec;
use alloc::vec::Vec;

use super::spectrogram::stft;
use super::{DspError, FeatureKind, FeatureMap, StftConfig};

/// `2595·log₁₀(1 + f/700)`.
pub fn hz_to_mel(f: f64) -> Result<f64, DspError> {
    if f < 0.0 {
        return Err(DspError::NegativeFrequency(f));
    }
    Ok(2595.0 * libm::log10(1.0 + f / 700.0))
}

/// `700·(10^(m/2595) − 1)`.
pub fn mel_to_hz(m: f64) -> Result<f64, DspError> {
    if m < 0.0 {
        return Err(DspError::NegativeMel(m));
    }
    Ok(700.0 * (libm::pow(10.0, m / 2595.0) - 1.0))
}

/// Triangular filters, evenly spaced in mel, each peaking at 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// `n_mels × n_bins`, row-major.
    pub weights: Vec<f32>,
    pub n_mels: usize,
    pub n_bins: usize,
    pub fmin: f64,
    pub fmax: f64,
    /// Filter edge/centre frequencies as fractional FFT bins (`n_mels + 2`).
    pub points: Vec<f64>,
}

impl MelFilterbank {
    pub fn row(&self, m: usize) -> &[f32] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn weight(&self, m: usize, bin: usize) -> f32 {
        self.weights[m * self.n_bins + bin]
    }
}

pub fn mel_filterbank(
    n_mels: usize,
    config: &StftConfig,
    fmin: f64,
    fmax: f64,
) -> Result<MelFilterbank, DspError> {
    if n_mels < 2 {
        return Err(DspError::InvalidRange("need at least 2 mel filters"));
    }
    let nyquist = config.sample_rate as f64 / 2.0;
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(DspError::InvalidRange("require 0 <= fmin < fmax <= sample_rate/2"));
    }
    let lo = hz_to_mel(fmin)?;
    let hi = hz_to_mel(fmax)?;
    let bin_hz = config.sample_rate as f64 / config.fft_size as f64;
    let mut points = Vec::with_capacity(n_mels + 2);
    for i in 0..n_mels + 2 {
        let m = lo + (hi - lo) * i as f64 / (n_mels + 1) as f64;
        points.push(mel_to_hz(m)? / bin_hz);
    }
    let n_bins = config.n_bins();
    let mut weights = vec![0.0f32; n_mels * n_bins];
    for m in 0..n_mels {
        let (left, centre, right) = (points[m], points[m + 1], points[m + 2]);
        for bin in 0..n_bins {
            let b = bin as f64;
            let w = if b > left && b <= centre {
                (b - left) / (centre - left)
            } else if b > centre && b < right {
                (right - b) / (right - centre)
            } else {
                0.0
            };
            weights[m * n_bins + bin] = w as f32;
        }
    }
    Ok(MelFilterbank {
        weights,
        n_mels,
        n_bins,
        fmin,
        fmax,
        points,
    })
}

/// Filterbank applied to the power spectrogram: `n_mels × frames`.
pub fn mel_spectrogram(
    samples: &[f32],
    config: &StftConfig,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
) -> Result<FeatureMap, DspError> {
    let bank = mel_filterbank(n_mels, config, fmin, fmax)?;
    let power = stft(samples, config)?;
    Ok(apply_filterbank(&bank, &power))
}

pub(crate) fn apply_filterbank(bank: &MelFilterbank, power: &FeatureMap) -> FeatureMap {
    let frames = power.cols;
    let mut values = vec![0.0f32; bank.n_mels * frames];
    for m in 0..bank.n_mels {
        let row = bank.row(m);
        for t in 0..frames {
            let mut acc = 0.0f64;
            for (bin, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    acc += w as f64 * power.values[bin * frames + t] as f64;
                }
            }
            values[m * frames + t] = acc as f32;
        }
    }
    FeatureMap {
        rows: bank.n_mels,
        cols: frames,
        values,
        kind: FeatureKind::Mel,
        config: power.config,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        assert_eq!(hz_to_mel(0.0).unwrap(), 0.0);
        assert!((hz_to_mel(700.0).unwrap() - 781.17).abs() < 0.01);
        assert!((hz_to_mel(1000.0).unwrap() - 999.99).abs() < 0.01);
        assert_eq!(mel_to_hz(0.0).unwrap(), 0.0);
        assert!((mel_to_hz(781.17).unwrap() - 700.0).abs() < 0.01);
        for f in [50.0, 700.0, 4000.0, 8000.0] {
            let back = mel_to_hz(hz_to_mel(f).unwrap()).unwrap();
            assert!(((back - f) / f).abs() < 1e-6);
        }
        assert!(hz_to_mel(-1.0).is_err());
        assert!(mel_to_hz(-1.0).is_err());
    }

    #[test]
    fn bank_range_checks() {
        let cfg = StftConfig::default();
        assert!(mel_filterbank(1, &cfg, 0.0, 8000.0).is_err());
        assert!(mel_filterbank(40, &cfg, 500.0, 500.0).is_err());
        assert!(mel_filterbank(40, &cfg, 0.0, 8001.0).is_err());
        assert!(mel_filterbank(40, &cfg, -1.0, 8000.0).is_err());
    }

    #[test]
    fn support_and_peaks() {
        let cfg = StftConfig::default();
        let bank = mel_filterbank(40, &cfg, 300.0, 6000.0).unwrap();
        let bin_hz = 16000.0 / 512.0;
        for m in 0..40 {
            let row = bank.row(m);
            let peak = row.iter().copied().fold(0.0f32, f32::max);
            assert!(peak >= 0.5 && peak <= 1.0, "row {m} peak {peak}");
            for (bin, &w) in row.iter().enumerate() {
                let f = bin as f64 * bin_hz;
                if f < 300.0 || f > 6000.0 {
                    assert_eq!(w, 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_signal_shape() {
        let cfg = StftConfig::default();
        let mel = mel_spectrogram(&vec![0.0; 16000], &cfg, 40, 0.0, 8000.0).unwrap();
        assert_eq!(mel.shape(), (40, 98));
        assert!(mel.values.iter().all(|&v| v == 0.0));
    }
}
