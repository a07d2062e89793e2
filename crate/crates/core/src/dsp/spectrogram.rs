use alloc::vec;
use alloc::vec::Vec;

use super::fft::{fft_in_place, transform, Complex};
use super::window::hamming_f64;
use super::{DspError, FeatureKind, FeatureMap, StftConfig};

/// Floor applied to power before taking decibels.
pub const DEFAULT_AMIN: f64 = 1e-10;
/// Dynamic range kept below the map maximum, in dB.
pub const DEFAULT_TOP_DB: f64 = 80.0;
/// Offset added before the natural log of a power or mel map.
pub const LOG_FLOOR: f64 = 1e-10;

/// Power spectrogram `|X[k]|²` of Hamming-windowed frames, no edge padding.
///
/// Output is `(fft_size/2 + 1) × frames`.
pub fn stft(samples: &[f32], config: &StftConfig) -> Result<FeatureMap, DspError> {
    config.validate()?;
    if samples.len() < config.win_length {
        return Err(DspError::SignalTooShort {
            len: samples.len(),
            win: config.win_length,
        });
    }
    let window = hamming_f64(config.win_length)?;
    let frames = config.n_frames(samples.len());
    let bins = config.n_bins();
    let mut values = vec![0.0f32; bins * frames];
    let mut buf = vec![Complex::new(0.0, 0.0); config.fft_size];
    let fast = config.fft_size.is_power_of_two();
    for t in 0..frames {
        let start = t * config.hop_length;
        for (slot, (&s, &w)) in buf
            .iter_mut()
            .zip(samples[start..start + config.win_length].iter().zip(&window))
        {
            *slot = Complex::new(s as f64 * w, 0.0);
        }
        for slot in &mut buf[config.win_length..] {
            *slot = Complex::new(0.0, 0.0);
        }
        let spectrum = if fast {
            fft_in_place(&mut buf)?;
            buf.clone()
        } else {
            transform(&buf)
        };
        for (k, x) in spectrum.iter().take(bins).enumerate() {
            values[k * frames + t] = x.norm_sqr() as f32;
        }
    }
    Ok(FeatureMap {
        rows: bins,
        cols: frames,
        values,
        kind: FeatureKind::Power,
        config: *config,
    })
}

/// `10·log₁₀(max(S, 1e−10)/ref)`, clipped to 80 dB below the maximum.
pub fn power_to_db(map: &FeatureMap, reference: f64) -> Result<FeatureMap, DspError> {
    power_to_db_with(map, reference, DEFAULT_AMIN, Some(DEFAULT_TOP_DB))
}

pub fn power_to_db_with(
    map: &FeatureMap,
    reference: f64,
    amin: f64,
    top_db: Option<f64>,
) -> Result<FeatureMap, DspError> {
    if !(reference > 0.0) {
        return Err(DspError::NonPositiveRef);
    }
    let mut db: Vec<f64> = map
        .values
        .iter()
        .map(|&s| 10.0 * libm::log10((s as f64).max(amin) / reference))
        .collect();
    if let Some(top) = top_db {
        let peak = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floor = peak - top;
        for v in &mut db {
            *v = v.max(floor);
        }
    }
    Ok(FeatureMap {
        values: db.into_iter().map(|v| v as f32).collect(),
        kind: FeatureKind::Decibel,
        ..map.clone()
    })
}

/// `ln(S + 1e−10)` of the power spectrogram.
pub fn log_spectrogram(samples: &[f32], config: &StftConfig) -> Result<FeatureMap, DspError> {
    let power = stft(samples, config)?;
    Ok(FeatureMap {
        values: power
            .values
            .iter()
            .map(|&s| libm::log(s as f64 + LOG_FLOOR) as f32)
            .collect(),
        kind: FeatureKind::LogPower,
        ..power
    })
}
