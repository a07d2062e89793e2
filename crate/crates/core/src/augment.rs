//! Waveform augmentation: playback-speed change, time shift, background-noise
//! mixing and fixed-length crop/pad.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::rng::{self, Rng};
use crate::wav_io::{peak_of, AudioClip};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmentError {
    #[error("speed rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("shift of {shift} samples exceeds clip length {len}")]
    ShiftTooLarge { shift: i64, len: usize },
    #[error("noise has {noise} samples, clip needs {clip}")]
    NoiseTooShort { noise: usize, clip: usize },
    #[error("noise level {0} outside [0, 1]")]
    InvalidLevel(f64),
    #[error("noise augmentation requested but the noise pool is empty")]
    EmptyNoisePool,
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    pub speed_min: f64,
    pub speed_max: f64,
    /// Maximum absolute shift in seconds.
    pub shift_max: f64,
    /// Maximum noise peak as a fraction of the clip peak.
    pub noise_max: f64,
    pub target_length: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            speed_min: 0.7,
            speed_max: 1.4,
            shift_max: 0.1,
            noise_max: 0.05,
            target_length: 16384,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    /// Only fix the length; every other augmentation degenerate.
    pub fn length_only(target_length: usize) -> Self {
        AugmentConfig {
            speed_min: 1.0,
            speed_max: 1.0,
            shift_max: 0.0,
            noise_max: 0.0,
            target_length,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max) {
            return Err(AugmentError::InvalidConfig("need 0 < speed_min <= speed_max"));
        }
        if !(self.shift_max >= 0.0) {
            return Err(AugmentError::InvalidConfig("shift_max must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.noise_max) {
            return Err(AugmentError::InvalidConfig("noise_max must lie in [0, 1]"));
        }
        if self.target_length == 0 {
            return Err(AugmentError::InvalidConfig("target_length must be positive"));
        }
        Ok(())
    }
}

/// Resamples by linear interpolation: output sample `i` reads input position
/// `i·rate`. Length becomes `round(N/rate)`.
pub fn change_speed(clip: &AudioClip, rate: f64) -> Result<AudioClip, AugmentError> {
    if !(rate > 0.0) {
        return Err(AugmentError::NonPositiveRate(rate));
    }
    let input = &clip.samples;
    let n = input.len();
    if n == 0 {
        return Ok(clip.clone());
    }
    let out_len = libm::round(n as f64 / rate) as usize;
    let last = (n - 1) as f64;
    let samples = (0..out_len)
        .map(|i| {
            let pos = (i as f64 * rate).min(last);
            let lo = pos as usize;
            let frac = pos - lo as f64;
            if frac == 0.0 || lo + 1 >= n {
                input[lo]
            } else {
                (input[lo] as f64 * (1.0 - frac) + input[lo + 1] as f64 * frac) as f32
            }
        })
        .collect();
    Ok(clip.with_samples(samples))
}

/// Positive `shift` delays the content, zeros fill the vacated samples.
pub fn time_shift(clip: &AudioClip, shift: i64) -> Result<AudioClip, AugmentError> {
    let n = clip.len();
    if shift.unsigned_abs() as usize > n {
        return Err(AugmentError::ShiftTooLarge { shift, len: n });
    }
    let mut out = vec![0.0f32; n];
    let s = shift.unsigned_abs() as usize;
    if shift >= 0 {
        out[s..].copy_from_slice(&clip.samples[..n - s]);
    } else {
        out[..n - s].copy_from_slice(&clip.samples[s..]);
    }
    Ok(clip.with_samples(out))
}

/// Mixes in a randomly positioned noise segment whose peak is
/// `level · peak(clip)`, then clamps to `[-1, 1]`.
pub fn add_background_noise(
    clip: &AudioClip,
    noise: &AudioClip,
    level: f64,
    rng: &mut Rng,
) -> Result<AudioClip, AugmentError> {
    if !(0.0..=1.0).contains(&level) {
        return Err(AugmentError::InvalidLevel(level));
    }
    let n = clip.len();
    if noise.len() < n {
        return Err(AugmentError::NoiseTooShort {
            noise: noise.len(),
            clip: n,
        });
    }
    let offset = rng::index(rng, noise.len() - n + 1);
    let segment = &noise.samples[offset..offset + n];
    let clip_peak = peak_of(&clip.samples) as f64;
    let noise_peak = peak_of(segment) as f64;
    if level == 0.0 || clip_peak == 0.0 || noise_peak == 0.0 {
        return Ok(clip.clone());
    }
    let gain = level * clip_peak / noise_peak;
    let samples = clip
        .samples
        .iter()
        .zip(segment)
        .map(|(&s, &z)| ((s as f64 + gain * z as f64) as f32).clamp(-1.0, 1.0))
        .collect();
    Ok(clip.with_samples(samples))
}

/// Random crop when too long, leading zeros when too short.
pub fn fix_length(samples: &[f32], target: usize, rng: &mut Rng) -> Vec<f32> {
    use core::cmp::Ordering;
    match samples.len().cmp(&target) {
        Ordering::Equal => samples.to_vec(),
        Ordering::Greater => {
            let start = rng::index(rng, samples.len() - target + 1);
            samples[start..start + target].to_vec()
        }
        Ordering::Less => {
            let mut out = vec![0.0f32; target - samples.len()];
            out.extend_from_slice(samples);
            out
        }
    }
}

/// speed → shift → noise → fix_length.
///
/// Draw order from `rng`: rate, shift, noise level, noise index, noise offset,
/// crop offset. Draws happen even when a range is degenerate, so toggling one
/// augmentation does not perturb the others. The noise draws are skipped when
/// `noise_max` is zero.
pub fn augment_pipeline(
    clip: &AudioClip,
    noise_pool: &[AudioClip],
    config: &AugmentConfig,
    rng: &mut Rng,
) -> Result<Vec<f32>, AugmentError> {
    config.validate()?;
    let rate = rng::uniform(rng, config.speed_min, config.speed_max);
    let shift_s = rng::uniform(rng, -config.shift_max, config.shift_max);

    let mut out = if rate == 1.0 {
        clip.clone()
    } else {
        change_speed(clip, rate)?
    };
    let shift = libm::round(shift_s * clip.sample_rate as f64) as i64;
    let shift = shift.clamp(-(out.len() as i64), out.len() as i64);
    if shift != 0 {
        out = time_shift(&out, shift)?;
    }
    if config.noise_max > 0.0 {
        if noise_pool.is_empty() {
            return Err(AugmentError::EmptyNoisePool);
        }
        let level = rng::uniform(rng, 0.0, config.noise_max);
        let noise = &noise_pool[rng::index(rng, noise_pool.len())];
        out = add_background_noise(&out, noise, level, rng)?;
    }
    Ok(fix_length(&out.samples, config.target_length, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn clip(samples: Vec<f32>) -> AudioClip {
        AudioClip::new(samples, 16000).unwrap()
    }

    #[test]
    fn speed_examples() {
        let c = clip((0..100).map(|i| (i as f32 * 0.1).sin()).collect());
        assert_eq!(change_speed(&c, 1.0).unwrap(), c);
        assert_eq!(change_speed(&clip(vec![0.0; 16000]), 0.8).unwrap().len(), 20000);
        let ramp = clip((0..16000).map(|i| i as f32).collect());
        let fast = change_speed(&ramp, 1.25).unwrap();
        assert_eq!(fast.len(), 12800);
        for (i, &v) in fast.samples.iter().enumerate() {
            assert_eq!(v, 1.25 * i as f32);
        }
        assert!(change_speed(&c, 0.0).is_err());
        assert!(change_speed(&c, -1.0).is_err());
    }

    #[test]
    fn shift_examples() {
        let c = clip(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(time_shift(&c, 0).unwrap(), c);
        assert_eq!(time_shift(&c, 2).unwrap().samples, vec![0.0, 0.0, 1.0, 2.0]);
        assert_eq!(time_shift(&c, -1).unwrap().samples, vec![2.0, 3.0, 4.0, 0.0]);
        assert_eq!(time_shift(&c, 4).unwrap().samples, vec![0.0; 4]);
        assert_eq!(
            time_shift(&c, -5),
            Err(AugmentError::ShiftTooLarge { shift: -5, len: 4 })
        );
    }

    #[test]
    fn noise_examples() {
        let mut rng = seeded(3);
        let noise = clip((0..400).map(|i| ((i * 7919) % 13) as f32 / 13.0 - 0.5).collect());
        let c = clip((0..100).map(|i| 0.8 * ((i as f32) * 0.3).sin()).collect());
        let peak = peak_of(&c.samples);
        assert_eq!(add_background_noise(&c, &noise, 0.0, &mut rng).unwrap(), c);

        let mut scaled = c.clone();
        scaled.samples.iter_mut().for_each(|s| *s *= 0.8 / peak);
        let out = add_background_noise(&scaled, &noise, 0.05, &mut rng).unwrap();
        let added: Vec<f32> = out.samples.iter().zip(&scaled.samples).map(|(a, b)| a - b).collect();
        assert!((peak_of(&added) - 0.04).abs() < 1e-6);

        let silent = clip(vec![0.0; 100]);
        assert_eq!(add_background_noise(&silent, &noise, 0.05, &mut rng).unwrap(), silent);
        assert!(matches!(
            add_background_noise(&c, &clip(vec![0.1; 10]), 0.01, &mut rng),
            Err(AugmentError::NoiseTooShort { noise: 10, clip: 100 })
        ));
        assert!(add_background_noise(&c, &noise, 1.5, &mut rng).is_err());
    }

    #[test]
    fn fix_length_examples() {
        let mut rng = seeded(1);
        let x: Vec<f32> = (0..16000).map(|i| i as f32 + 1.0).collect();
        let padded = fix_length(&x, 16384, &mut rng);
        assert_eq!(padded.len(), 16384);
        assert!(padded[..384].iter().all(|&v| v == 0.0));
        assert_eq!(&padded[384..], &x[..]);

        let long: Vec<f32> = (0..20000).map(|i| i as f32).collect();
        let cut = fix_length(&long, 16384, &mut rng);
        let start = cut[0] as usize;
        assert_eq!(&cut[..], &long[start..start + 16384]);

        let exact = vec![0.5f32; 16384];
        assert_eq!(fix_length(&exact, 16384, &mut rng), exact);
    }

    #[test]
    fn degenerate_pipeline_is_identity() {
        let c = clip((0..16000).map(|i| ((i % 50) as f32 - 25.0) / 50.0).collect());
        let cfg = AugmentConfig::length_only(16000);
        assert_eq!(augment_pipeline(&c, &[], &cfg, &mut seeded(9)).unwrap(), c.samples);
    }

    #[test]
    fn default_pipeline_length_and_determinism() {
        let c = clip((0..16000).map(|i| ((i as f32) * 0.05).sin() * 0.5).collect());
        let pool = vec![clip((0..40000).map(|i| (((i * 31) % 97) as f32 / 97.0) - 0.5).collect())];
        let cfg = AugmentConfig::default();
        let a = augment_pipeline(&c, &pool, &cfg, &mut seeded(42)).unwrap();
        let b = augment_pipeline(&c, &pool, &cfg, &mut seeded(42)).unwrap();
        assert_eq!(a.len(), 16384);
        assert_eq!(a, b);
        assert!(matches!(
            augment_pipeline(&c, &[], &cfg, &mut seeded(42)),
            Err(AugmentError::EmptyNoisePool)
        ));
    }
}
