use alloc::vec::Vec;
use core::f64::consts::PI;

use super::fft::{transform, Complex};
use super::mel::mel_spectrogram;
use super::spectrogram::LOG_FLOOR;
use super::{DspError, FeatureKind, FeatureMap, StftConfig};

/// Orthonormal DCT-II, first `n_out` coefficients.
///
/// Computed through one length-N DFT of the even/odd reordered input.
pub fn dct_ii(input: &[f64], n_out: usize) -> Result<Vec<f64>, DspError> {
    let n = input.len();
    if n_out > n || n == 0 {
        return Err(DspError::InvalidOutputCount { n_out, len: n });
    }
    let mut v = Vec::with_capacity(n);
    v.extend(input.iter().step_by(2).map(|&x| Complex::new(x, 0.0)));
    v.extend((1..n).step_by(2).rev().map(|i| Complex::new(input[i], 0.0)));
    let spectrum = transform(&v);
    let nf = n as f64;
    let s0 = libm::sqrt(1.0 / nf);
    let sk = libm::sqrt(2.0 / nf);
    Ok((0..n_out)
        .map(|k| {
            let theta = -PI * k as f64 / (2.0 * nf);
            let rot = Complex::new(libm::cos(theta), libm::sin(theta));
            let y = (spectrum[k] * rot).re;
            y * if k == 0 { s0 } else { sk }
        })
        .collect())
}

/// `ln(mel + 1e−10)`.
pub fn log_mel_spectrogram(
    samples: &[f32],
    config: &StftConfig,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
) -> Result<FeatureMap, DspError> {
    let mel = mel_spectrogram(samples, config, n_mels, fmin, fmax)?;
    Ok(FeatureMap {
        values: mel
            .values
            .iter()
            .map(|&v| libm::log(v as f64 + LOG_FLOOR) as f32)
            .collect(),
        kind: FeatureKind::LogMel,
        ..mel
    })
}

/// Per frame: natural log of the mel energies (floored by 1e−10), then DCT-II.
/// The mel band spans `0..sample_rate/2`.
pub fn mfcc(
    samples: &[f32],
    config: &StftConfig,
    n_mels: usize,
    n_coeffs: usize,
) -> Result<FeatureMap, DspError> {
    if n_coeffs > n_mels {
        return Err(DspError::InvalidOutputCount {
            n_out: n_coeffs,
            len: n_mels,
        });
    }
    let mel = mel_spectrogram(samples, config, n_mels, 0.0, config.sample_rate as f64 / 2.0)?;
    let frames = mel.cols;
    let mut values = alloc::vec![0.0f32; n_coeffs * frames];
    for t in 0..frames {
        let logs: Vec<f64> = (0..n_mels)
            .map(|m| libm::log(mel.get(m, t) as f64 + LOG_FLOOR))
            .collect();
        for (c, y) in dct_ii(&logs, n_coeffs)?.into_iter().enumerate() {
            values[c * frames + t] = y as f32;
        }
    }
    Ok(FeatureMap {
        rows: n_coeffs,
        cols: frames,
        values,
        kind: FeatureKind::Mfcc,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_input() {
        for n in [1usize, 5, 8, 40] {
            let y = dct_ii(&vec![2.5; n], n).unwrap();
            assert!((y[0] - 2.5 * libm::sqrt(n as f64)).abs() < 1e-12);
            for v in &y[1..] {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn output_count() {
        assert!(dct_ii(&[1.0, 2.0], 3).is_err());
        assert_eq!(dct_ii(&[1.0, 2.0, 3.0], 2).unwrap().len(), 2);
    }

    #[test]
    fn zero_signal_mfcc() {
        let cfg = StftConfig::default();
        let m = mfcc(&vec![0.0; 16000], &cfg, 40, 13).unwrap();
        assert_eq!(m.shape(), (13, 98));
        let c0 = (libm::log(1e-10) * libm::sqrt(40.0)) as f32;
        for t in 0..m.cols {
            assert!((m.get(0, t) - c0).abs() < 1e-4);
            for c in 1..13 {
                assert!(m.get(c, t).abs() < 1e-4);
            }
        }
        assert!(mfcc(&vec![0.0; 16000], &cfg, 10, 13).is_err());
    }
}
