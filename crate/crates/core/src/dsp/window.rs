use alloc::vec::Vec;
use core::f64::consts::PI;

use super::DspError;

/// Hamming coefficient a₀.
pub const HAMMING_A0: f64 = 0.53836;

/// Symmetric, centre-peaked Hamming window `a₀ − (1 − a₀)·cos(2πn/(L−1))`.
pub fn hamming_window(length: usize) -> Result<Vec<f32>, DspError> {
    Ok(hamming_f64(length)?.into_iter().map(|w| w as f32).collect())
}

pub(crate) fn hamming_f64(length: usize) -> Result<Vec<f64>, DspError> {
    if length < 2 {
        return Err(DspError::LengthTooSmall(length));
    }
    let denom = (length - 1) as f64;
    Ok((0..length)
        .map(|n| HAMMING_A0 - (1.0 - HAMMING_A0) * libm::cos(2.0 * PI * n as f64 / denom))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_and_peak() {
        let w = hamming_window(401).unwrap();
        assert!((w[0] as f64 - 0.07672).abs() < 1e-6);
        assert!((w[200] - 1.0).abs() < 1e-7);
        for n in 0..401 {
            assert_eq!(w[n], w[400 - n]);
        }
        let even = hamming_window(400).unwrap();
        for n in 0..400 {
            assert!((even[n] - even[399 - n]).abs() < 1e-7);
        }
    }

    #[test]
    fn too_short() {
        assert_eq!(hamming_window(1), Err(DspError::LengthTooSmall(1)));
        assert_eq!(hamming_window(2).unwrap().len(), 2);
    }
}
