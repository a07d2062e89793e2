use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::DspError;

pub type Complex = num_complex::Complex<f64>;

/// Unnormalised forward DFT by iterative radix-2 decimation in time.
pub fn fft(input: &[Complex]) -> Result<Vec<Complex>, DspError> {
    let mut buf = input.to_vec();
    fft_in_place(&mut buf)?;
    Ok(buf)
}

pub fn fft_in_place(buf: &mut [Complex]) -> Result<(), DspError> {
    let n = buf.len();
    if !n.is_power_of_two() {
        return Err(DspError::NonPowerOfTwoLength(n));
    }
    if n == 1 {
        return Ok(());
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
    // twiddles for the largest stage; smaller stages stride through them
    let twiddles: Vec<Complex> = (0..n / 2)
        .map(|k| {
            let theta = -2.0 * PI * k as f64 / n as f64;
            Complex::new(libm::cos(theta), libm::sin(theta))
        })
        .collect();
    let mut size = 2;
    while size <= n {
        let half = size / 2;
        let stride = n / size;
        for start in (0..n).step_by(size) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let even = buf[start + k];
                let odd = buf[start + k + half] * w;
                buf[start + k] = even + odd;
                buf[start + k + half] = even - odd;
            }
        }
        size <<= 1;
    }
    Ok(())
}

/// Direct O(N²) DFT for any length, using a precomputed twiddle table.
pub fn dft(input: &[Complex]) -> Vec<Complex> {
    let n = input.len();
    let table: Vec<Complex> = (0..n)
        .map(|k| {
            let theta = -2.0 * PI * k as f64 / n as f64;
            Complex::new(libm::cos(theta), libm::sin(theta))
        })
        .collect();
    let mut out = vec![Complex::new(0.0, 0.0); n];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex::new(0.0, 0.0);
        let mut idx = 0usize;
        for x in input {
            acc += x * table[idx];
            idx += k;
            if idx >= n {
                idx -= n;
            }
        }
        *slot = acc;
    }
    out
}

/// FFT for power-of-two lengths, direct DFT otherwise.
pub fn transform(input: &[Complex]) -> Vec<Complex> {
    if input.len().is_power_of_two() {
        let mut buf = input.to_vec();
        fft_in_place(&mut buf).expect("length checked");
        buf
    } else {
        dft(input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    #[test]
    fn impulse_and_constant() {
        let out = fft(&[c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(out, vec![c(1.0); 4]);
        let out = fft(&[c(1.0); 4]).unwrap();
        assert_eq!(out[0], c(4.0));
        for v in &out[1..] {
            assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_odd_lengths() {
        assert_eq!(fft(&[c(1.0); 6]), Err(DspError::NonPowerOfTwoLength(6)));
        assert_eq!(fft(&[c(2.0)]).unwrap(), vec![c(2.0)]);
    }

    #[test]
    fn dft_fallback_agrees_on_power_of_two() {
        let x: Vec<Complex> = (0..16).map(|i| Complex::new(i as f64, -(i as f64) / 3.0)).collect();
        let a = fft(&x).unwrap();
        let b = dft(&x);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-10);
        }
    }
}
