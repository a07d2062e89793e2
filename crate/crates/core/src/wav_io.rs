//! 16-bit little-endian PCM mono WAVE files.
//!
//! Samples are normalised by 32768 so that `i16::MIN` maps exactly to `-1.0`.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// Default peak level below which a clip is proposed as silence.
pub const DEFAULT_SILENCE_THRESHOLD: f32 = 0.01;

const PCM_SCALE: f32 = 32768.0;
const HEADER_LEN: usize = 44;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WavError {
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated data: declared {declared} bytes, found {available}")]
    TruncatedData { declared: usize, available: usize },
    #[error("clip has no samples")]
    EmptyClip,
    #[error("sample rate must be positive")]
    ZeroSampleRate,
}

/// Mono waveform with its sample rate and optional provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub source_path: Option<String>,
    pub label: Option<String>,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, WavError> {
        if sample_rate == 0 {
            return Err(WavError::ZeroSampleRate);
        }
        Ok(AudioClip {
            samples,
            sample_rate,
            source_path: None,
            label: None,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<f32>) -> Self {
        AudioClip {
            samples,
            sample_rate: self.sample_rate,
            source_path: self.source_path.clone(),
            label: self.label.clone(),
        }
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

struct Fmt {
    sample_rate: u32,
}

fn parse_fmt(body: &[u8]) -> Result<Fmt, WavError> {
    if body.len() < 16 {
        return Err(WavError::MalformedHeader("fmt chunk shorter than 16 bytes"));
    }
    let format = read_u16(body, 0);
    let channels = read_u16(body, 2);
    let sample_rate = read_u32(body, 4);
    let bits = read_u16(body, 14);
    if format != 1 {
        return Err(WavError::UnsupportedFormat(alloc::format!(
            "audio format {format} (only PCM = 1)"
        )));
    }
    if channels != 1 {
        return Err(WavError::UnsupportedFormat(alloc::format!(
            "{channels} channels (only mono)"
        )));
    }
    if bits != 16 {
        return Err(WavError::UnsupportedFormat(alloc::format!(
            "{bits} bits per sample (only 16)"
        )));
    }
    if sample_rate == 0 {
        return Err(WavError::ZeroSampleRate);
    }
    Ok(Fmt { sample_rate })
}

/// Parses a RIFF/WAVE byte buffer holding 16-bit mono PCM.
///
/// Chunks other than `fmt ` and `data` are skipped. Reading stops at the
/// declared end of the `data` chunk.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::MalformedHeader("missing RIFF/WAVE magic"));
    }
    let mut pos = 12;
    let mut fmt: Option<Fmt> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        match id {
            b"fmt " => {
                let end = body_start
                    .checked_add(size)
                    .filter(|&e| e <= bytes.len())
                    .ok_or(WavError::MalformedHeader("fmt chunk runs past end of file"))?;
                fmt = Some(parse_fmt(&bytes[body_start..end])?);
            }
            b"data" => {
                let fmt = fmt.ok_or(WavError::MalformedHeader("data chunk before fmt chunk"))?;
                let available = bytes.len() - body_start;
                if size > available {
                    return Err(WavError::TruncatedData {
                        declared: size,
                        available,
                    });
                }
                let samples = bytes[body_start..body_start + size]
                    .chunks_exact(2)
                    .map(|pair| i16::from_le_bytes([pair[0], pair[1]]) as f32 / PCM_SCALE)
                    .collect();
                return AudioClip::new(samples, fmt.sample_rate);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    if fmt.is_none() {
        Err(WavError::MalformedHeader("no fmt chunk"))
    } else {
        Err(WavError::MalformedHeader("no data chunk"))
    }
}

/// Quantises one sample to its stored 16-bit value.
pub fn quantize(sample: f32) -> i16 {
    let scaled = libm::roundf(sample * PCM_SCALE);
    scaled.clamp(i16::MIN as f32, i16::MAX as f32) as i16
}

/// Serialises a clip as a canonical 44-byte-header PCM 16-bit mono WAVE file.
pub fn write_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.samples.len() * 2;
    let mut out = Vec::with_capacity(HEADER_LEN + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &clip.samples {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    out
}

/// Peak absolute amplitude, the cleaning statistic for "dynamic range".
pub fn peak_volume(clip: &AudioClip) -> Result<f32, WavError> {
    if clip.is_empty() {
        return Err(WavError::EmptyClip);
    }
    Ok(peak_of(&clip.samples))
}

pub(crate) fn peak_of(samples: &[f32]) -> f32 {
    samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
}

/// True iff the clip's peak lies strictly below `threshold`.
pub fn is_silence_candidate(clip: &AudioClip, threshold: f32) -> Result<bool, WavError> {
    Ok(peak_volume(clip)? < threshold)
}

/// Consecutive non-overlapping windows of exactly `fragment_samples`; the
/// trailing remainder is dropped.
///
/// # Panics
/// If `fragment_samples` is zero.
pub fn split_into_fragments(clip: &AudioClip, fragment_samples: usize) -> Vec<AudioClip> {
    assert!(fragment_samples > 0, "fragment length must be positive");
    clip.samples
        .chunks_exact(fragment_samples)
        .map(|chunk| clip.with_samples(chunk.to_vec()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn minimal(data: &[u8]) -> Vec<u8> {
        let mut b = write_wav(&AudioClip::new(Vec::new(), 16000).unwrap());
        b.truncate(40);
        b.extend_from_slice(&(data.len() as u32).to_le_bytes());
        b.extend_from_slice(data);
        b
    }

    #[test]
    fn zero_sample() {
        let clip = parse_wav(&minimal(&[0, 0])).unwrap();
        assert_eq!(clip.samples, vec![0.0]);
        assert_eq!(clip.sample_rate, 16000);
    }

    #[test]
    fn most_negative_word_is_minus_one() {
        let clip = parse_wav(&minimal(&[0x00, 0x80])).unwrap();
        assert_eq!(clip.samples, vec![-1.0]);
    }

    #[test]
    fn header_size() {
        let clip = AudioClip::new(vec![0.0; 16000], 16000).unwrap();
        assert_eq!(write_wav(&clip).len(), 44 + 32000);
    }

    #[test]
    fn half_quantizes_to_16384() {
        assert_eq!(quantize(0.5), 16384);
        assert_eq!(quantize(1.5), i16::MAX);
        assert_eq!(quantize(-2.0), i16::MIN);
    }

    #[test]
    fn skips_unknown_chunks() {
        let clip = AudioClip::new(vec![0.25, -0.5], 8000).unwrap();
        let plain = write_wav(&clip);
        let mut with_list = plain[..36].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(&[1, 2, 3, 0]); // odd size + pad byte
        with_list.extend_from_slice(&plain[36..]);
        assert_eq!(parse_wav(&with_list).unwrap(), clip);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            parse_wav(b"RIFX\0\0\0\0WAVE"),
            Err(WavError::MalformedHeader("missing RIFF/WAVE magic"))
        );
        let mut stereo = minimal(&[0, 0]);
        stereo[22] = 2;
        assert!(matches!(parse_wav(&stereo), Err(WavError::UnsupportedFormat(_))));
        let mut float = minimal(&[0, 0]);
        float[20] = 3;
        assert!(matches!(parse_wav(&float), Err(WavError::UnsupportedFormat(_))));
        let mut eight_bit = minimal(&[0, 0]);
        eight_bit[34] = 8;
        assert!(matches!(parse_wav(&eight_bit), Err(WavError::UnsupportedFormat(_))));
        let mut short = minimal(&[0, 0, 0, 0]);
        short.truncate(46);
        assert_eq!(
            parse_wav(&short),
            Err(WavError::TruncatedData { declared: 4, available: 2 })
        );
    }

    #[test]
    fn never_reads_past_data_chunk() {
        let mut bytes = minimal(&[0x00, 0x40]);
        bytes.extend_from_slice(&[0xff, 0x7f, 0xff, 0x7f]);
        assert_eq!(parse_wav(&bytes).unwrap().samples, vec![0.5]);
    }

    #[test]
    fn volume_statistics() {
        let zero = AudioClip::new(vec![0.0; 10], 16000).unwrap();
        assert_eq!(peak_volume(&zero).unwrap(), 0.0);
        let clip = AudioClip::new(vec![0.1, -0.7, 0.3], 16000).unwrap();
        assert_eq!(peak_volume(&clip).unwrap(), 0.7);
        let doubled = clip.with_samples(clip.samples.iter().map(|s| s * 2.0).collect());
        assert_eq!(peak_volume(&doubled).unwrap(), 2.0 * 0.7);

        assert!(is_silence_candidate(&zero, 0.01).unwrap());
        let loud = AudioClip::new(vec![0.5, -0.2], 16000).unwrap();
        assert!(!is_silence_candidate(&loud, 0.01).unwrap());
        assert!(!is_silence_candidate(&zero, 0.0).unwrap());

        let empty = AudioClip::new(Vec::new(), 16000).unwrap();
        assert_eq!(peak_volume(&empty), Err(WavError::EmptyClip));
        assert_eq!(is_silence_candidate(&empty, 0.1), Err(WavError::EmptyClip));
    }

    #[test]
    fn fragments() {
        let ramp = |n: usize| AudioClip::new((0..n).map(|i| i as f32 / n as f32).collect(), 16000).unwrap();
        assert_eq!(split_into_fragments(&ramp(48000), 16000).len(), 3);
        let one = ramp(16000);
        assert_eq!(split_into_fragments(&one, 16000), vec![one.clone()]);
        assert!(split_into_fragments(&ramp(15999), 16000).is_empty());
    }

    #[test]
    fn zero_rate_rejected() {
        assert_eq!(AudioClip::new(vec![], 0), Err(WavError::ZeroSampleRate));
    }
}
