//! SCFT tensor container: `"SCFT"`, version `0x01`, kind byte, rank byte,
//! `rank` little-endian u32 dimensions, then row-major little-endian f32.

use std::io::{Read, Write};

use speechcmd_core::dsp::{FeatureKind, FeatureMap};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SCFT";
pub const VERSION: u8 = 1;

/// Kind byte for fixed-length waveforms.
pub const KIND_WAVE: u8 = 16;
/// Kind byte for model parameters and buffers.
pub const KIND_PARAM: u8 = 17;

#[derive(Debug, Clone, PartialEq)]
pub struct ScftTensor {
    pub kind: u8,
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl ScftTensor {
    pub fn new(kind: u8, dims: &[usize], data: Vec<f32>) -> Result<Self> {
        if dims.len() > u8::MAX as usize {
            return Err(Error::format("scft", format!("rank {} too large", dims.len())));
        }
        let dims = dims
            .iter()
            .map(|&d| u32::try_from(d).map_err(|_| Error::format("scft", format!("dimension {d} too large"))))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = dims.iter().map(|&d| d as usize).product();
        if n != data.len() {
            return Err(Error::format("scft", format!("dims {dims:?} need {n} values, got {}", data.len())));
        }
        Ok(ScftTensor { kind, dims, data })
    }

    pub fn from_feature_map(map: &FeatureMap) -> Self {
        ScftTensor {
            kind: map.kind.code(),
            dims: vec![map.rows as u32, map.cols as u32],
            data: map.values.clone(),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.dims.iter().map(|&d| d as usize).collect()
    }

    /// Name of the kind byte, for display.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            KIND_WAVE => "wave",
            KIND_PARAM => "param",
            k => FeatureKind::from_code(k).map_or("unknown", FeatureKind::name),
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION, self.kind, self.dims.len() as u8])?;
        for d in &self.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.data.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let eof = |e: std::io::Error| Error::format("scft", format!("truncated: {e}"));
        let mut head = [0u8; 7];
        r.read_exact(&mut head).map_err(eof)?;
        if &head[..4] != MAGIC {
            return Err(Error::format("scft", "bad magic"));
        }
        if head[4] != VERSION {
            return Err(Error::format("scft", format!("unsupported version {}", head[4])));
        }
        let kind = head[5];
        let rank = head[6] as usize;
        let mut dims = Vec::with_capacity(rank);
        let mut word = [0u8; 4];
        for _ in 0..rank {
            r.read_exact(&mut word).map_err(eof)?;
            dims.push(u32::from_le_bytes(word));
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or_else(|| Error::format("scft", "dimension product overflows"))?;
        let mut bytes = vec![0u8; n.checked_mul(4).ok_or_else(|| Error::format("scft", "tensor too large"))?];
        r.read_exact(&mut bytes).map_err(eof)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(ScftTensor { kind, dims, data })
    }

    /// Parses a buffer holding exactly one tensor.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let t = Self::read_from(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(Error::format("scft", format!("{} trailing bytes", cursor.len())));
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let t = ScftTensor::new(KIND_WAVE, &[2, 1], vec![1.0, -2.0]).unwrap();
        let b = t.to_bytes();
        let mut want = b"SCFT".to_vec();
        want.extend([1, KIND_WAVE, 2, 2, 0, 0, 0, 1, 0, 0, 0]);
        want.extend(1.0f32.to_le_bytes());
        want.extend((-2.0f32).to_le_bytes());
        assert_eq!(b, want);
        assert_eq!(ScftTensor::from_bytes(&b).unwrap(), t);
    }

    #[test]
    fn rejects_corruption() {
        let b = ScftTensor::new(3, &[3], vec![0.0; 3]).unwrap().to_bytes();
        assert!(ScftTensor::from_bytes(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(ScftTensor::from_bytes(&bad).is_err());
        let mut bad = b.clone();
        bad[4] = 2;
        assert!(ScftTensor::from_bytes(&bad).is_err());
        assert!(ScftTensor::new(0, &[2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn scalar_rank_zero() {
        let t = ScftTensor::new(KIND_PARAM, &[], vec![4.5]).unwrap();
        assert_eq!(ScftTensor::from_bytes(&t.to_bytes()).unwrap(), t);
    }
}
