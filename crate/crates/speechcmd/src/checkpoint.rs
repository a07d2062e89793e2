//! SCNN checkpoints: `"SCNN"`, version byte, u32 length + model-spec text,
//! u32 tensor count, then every parameter and buffer tensor as SCFT in layer
//! order.

use std::path::Path;

use speechcmd_core::nn::{Model, ModelSpec, Tensor};

use crate::error::{Error, IoContext, Result};
use crate::scft::{ScftTensor, KIND_PARAM};

pub const MAGIC: &[u8; 4] = b"SCNN";
pub const VERSION: u8 = 1;

pub fn encode(model: &Model<f32>) -> Vec<u8> {
    let text = model.spec().to_string();
    let state = model.state();
    let mut out = MAGIC.to_vec();
    out.push(VERSION);
    out.extend((text.len() as u32).to_le_bytes());
    out.extend(text.as_bytes());
    out.extend((state.len() as u32).to_le_bytes());
    for t in state {
        ScftTensor { kind: KIND_PARAM, dims: t.shape.iter().map(|&d| d as u32).collect(), data: t.data.clone() }
            .write_to(&mut out)
            .expect("writing to a Vec cannot fail");
    }
    out
}

fn take<'a>(buf: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if buf.len() < n {
        return Err(Error::format("scnn", "truncated"));
    }
    let (head, rest) = buf.split_at(n);
    *buf = rest;
    Ok(head)
}

fn take_u32(buf: &mut &[u8]) -> Result<u32> {
    let b = take(buf, 4)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

pub fn decode(bytes: &[u8]) -> Result<Model<f32>> {
    let mut buf = bytes;
    if take(&mut buf, 4)? != MAGIC {
        return Err(Error::format("scnn", "bad magic"));
    }
    let version = take(&mut buf, 1)?[0];
    if version != VERSION {
        return Err(Error::format("scnn", format!("unsupported version {version}")));
    }
    let len = take_u32(&mut buf)? as usize;
    let text = std::str::from_utf8(take(&mut buf, len)?).map_err(|e| Error::format("scnn", e.to_string()))?;
    let spec: ModelSpec = text.parse()?;
    let count = take_u32(&mut buf)? as usize;
    let mut tensors = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let t = ScftTensor::read_from(&mut buf)?;
        tensors.push(Tensor::from_vec(&t.shape(), t.data)?);
    }
    if !buf.is_empty() {
        return Err(Error::format("scnn", format!("{} trailing bytes", buf.len())));
    }
    let mut model = Model::new(&spec, 0)?;
    model.load_state(&tensors)?;
    Ok(model)
}

pub fn save(model: &Model<f32>, path: &Path) -> Result<()> {
    std::fs::write(path, encode(model)).at(path)
}

pub fn load(path: &Path) -> Result<Model<f32>> {
    decode(&std::fs::read(path).at(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use speechcmd_core::nn::{build_cnn2d, Mode};

    #[test]
    fn round_trip_preserves_outputs() {
        let mut m = Model::<f32>::new(&build_cnn2d(20, 20), 3).unwrap();
        let x = Tensor::full(&[2, 1, 20, 20], 0.25f32);
        // Move the running statistics away from their initial values.
        m.forward(&x, Mode::Train).unwrap();
        let bytes = encode(&m);
        let mut back = decode(&bytes).unwrap();
        assert_eq!(back.snapshot(), m.snapshot());
        assert_eq!(back.forward(&x, Mode::Eval).unwrap(), m.forward(&x, Mode::Eval).unwrap());
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn rejects_truncation() {
        let m = Model::<f32>::new(&build_cnn2d(12, 12), 0).unwrap();
        let bytes = encode(&m);
        for cut in [0, 3, 5, 9, bytes.len() - 1] {
            assert!(decode(&bytes[..cut]).is_err());
        }
    }
}
