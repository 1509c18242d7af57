//! Model file layout, little-endian:
//!
//! ```text
//! magic "TGNM" | version u16 | board size u8 | input planes u16 | tied u8 | layers u16
//! per layer: kernel u8 | in u16 | out u16 | relu u8
//! parameters: f32, layer by layer, weights then biases
//! crc32 of everything above, u32
//! ```

use std::fs;
use std::path::Path;

use super::model::{LayerSpec, Model, ModelSpec};
use super::{NetworkError, Scalar};

pub const MODEL_MAGIC: &[u8; 4] = b"TGNM";
pub const MODEL_VERSION: u16 = 1;

pub fn encode_model<T: Scalar>(m: &Model<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + m.param_count() * 4);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.push(m.spec.board_size as u8);
    out.extend_from_slice(&(m.spec.input_planes() as u16).to_le_bytes());
    out.push(m.spec.symmetric as u8);
    out.extend_from_slice(&(m.spec.layers.len() as u16).to_le_bytes());
    for l in &m.spec.layers {
        out.push(l.kernel as u8);
        out.extend_from_slice(&(l.in_channels as u16).to_le_bytes());
        out.extend_from_slice(&(l.out_channels as u16).to_le_bytes());
        out.push(l.relu as u8);
    }
    for v in m.params() {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetworkError> {
        let s = self.bytes.get(self.at..self.at + n).ok_or_else(|| NetworkError::BadSpec("model file truncated".into()))?;
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, NetworkError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, NetworkError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<Model<f32>, NetworkError> {
    if bytes.len() < 4 + 2 + 4 || &bytes[..4] != MODEL_MAGIC {
        return Err(NetworkError::BadSpec("not a model file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(NetworkError::ChecksumFailure);
    }
    let mut c = Cursor { bytes: body, at: 4 };
    let version = c.u16()?;
    if version != MODEL_VERSION {
        return Err(NetworkError::VersionMismatch { found: version });
    }
    let board_size = c.u8()? as usize;
    let planes = c.u16()? as usize;
    let symmetric = match c.u8()? {
        0 => false,
        1 => true,
        v => return Err(NetworkError::BadSpec(format!("tied flag {v}"))),
    };
    let n_layers = c.u16()? as usize;
    let mut layers = Vec::with_capacity(n_layers.min(256));
    for _ in 0..n_layers {
        let kernel = c.u8()? as usize;
        let in_channels = c.u16()? as usize;
        let out_channels = c.u16()? as usize;
        let relu = match c.u8()? {
            0 => false,
            1 => true,
            v => return Err(NetworkError::BadSpec(format!("relu flag {v}"))),
        };
        layers.push(LayerSpec { kernel, in_channels, out_channels, relu });
    }
    if layers.first().is_some_and(|l| l.in_channels != planes) {
        return Err(NetworkError::BadSpec("first layer disagrees with the input plane count".into()));
    }
    let spec = ModelSpec { board_size, layers, symmetric };
    spec.validate()?;
    let expected = spec.param_count();
    if body.len() - c.at != expected * 4 {
        return Err(NetworkError::BadSpec(format!("expected {expected} parameters, found {} bytes", body.len() - c.at)));
    }
    let mut m = Model::zeros(spec)?;
    for v in m.params_mut() {
        *v = f32::from_le_bytes(c.take(4)?.try_into().unwrap());
    }
    Ok(m)
}

pub fn save_model<T: Scalar>(m: &Model<T>, path: &Path) -> Result<(), NetworkError> {
    fs::write(path, encode_model(m))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model<f32>, NetworkError> {
    decode_model(&fs::read(path)?)
}
