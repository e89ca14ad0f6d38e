//! Versioned little-endian binary container for [`MlpModel`].
//!
//! Layout: magic `RSVMLP\0\0`, `u32` version, `u32` context, `u32` layer count, then per
//! layer `u32 in, u32 out, u8 activation`; then per layer the weights row-major followed by
//! the bias; then input mean/std and output mean/std. All reals are `f64`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use super::model::{MlpModel, Normalization};
use super::network::{Activation, Layer, Network};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RSVMLP\0\0";
const VERSION: u32 = 1;

fn put_u32(w: &mut Vec<u8>, v: u32) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s<'a>(w: &mut Vec<u8>, vs: impl IntoIterator<Item = &'a f64>) {
    for v in vs {
        w.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_model(model: &MlpModel) -> Vec<u8> {
    let mut w = Vec::new();
    w.extend_from_slice(MAGIC);
    put_u32(&mut w, VERSION);
    put_u32(&mut w, model.context as u32);
    put_u32(&mut w, model.network.layers.len() as u32);
    for l in &model.network.layers {
        put_u32(&mut w, l.input_dim() as u32);
        put_u32(&mut w, l.output_dim() as u32);
        w.push(l.activation.code());
    }
    for l in &model.network.layers {
        for r in 0..l.output_dim() {
            put_f64s(&mut w, l.weights.row(r).iter());
        }
        put_f64s(&mut w, l.bias.iter());
    }
    for n in [&model.input_norm, &model.output_norm] {
        put_f64s(&mut w, &n.mean);
        put_f64s(&mut w, &n.std);
    }
    w
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("unexpected end of model file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n * 8)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_model(buf: &[u8]) -> Result<MlpModel> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Format("not an autoencoder model file".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let context = c.u32()? as usize;
    let n_layers = c.u32()? as usize;
    if n_layers == 0 {
        return Err(Error::Format("model has no layers".into()));
    }
    let mut shapes = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let (i, o) = (c.u32()? as usize, c.u32()? as usize);
        let act = Activation::from_code(c.take(1)?[0])
            .ok_or_else(|| Error::Format("unknown activation code".into()))?;
        shapes.push((i, o, act));
    }
    for w in shapes.windows(2) {
        if w[0].1 != w[1].0 {
            return Err(Error::Format("layer dimensions do not chain".into()));
        }
    }
    let mut layers = Vec::with_capacity(n_layers);
    for &(i, o, activation) in &shapes {
        let weights = DMatrix::from_row_slice(o, i, &c.f64s(i * o)?);
        let bias = DVector::from_vec(c.f64s(o)?);
        layers.push(Layer {
            weights,
            bias,
            activation,
        });
    }
    let (din, dout) = (shapes[0].0, shapes[n_layers - 1].1);
    let input_norm = Normalization {
        mean: c.f64s(din)?,
        std: c.f64s(din)?,
    };
    let output_norm = Normalization {
        mean: c.f64s(dout)?,
        std: c.f64s(dout)?,
    };
    if c.pos != buf.len() {
        return Err(Error::Format("trailing bytes in model file".into()));
    }
    Ok(MlpModel {
        network: Network { layers },
        input_norm,
        output_norm,
        context,
    })
}

pub fn save_model(path: &std::path::Path, model: &MlpModel) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &std::path::Path) -> Result<MlpModel> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode_model(&buf)
}
