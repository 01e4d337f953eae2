//! Binary model checkpoints: magic `A3VG`, a `u32` format version, then named
//! tensors until end of file, each as name length (`u32`), UTF-8 name, rank
//! (`u32`), dims (`u32` each) and little-endian `f64` data.

use std::io::{Read, Write};

use super::model::{GroundingModel, ModelConfig};
use super::scene::StubConfig;
use super::tape::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"A3VG";
pub const FORMAT_VERSION: u32 = 1;
const CONFIG_TENSOR: &str = "config";

fn config_values(c: &ModelConfig) -> Vec<f64> {
    let seed = c.stub.embed_seed;
    let mut v = vec![
        c.num_classes as f64,
        c.stub.d_obj as f64,
        c.stub.d_lab as f64,
        c.stub.d_audio as f64,
        (seed & 0xffff_ffff) as f64,
        (seed >> 32) as f64,
        c.heads as f64,
        c.d_head as f64,
        c.attn_layers as f64,
        c.omd_threshold,
        c.loss_weights[0],
        c.loss_weights[1],
        c.loss_weights[2],
        c.hidden.len() as f64,
    ];
    v.extend(c.hidden.iter().map(|&h| h as f64));
    v
}

fn config_from_values(v: &[f64]) -> Result<ModelConfig> {
    let bad = || Error::data("malformed checkpoint config");
    if v.len() < 14 {
        return Err(bad());
    }
    let int = |x: f64| -> Result<usize> {
        if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
            Ok(x as usize)
        } else {
            Err(bad())
        }
    };
    let n_hidden = int(v[13])?;
    if v.len() != 14 + n_hidden {
        return Err(bad());
    }
    let config = ModelConfig {
        num_classes: int(v[0])?,
        stub: StubConfig {
            d_obj: int(v[1])?,
            d_lab: int(v[2])?,
            d_audio: int(v[3])?,
            embed_seed: (int(v[4])? as u64) | ((int(v[5])? as u64) << 32),
        },
        heads: int(v[6])?,
        d_head: int(v[7])?,
        attn_layers: int(v[8])?,
        omd_threshold: v[9],
        loss_weights: [v[10], v[11], v[12]],
        hidden: v[14..].iter().map(|&x| int(x)).collect::<Result<_>>()?,
    };
    // Refuse configurations too large to build from a corrupt file.
    let widest = config
        .hidden
        .iter()
        .chain([&config.num_classes, &config.stub.d_obj, &config.stub.d_lab, &config.stub.d_audio, &config.heads, &config.d_head])
        .max()
        .copied()
        .unwrap_or(0);
    if widest > 1 << 16 || config.attn_layers > 64 || config.hidden.len() > 64 {
        return Err(bad());
    }
    Ok(config)
}

fn write_tensor<W: Write>(out: &mut W, name: &str, dims: &[usize], data: &[f64]) -> Result<()> {
    out.write_all(&(name.len() as u32).to_le_bytes())?;
    out.write_all(name.as_bytes())?;
    out.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        out.write_all(&(d as u32).to_le_bytes())?;
    }
    for x in data {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(model: &GroundingModel, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let cfg = config_values(model.config());
    write_tensor(&mut out, CONFIG_TENSOR, &[cfg.len()], &cfg)?;
    for (name, t) in model.tensors() {
        write_tensor(&mut out, name, &[t.rows, t.cols], &t.data)?;
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::data("truncated checkpoint"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<GroundingModel> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(4).ok() != Some(&MAGIC[..]) {
        return Err(Error::data("not a model checkpoint (bad magic)"));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::data(format!("unsupported checkpoint version {version}")));
    }

    let mut tensors: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::new();
    while !c.done() {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| Error::data("tensor name is not UTF-8"))?
            .to_string();
        let rank = c.u32()? as usize;
        if rank > 8 {
            return Err(Error::data(format!("tensor {name} has rank {rank}")));
        }
        let dims: Vec<usize> = (0..rank).map(|_| c.u32().map(|d| d as usize)).collect::<Result<_>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|n| n.checked_mul(8).is_some_and(|b| b <= bytes.len()))
            .ok_or_else(|| Error::data(format!("tensor {name} is larger than the file")))?;
        let raw = c.take(count * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        tensors.push((name, dims, data));
    }

    let mut iter = tensors.into_iter();
    let config = match iter.next() {
        Some((name, dims, data)) if name == CONFIG_TENSOR && dims.len() == 1 => config_from_values(&data)?,
        _ => return Err(Error::data("checkpoint does not start with its config")),
    };
    let params = iter
        .map(|(name, dims, data)| {
            if dims.len() != 2 {
                return Err(Error::data(format!("parameter {name} must have rank 2")));
            }
            Ok((name, Tensor::from_vec(dims[0], dims[1], data)))
        })
        .collect::<Result<Vec<_>>>()?;
    GroundingModel::from_tensors(config, params)
}
