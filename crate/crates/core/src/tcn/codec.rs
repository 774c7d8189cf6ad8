//! Binary model format, little-endian:
//!
//! ```text
//! "TCNK" | version u32 | config | norm stats | tensors | crc32 u32
//! config  = in_channels, blocks, layers_per_block, channels, kernel (u32),
//!           dropout (f64), dilations (u32 x blocks), out_dim, window_len (u32)
//! norm    = (mean f64, std f64) x in_channels
//! tensor  = rank u32, dims u32 x rank, values f64 x prod(dims)
//! ```
//!
//! Tensors follow [`TcnWeights::tensors`] order. The CRC covers every byte
//! after the magic.

use alloc::vec;
use alloc::vec::Vec;

use super::{NormStats, TcnConfig, TcnError, TcnModel, TcnWeights, LAYERS_PER_BLOCK};

pub const MODEL_MAGIC: [u8; 4] = *b"TCNK";
pub const MODEL_VERSION: u32 = 1;

// Guards against absurd allocations from a damaged header.
const MAX_DIM: u32 = 1 << 20;

pub fn encode_model(model: &TcnModel) -> Vec<u8> {
    let c = &model.config;
    let mut b = Vec::new();
    b.extend_from_slice(&MODEL_MAGIC);
    b.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for v in [
        c.in_channels,
        c.blocks,
        LAYERS_PER_BLOCK,
        c.channels,
        c.kernel,
    ] {
        b.extend_from_slice(&(v as u32).to_le_bytes());
    }
    b.extend_from_slice(&c.dropout.to_le_bytes());
    for &d in &c.dilations {
        b.extend_from_slice(&(d as u32).to_le_bytes());
    }
    b.extend_from_slice(&(c.out_dim as u32).to_le_bytes());
    b.extend_from_slice(&(c.window_len as u32).to_le_bytes());
    for (m, s) in model.norm.mean.iter().zip(&model.norm.std) {
        b.extend_from_slice(&m.to_le_bytes());
        b.extend_from_slice(&s.to_le_bytes());
    }
    for t in model.weights.tensors() {
        b.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for d in &t.shape {
            b.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for x in t.data {
            b.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&b[4..]);
    b.extend_from_slice(&crc.to_le_bytes());
    b
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], TcnError> {
        let s = self
            .buf
            .get(self.pos..self.pos + N)
            .ok_or(TcnError::TruncatedFile)?;
        self.pos += N;
        Ok(s.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32, TcnError> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn dim(&mut self) -> Result<usize, TcnError> {
        let v = self.u32()?;
        if v > MAX_DIM {
            return Err(TcnError::CorruptPayload("dimension out of range"));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Result<f64, TcnError> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

fn read_config(r: &mut Reader<'_>) -> Result<TcnConfig, TcnError> {
    let in_channels = r.dim()?;
    let blocks = r.dim()?;
    if r.dim()? != LAYERS_PER_BLOCK {
        return Err(TcnError::CorruptPayload("unsupported layers per block"));
    }
    let channels = r.dim()?;
    let kernel = r.dim()?;
    let dropout = r.f64()?;
    let dilations = (0..blocks)
        .map(|_| r.dim())
        .collect::<Result<Vec<_>, _>>()?;
    let out_dim = r.dim()?;
    let window_len = r.dim()?;
    Ok(TcnConfig {
        in_channels,
        blocks,
        channels,
        kernel,
        dropout,
        dilations,
        out_dim,
        window_len,
    })
}

/// Byte length of a well-formed file for `cfg`.
fn expected_len(cfg: &TcnConfig) -> usize {
    let z = TcnWeights::zeros(cfg);
    let header = 4 + 4 + 5 * 4 + 8 + 4 * cfg.blocks + 8;
    let norm = 16 * cfg.in_channels;
    let tensors: usize = z
        .tensors()
        .iter()
        .map(|t| 4 + 4 * t.shape.len() + 8 * t.data.len())
        .sum();
    header + norm + tensors + 4
}

pub fn decode_model(bytes: &[u8]) -> Result<TcnModel, TcnError> {
    if bytes.len() < 4 {
        return Err(if MODEL_MAGIC.starts_with(bytes) {
            TcnError::TruncatedFile
        } else {
            TcnError::BadMagic
        });
    }
    if bytes[..4] != MODEL_MAGIC {
        return Err(TcnError::BadMagic);
    }
    let mut r = Reader { buf: bytes, pos: 4 };
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(TcnError::VersionMismatch {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    if bytes.len() < 12 {
        return Err(TcnError::TruncatedFile);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(&body[4..]) != stored {
        let mut probe = Reader { buf: bytes, pos: 8 };
        return Err(match read_config(&mut probe) {
            Err(TcnError::TruncatedFile) => TcnError::TruncatedFile,
            Ok(cfg) if cfg.validate().is_ok() && expected_len(&cfg) > bytes.len() => {
                TcnError::TruncatedFile
            }
            _ => TcnError::ChecksumMismatch,
        });
    }
    let mut r = Reader { buf: body, pos: 8 };
    let config = read_config(&mut r)?;
    config
        .validate()
        .map_err(|_| TcnError::CorruptPayload("invalid config"))?;
    if expected_len(&config) != bytes.len() {
        return Err(TcnError::CorruptPayload("length does not match the config"));
    }
    let mut norm = NormStats {
        mean: vec![0.0; config.in_channels],
        std: vec![0.0; config.in_channels],
    };
    for c in 0..config.in_channels {
        norm.mean[c] = r.f64()?;
        norm.std[c] = r.f64()?;
    }
    let mut weights = TcnWeights::zeros(&config);
    let shapes: Vec<Vec<usize>> = weights.tensors().into_iter().map(|t| t.shape).collect();
    for (shape, dst) in shapes.iter().zip(weights.params_mut()) {
        let rank = r.dim()?;
        let dims = (0..rank).map(|_| r.dim()).collect::<Result<Vec<_>, _>>()?;
        if &dims != shape {
            return Err(TcnError::CorruptPayload(
                "tensor shape does not match the config",
            ));
        }
        for x in dst.iter_mut() {
            *x = r.f64()?;
        }
    }
    let model = TcnModel {
        config,
        weights,
        norm,
    };
    model.check()?;
    Ok(model)
}
