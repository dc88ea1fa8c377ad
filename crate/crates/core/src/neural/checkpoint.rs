//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"OTMAPCK\0"
//! 8       4     format version (u32, currently 1)
//! 12      4     header length H in bytes (u32)
//! 16      H     UTF-8 JSON header (see `Header`)
//! 16+H    ...   parameter block: for each layer, weights (out*in scalars,
//!               row-major) then bias (out scalars)
//!         ...   if the header has `adam`: first moments for every layer in the
//!               same order, then second moments
//! ```
//!
//! Scalars are raw IEEE-754 bit patterns of the width named in the header
//! (`"f32"` or `"f64"`), so a save/load round trip is bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::mlp::{Gradients, Layer, LayerBuffers, LayerSpec, Mlp};
use super::scalar::Real;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"OTMAPCK\0";
pub const VERSION: u32 = 1;

/// Position of a seeded ChaCha stream, enough to resume it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(seed: u64, rng: &rand_chacha::ChaCha8Rng) -> Self {
        Self {
            seed,
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AdamHeader {
    config: AdamConfig,
    t: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    scalar: String,
    layers: Vec<LayerSpec>,
    adam: Option<AdamHeader>,
    rng: Option<RngState>,
    #[serde(default)]
    meta: serde_json::Value,
}

/// A network plus optional optimizer and RNG state and free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub net: Mlp<T>,
    pub adam: Option<AdamState<T>>,
    pub rng: Option<RngState>,
    pub meta: serde_json::Value,
}

impl<T: Real> Checkpoint<T> {
    pub fn new(net: Mlp<T>) -> Self {
        Self {
            net,
            adam: None,
            rng: None,
            meta: serde_json::Value::Null,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            scalar: T::NAME.to_string(),
            layers: self.net.specs(),
            adam: self.adam.as_ref().map(|a| AdamHeader {
                config: a.config,
                t: a.t,
            }),
            rng: self.rng,
            meta: self.meta.clone(),
        };
        let header = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + header.len() + self.net.param_count() * T::BYTES);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.net.params() {
            v.write_le(&mut out);
        }
        if let Some(adam) = &self.adam {
            for v in adam.m.iter().chain(adam.v.iter()) {
                v.write_le(&mut out);
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = Cursor { bytes, pos: 0 };
        if cursor.take(8)? != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = u32::from_le_bytes(cursor.take(4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let len = u32::from_le_bytes(cursor.take(4)?.try_into().expect("4 bytes")) as usize;
        let header: Header = serde_json::from_slice(cursor.take(len)?)?;
        if header.scalar != T::NAME {
            return Err(Error::Format(format!(
                "checkpoint holds {} parameters, expected {}",
                header.scalar,
                T::NAME
            )));
        }
        let read_buffers = |cursor: &mut Cursor| -> Result<Vec<LayerBuffers<T>>> {
            header
                .layers
                .iter()
                .map(|s| {
                    Ok(LayerBuffers {
                        weights: cursor.scalars::<T>(s.in_dim * s.out_dim)?,
                        bias: cursor.scalars::<T>(s.out_dim)?,
                    })
                })
                .collect()
        };
        let params = read_buffers(&mut cursor)?;
        let layers = header
            .layers
            .iter()
            .zip(params)
            .map(|(&spec, b)| Layer {
                spec,
                weights: b.weights,
                bias: b.bias,
            })
            .collect();
        let net = Mlp::from_layers(layers)?;
        let adam = match &header.adam {
            Some(h) => {
                let m = Gradients {
                    layers: read_buffers(&mut cursor)?,
                };
                let v = Gradients {
                    layers: read_buffers(&mut cursor)?,
                };
                Some(AdamState {
                    config: h.config,
                    t: h.t,
                    m,
                    v,
                })
            }
            None => None,
        };
        if cursor.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after checkpoint payload",
                bytes.len() - cursor.pos
            )));
        }
        Ok(Self {
            net,
            adam,
            rng: header.rng,
            meta: header.meta,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::TruncatedFile {
                expected: end,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn scalars<T: Real>(&mut self, count: usize) -> Result<Vec<T>> {
        let raw = self.take(count * T::BYTES)?;
        Ok(raw.chunks_exact(T::BYTES).map(T::read_le).collect())
    }
}
