//! Binary model checkpoints.
//!
//! All integers and reals are little-endian.
//!
//! ```text
//! magic       4 bytes   "P1K1"
//! version     u32       1
//! kind        u8        1 = P1-KAN, 2 = MLP
//! n_widths    u32
//! widths      n_widths x u32          [d, hidden..., out]
//! -- P1-KAN only --
//! meshes      u32
//! domain      d x f64 lower, then d x f64 upper
//! -- parameters --
//! f64 tensors, concatenated:
//!   P1-KAN: per layer, coefficients a[k][j][i] then logits y[m][i]
//!   MLP:    per layer, weights (out x in, row-major) then biases
//! ```
//!
//! Tensor lengths are implied by the header, and the file must end exactly
//! after the last tensor.

use std::path::Path;

use p1kan_core::{CoreError, HyperRectangle, Mlp, P1KanLayer, P1KanNetwork, Regressor};
use thiserror::Error;

use crate::error::HarnessError;
use crate::model::Model;

pub const MAGIC: &[u8; 4] = b"P1K1";
pub const FORMAT_VERSION: u32 = 1;
const KIND_P1KAN: u8 = 1;
const KIND_MLP: u8 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum CheckpointError {
    #[error("not a P1K1 checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint format version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown model kind tag {0}")]
    UnknownKind(u8),
    #[error("checkpoint truncated while reading {0}")]
    Truncated(&'static str),
    #[error("{0} unexpected bytes after the last tensor")]
    TrailingBytes(usize),
    #[error("inconsistent model: {0}")]
    Invalid(#[from] CoreError),
    #[error("header value out of range: {0}")]
    BadHeader(&'static str),
}

pub fn encode(model: &Model) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let widths = model.widths();
    buf.push(match model {
        Model::P1Kan(_) => KIND_P1KAN,
        Model::Mlp(_) => KIND_MLP,
    });
    buf.extend_from_slice(&(widths.len() as u32).to_le_bytes());
    for w in &widths {
        buf.extend_from_slice(&(*w as u32).to_le_bytes());
    }
    if let Model::P1Kan(net) = model {
        buf.extend_from_slice(&(net.meshes() as u32).to_le_bytes());
        for v in net.domain().lower().iter().chain(net.domain().upper()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for tensor in model.parameters() {
        for v in tensor {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        if self.bytes.len() < n {
            return Err(CheckpointError::Truncated(what));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, CheckpointError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, CheckpointError> {
        let len = n
            .checked_mul(8)
            .ok_or(CheckpointError::BadHeader("tensor size"))?;
        Ok(self
            .take(len, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Model, CheckpointError> {
    let mut r = Reader { bytes };
    let magic = r.take(4, "magic").map_err(|_| CheckpointError::BadMagic)?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let kind = r.u8("model kind")?;
    if kind != KIND_P1KAN && kind != KIND_MLP {
        return Err(CheckpointError::UnknownKind(kind));
    }
    let n_widths = r.u32("width count")? as usize;
    if n_widths < 2 {
        return Err(CheckpointError::BadHeader("fewer than two widths"));
    }
    // each width takes 4 bytes, so a bogus count cannot force a huge allocation
    if n_widths > r.bytes.len() / 4 {
        return Err(CheckpointError::Truncated("widths"));
    }
    let widths = (0..n_widths)
        .map(|_| r.u32("widths").map(|w| w as usize))
        .collect::<Result<Vec<_>, _>>()?;
    if widths.contains(&0) {
        return Err(CheckpointError::BadHeader("zero width"));
    }
    let model = if kind == KIND_P1KAN {
        let meshes = r.u32("meshes")? as usize;
        if meshes == 0 {
            return Err(CheckpointError::BadHeader("zero meshes"));
        }
        let d = widths[0];
        let lower = r.f64s(d, "domain")?;
        let upper = r.f64s(d, "domain")?;
        let domain = HyperRectangle::new(lower, upper)?;
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for w in widths.windows(2) {
            let (d_in, d_out) = (w[0], w[1]);
            let coeffs = r.f64s(d_out * (meshes + 1) * d_in, "layer coefficients")?;
            let logits = r.f64s(meshes * d_in, "layer logits")?;
            layers.push(P1KanLayer::from_parts(d_in, d_out, meshes, coeffs, logits)?);
        }
        Model::P1Kan(P1KanNetwork::from_layers(layers, domain)?)
    } else {
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        for w in widths.windows(2) {
            weights.push(r.f64s(w[0] * w[1], "MLP weights")?);
            biases.push(r.f64s(w[1], "MLP biases")?);
        }
        Model::Mlp(Mlp::from_parts(&widths, weights, biases)?)
    };
    if !r.bytes.is_empty() {
        return Err(CheckpointError::TrailingBytes(r.bytes.len()));
    }
    Ok(model)
}

pub fn save_model(model: &Model, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, encode(model)).map_err(|e| HarnessError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model, HarnessError> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode(&bytes).map_err(|source| HarnessError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}
