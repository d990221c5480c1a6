//! Binary model files.
//!
//! ```text
//! magic    8 bytes  "PKSM0001" | "PKSM0002"
//! rows     u32 LE
//! cols     u32 LE
//! dim      u32 LE
//! seed     u64 LE
//! weights  rows*cols*dim f64 LE, node-major
//! labels   rows*cols u8 (0 = unlabeled, 1..=5 = grade)
//! mode     u8 (0 = bmu-distance, 1 = dot-product)
//! -- PKSM0002 only --
//! config   u32 LE byte length, then UTF-8 `key = value` text
//! ```

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::som::{ClassifyMode, Grade, SomError, SomModel};

pub const MAGIC_V1: &[u8; 8] = b"PKSM0001";
pub const MAGIC_V2: &[u8; 8] = b"PKSM0002";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("model file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("{0} unexpected bytes after the model payload")]
    TrailingBytes(usize),
    #[error("invalid node label byte {0}")]
    InvalidLabel(u8),
    #[error("invalid classify mode tag {0}")]
    InvalidMode(u8),
    #[error("embedded config is not valid UTF-8")]
    InvalidConfigText,
    #[error("model dimensions overflow")]
    Overflow,
    #[error(transparent)]
    Som(#[from] SomError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A decoded model plus its embedded config text (present in PKSM0002 only).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: SomModel,
    pub config: Option<String>,
}

/// Serializes as PKSM0002 when `config` is given, PKSM0001 otherwise.
pub fn encode(model: &SomModel, config: Option<&str>) -> Vec<u8> {
    let nodes = model.node_count();
    let mut out = Vec::with_capacity(29 + 8 * model.weights().len() + nodes + 1);
    out.extend_from_slice(if config.is_some() { MAGIC_V2 } else { MAGIC_V1 });
    out.extend_from_slice(&(model.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(model.cols() as u32).to_le_bytes());
    out.extend_from_slice(&(model.dim() as u32).to_le_bytes());
    out.extend_from_slice(&model.seed().to_le_bytes());
    for w in model.weights() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out.extend(model.labels().iter().map(|l| l.map_or(0, Grade::value)));
    out.push(model.classify_mode().tag());
    if let Some(text) = config {
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ModelFileError> {
        let end = self.pos.checked_add(n).ok_or(ModelFileError::Overflow)?;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or(ModelFileError::Truncated(what))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, ModelFileError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, ModelFileError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<ModelFile, ModelFileError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(8, "magic").map_err(|_| ModelFileError::BadMagic)?;
    let with_config = match magic {
        m if m == MAGIC_V1 => false,
        m if m == MAGIC_V2 => true,
        _ => return Err(ModelFileError::BadMagic),
    };
    let rows = cur.u32("rows")? as usize;
    let cols = cur.u32("cols")? as usize;
    let dim = cur.u32("dim")? as usize;
    let seed = cur.u64("seed")?;
    let nodes = rows.checked_mul(cols).ok_or(ModelFileError::Overflow)?;
    let count = nodes.checked_mul(dim).ok_or(ModelFileError::Overflow)?;
    let weight_bytes = count.checked_mul(8).ok_or(ModelFileError::Overflow)?;
    let weights = cur
        .take(weight_bytes, "weights")?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let labels = cur
        .take(nodes, "labels")?
        .iter()
        .map(|&b| match b {
            0 => Ok(None),
            g => Grade::new(g)
                .map(Some)
                .map_err(|_| ModelFileError::InvalidLabel(g)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let tag = cur.take(1, "classify mode")?[0];
    let mode = ClassifyMode::from_tag(tag).ok_or(ModelFileError::InvalidMode(tag))?;
    let config = if with_config {
        let len = cur.u32("config length")? as usize;
        let text = cur.take(len, "config")?;
        Some(String::from_utf8(text.to_vec()).map_err(|_| ModelFileError::InvalidConfigText)?)
    } else {
        None
    };
    if cur.pos != bytes.len() {
        return Err(ModelFileError::TrailingBytes(bytes.len() - cur.pos));
    }
    let model = SomModel::from_parts(rows, cols, dim, seed, weights, labels, mode)?;
    Ok(ModelFile { model, config })
}

pub fn write(
    path: impl AsRef<Path>,
    model: &SomModel,
    config: Option<&str>,
) -> Result<(), ModelFileError> {
    fs::write(path, encode(model, config))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<ModelFile, ModelFileError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled_model() -> SomModel {
        let mut m = SomModel::new(2, 3, 4, 77).unwrap();
        m.label_nodes(&[
            (vec![0.0; 4], Grade::new(2).unwrap()),
            (vec![1.0; 4], Grade::new(5).unwrap()),
        ])
        .unwrap();
        m.set_classify_mode(ClassifyMode::DotProduct);
        m
    }

    #[test]
    fn v1_layout() {
        let m = labeled_model();
        let bytes = encode(&m, None);
        assert_eq!(&bytes[..8], MAGIC_V1);
        assert_eq!(bytes.len(), 8 + 12 + 8 + 6 * 4 * 8 + 6 + 1);
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[20..28], &77u64.to_le_bytes());
        assert_eq!(*bytes.last().unwrap(), 1);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.model, m);
        assert_eq!(back.config, None);
    }

    #[test]
    fn v2_carries_config() {
        let m = labeled_model();
        let bytes = encode(&m, Some("seed = 77\n"));
        assert_eq!(&bytes[..8], MAGIC_V2);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.config.as_deref(), Some("seed = 77\n"));
        assert_eq!(encode(&back.model, back.config.as_deref()), bytes);
    }

    #[test]
    fn rejects_damage() {
        let m = labeled_model();
        let bytes = encode(&m, None);
        assert!(matches!(decode(b"PKSM9999"), Err(ModelFileError::BadMagic)));
        assert!(matches!(decode(b"PK"), Err(ModelFileError::BadMagic)));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 1]),
            Err(ModelFileError::Truncated(_))
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            decode(&extra),
            Err(ModelFileError::TrailingBytes(1))
        ));
        let mut bad_mode = bytes.clone();
        *bad_mode.last_mut().unwrap() = 9;
        assert!(matches!(
            decode(&bad_mode),
            Err(ModelFileError::InvalidMode(9))
        ));
        let mut bad_label = bytes.clone();
        let label_pos = bytes.len() - 2;
        bad_label[label_pos] = 6;
        assert!(matches!(
            decode(&bad_label),
            Err(ModelFileError::InvalidLabel(6))
        ));
    }
}
