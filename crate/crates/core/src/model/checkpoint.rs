//! Binary checkpoint format.
//!
//! Layout: magic, format version (u32), config text, vocabulary TSV, then
//! named tensors as `(name, rows, cols, f32 values)`, all little-endian,
//! followed by a SHA-256 digest of every preceding byte. Strings are
//! prefixed with their u32 byte length.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{ModelConfig, RatingClassifier};
use crate::numerics::{Real, Tensor2};
use crate::text::{EmbeddingTable, Vocabulary};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SGAUGE\x00\x01";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_u32(buf, s.len() as u32);
    buf.extend_from_slice(s.as_bytes());
}

fn put_tensor<T: Real>(buf: &mut Vec<u8>, name: &str, t: &Tensor2<T>) {
    put_str(buf, name);
    put_u32(buf, t.rows() as u32);
    put_u32(buf, t.cols() as u32);
    for &v in t.as_slice() {
        buf.extend_from_slice(&v.to_f32_bits().to_le_bytes());
    }
}

/// Serializes the model. Values are stored as 32-bit floats.
pub fn encode_checkpoint<T: Real>(model: &RatingClassifier<T>) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, FORMAT_VERSION);
    put_str(&mut buf, &model.config().to_text());
    put_str(&mut buf, &model.vocab().to_tsv());

    let params = model.parameters();
    put_u32(&mut buf, params.len() as u32 + 3);
    put_tensor(&mut buf, "embedding", model.embedding().as_tensor());
    for p in params {
        put_tensor(&mut buf, &p.name, &p.value);
    }
    put_tensor(&mut buf, "batchnorm.running_mean", &model.batchnorm.running_mean);
    put_tensor(&mut buf, "batchnorm.running_var", &model.batchnorm.running_var);

    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

pub fn save_checkpoint<T: Real>(model: &RatingClassifier<T>, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corrupted("unexpected end of checkpoint".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Corrupted("invalid UTF-8 in checkpoint".into()))
    }

    fn tensor<T: Real>(&mut self) -> Result<(String, Tensor2<T>)> {
        let name = self.string()?;
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Corrupted(format!("tensor `{name}` is too large")))?;
        let raw = self.take(len.checked_mul(4).ok_or_else(|| Error::Corrupted("tensor too large".into()))?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| T::from_f32_bits(u32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect();
        Ok((name, Tensor2::from_vec(rows, cols, data)))
    }
}

fn install<T: Real>(target: &mut Tensor2<T>, name: &str, tensors: &mut BTreeMap<String, Tensor2<T>>) -> Result<()> {
    let t = tensors
        .remove(name)
        .ok_or_else(|| Error::Corrupted(format!("checkpoint lacks tensor `{name}`")))?;
    if t.shape() != target.shape() {
        return Err(Error::Corrupted(format!(
            "tensor `{name}` has shape {:?}, expected {:?}",
            t.shape(),
            target.shape()
        )));
    }
    *target = t;
    Ok(())
}

/// Parses a checkpoint. The whole buffer is verified before any model is
/// built, so a damaged file never yields a partial model.
pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<RatingClassifier<T>> {
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Corrupted("not a scriptgauge checkpoint".into()));
    }
    let mut r = Reader { bytes, pos: MAGIC.len() };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < MAGIC.len() + 4 + DIGEST_LEN {
        return Err(Error::Corrupted("checksum mismatch".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Corrupted("checksum mismatch".into()));
    }
    let mut r = Reader {
        bytes: body,
        pos: MAGIC.len() + 4,
    };
    let config = ModelConfig::from_text(&r.string()?)?;
    let vocab = Vocabulary::from_tsv(&r.string()?)?;
    let count = r.u32()? as usize;
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        let (name, t) = r.tensor::<T>()?;
        if tensors.insert(name.clone(), t).is_some() {
            return Err(Error::Corrupted(format!("tensor `{name}` appears twice")));
        }
    }
    if r.pos != body.len() {
        return Err(Error::Corrupted("trailing bytes after tensors".into()));
    }

    let embedding = tensors
        .remove("embedding")
        .ok_or_else(|| Error::Corrupted("checkpoint lacks the embedding table".into()))?;
    let embedding = EmbeddingTable::from_tensor(embedding)?;
    let mut model = RatingClassifier::new(config, vocab, embedding)?;
    for p in model.parameters_mut() {
        let name = p.name.clone();
        install(&mut p.value, &name, &mut tensors)?;
        p.grad = Tensor2::zeros(p.value.rows(), p.value.cols());
    }
    install(&mut model.batchnorm.running_mean, "batchnorm.running_mean", &mut tensors)?;
    install(&mut model.batchnorm.running_var, "batchnorm.running_var", &mut tensors)?;
    if let Some(name) = tensors.keys().next() {
        return Err(Error::Corrupted(format!("unexpected tensor `{name}`")));
    }
    Ok(model)
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<RatingClassifier<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
