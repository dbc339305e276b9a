//! Bit-exact checkpoint serialization.
//!
//! Layout: a text manifest listing `(name, dtype, shape)` per tensor in the
//! model's canonical order, a `payload <bytes>` line, then the raw
//! little-endian row-major `f64` payloads in the same order, and finally a
//! trailing little-endian 64-bit FNV-1a checksum of the payload bytes.

use crate::error::Error;
use crate::model::{ModelConfig, ModelParams};
use crate::Result;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &str = "glimpse-iqa-checkpoint v1";

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn save(params: &ModelParams, path: &Path) -> Result<()> {
    let mut manifest = String::new();
    manifest.push_str(MAGIC);
    manifest.push('\n');
    let named = params.named();
    manifest.push_str(&format!("tensors {}\n", named.len()));
    let mut payload: Vec<u8> = Vec::new();
    for (name, tensor) in &named {
        let dims: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
        manifest.push_str(&format!("{name} f64 {}\n", dims.join("x")));
        for v in tensor.data() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    manifest.push_str(&format!("payload {}\n", payload.len()));

    let mut file = std::fs::File::create(path)?;
    file.write_all(manifest.as_bytes())?;
    file.write_all(&payload)?;
    file.write_all(&fnv1a64(&payload).to_le_bytes())?;
    Ok(())
}

/// Loads a checkpoint into a model built from `cfg`.
///
/// Refused outright on a bad checksum. On any disagreement between the
/// stored manifest and the model's expected tensor list, the error message
/// carries the full named-tensor diff.
pub fn load(path: &Path, cfg: ModelConfig) -> Result<ModelParams> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut params = ModelParams::init(cfg, 0);

    // split the text header from the binary payload
    let mut offset = 0usize;
    let mut next_line = |bytes: &[u8]| -> Result<String> {
        let start = offset;
        while offset < bytes.len() && bytes[offset] != b'\n' {
            offset += 1;
        }
        if offset >= bytes.len() {
            return Err(Error::Checkpoint("truncated header".into()));
        }
        let line = String::from_utf8_lossy(&bytes[start..offset]).into_owned();
        offset += 1;
        Ok(line)
    };

    if next_line(&bytes)? != MAGIC {
        return Err(Error::Checkpoint("bad magic line".into()));
    }
    let count_line = next_line(&bytes)?;
    let count: usize = count_line
        .strip_prefix("tensors ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Checkpoint(format!("bad tensor count line: {count_line}")))?;
    let mut stored: Vec<(String, Vec<usize>)> = Vec::with_capacity(count);
    for _ in 0..count {
        let line = next_line(&bytes)?;
        let mut fields = line.split_whitespace();
        let name = fields
            .next()
            .ok_or_else(|| Error::Checkpoint(format!("bad tensor line: {line}")))?
            .to_string();
        let dtype = fields.next().unwrap_or("");
        if dtype != "f64" {
            return Err(Error::Checkpoint(format!("unsupported dtype {dtype} for {name}")));
        }
        let shape_str =
            fields.next().ok_or_else(|| Error::Checkpoint(format!("bad tensor line: {line}")))?;
        let shape: Vec<usize> = shape_str
            .split('x')
            .map(|d| d.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Checkpoint(format!("bad shape {shape_str} for {name}")))?;
        stored.push((name, shape));
    }
    let payload_line = next_line(&bytes)?;
    let payload_len: usize = payload_line
        .strip_prefix("payload ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Checkpoint(format!("bad payload line: {payload_line}")))?;
    if bytes.len() != offset + payload_len + 8 {
        return Err(Error::Checkpoint(format!(
            "payload size mismatch: header says {payload_len}, file holds {}",
            bytes.len().saturating_sub(offset + 8)
        )));
    }
    let payload = &bytes[offset..offset + payload_len];
    let checksum = u64::from_le_bytes(bytes[offset + payload_len..].try_into().unwrap());
    if fnv1a64(payload) != checksum {
        return Err(Error::Checkpoint("checksum mismatch, refusing to load".into()));
    }

    // diff the stored manifest against the expected tensor list
    let expected: Vec<(String, Vec<usize>)> =
        params.named().iter().map(|(n, t)| (n.clone(), t.shape().to_vec())).collect();
    if stored != expected {
        let mut diff = String::new();
        let fmt = |shape: &[usize]| {
            shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
        };
        for (name, shape) in &expected {
            match stored.iter().find(|(n, _)| n == name) {
                None => diff.push_str(&format!("  missing {name} {}\n", fmt(shape))),
                Some((_, s)) if s != shape => diff.push_str(&format!(
                    "  shape mismatch {name}: checkpoint {} vs model {}\n",
                    fmt(s),
                    fmt(shape)
                )),
                _ => {}
            }
        }
        for (name, shape) in &stored {
            if !expected.iter().any(|(n, _)| n == name) {
                diff.push_str(&format!("  unexpected {name} {}\n", fmt(shape)));
            }
        }
        if diff.is_empty() {
            diff.push_str("  tensor order differs from canonical order\n");
        }
        return Err(Error::Checkpoint(format!("named-tensor diff:\n{diff}")));
    }

    let mut cursor = 0usize;
    let mut fill_err = None;
    params.for_each_mut(|name, tensor| {
        if fill_err.is_some() {
            return;
        }
        let n = tensor.numel() * 8;
        if cursor + n > payload.len() {
            fill_err = Some(format!("payload too short at {name}"));
            return;
        }
        for (i, chunk) in payload[cursor..cursor + n].chunks_exact(8).enumerate() {
            tensor.data_mut()[i] = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        cursor += n;
    });
    if let Some(msg) = fill_err {
        return Err(Error::Checkpoint(msg));
    }
    if cursor != payload.len() {
        return Err(Error::Checkpoint("payload has trailing bytes".into()));
    }
    Ok(params)
}
