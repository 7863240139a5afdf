//! Shared container of every binary artifact:
//!
//! ```text
//! magic   8 bytes  "FINFLOW\x01"
//! hlen    u64 LE   length of the JSON header
//! header  hlen bytes of UTF-8 JSON: {"kind", "version", "body_len", ...}
//! body    body_len bytes, little-endian numbers
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"FINFLOW\x01";

#[derive(Serialize, Deserialize)]
struct Envelope<H> {
    kind: String,
    version: u32,
    body_len: u64,
    #[serde(flatten)]
    meta: H,
}

pub(crate) fn encode<H: Serialize>(kind: &str, version: u32, meta: &H, body: &[u8]) -> Vec<u8> {
    let env = Envelope { kind: kind.to_owned(), version, body_len: body.len() as u64, meta };
    let header = serde_json::to_vec(&env).expect("headers are plain data");
    let mut out = Vec::with_capacity(16 + header.len() + body.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(body);
    out
}

/// Splits a container into its typed header and body, checking the kind,
/// the version and that the body has exactly the declared length.
pub(crate) fn decode<'a, H: DeserializeOwned>(
    path: &Path,
    bytes: &'a [u8],
    kind: &str,
    version: u32,
) -> Result<(H, &'a [u8])> {
    let bad = |reason: String| Error::format(path, reason);
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a finflow artifact".into()));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let rest = &bytes[16..];
    let hlen = usize::try_from(hlen)
        .ok()
        .filter(|&h| h <= rest.len())
        .ok_or_else(|| bad(format!("header length {hlen} exceeds the {} bytes that follow", rest.len())))?;
    let (header, body) = rest.split_at(hlen);
    let env: Envelope<serde_json::Value> =
        serde_json::from_slice(header).map_err(|e| bad(format!("corrupt header: {e}")))?;
    if env.kind != kind {
        return Err(bad(format!("expected a {kind} file, found {}", env.kind)));
    }
    if env.version != version {
        return Err(bad(format!("unsupported {kind} version {} (expected {version})", env.version)));
    }
    if env.body_len != body.len() as u64 {
        return Err(bad(format!("body is {} bytes, header declares {}", body.len(), env.body_len)));
    }
    let meta = serde_json::from_value(env.meta).map_err(|e| bad(format!("corrupt header: {e}")))?;
    Ok((meta, body))
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn put_f64s(out: &mut Vec<u8>, xs: impl IntoIterator<Item = f64>) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

/// Cursor over a body of little-endian numbers.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    path: &'a Path,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        Self { bytes, path }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::format(self.path, "body ends early"));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::format(self.path, "length overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(Error::format(self.path, format!("{} trailing bytes", self.bytes.len())))
        }
    }
}
