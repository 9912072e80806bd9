//! Versioned binary container for pipeline artifacts.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes   "XREFART\0"
//! version    u32       container format version (currently 1)
//! header_len u32       length of the JSON header in bytes
//! header     JSON      {"kind", "meta", "sections": [{"name", "dtype", "len"}]}
//! payload    sections concatenated in header order, raw little-endian
//! checksum   32 bytes  SHA-256 of everything above
//! ```
//!
//! JSON object keys are emitted in sorted order, so identical content always
//! encodes to identical bytes.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::{Error, Result, Scalar};

const MAGIC: &[u8; 8] = b"XREFART\0";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SectionHeader {
    name: String,
    dtype: String,
    len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: Value,
    sections: Vec<SectionHeader>,
}

pub struct ArtifactWriter {
    header: Header,
    payload: Vec<u8>,
}

impl ArtifactWriter {
    pub fn new(kind: &str) -> Self {
        Self {
            header: Header {
                kind: kind.to_owned(),
                meta: Value::Object(Default::default()),
                sections: Vec::new(),
            },
            payload: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl Serialize) -> Result<Self> {
        let v = serde_json::to_value(value)?;
        if let Value::Object(map) = &mut self.header.meta {
            map.insert(key.to_owned(), v);
        }
        Ok(self)
    }

    pub fn scalars<T: Scalar>(mut self, name: &str, data: &[T]) -> Self {
        self.push_section(name, T::NAME, data.len());
        self.payload.reserve(data.len() * T::BYTES);
        for &x in data {
            x.write_le(&mut self.payload);
        }
        self
    }

    pub fn u32s(mut self, name: &str, data: &[u32]) -> Self {
        self.push_section(name, "u32", data.len());
        for &x in data {
            self.payload.extend_from_slice(&x.to_le_bytes());
        }
        self
    }

    pub fn u64s(mut self, name: &str, data: &[u64]) -> Self {
        self.push_section(name, "u64", data.len());
        for &x in data {
            self.payload.extend_from_slice(&x.to_le_bytes());
        }
        self
    }

    fn push_section(&mut self, name: &str, dtype: &str, len: usize) {
        self.header.sections.push(SectionHeader {
            name: name.to_owned(),
            dtype: dtype.to_owned(),
            len,
        });
    }

    pub fn finish(self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let header_len = u32::try_from(header.len())
            .map_err(|_| Error::Artifact("header too large".into()))?;
        let mut out = Vec::with_capacity(16 + header.len() + self.payload.len() + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&header_len.to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&self.payload);
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }
}

/// A decoded, checksum-verified artifact.
#[derive(Debug)]
pub struct Artifact {
    kind: String,
    meta: Value,
    sections: Vec<(SectionHeader, std::ops::Range<usize>)>,
    bytes: Vec<u8>,
    checksum: [u8; 32],
}

fn dtype_width(dtype: &str) -> Result<usize> {
    match dtype {
        "f32" | "u32" => Ok(4),
        "f64" | "u64" => Ok(8),
        other => Err(Error::Artifact(format!("unknown dtype `{other}`"))),
    }
}

impl Artifact {
    pub fn decode(bytes: Vec<u8>) -> Result<Self> {
        let bad = |m: &str| Error::Artifact(m.to_owned());
        if bytes.len() < 16 + 32 || &bytes[..8] != MAGIC {
            return Err(bad("not an xref artifact"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CONTAINER_VERSION {
            return Err(Error::Artifact(format!("unsupported container version {version}")));
        }
        let body_len = bytes.len() - 32;
        let digest = Sha256::digest(&bytes[..body_len]);
        if digest.as_slice() != &bytes[body_len..] {
            return Err(bad("checksum mismatch"));
        }
        let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let header_end = 16usize
            .checked_add(header_len)
            .filter(|&e| e <= body_len)
            .ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&bytes[16..header_end])?;

        let mut offset = header_end;
        let mut sections = Vec::with_capacity(header.sections.len());
        for s in header.sections {
            let width = dtype_width(&s.dtype)?;
            let end = s
                .len
                .checked_mul(width)
                .and_then(|n| n.checked_add(offset))
                .filter(|&e| e <= body_len)
                .ok_or_else(|| bad("truncated payload"))?;
            sections.push((s, offset..end));
            offset = end;
        }
        if offset != body_len {
            return Err(bad("trailing bytes after payload"));
        }
        let mut checksum = [0u8; 32];
        checksum.copy_from_slice(&bytes[body_len..]);
        Ok(Self { kind: header.kind, meta: header.meta, sections, bytes, checksum })
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Artifact(format!("expected a `{kind}` artifact, found `{}`", self.kind)))
        }
    }

    /// Hex SHA-256 recorded in the trailer.
    pub fn checksum_hex(&self) -> String {
        self.checksum.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn meta_value(&self, key: &str) -> Option<&Value> {
        self.meta.get(key)
    }

    pub fn meta<D: serde::de::DeserializeOwned>(&self, key: &str) -> Result<D> {
        let v = self
            .meta
            .get(key)
            .ok_or_else(|| Error::Artifact(format!("missing metadata `{key}`")))?;
        Ok(serde_json::from_value(v.clone())?)
    }

    fn section(&self, name: &str, dtype: &str) -> Result<&[u8]> {
        let (h, range) = self
            .sections
            .iter()
            .find(|(h, _)| h.name == name)
            .ok_or_else(|| Error::Artifact(format!("missing section `{name}`")))?;
        if h.dtype != dtype {
            return Err(Error::Artifact(format!(
                "section `{name}` has dtype {}, expected {dtype}",
                h.dtype
            )));
        }
        Ok(&self.bytes[range.clone()])
    }

    pub fn scalars<T: Scalar>(&self, name: &str) -> Result<Vec<T>> {
        Ok(self.section(name, T::NAME)?.chunks_exact(T::BYTES).map(T::read_le).collect())
    }

    pub fn u32s(&self, name: &str) -> Result<Vec<u32>> {
        Ok(self
            .section(name, "u32")?
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn u64s(&self, name: &str) -> Result<Vec<u64>> {
        Ok(self
            .section(name, "u64")?
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
