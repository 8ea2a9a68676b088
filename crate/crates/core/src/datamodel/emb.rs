//! EMB1: little-endian embedding container.
//!
//! ```text
//! magic "EMB1" | version u16 = 1 | dtype u8 = 1 (f32) | reserved u8 = 0
//! dim u32 | count u64
//! count x { id_len u16 | id utf-8 | dim x f32 }
//! ```

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::ids::ImageId;
use crate::error::{Error, Result};

pub const EMB_MAGIC: [u8; 4] = *b"EMB1";
pub const EMB_VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub image: ImageId,
    pub vector: Vec<f32>,
}

/// Ordered embedding records sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    records: Vec<EmbeddingRecord>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, records: Vec<EmbeddingRecord>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("embedding dimension must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.vector.len(),
                });
            }
            if r.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i as u64 });
            }
            if !seen.insert(&r.image) {
                return Err(Error::Validation(format!("duplicate image id `{}`", r.image)));
            }
        }
        Ok(Self { dim, records })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(&EMB_MAGIC)?;
        w.write_all(&EMB_VERSION.to_le_bytes())?;
        w.write_all(&[DTYPE_F32, 0])?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for r in &self.records {
            let id = r.image.as_str().as_bytes();
            let len = u16::try_from(id.len())
                .map_err(|_| Error::Format(format!("image id `{}` longer than 65535 bytes", r.image)))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(id)?;
            for v in &r.vector {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(file)
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut header = [0u8; 20];
        r.read_exact(&mut header).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::Format("file shorter than the EMB1 header".into()),
            _ => Error::Stream(e),
        })?;
        if header[0..4] != EMB_MAGIC {
            return Err(Error::Format(format!("bad magic {:02X?}", &header[0..4])));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != EMB_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        if header[6] != DTYPE_F32 {
            return Err(Error::Format(format!("unsupported dtype {}", header[6])));
        }
        if header[7] != 0 {
            return Err(Error::Format("reserved byte must be zero".into()));
        }
        let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
        if dim == 0 {
            return Err(Error::Format("dimension must be at least 1".into()));
        }

        let mut records = Vec::with_capacity(count.min(1 << 20) as usize);
        let mut vec_buf = vec![0u8; dim * 4];
        for index in 0..count {
            let truncated = |e: std::io::Error| match e.kind() {
                ErrorKind::UnexpectedEof => Error::Truncation {
                    expected: count,
                    found: index,
                },
                _ => Error::Stream(e),
            };
            let mut len = [0u8; 2];
            r.read_exact(&mut len).map_err(truncated)?;
            let mut id = vec![0u8; u16::from_le_bytes(len) as usize];
            r.read_exact(&mut id).map_err(truncated)?;
            r.read_exact(&mut vec_buf).map_err(truncated)?;
            let id =
                String::from_utf8(id).map_err(|_| Error::Format(format!("record {index}: image id is not UTF-8")))?;
            let image = ImageId::new(id).map_err(|e| Error::Format(format!("record {index}: {e}")))?;
            let vector: Vec<f32> = vec_buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
            records.push(EmbeddingRecord { image, vector });
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(Error::Format(format!("trailing bytes after {count} records")));
        }
        Self::new(dim, records)
    }
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingStore> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    EmbeddingStore::read_from(file)
}

pub fn write_embeddings(store: &EmbeddingStore, path: &Path) -> Result<()> {
    store.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, v: &[f32]) -> EmbeddingRecord {
        EmbeddingRecord {
            image: ImageId::new(id).unwrap(),
            vector: v.to_vec(),
        }
    }

    fn bytes(store: &EmbeddingStore) -> Vec<u8> {
        let mut out = Vec::new();
        store.write_to(&mut out).unwrap();
        out
    }

    #[test]
    fn header_layout_is_exact() {
        let store = EmbeddingStore::new(4, vec![rec("a", &[1.0, 2.0, 3.0, 4.0]), rec("bb", &[0.0; 4])]).unwrap();
        let b = bytes(&store);
        assert_eq!(&b[0..4], &[0x45, 0x4D, 0x42, 0x31]);
        assert_eq!(&b[4..8], &[1, 0, 1, 0]);
        assert_eq!(&b[8..12], &4u32.to_le_bytes());
        assert_eq!(&b[12..20], &2u64.to_le_bytes());
        assert_eq!(&b[20..23], &[1, 0, b'a']);
        assert_eq!(&b[23..27], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 20 + (2 + 1 + 16) + (2 + 2 + 16));
        let back = EmbeddingStore::read_from(b.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back, store);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let store = EmbeddingStore::new(1, vec![rec("a", &[1.0])]).unwrap();
        let mut b = bytes(&store);
        b[0..4].copy_from_slice(b"XYZ1");
        assert!(matches!(EmbeddingStore::read_from(b.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn bad_dtype_and_version() {
        let store = EmbeddingStore::new(1, vec![rec("a", &[1.0])]).unwrap();
        let mut b = bytes(&store);
        b[6] = 2;
        assert!(matches!(EmbeddingStore::read_from(b.as_slice()), Err(Error::Format(_))));
        let mut b = bytes(&store);
        b[4] = 9;
        assert!(matches!(EmbeddingStore::read_from(b.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn short_count_is_truncation() {
        let store = EmbeddingStore::new(2, vec![rec("a", &[1.0, 2.0]), rec("b", &[3.0, 4.0])]).unwrap();
        let mut b = bytes(&store);
        b[12..20].copy_from_slice(&3u64.to_le_bytes());
        match EmbeddingStore::read_from(b.as_slice()) {
            Err(Error::Truncation { expected: 3, found: 2 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_finite_reports_index() {
        let store = EmbeddingStore::new(1, vec![rec("a", &[1.0]), rec("b", &[2.0])]).unwrap();
        let mut b = bytes(&store);
        let n = b.len();
        b[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            EmbeddingStore::read_from(b.as_slice()),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let store = EmbeddingStore::new(1, vec![rec("a", &[1.0])]).unwrap();
        let mut b = bytes(&store);
        b.push(0);
        assert!(matches!(EmbeddingStore::read_from(b.as_slice()), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn write_read_is_byte_identical(
            dim in 1usize..6,
            raw in prop::collection::vec(prop::collection::vec(-1e6f32..1e6, 6), 0..12),
        ) {
            let records: Vec<_> = raw
                .iter()
                .enumerate()
                .map(|(i, v)| rec(&format!("img{i:03}"), &v[..dim]))
                .collect();
            let store = EmbeddingStore::new(dim, records).unwrap();
            let first = bytes(&store);
            let back = EmbeddingStore::read_from(first.as_slice()).unwrap();
            prop_assert_eq!(&back, &store);
            prop_assert_eq!(bytes(&back), first);
        }
    }
}
