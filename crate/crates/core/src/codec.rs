// SPDX-License-Identifier: Apache-2.0

//! Canonical binary encoding shared by every persisted type.
//!
//! ```text
//! "CPL+" | 0x01 | type tag | body ... | crc32(all preceding bytes), u32 BE
//! ```
//!
//! Body fields follow the declaration order of each type. Integers, scalars
//! and group elements are big-endian; strings and byte blobs carry a u32 BE
//! length; lists carry a u32 BE count; maps are emitted sorted by key bytes.
//! Nested values are written as bare bodies, without their own frame.

use thiserror::Error;

use crate::bilinear::{GroupElem, GtElem};
use crate::field::Scalar;

pub const MAGIC: &[u8; 4] = b"CPL+";
pub const FORMAT_VERSION: u8 = 0x01;

/// Type tags used in the frame header.
pub mod tag {
    pub const PUBLIC_PARAMS: u8 = 0x01;
    pub const MASTER_SECRET: u8 = 0x02;
    pub const SECRET_KEY: u8 = 0x03;
    pub const ABE_CIPHERTEXT: u8 = 0x04;
    pub const REVOCATION_LIST: u8 = 0x05;
    pub const IDENTITY_TABLE: u8 = 0x06;
    pub const ENVELOPE: u8 = 0x07;
    pub const AUDITOR_BUNDLE: u8 = 0x08;
    pub const AUDIT_REPORT: u8 = 0x09;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("format error: {0}")]
    Format(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl CodecError {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        CodecError::Format(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        CodecError::Invariant(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CodecError>;

/// A type with a framed canonical encoding.
pub trait Wire: Sized {
    const TYPE_TAG: u8;

    fn write_body(&self, w: &mut Writer);

    /// Reads and validates a body.
    fn read_body(r: &mut Reader<'_>) -> Result<Self>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.raw(MAGIC);
        w.u8(FORMAT_VERSION);
        w.u8(Self::TYPE_TAG);
        self.write_body(&mut w);
        let crc = crc32fast::hash(&w.buf);
        w.u32(crc);
        w.buf
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 2 + 4 {
            return Err(CodecError::format("truncated frame"));
        }
        if &bytes[..4] != MAGIC {
            return Err(CodecError::format("bad magic"));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(CodecError::format(format!("unsupported format version {}", bytes[4])));
        }
        if bytes[5] != Self::TYPE_TAG {
            return Err(CodecError::format(format!("type tag {:#04x}, expected {:#04x}", bytes[5], Self::TYPE_TAG)));
        }
        let (framed, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(framed).to_be_bytes() != crc {
            return Err(CodecError::format("checksum mismatch"));
        }
        let mut r = Reader::new(&framed[6..]);
        let value = Self::read_body(&mut r)?;
        r.finish()?;
        Ok(value)
    }
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn raw(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.raw(&v.to_be_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.raw(&v.to_be_bytes());
    }

    pub fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("length fits in u32"));
    }

    pub fn scalar(&mut self, s: Scalar) {
        self.raw(&s.to_be_bytes());
    }

    pub fn g(&mut self, e: GroupElem) {
        self.raw(&e.to_bytes());
    }

    pub fn gt(&mut self, e: GtElem) {
        self.raw(&e.to_bytes());
    }

    pub fn str(&mut self, s: &str) {
        self.bytes(s.as_bytes());
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.len(b.len());
        self.raw(b);
    }

    pub fn list<T>(&mut self, items: &[T], mut each: impl FnMut(&mut Self, &T)) {
        self.len(items.len());
        for it in items {
            each(self, it);
        }
    }

    pub fn strs<'a, I>(&mut self, items: I)
    where
        I: ExactSizeIterator<Item = &'a String>,
    {
        self.len(items.len());
        for s in items {
            self.str(s);
        }
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(CodecError::format(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }

    pub fn raw(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(CodecError::format("unexpected end of data"));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.raw(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.raw(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    /// A length or count, bounded by the bytes left so corrupted counts fail fast.
    pub fn len(&mut self, min_item_size: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item_size) > self.remaining() {
            return Err(CodecError::format("length exceeds available data"));
        }
        Ok(n)
    }

    pub fn scalar(&mut self) -> Result<Scalar> {
        Scalar::from_canonical(self.u64()?).ok_or_else(|| CodecError::format("non-canonical scalar"))
    }

    pub fn g(&mut self) -> Result<GroupElem> {
        GroupElem::from_bytes(self.array()?).ok_or_else(|| CodecError::format("non-canonical group element"))
    }

    pub fn gt(&mut self) -> Result<GtElem> {
        GtElem::from_bytes(self.array()?).ok_or_else(|| CodecError::format("non-canonical target element"))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.len(1)?;
        self.raw(n)
    }

    pub fn str(&mut self) -> Result<String> {
        let b = self.bytes()?;
        std::str::from_utf8(b).map(str::to_string).map_err(|_| CodecError::format("invalid utf-8"))
    }

    pub fn list<T>(&mut self, min_item_size: usize, mut each: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        let n = self.len(min_item_size)?;
        (0..n).map(|_| each(self)).collect()
    }

    /// List of strings that must be strictly ascending (sorted, no duplicates).
    pub fn sorted_strs(&mut self) -> Result<Vec<String>> {
        let items = self.list(4, |r| r.str())?;
        if items.windows(2).any(|w| w[0].as_bytes() >= w[1].as_bytes()) {
            return Err(CodecError::format("set entries not strictly ascending"));
        }
        Ok(items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq)]
    struct Pair(u64, String);

    impl Wire for Pair {
        const TYPE_TAG: u8 = 0x7f;

        fn write_body(&self, w: &mut Writer) {
            w.u64(self.0);
            w.str(&self.1);
        }

        fn read_body(r: &mut Reader<'_>) -> Result<Self> {
            Ok(Pair(r.u64()?, r.str()?))
        }
    }

    #[test]
    fn frame_layout() {
        let bytes = Pair(258, "hi".into()).to_bytes();
        assert_eq!(&bytes[..6], b"CPL+\x01\x7f");
        assert_eq!(&bytes[6..14], &258u64.to_be_bytes());
        assert_eq!(&bytes[14..20], b"\x00\x00\x00\x02hi");
        assert_eq!(bytes.len(), 24);
        assert_eq!(Pair::from_bytes(&bytes).unwrap(), Pair(258, "hi".into()));
    }

    #[test]
    fn every_single_byte_flip_is_rejected() {
        let bytes = Pair(u64::MAX, "payload".into()).to_bytes();
        for i in 0..bytes.len() {
            for mask in [0x01u8, 0x80, 0xff] {
                let mut b = bytes.clone();
                b[i] ^= mask;
                assert!(Pair::from_bytes(&b).is_err(), "flip at {i} mask {mask:#x}");
            }
        }
    }

    #[test]
    fn rejects_truncation_and_trailing() {
        let bytes = Pair(1, "x".into()).to_bytes();
        for n in 0..bytes.len() {
            assert!(Pair::from_bytes(&bytes[..n]).is_err());
        }
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(Pair::from_bytes(&longer).is_err());
    }

    #[test]
    fn wrong_type_tag() {
        let mut bytes = Pair(1, "x".into()).to_bytes();
        bytes[5] = 0x01;
        let e = Pair::from_bytes(&bytes).unwrap_err();
        assert!(matches!(e, CodecError::Format(m) if m.contains("type tag")));
    }
}
