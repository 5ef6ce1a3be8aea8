//! Little-endian helpers shared by the `MIR3`, `MIRN` and `MIRP` formats.

use crate::error::{Error, Result};
use crate::geometry::Point;

pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn with_header(magic: [u8; 4], version: u32) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(&magic);
        w.u32(version);
        w
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn string(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn with_header(bytes: &'a [u8], magic: [u8; 4], version: u32) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != magic {
            return Err(Error::BadMagic { expected: magic });
        }
        let mut r = Self { bytes, pos: 4 };
        let found = r.u32()?;
        if found != version {
            return Err(Error::VersionMismatch {
                found,
                expected: version,
            });
        }
        Ok(r)
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Truncated(format!(
                    "need {len} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(f64::from_le_bytes(a))
    }

    pub fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let b = self.take(len)?;
        String::from_utf8(b.to_vec()).map_err(|_| Error::Truncated("class id is not UTF-8".into()))
    }

    pub fn f64_vec(&mut self, len: usize) -> Result<Vec<f64>> {
        (0..len).map(|_| self.f64()).collect()
    }

    pub fn points(&mut self, n: usize) -> Result<Vec<Point>> {
        (0..n)
            .map(|_| Ok([self.f64()?, self.f64()?, self.f64()?]))
            .collect()
    }

    pub fn expect_remaining(&self, len: usize) -> Result<()> {
        let left = self.bytes.len() - self.pos;
        if left != len {
            return Err(Error::Truncated(format!(
                "payload is {left} bytes, header implies {len}"
            )));
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        self.expect_remaining(0)
    }
}
