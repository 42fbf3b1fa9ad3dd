//! Little-endian binary encoding shared by the artifact files. Strings are
//! length-prefixed UTF-8; every decode failure is reported as corruption of
//! the file being read.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Default)]
pub struct Encoder {
    pub buf: Vec<u8>,
}

impl Encoder {
    pub fn new(magic: &[u8; 8], version: u32) -> Self {
        let mut e = Encoder::default();
        e.buf.extend_from_slice(magic);
        e.u32(version);
        e
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }

    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        self.len(vs.len());
        for &v in vs {
            self.f64(v);
        }
    }

    pub fn u32s(&mut self, vs: &[u32]) {
        self.len(vs.len());
        for &v in vs {
            self.u32(v);
        }
    }
}

pub struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: PathBuf,
}

impl<'a> Decoder<'a> {
    /// Checks magic and version and positions after them.
    pub fn new(bytes: &'a [u8], path: &Path, magic: &[u8; 8], version: u32) -> Result<Self> {
        let mut d = Decoder {
            bytes,
            pos: 0,
            path: path.to_path_buf(),
        };
        if d.take(8)? != magic {
            return Err(d.corrupt("bad magic"));
        }
        let v = d.u32()?;
        if v != version {
            return Err(Error::Incompatible(format!(
                "{} has format version {v}, expected {version}",
                path.display()
            )));
        }
        Ok(d)
    }

    pub fn corrupt(&self, reason: &str) -> Error {
        Error::corrupt(&self.path, format!("{reason} at byte {}", self.pos))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.corrupt("unexpected end of data"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    /// A count of items each at least `item_bytes` long, checked against the
    /// remaining input so corrupt counts cannot trigger huge allocations.
    pub fn len(&mut self, item_bytes: usize) -> Result<usize> {
        let n = self.u64()?;
        let remaining = (self.bytes.len() - self.pos) as u64;
        if n.saturating_mul(item_bytes.max(1) as u64) > remaining {
            return Err(self.corrupt("count exceeds remaining data"));
        }
        Ok(n as usize)
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.corrupt("invalid UTF-8"))
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn u32s(&mut self) -> Result<Vec<u32>> {
        let n = self.len(4)?;
        (0..n).map(|_| self.u32()).collect()
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.corrupt("trailing data"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_truncation() {
        let mut e = Encoder::new(b"TESTTEST", 3);
        e.str("héllo");
        e.f64s(&[0.1, f64::MIN_POSITIVE, 1.0]);
        e.u32s(&[7, 9]);
        let path = Path::new("mem");
        let mut d = Decoder::new(&e.buf, path, b"TESTTEST", 3).unwrap();
        assert_eq!(d.str().unwrap(), "héllo");
        assert_eq!(d.f64s().unwrap(), vec![0.1, f64::MIN_POSITIVE, 1.0]);
        assert_eq!(d.u32s().unwrap(), vec![7, 9]);
        d.finish().unwrap();

        let cut = &e.buf[..e.buf.len() - 2];
        let mut d = Decoder::new(cut, path, b"TESTTEST", 3).unwrap();
        d.str().unwrap();
        d.f64s().unwrap();
        assert!(matches!(d.u32s(), Err(Error::Corrupt { .. })));
        assert!(matches!(
            Decoder::new(&e.buf, path, b"TESTTEST", 4),
            Err(Error::Incompatible(_))
        ));
    }
}
