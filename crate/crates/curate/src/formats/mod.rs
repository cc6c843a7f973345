//! Versioned little-endian binary formats.
//!
//! | magic   | contents                                                       |
//! |---------|----------------------------------------------------------------|
//! | `NGQF1` | hashed n-gram classifier                                       |
//! | `MLPQ1` | embedding MLP                                                  |
//! | `EMBX1` | per-document embeddings (also used for cosine reference sets)  |
//! | `NGIX1` | decontamination n-gram index                                   |

pub mod embx;
pub mod mlp_model;
pub mod ngram_index;
pub mod ngram_model;

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub(crate) struct BinWriter<W: Write> {
    inner: W,
    path: PathBuf,
}

impl<W: Write> BinWriter<W> {
    pub fn new(inner: W, path: &Path) -> Self {
        Self { inner, path: path.to_path_buf() }
    }

    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.inner.write_all(bytes).map_err(Error::io(&self.path))
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.put(b)
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.put(&[v])
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn str(&mut self, s: &str) -> Result<()> {
        let len = u32::try_from(s.len()).map_err(|_| Error::Format { path: self.path.clone(), message: "string too long".into() })?;
        self.u32(len)?;
        self.put(s.as_bytes())
    }

    pub fn f32s(&mut self, values: &[f32]) -> Result<()> {
        let mut buf = Vec::with_capacity(values.len().min(1 << 16) * 4);
        for chunk in values.chunks(1 << 16) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            self.put(&buf)?;
        }
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

pub(crate) struct BinReader<R: Read> {
    inner: R,
    path: PathBuf,
}

impl<R: Read> BinReader<R> {
    pub fn new(inner: R, path: &Path) -> Self {
        Self { inner, path: path.to_path_buf() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Truncated { path: self.path.clone() },
            _ => Error::Io { path: self.path.clone(), source: e },
        })
    }

    pub fn magic(&mut self, expected: &'static str) -> Result<()> {
        let mut buf = vec![0u8; expected.len()];
        self.fill(&mut buf)?;
        if buf != expected.as_bytes() {
            return Err(Error::BadMagic { path: self.path.clone(), expected });
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.fill(&mut b)?;
        Ok(b[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    pub fn bytes(&mut self, len: usize) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        (&mut self.inner).take(len as u64).read_to_end(&mut buf).map_err(Error::io(&self.path))?;
        if buf.len() != len {
            return Err(Error::Truncated { path: self.path.clone() });
        }
        Ok(buf)
    }

    pub fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.bytes(len)?;
        String::from_utf8(bytes).map_err(|_| self.bad("invalid UTF-8 string"))
    }

    pub fn f32s_into(&mut self, out: &mut [f32]) -> Result<()> {
        let mut buf = vec![0u8; out.len().min(1 << 16) * 4];
        for chunk in out.chunks_mut(1 << 16) {
            let bytes = &mut buf[..chunk.len() * 4];
            self.fill(bytes)?;
            for (v, b) in chunk.iter_mut().zip(bytes.chunks_exact(4)) {
                *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            }
        }
        Ok(())
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let mut out = vec![0.0; n];
        self.f32s_into(&mut out)?;
        Ok(out)
    }

    /// Errors unless the stream is exhausted.
    pub fn expect_end(&mut self) -> Result<()> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b) {
            Ok(0) => Ok(()),
            Ok(_) => Err(self.bad("trailing bytes")),
            Err(e) => Err(Error::Io { path: self.path.clone(), source: e }),
        }
    }

    pub fn bad(&self, message: impl Into<String>) -> Error {
        Error::Format { path: self.path.clone(), message: message.into() }
    }
}
