//! Binary cache of spectral bases keyed by graph content hash and `d`.
//!
//! Layout (little endian):
//!
//! ```text
//! magic     8 bytes  "ASESPEC\0"
//! version   u32      1
//! n         u64
//! d         u64
//! hash      32 bytes SHA-256 of the graph
//! eigvals   d × f64
//! residuals d × f64
//! eigvecs   n·d × f64, column-major
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::debug;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

const MAGIC: &[u8; 8] = b"ASESPEC\0";
const VERSION: u32 = 1;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "ASE_CACHE_DIR";

pub fn write_basis<W: Write>(mut out: W, hash: &[u8; 32], basis: &SpectralBasis) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(basis.n() as u64).to_le_bytes())?;
    out.write_all(&(basis.dim() as u64).to_le_bytes())?;
    out.write_all(hash)?;
    for v in basis
        .eigvals
        .iter()
        .chain(&basis.residuals)
        .chain(basis.eigvecs.iter())
    {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn read_basis<R: Read>(mut r: R) -> Result<([u8; 32], SpectralBasis)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a spectral cache file".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported cache version {version}"
        )));
    }
    let n = read_u64(&mut r)? as usize;
    let d = read_u64(&mut r)? as usize;
    let mut hash = [0u8; 32];
    r.read_exact(&mut hash)?;
    let eigvals = read_f64s(&mut r, d)?;
    let residuals = read_f64s(&mut r, d)?;
    let vecs = read_f64s(&mut r, n * d)?;
    Ok((
        hash,
        SpectralBasis {
            eigvecs: DMatrix::from_vec(n, d, vecs),
            eigvals,
            residuals,
            matvecs: 0,
        },
    ))
}

/// Directory-backed cache.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    dir: PathBuf,
}

impl SpectralCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Cache rooted at `$ASE_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).map(|d| Self::new(PathBuf::from(d)))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, hash: &[u8; 32], d: usize) -> PathBuf {
        self.dir.join(format!("{}-d{d}.spec", hex::encode(hash)))
    }

    pub fn load(&self, hash: &[u8; 32], d: usize) -> Result<Option<SpectralBasis>> {
        let path = self.path(hash, d);
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(&path)?;
        let (stored, basis) = read_basis(bytes.as_slice())?;
        if &stored != hash || basis.dim() != d {
            return Ok(None);
        }
        debug!("spectral cache hit {}", path.display());
        Ok(Some(basis))
    }

    pub fn store(&self, hash: &[u8; 32], basis: &SpectralBasis) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(hash, basis.dim());
        let tmp = path.with_extension("tmp");
        let mut buf = Vec::new();
        write_basis(&mut buf, hash, basis)?;
        fs::write(&tmp, buf)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpectralBasis {
        SpectralBasis {
            eigvecs: DMatrix::from_fn(4, 2, |i, j| (i * 3 + j) as f64 * 0.125),
            eigvals: vec![1.0, 0.25],
            residuals: vec![1e-12, 3e-11],
            matvecs: 0,
        }
    }

    #[test]
    fn round_trip_bytes() {
        let hash = [7u8; 32];
        let mut buf = Vec::new();
        write_basis(&mut buf, &hash, &sample()).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 + 8 + 32 + 8 * (2 + 2 + 8));
        let (h, b) = read_basis(buf.as_slice()).unwrap();
        assert_eq!(h, hash);
        assert_eq!(b, sample());
    }

    #[test]
    fn rejects_foreign_file() {
        assert!(matches!(
            read_basis(&b"NOTACACHEFILE......"[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn directory_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SpectralCache::new(dir.path());
        let hash = [1u8; 32];
        assert!(cache.load(&hash, 2).unwrap().is_none());
        cache.store(&hash, &sample()).unwrap();
        assert_eq!(cache.load(&hash, 2).unwrap(), Some(sample()));
        assert!(cache.load(&hash, 3).unwrap().is_none());
    }
}
