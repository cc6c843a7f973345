//! `NGIX1`: decontamination n-gram index.
//!
//! ```text
//! "NGIX1" | u32 n | str normalization_tag
//! u32 benchmark_count, then benchmark_count × str name
//! u64 gram_count | u64 fingerprints[gram_count] (ascending) | u64 masks[gram_count]
//! ```
//! Bit `i` of a mask marks membership in benchmark `i`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use curate_core::decont::NgramIndex;

use super::{BinReader, BinWriter};
use crate::error::{Error, Result};

pub const MAGIC: &str = "NGIX1";

pub fn save(index: &NgramIndex, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(Error::io(path))?;
    let mut w = BinWriter::new(BufWriter::with_capacity(1 << 20, f), path);
    w.bytes(MAGIC.as_bytes())?;
    w.u32(index.n as u32)?;
    w.str(&index.normalization)?;
    w.u32(index.benchmarks.len() as u32)?;
    for b in &index.benchmarks {
        w.str(b)?;
    }
    let grams = index.sorted_grams();
    w.u64(grams.len() as u64)?;
    for (fp, _) in &grams {
        w.u64(*fp)?;
    }
    for (_, mask) in &grams {
        w.u64(*mask)?;
    }
    w.into_inner().flush().map_err(Error::io(path))
}

/// Loads an index. The normalization tag is checked by the caller via
/// [`NgramIndex::check_normalization`] so a mismatch can be reported distinctly.
pub fn load(path: &Path) -> Result<NgramIndex> {
    let f = File::open(path).map_err(Error::io(path))?;
    let mut r = BinReader::new(BufReader::with_capacity(1 << 20, f), path);
    r.magic(MAGIC)?;
    let n = r.u32()? as usize;
    let normalization = r.str()?;
    let nb = r.u32()? as usize;
    let mut benchmarks = Vec::with_capacity(nb.min(64));
    for _ in 0..nb {
        benchmarks.push(r.str()?);
    }
    let count = r.u64()? as usize;
    let mut fps = Vec::with_capacity(count.min(1 << 26));
    for _ in 0..count {
        fps.push(r.u64()?);
    }
    if fps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(r.bad("fingerprints not strictly ascending"));
    }
    let mut masks = Vec::with_capacity(fps.len());
    for _ in 0..count {
        masks.push(r.u64()?);
    }
    r.expect_end()?;
    Ok(NgramIndex::from_parts(n, normalization, benchmarks, fps.into_iter().zip(masks))?)
}
