//! `NGQF1`: hashed n-gram classifier.
//!
//! ```text
//! "NGQF1"
//! u8 mode (0 whitespace, 1 character) | u8 ngram_order | u32 min_count | u8 lowercase
//! u32 dim | u32 bucket_count
//! u32 epochs | f64 lr | u64 seed
//! str config_hash                       (str = u32 byte length + UTF-8)
//! u64 vocab_len, then vocab_len × (str word, u64 count)
//! f32 input[(vocab_len + bucket_count) × dim] | f32 output[2 × dim]
//! ```
//! All integers and floats little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use curate_core::ngram::{NgramModel, NgramTokenizerConfig, TokenMode, TrainMeta, Vocab};

use super::{BinReader, BinWriter};
use crate::error::{Error, Result};

pub const MAGIC: &str = "NGQF1";

pub fn save(model: &NgramModel, config_hash: &str, path: &Path) -> Result<()> {
    model.validate()?;
    let f = File::create(path).map_err(Error::io(path))?;
    let mut w = BinWriter::new(BufWriter::with_capacity(1 << 20, f), path);
    w.bytes(MAGIC.as_bytes())?;
    let t = &model.tokenizer;
    w.u8(match t.mode {
        TokenMode::Whitespace => 0,
        TokenMode::Character => 1,
    })?;
    w.u8(t.ngram_order as u8)?;
    w.u32(t.min_count)?;
    w.u8(t.lowercase as u8)?;
    w.u32(model.dim as u32)?;
    w.u32(model.bucket_count)?;
    w.u32(model.meta.epochs)?;
    w.f64(model.meta.lr)?;
    w.u64(model.meta.seed)?;
    w.str(config_hash)?;
    w.u64(model.vocab.len() as u64)?;
    for (word, count) in model.vocab.entries() {
        w.str(word)?;
        w.u64(count)?;
    }
    w.f32s(&model.input)?;
    w.f32s(&model.output)?;
    w.into_inner().flush().map_err(Error::io(path))
}

/// Returns the model and the config hash it was produced under.
pub fn load(path: &Path) -> Result<(NgramModel, String)> {
    let f = File::open(path).map_err(Error::io(path))?;
    let mut r = BinReader::new(BufReader::with_capacity(1 << 20, f), path);
    r.magic(MAGIC)?;
    let mode = match r.u8()? {
        0 => TokenMode::Whitespace,
        1 => TokenMode::Character,
        m => return Err(r.bad(format!("unknown token mode {m}"))),
    };
    let tokenizer = NgramTokenizerConfig {
        mode,
        ngram_order: r.u8()? as usize,
        min_count: r.u32()?,
        lowercase: r.u8()? != 0,
    };
    let dim = r.u32()? as usize;
    let bucket_count = r.u32()?;
    let meta = TrainMeta { epochs: r.u32()?, lr: r.f64()?, seed: r.u64()? };
    let config_hash = r.str()?;
    let vocab_len = r.u64()? as usize;
    let mut entries = Vec::with_capacity(vocab_len.min(1 << 24));
    for _ in 0..vocab_len {
        let w = r.str()?;
        entries.push((w, r.u64()?));
    }
    let vocab = Vocab::from_entries(entries);
    let rows = vocab.len() + bucket_count as usize;
    let input = r.f32s(rows * dim)?;
    let output = r.f32s(2 * dim)?;
    r.expect_end()?;
    let model = NgramModel { tokenizer, vocab, bucket_count, dim, input, output, meta };
    model.validate()?;
    Ok((model, config_hash))
}
