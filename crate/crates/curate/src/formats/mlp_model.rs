//! `MLPQ1`: embedding MLP.
//!
//! ```text
//! "MLPQ1" | u32 input_dim | u32 hidden_dim
//! str train_meta (JSON: optimizer, dropout, batch size, seed, config hash,
//!                  embedding model tag)
//! f32 values[hidden·input + 2·hidden + 1]   (W1 row-major, b1, w2, b2)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use curate_core::mlp::{MlpConfig, MlpModel, MlpParams};
use serde::{Deserialize, Serialize};

use super::{BinReader, BinWriter};
use crate::error::{Error, Result};

pub const MAGIC: &str = "MLPQ1";

#[derive(Serialize, Deserialize)]
struct Meta {
    config: MlpConfig,
    config_hash: String,
    #[serde(default)]
    embedding_model: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpFile {
    pub model: MlpModel,
    pub config_hash: String,
    /// Tag of the encoder whose embeddings the model was trained on.
    pub embedding_model: Option<String>,
}

pub fn save(model: &MlpModel, config_hash: &str, embedding_model: Option<&str>, path: &Path) -> Result<()> {
    model.validate()?;
    let f = File::create(path).map_err(Error::io(path))?;
    let mut w = BinWriter::new(BufWriter::new(f), path);
    w.bytes(MAGIC.as_bytes())?;
    w.u32(model.params.input_dim() as u32)?;
    w.u32(model.params.hidden_dim() as u32)?;
    let meta = serde_json::to_string(&Meta {
        config: model.config,
        config_hash: config_hash.into(),
        embedding_model: embedding_model.map(Into::into),
    }).unwrap();
    w.str(&meta)?;
    w.f32s(model.params.values())?;
    w.into_inner().flush().map_err(Error::io(path))
}

pub fn load(path: &Path) -> Result<MlpFile> {
    let f = File::open(path).map_err(Error::io(path))?;
    let mut r = BinReader::new(BufReader::new(f), path);
    r.magic(MAGIC)?;
    let input_dim = r.u32()? as usize;
    let hidden_dim = r.u32()? as usize;
    let meta: Meta = serde_json::from_str(&r.str()?).map_err(|e| r.bad(format!("train_meta: {e}")))?;
    let values = r.f32s(MlpParams::<f32>::count(input_dim, hidden_dim))?;
    r.expect_end()?;
    let model = MlpModel { params: MlpParams::from_values(input_dim, hidden_dim, values)?, config: meta.config };
    model.validate()?;
    Ok(MlpFile { model, config_hash: meta.config_hash, embedding_model: meta.embedding_model })
}
