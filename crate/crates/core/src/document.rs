use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub lang: String,
    pub text: String,
    /// Any keys beyond `id`, `lang` and `text`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, lang: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            lang: lang.into(),
            text: text.into(),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub fn ws_tokens(&self) -> usize {
        ws_token_count(&self.text)
    }
}

/// Number of maximal runs of non-whitespace characters, where whitespace is
/// the Unicode `White_Space` property.
pub fn ws_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}
