use alloc::borrow::Cow;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenMode {
    /// Tokens are runs of non-whitespace.
    Whitespace,
    /// One token per non-whitespace codepoint.
    Character,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramTokenizerConfig {
    pub mode: TokenMode,
    pub ngram_order: usize,
    pub min_count: u32,
    pub lowercase: bool,
}

impl Default for NgramTokenizerConfig {
    fn default() -> Self {
        Self {
            mode: TokenMode::Whitespace,
            ngram_order: 2,
            min_count: 1,
            lowercase: false,
        }
    }
}

impl NgramTokenizerConfig {
    pub const MAX_ORDER: usize = 8;

    /// Character 4-grams with no count cutoff.
    pub fn unsegmented() -> Self {
        Self {
            mode: TokenMode::Character,
            ngram_order: 4,
            min_count: 0,
            lowercase: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=Self::MAX_ORDER).contains(&self.ngram_order) {
            return Err(Error::InvalidConfig(alloc::format!(
                "ngram_order {} outside [1, {}]",
                self.ngram_order,
                Self::MAX_ORDER
            )));
        }
        Ok(())
    }
}

/// Text after newline removal and optional lowercasing, with token spans.
#[derive(Debug)]
pub struct Prepared<'a> {
    text: Cow<'a, str>,
    spans: Vec<(u32, u32)>,
}

impl<'a> Prepared<'a> {
    pub fn new(text: &'a str, cfg: &NgramTokenizerConfig) -> Self {
        // Newlines are whitespace, so splitting already drops them; only
        // lowercasing needs an owned copy.
        let text: Cow<'a, str> = if cfg.lowercase {
            Cow::Owned(text.to_lowercase())
        } else {
            Cow::Borrowed(text)
        };
        let mut spans = Vec::new();
        match cfg.mode {
            TokenMode::Whitespace => {
                let mut start: Option<usize> = None;
                for (i, c) in text.char_indices() {
                    if c.is_whitespace() {
                        if let Some(s) = start.take() {
                            spans.push((s as u32, i as u32));
                        }
                    } else if start.is_none() {
                        start = Some(i);
                    }
                }
                if let Some(s) = start {
                    spans.push((s as u32, text.len() as u32));
                }
            }
            TokenMode::Character => {
                for (i, c) in text.char_indices() {
                    if !c.is_whitespace() {
                        spans.push((i as u32, (i + c.len_utf8()) as u32));
                    }
                }
            }
        }
        Self { text, spans }
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    #[inline]
    pub fn token(&self, i: usize) -> &str {
        let (s, e) = self.spans[i];
        &self.text[s as usize..e as usize]
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.spans.len()).map(move |i| self.token(i))
    }
}

pub fn prepare_text(text: &str, cfg: &NgramTokenizerConfig) -> Vec<String> {
    Prepared::new(text, cfg).tokens().map(ToString::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn newline_removed() {
        assert_eq!(prepare_text("a\nb", &NgramTokenizerConfig::default()), vec!["a", "b"]);
        assert_eq!(prepare_text("a\r\n\nb ", &NgramTokenizerConfig::default()), vec!["a", "b"]);
    }

    #[test]
    fn character_mode() {
        let cfg = NgramTokenizerConfig::unsegmented();
        assert_eq!(prepare_text("你好吗", &cfg), vec!["你", "好", "吗"]);
        assert_eq!(prepare_text("你 好\n吗", &cfg), vec!["你", "好", "吗"]);
    }

    #[test]
    fn empty() {
        assert!(prepare_text("", &NgramTokenizerConfig::default()).is_empty());
        assert!(prepare_text("", &NgramTokenizerConfig::unsegmented()).is_empty());
    }

    #[test]
    fn lowercase_flag() {
        let cfg = NgramTokenizerConfig { lowercase: true, ..Default::default() };
        assert_eq!(prepare_text("Hello WORLD", &cfg), vec!["hello", "world"]);
        assert_eq!(prepare_text("Hello", &NgramTokenizerConfig::default()), vec!["Hello"]);
    }

    #[test]
    fn order_bounds() {
        let mut cfg = NgramTokenizerConfig { ngram_order: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.ngram_order = 9;
        assert!(cfg.validate().is_err());
        cfg.ngram_order = 8;
        assert!(cfg.validate().is_ok());
    }
}
