//! Hashed word/character n-gram linear classifier.
//!
//! A document is represented by the mean of the embeddings of its features
//! (in-vocabulary unigrams plus hashed higher-order n-grams); a 2×dim output
//! matrix and a softmax turn that vector into label probabilities.

mod features;
mod model;
mod tokenize;
mod train;

pub use features::{featurize, Vocab};
pub use model::{NgramModel, NgramScorer, TrainMeta, NEGATIVE, POSITIVE};
pub use tokenize::{prepare_text, NgramTokenizerConfig, Prepared, TokenMode};
pub use train::{loss_and_gradients, train_ngram, NgramTrainReport, SampleGradients, TrainConfig};

/// Language codes whose script is written without spaces between words.
/// Character n-grams are used for these.
pub fn is_unsegmented_script(lang: &str) -> bool {
    let script = lang.rsplit('_').next().unwrap_or(lang);
    matches!(script, "Hani" | "Hans" | "Hant" | "Jpan" | "Hira" | "Kana" | "Thai")
}

/// Tokenizer and training defaults for a language.
///
/// Scripts written without spaces get character 4-grams, 30 epochs and a
/// learning rate of 0.1; every other language gets word bigrams with a
/// minimum count of 1.
pub fn preset_for_language(lang: &str) -> (NgramTokenizerConfig, TrainConfig) {
    if is_unsegmented_script(lang) {
        (NgramTokenizerConfig::unsegmented(), TrainConfig::unsegmented())
    } else {
        (NgramTokenizerConfig::default(), TrainConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let (tok, train) = preset_for_language("cmn_Hani");
        assert_eq!(tok.mode, TokenMode::Character);
        assert_eq!((tok.ngram_order, tok.min_count), (4, 0));
        assert_eq!(train.epochs, 30);
        assert_eq!(train.lr, 0.1);

        let (tok, _) = preset_for_language("dan_Latn");
        assert_eq!(tok.mode, TokenMode::Whitespace);
        assert_eq!((tok.ngram_order, tok.min_count), (2, 1));
        assert!(!is_unsegmented_script("fra_Latn"));
        assert!(is_unsegmented_script("tha_Thai"));
    }
}
