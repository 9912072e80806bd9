use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Common English function words.
const ENGLISH_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "d", "did", "do", "does", "doing", "down", "during", "each", "few",
    "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "ll", "m", "me", "might", "more", "most", "must", "my", "myself", "no",
    "nor", "not", "now", "o", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
    "ourselves", "out", "over", "own", "re", "s", "same", "she", "should", "so", "some", "such",
    "t", "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there",
    "these", "they", "this", "those", "through", "to", "too", "under", "until", "up", "upon",
    "ve", "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom",
    "why", "will", "with", "would", "y", "you", "your", "yours", "yourself", "yourselves",
];

/// Early-modern English function words (King James register).
const ARCHAIC_STOPWORDS: &[&str] = &[
    "art", "canst", "didst", "doth", "dost", "hast", "hath", "shall", "shalt", "thee", "thereof",
    "therein", "thine", "thou", "thy", "thyself", "unto", "whereby", "wherein", "whereof",
    "wherefore", "wilt", "ye", "yea",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stemmer {
    None,
    #[default]
    Porter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stoplist {
    /// Built-in English list plus archaic function words.
    #[default]
    Builtin,
    None,
    Custom(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub stoplist: Stoplist,
    pub stemmer: Stemmer,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self { lowercase: true, stoplist: Stoplist::Builtin, stemmer: Stemmer::Porter }
    }
}

/// Compiled tokenizer.
///
/// Text is split into maximal runs of alphabetic characters, so punctuation
/// and digits never survive. Stopwords are matched case-insensitively
/// before stemming.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    config: TokenizerConfig,
    stopwords: HashSet<String>,
}

impl Tokenizer {
    pub fn new(config: TokenizerConfig) -> Self {
        let stopwords = match &config.stoplist {
            Stoplist::Builtin => ENGLISH_STOPWORDS
                .iter()
                .chain(ARCHAIC_STOPWORDS)
                .map(|s| (*s).to_owned())
                .collect(),
            Stoplist::None => HashSet::new(),
            Stoplist::Custom(words) => words.iter().map(|w| w.to_lowercase()).collect(),
        };
        Self { config, stopwords }
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphabetic())
            .filter(|w| !w.is_empty())
            .filter_map(|w| {
                let lower = w.to_lowercase();
                if self.stopwords.contains(&lower) {
                    return None;
                }
                let w = if self.config.lowercase { lower } else { w.to_owned() };
                Some(match self.config.stemmer {
                    Stemmer::None => w,
                    Stemmer::Porter => porter_stemmer::stem(&w),
                })
            })
            .collect()
    }
}

/// One-shot tokenization; prefer a reused [`Tokenizer`] for whole corpora.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    Tokenizer::new(config.clone()).tokenize(text)
}
