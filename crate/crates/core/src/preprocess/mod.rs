//! Text normalization: tokenize, lowercase, drop stop words, stem.
//!
//! The steps always run in that order. Stemming after stop-word removal means
//! the stop list is matched against surface forms, not stems.

mod porter;
mod stopwords;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::Result;

pub use porter::stem;
pub use stopwords::StopList;

/// Ordered tokens of one document. Tokens are never empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenStream {
    pub source_id: String,
    pub tokens: Vec<String>,
}

impl TokenStream {
    pub fn new(source_id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenStream {
            source_id: source_id.into(),
            tokens,
        }
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        TokenStream {
            source_id: String::new(),
            tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}'
            | '\u{FF01}'..='\u{FF0F}'
            | '\u{FF1A}'..='\u{FF20}')
}

/// Apostrophes and hyphens only split a token at its edges.
fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '-' | '\u{2010}' | '\u{2011}' | '\u{2019}')
}

/// Splits NFC-normalized text on whitespace and on punctuation other than
/// apostrophes and hyphens, then trims punctuation from both ends of each
/// piece. Inner apostrophes and hyphens survive.
pub fn tokenize(text: &str) -> TokenStream {
    let normalized: String = text.nfc().collect();
    let tokens = normalized
        .split_whitespace()
        .flat_map(|piece| piece.split(|c| is_punctuation(c) && !is_joiner(c)))
        .map(|piece| piece.trim_matches(is_punctuation))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect();
    TokenStream::new("", tokens)
}

pub fn lowercase(stream: TokenStream) -> TokenStream {
    TokenStream {
        source_id: stream.source_id,
        tokens: stream.tokens.iter().map(|t| t.to_lowercase()).collect(),
    }
}

pub fn remove_stopwords(stream: TokenStream, stops: &StopList) -> TokenStream {
    TokenStream {
        source_id: stream.source_id,
        tokens: stream
            .tokens
            .into_iter()
            .filter(|t| !stops.contains(t))
            .collect(),
    }
}

pub fn stem_stream(stream: TokenStream) -> TokenStream {
    TokenStream {
        source_id: stream.source_id,
        tokens: stream.tokens.iter().map(|t| stem(t)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinStopList {
    #[default]
    English,
    Minimal,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub remove_stopwords: bool,
    pub stem: bool,
    pub stop_list: BuiltinStopList,
    /// Replaces `stop_list` when set.
    pub stopwords_file: Option<PathBuf>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            lowercase: true,
            remove_stopwords: true,
            stem: true,
            stop_list: BuiltinStopList::English,
            stopwords_file: None,
        }
    }
}

/// A config with its stop list resolved, ready to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub lowercase: bool,
    pub remove_stopwords: bool,
    pub stem: bool,
    pub stops: StopList,
}

impl Preprocessor {
    pub fn from_config(config: &PreprocessConfig) -> Result<Self> {
        let stops = match &config.stopwords_file {
            Some(path) => StopList::load(path)?,
            None => match config.stop_list {
                BuiltinStopList::English => StopList::english(),
                BuiltinStopList::Minimal => StopList::minimal(),
                BuiltinStopList::None => StopList::empty(),
            },
        };
        Ok(Self::with_stops(config, stops))
    }

    pub fn with_stops(config: &PreprocessConfig, stops: StopList) -> Self {
        Preprocessor {
            lowercase: config.lowercase,
            remove_stopwords: config.remove_stopwords,
            stem: config.stem,
            stops,
        }
    }

    pub fn run(&self, id: &str, text: &str) -> TokenStream {
        self.run_with_stemming(id, text, self.stem)
    }

    /// Same pipeline with stemming forced off; embedding lookups want surface forms.
    pub fn run_unstemmed(&self, id: &str, text: &str) -> TokenStream {
        self.run_with_stemming(id, text, false)
    }

    fn run_with_stemming(&self, id: &str, text: &str, stem: bool) -> TokenStream {
        let mut stream = tokenize(text);
        stream.source_id = id.to_string();
        if self.lowercase {
            stream = lowercase(stream);
        }
        if self.remove_stopwords {
            stream = remove_stopwords(stream, &self.stops);
        }
        if stem {
            stream = stem_stream(stream);
        }
        stream
    }
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self::with_stops(&PreprocessConfig::default(), StopList::english())
    }
}
