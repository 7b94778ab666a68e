//! Synthetic two-class corpus for tests and demos.
//!
//! Each class owns a vocabulary of pseudo-words drawn with Zipf weights;
//! a shared vocabulary is drawn uniformly. `overlap` is the probability
//! that a class token comes from the other class's vocabulary instead.
//! Pseudo-words are consonant-vowel-consonant-vowel-consonant strings that
//! the stemmer leaves unchanged.

use std::io::Write;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, LabelMap};
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub fn overlap(self) -> f64 {
        match self {
            Difficulty::Easy => 0.1,
            Difficulty::Medium => 0.3,
            Difficulty::Hard => 0.45,
        }
    }
}

impl std::str::FromStr for Difficulty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            other => Err(Error::Invalid(format!("unknown difficulty {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub docs_per_class: usize,
    pub overlap: f64,
    /// Fraction of tokens drawn from the shared vocabulary.
    pub shared_fraction: f64,
    pub class_vocab: usize,
    pub shared_vocab: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(docs_per_class: usize, difficulty: Difficulty, seed: u64) -> Self {
        SyntheticConfig {
            docs_per_class,
            overlap: difficulty.overlap(),
            shared_fraction: 0.5,
            class_vocab: 40,
            shared_vocab: 60,
            min_tokens: 20,
            max_tokens: 40,
            seed,
        }
    }
}

const ONSETS: &[u8] = b"bdfgkmnprt";
const VOWELS: &[u8] = b"aiou";
const CODAS: &[u8] = b"dgkmnpt";
const FILLER: &[&str] = &["the", "and", "is", "of", "to", "my", "so"];

/// Vocabularies of the generator: class 0 words, class 1 words, shared words.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVocab {
    pub class_words: [Vec<String>; 2],
    pub shared: Vec<String>,
}

impl SyntheticVocab {
    pub fn new(config: &SyntheticConfig) -> Self {
        let total = 2 * config.class_vocab + config.shared_vocab;
        let space = ONSETS.len() * VOWELS.len() * ONSETS.len() * VOWELS.len() * CODAS.len();
        // a fixed permutation of the word space; independent of the corpus seed
        let mut ids: Vec<usize> = (0..space).collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed_5eed));
        let mut words = ids.into_iter().take(total).map(pseudo_word);
        let class0 = words.by_ref().take(config.class_vocab).collect();
        let class1 = words.by_ref().take(config.class_vocab).collect();
        let shared = words.collect();
        SyntheticVocab {
            class_words: [class0, class1],
            shared,
        }
    }
}

fn pseudo_word(mut id: usize) -> String {
    let mut take = |alphabet: &[u8]| {
        let c = alphabet[id % alphabet.len()];
        id /= alphabet.len();
        c as char
    };
    [
        take(ONSETS),
        take(VOWELS),
        take(ONSETS),
        take(VOWELS),
        take(CODAS),
    ]
    .iter()
    .collect()
}

/// Balanced corpus with ids `syn-00000…`, classes interleaved.
pub fn generate(config: &SyntheticConfig) -> Result<Corpus> {
    if config.docs_per_class == 0 || config.min_tokens == 0 || config.min_tokens > config.max_tokens
    {
        return Err(Error::Invalid(
            "synthetic corpus needs documents and 1 <= min_tokens <= max_tokens".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.overlap) || !(0.0..1.0).contains(&config.shared_fraction) {
        return Err(Error::Invalid(
            "overlap must be in [0, 1] and shared_fraction in [0, 1)".into(),
        ));
    }
    let vocab = SyntheticVocab::new(config);
    let zipf = WeightedIndex::new((0..config.class_vocab).map(|r| 1.0 / (r + 1) as f64))
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut documents = Vec::with_capacity(2 * config.docs_per_class);
    for i in 0..2 * config.docs_per_class {
        let label = (i % 2) as u8;
        let len = rng.gen_range(config.min_tokens..=config.max_tokens);
        let mut words: Vec<&str> = Vec::with_capacity(len + len / 4);
        for _ in 0..len {
            if rng.gen_bool(0.15) {
                words.push(FILLER[rng.gen_range(0..FILLER.len())]);
            }
            let word = if rng.gen::<f64>() < config.shared_fraction {
                vocab.shared[rng.gen_range(0..vocab.shared.len())].as_str()
            } else {
                let class = if rng.gen::<f64>() < config.overlap {
                    1 - label
                } else {
                    label
                };
                vocab.class_words[class as usize][zipf.sample(&mut rng)].as_str()
            };
            words.push(word);
        }
        let mut text = words.join(" ");
        if let Some(first) = text.get(0..1) {
            text.replace_range(0..1, &first.to_uppercase());
        }
        text.push('.');
        documents.push(Document {
            id: format!("syn-{i:05}"),
            text,
            label: Some(label),
        });
    }
    Corpus::new(documents, LabelMap::default())
}

/// Ten-word embedding table: the five most frequent words of each class,
/// class 0 pointing along `+e0`, class 1 along `-e0`, with a per-word
/// signature in the remaining dimensions.
pub fn toy_embeddings(config: &SyntheticConfig, dim: usize) -> Result<EmbeddingTable> {
    if dim < 2 {
        return Err(Error::Invalid("toy embeddings need dim >= 2".into()));
    }
    let vocab = SyntheticVocab::new(config);
    let mut table = EmbeddingTable::new(dim);
    for (class, words) in vocab.class_words.iter().enumerate() {
        let sign = if class == 0 { 1.0 } else { -1.0 };
        for (rank, word) in words.iter().take(5).enumerate() {
            let mut v = vec![0.0; dim];
            v[0] = sign;
            v[1 + (rank + 5 * class) % (dim - 1)] = 0.5;
            table.insert(word.clone(), v)?;
        }
    }
    Ok(table)
}

/// Writes a table in the whitespace-separated `word v1 … vd` layout.
pub fn write_embeddings<W: Write>(table: &EmbeddingTable, mut w: W) -> std::io::Result<()> {
    for word in table.words() {
        write!(w, "{word}")?;
        for v in table.lookup(word) {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn save_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_embeddings(table, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
