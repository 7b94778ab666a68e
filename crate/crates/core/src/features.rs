//! Feature spaces for the two member families: sparse TF-IDF vectors for
//! fully connected members and padded embedding-index sequences for
//! convolutional members.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenStream;

/// Term index with document frequencies.
///
/// Indices are dense `0..len()`, ordered by descending document frequency
/// and then lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    index: HashMap<String, usize>,
    n_docs: usize,
    max_features: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    n_docs: usize,
    max_features: usize,
    terms: Vec<VocabularyEntry>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyEntry {
    term: String,
    index: usize,
    df: usize,
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            n_docs: v.n_docs,
            max_features: v.max_features,
            terms: v
                .terms
                .into_iter()
                .zip(v.df)
                .enumerate()
                .map(|(index, (term, df))| VocabularyEntry { term, index, df })
                .collect(),
        }
    }
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = String;

    fn try_from(file: VocabularyFile) -> Result<Self, String> {
        let mut entries = file.terms;
        entries.sort_by_key(|e| e.index);
        let mut terms = Vec::with_capacity(entries.len());
        let mut df = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.into_iter().enumerate() {
            if e.index != i {
                return Err(format!("vocabulary indices are not dense at {i}"));
            }
            if e.df == 0 || e.df > file.n_docs {
                return Err(format!(
                    "term {:?} has df {} outside 1..={}",
                    e.term, e.df, file.n_docs
                ));
            }
            if index.insert(e.term.clone(), i).is_some() {
                return Err(format!("duplicate term {:?}", e.term));
            }
            terms.push(e.term);
            df.push(e.df);
        }
        Ok(Vocabulary {
            terms,
            df,
            index,
            n_docs: file.n_docs,
            max_features: file.max_features,
        })
    }
}

impl Vocabulary {
    /// Keeps terms with `df >= min_df`, then the `max_features` most frequent
    /// (ties broken lexicographically).
    pub fn build(corpus: &[TokenStream], min_df: usize, max_features: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if min_df == 0 {
            return Err(Error::Invalid("min_df must be at least 1".into()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in corpus {
            let mut seen: Vec<&str> = doc.iter().collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *counts.entry(term).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> =
            counts.into_iter().filter(|&(_, df)| df >= min_df).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        kept.truncate(max_features);

        let terms: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
        let df = kept.iter().map(|&(_, d)| d).collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            terms,
            df,
            index,
            n_docs: corpus.len(),
            max_features,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.df[i])
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// `ln(N / df)` for the term at `index`.
    pub fn idf(&self, index: usize) -> f64 {
        (self.n_docs as f64 / self.df[index] as f64).ln()
    }

    pub fn tfidf(&self, doc: &TokenStream) -> TfidfVector {
        tfidf(doc, self)
    }
}

/// Sparse weight vector of dimension `dim`, sorted by index, zeros omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl TfidfVector {
    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }

    pub fn l2_normalized(mut self) -> Self {
        let norm = self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut self.entries {
                *w /= norm;
            }
        }
        self
    }
}

/// `count(t, doc) * ln(N / df(t))` for every in-vocabulary term; unknown terms are skipped.
pub fn tfidf(doc: &TokenStream, vocab: &Vocabulary) -> TfidfVector {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for term in doc.iter() {
        if let Some(i) = vocab.index_of(term) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(i, tf)| (i, tf as f64 * vocab.idf(i)))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    entries.sort_unstable_by_key(|&(i, _)| i);
    TfidfVector {
        dim: vocab.len(),
        entries,
    }
}

/// Pretrained word vectors, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    vectors: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
    oov: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            words: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
            oov: vec![0.0; dim],
        }
    }

    /// Adds a vector; a word already present keeps its first vector.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "embedding of length {} in a table of dim {}",
                vector.len(),
                self.dim
            )));
        }
        let word = word.into();
        if !self.index.contains_key(&word) {
            self.index.insert(word.clone(), self.words.len());
            self.words.push(word);
            self.vectors.push(vector);
        }
        Ok(())
    }

    /// Parses `word v1 ... vd` lines. With no `expected_dim` the first row fixes it.
    pub fn parse<R: BufRead>(
        reader: R,
        expected_dim: Option<usize>,
        origin: &Path,
    ) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = expected_dim.map(EmbeddingTable::new);
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| Error::io(origin, e))?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(origin, line_no, format!("bad number {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(origin, line_no, "non-finite component"));
            }
            let table = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
            if values.is_empty() || values.len() != table.dim {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("expected {} components, found {}", table.dim, values.len()),
                ));
            }
            table.insert(word, values)?;
        }
        Ok(table.unwrap_or_else(|| EmbeddingTable::new(expected_dim.unwrap_or(0))))
    }

    pub fn load(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file), expected_dim, path)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vectors[i].as_slice())
    }

    /// The stored vector, or the all-zero OOV vector.
    pub fn lookup(&self, word: &str) -> &[f64] {
        self.get(word).unwrap_or(&self.oov)
    }

    pub fn oov_vector(&self) -> &[f64] {
        &self.oov
    }
}

/// Maps terms to embedding-table rows (0-based, before the padding offset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct SequenceIndex {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for SequenceIndex {
    fn from(words: Vec<String>) -> Self {
        SequenceIndex::new(words)
    }
}

impl From<SequenceIndex> for Vec<String> {
    fn from(index: SequenceIndex) -> Self {
        index.words
    }
}

impl SequenceIndex {
    /// Later duplicates of a word are ignored for lookup.
    pub fn new(words: Vec<String>) -> Self {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            index.entry(w.clone()).or_insert(i);
        }
        SequenceIndex { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

pub const PAD_INDEX: usize = 0;

/// Fixed-length index sequence; 0 is padding, term rows start at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSequence {
    pub indices: Vec<usize>,
}

/// Maps the first `max_len` indexed tokens to `row + 1` and right-pads with 0.
/// Unindexed tokens are skipped.
pub fn encode_sequence(
    doc: &TokenStream,
    lookup: impl Fn(&str) -> Option<usize>,
    max_len: usize,
) -> IndexSequence {
    let mut indices: Vec<usize> = doc
        .iter()
        .filter_map(lookup)
        .take(max_len)
        .map(|i| i + 1)
        .collect();
    indices.resize(max_len, PAD_INDEX);
    IndexSequence { indices }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<TokenStream> {
        raw.iter().map(|d| TokenStream::from_tokens(d)).collect()
    }

    #[test]
    fn build_vocabulary_counts_document_frequency() {
        let v = Vocabulary::build(&docs(&[&["a", "b"], &["b"]]), 1, 100).unwrap();
        assert_eq!(v.n_docs(), 2);
        assert_eq!(v.df("a"), Some(1));
        assert_eq!(v.df("b"), Some(2));
        assert_eq!(v.index_of("b"), Some(0));
        assert_eq!(v.index_of("a"), Some(1));
    }

    #[test]
    fn build_vocabulary_min_df_can_empty_it() {
        let v = Vocabulary::build(&docs(&[&["a"]]), 2, 100).unwrap();
        assert!(v.is_empty());
        assert_eq!(v.n_docs(), 1);
    }

    #[test]
    fn build_vocabulary_ties_break_lexicographically() {
        let v = Vocabulary::build(&docs(&[&["b"], &["a"]]), 1, 1).unwrap();
        assert_eq!(v.terms(), ["a"]);
    }

    #[test]
    fn build_vocabulary_rejects_empty_corpus() {
        let err = Vocabulary::build(&[], 1, 10).unwrap_err();
        assert_eq!(err.to_string(), "empty corpus");
    }

    #[test]
    fn repeated_terms_count_once_per_document() {
        let v = Vocabulary::build(&docs(&[&["a", "a", "a"], &["b"]]), 1, 10).unwrap();
        assert_eq!(v.df("a"), Some(1));
    }

    #[test]
    fn tfidf_examples() {
        // N=4, df(x)=1, tf=2 -> 2 ln 4; "y" appears everywhere -> 0
        let corpus = docs(&[&["x", "x", "y"], &["y"], &["y", "z"], &["y"]]);
        let v = Vocabulary::build(&corpus, 1, 10).unwrap();
        let w = tfidf(&corpus[0], &v);
        assert!((w.get(v.index_of("x").unwrap()) - 2.0 * 4f64.ln()).abs() < 1e-12);
        assert!((2.0 * 4f64.ln() - 2.772589).abs() < 1e-6);
        assert_eq!(w.get(v.index_of("y").unwrap()), 0.0);
        assert!(w.entries.iter().all(|&(_, x)| x != 0.0));

        let oov = tfidf(&TokenStream::from_tokens(&["nope"]), &v);
        assert!(oov.entries.is_empty());
        assert_eq!(oov.dim, v.len());
    }

    #[test]
    fn l2_normalization_is_opt_in() {
        let corpus = docs(&[&["x", "x", "z"], &["y"]]);
        let v = Vocabulary::build(&corpus, 1, 10).unwrap();
        let w = tfidf(&corpus[0], &v).l2_normalized();
        let norm: f64 = w.entries.iter().map(|(_, x)| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let v = Vocabulary::build(&docs(&[&["a", "b"], &["b", "c"]]), 1, 10).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"term\":\"b\",\"index\":0,\"df\":2"));
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn vocabulary_json_rejects_bad_df() {
        let json = r#"{"n_docs":1,"max_features":5,"terms":[{"term":"a","index":0,"df":2}]}"#;
        assert!(serde_json::from_str::<Vocabulary>(json).is_err());
    }

    #[test]
    fn load_embeddings_examples() {
        let p = Path::new("mem");
        let t = EmbeddingTable::parse("hi 0.1 0.2\nyo 0.3 0.4".as_bytes(), Some(2), p).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 2);
        assert_eq!(t.lookup("yo"), [0.3, 0.4]);

        let empty = EmbeddingTable::parse("".as_bytes(), Some(3), p).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.lookup("anything"), [0.0, 0.0, 0.0]);

        let err = EmbeddingTable::parse("bad 0.1".as_bytes(), Some(2), p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn load_embeddings_infers_dim_and_checks_later_rows() {
        let p = Path::new("mem");
        let err = EmbeddingTable::parse("a 1 2 3\nb 1 2\n".as_bytes(), None, p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = EmbeddingTable::parse("a 1 x\n".as_bytes(), None, p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn load_embeddings_missing_file() {
        let err = EmbeddingTable::load("/no/such/glove.txt", Some(25)).unwrap_err();
        assert!(err.to_string().contains("/no/such/glove.txt"));
    }

    #[test]
    fn encode_sequence_examples() {
        let index = SequenceIndex::new(vec!["a".into(), "b".into()]);
        let seq = encode_sequence(&TokenStream::from_tokens(&["a", "b"]), |t| index.get(t), 4);
        assert_eq!(seq.indices, [1, 2, 0, 0]);

        let seq = encode_sequence(&TokenStream::default(), |t| index.get(t), 3);
        assert_eq!(seq.indices, [0, 0, 0]);

        let long: Vec<&str> = ["a", "b"].iter().cycle().take(10).copied().collect();
        let seq = encode_sequence(&TokenStream::from_tokens(&long), |t| index.get(t), 5);
        assert_eq!(seq.indices, [1, 2, 1, 2, 1]);

        let seq = encode_sequence(&TokenStream::from_tokens(&["zz", "b"]), |t| index.get(t), 2);
        assert_eq!(seq.indices, [2, 0]);
    }
}
