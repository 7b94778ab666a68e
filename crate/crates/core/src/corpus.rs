//! Labeled corpora: loading (csv, tsv, jsonl), stratified splitting and
//! summary statistics.
//!
//! Each row is one author's text. Labels are class names resolved through a
//! [`LabelMap`]; the literal strings `"0"` and `"1"` are always accepted.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Preprocessor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: Option<u8>,
}

/// Class name to binary label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelMap(BTreeMap<String, u8>);

impl Default for LabelMap {
    fn default() -> Self {
        LabelMap(BTreeMap::from([
            ("female".to_string(), 0),
            ("male".to_string(), 1),
        ]))
    }
}

impl LabelMap {
    pub fn new(entries: BTreeMap<String, u8>) -> Result<Self> {
        if let Some((name, v)) = entries.iter().find(|(_, &v)| v > 1) {
            return Err(Error::Invalid(format!(
                "label {name:?} maps to {v}, expected 0 or 1"
            )));
        }
        Ok(LabelMap(entries))
    }

    pub fn resolve(&self, name: &str) -> Option<u8> {
        match name {
            "0" => Some(0),
            "1" => Some(1),
            _ => self.0.get(name).copied(),
        }
    }

    /// First name (in sorted order) for a label, or the digit itself.
    pub fn name_of(&self, label: u8) -> String {
        self.0
            .iter()
            .find(|(_, &v)| v == label)
            .map(|(k, _)| k.clone())
            .unwrap_or_else(|| label.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Tsv,
    Jsonl,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(CorpusFormat::Csv),
            "tsv" | "tab" => Some(CorpusFormat::Tsv),
            "jsonl" | "ndjson" => Some(CorpusFormat::Jsonl),
            _ => None,
        }
    }
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(CorpusFormat::Csv),
            "tsv" => Ok(CorpusFormat::Tsv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::Invalid(format!("unknown corpus format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub label_map: LabelMap,
}

#[derive(Deserialize, Serialize)]
struct JsonRow {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<JsonLabel>,
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum JsonLabel {
    Int(u64),
    Name(String),
}

impl Corpus {
    pub fn new(documents: Vec<Document>, label_map: LabelMap) -> Result<Self> {
        let mut seen = HashSet::new();
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::Invalid(format!(
                    "duplicate document id {:?}",
                    doc.id
                )));
            }
            if doc.label.is_some_and(|l| l > 1) {
                return Err(Error::Invalid(format!(
                    "document {:?} has a non-binary label",
                    doc.id
                )));
            }
        }
        Ok(Corpus {
            documents,
            label_map,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.documents.iter().all(|d| d.label.is_some())
    }

    /// All labels, failing on the first unlabeled document.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.documents
            .iter()
            .map(|d| {
                d.label
                    .ok_or_else(|| Error::Invalid(format!("document {:?} has no label", d.id)))
            })
            .collect()
    }

    pub fn load(
        path: impl AsRef<Path>,
        format: Option<CorpusFormat>,
        label_map: &LabelMap,
    ) -> Result<Self> {
        let path = path.as_ref();
        let format = match format.or_else(|| CorpusFormat::from_path(path)) {
            Some(f) => f,
            None => {
                return Err(Error::Invalid(format!(
                    "{}: cannot infer corpus format from extension",
                    path.display()
                )))
            }
        };
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let corpus = match format {
            CorpusFormat::Csv => Self::read_delimited(file, b',', label_map, path)?,
            CorpusFormat::Tsv => Self::read_delimited(file, b'\t', label_map, path)?,
            CorpusFormat::Jsonl => Self::read_jsonl(BufReader::new(file), label_map, path)?,
        };
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(corpus)
    }

    fn read_delimited<R: std::io::Read>(
        reader: R,
        delimiter: u8,
        label_map: &LabelMap,
        path: &Path,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .from_reader(reader);
        let headers = match rdr.headers() {
            Ok(h) => h.clone(),
            Err(e) if e.is_io_error() => return Err(Error::io(path, std::io::Error::other(e))),
            Err(e) => return Err(Error::parse(path, 1, e.to_string())),
        };
        if headers.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let column = |name: &str| headers.iter().position(|h| h.trim() == name);
        let id_col =
            column("id").ok_or_else(|| Error::parse(path, 1, "missing required column \"id\""))?;
        let text_col = column("text")
            .ok_or_else(|| Error::parse(path, 1, "missing required column \"text\""))?;
        let label_col = column("label");

        let mut docs = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                Error::parse(path, line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            let field = |i: usize| {
                record
                    .get(i)
                    .ok_or_else(|| Error::parse(path, line, "row is too short"))
            };
            let label = match label_col {
                Some(c) => match field(c)? {
                    "" => None,
                    name => Some(label_map.resolve(name).ok_or_else(|| {
                        Error::parse(path, line, format!("unknown label {name:?}"))
                    })?),
                },
                None => None,
            };
            docs.push(Document {
                id: field(id_col)?.to_string(),
                text: field(text_col)?.to_string(),
                label,
            });
        }
        Self::with_line_context(docs, label_map, path)
    }

    fn read_jsonl<R: BufRead>(reader: R, label_map: &LabelMap, path: &Path) -> Result<Self> {
        let mut docs = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: JsonRow = serde_json::from_str(&line)
                .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
            let label = match row.label {
                None => None,
                Some(JsonLabel::Int(v)) if v <= 1 => Some(v as u8),
                Some(JsonLabel::Int(v)) => {
                    return Err(Error::parse(path, line_no, format!("unknown label {v}")))
                }
                Some(JsonLabel::Name(name)) => Some(label_map.resolve(&name).ok_or_else(|| {
                    Error::parse(path, line_no, format!("unknown label {name:?}"))
                })?),
            };
            docs.push(Document {
                id: row.id,
                text: row.text,
                label,
            });
        }
        Self::with_line_context(docs, label_map, path)
    }

    fn with_line_context(docs: Vec<Document>, label_map: &LabelMap, path: &Path) -> Result<Self> {
        Corpus::new(docs, label_map.clone())
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    /// One JSON object per line; labels written by name.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for doc in &self.documents {
            let row = JsonRow {
                id: doc.id.clone(),
                text: doc.text.clone(),
                label: doc
                    .label
                    .map(|l| JsonLabel::Name(self.label_map.name_of(l))),
            };
            serde_json::to_writer(&mut w, &row)?;
            w.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>, format: CorpusFormat) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        match format {
            CorpusFormat::Jsonl => self.write_jsonl(&mut w)?,
            CorpusFormat::Csv | CorpusFormat::Tsv => {
                let delimiter = if format == CorpusFormat::Csv {
                    b','
                } else {
                    b'\t'
                };
                let mut wtr = csv::WriterBuilder::new()
                    .delimiter(delimiter)
                    .from_writer(&mut w);
                let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
                wtr.write_record(["id", "text", "label"]).map_err(csv_err)?;
                for doc in &self.documents {
                    let label = doc
                        .label
                        .map(|l| self.label_map.name_of(l))
                        .unwrap_or_default();
                    wtr.write_record([doc.id.as_str(), doc.text.as_str(), label.as_str()])
                        .map_err(csv_err)?;
                }
                wtr.flush().map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Stratified, seeded train/test partition. Each class contributes
    /// `round(test_fraction * class_size)` documents to the test side, kept
    /// within `1..class_size`. Both sides keep corpus order.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::Invalid(format!(
                "test fraction {test_fraction} outside (0, 1)"
            )));
        }
        let labels = self.labels()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut in_test = vec![false; self.len()];
        for class in [0u8, 1] {
            let mut members: Vec<usize> = (0..self.len()).filter(|&i| labels[i] == class).collect();
            if members.len() < 2 {
                return Err(Error::Invalid(format!(
                    "class {class} has {} document(s); splitting needs at least 2",
                    members.len()
                )));
            }
            members.shuffle(&mut rng);
            let n_test = ((members.len() as f64 * test_fraction).round() as usize)
                .clamp(1, members.len() - 1);
            for &i in &members[..n_test] {
                in_test[i] = true;
            }
        }
        let pick = |want: bool| Corpus {
            documents: self
                .documents
                .iter()
                .zip(&in_test)
                .filter(|(_, &t)| t == want)
                .map(|(d, _)| d.clone())
                .collect(),
            label_map: self.label_map.clone(),
        };
        Ok((pick(false), pick(true)))
    }

    pub fn stats(&self, pre: &Preprocessor) -> CorpusStats {
        let mut class_counts = [0usize; 2];
        for l in self.documents.iter().filter_map(|d| d.label) {
            class_counts[l as usize] += 1;
        }
        let labeled = class_counts[0] + class_counts[1];
        let balance =
            (labeled > 0).then(|| class_counts[0].max(class_counts[1]) as f64 / labeled as f64);

        let counts: Vec<usize> = self
            .documents
            .iter()
            .map(|d| pre.run(&d.id, &d.text).len())
            .collect();
        let token_histogram = power_of_two_histogram(&counts);

        let mut warnings = Vec::new();
        if labeled > 0 && (class_counts[0] == 0 || class_counts[1] == 0) {
            warnings.push("only one class is present".to_string());
        }
        if labeled < self.len() {
            warnings.push(format!(
                "{} document(s) are unlabeled",
                self.len() - labeled
            ));
        }
        CorpusStats {
            documents: self.len(),
            labeled,
            class_counts,
            balance,
            total_tokens: counts.iter().sum(),
            token_histogram,
            warnings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBucket {
    /// Inclusive bounds.
    pub min: usize,
    pub max: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub labeled: usize,
    /// Documents per label, index 0 and 1.
    pub class_counts: [usize; 2],
    /// Share of the larger class among labeled documents.
    pub balance: Option<f64>,
    pub total_tokens: usize,
    pub token_histogram: Vec<HistogramBucket>,
    pub warnings: Vec<String>,
}

/// Buckets `{0}, {1}, [2,3], [4,7], ...` up to the largest count, empty ones included.
pub fn power_of_two_histogram(counts: &[usize]) -> Vec<HistogramBucket> {
    let bucket_of = |c: usize| if c == 0 { 0 } else { c.ilog2() as usize + 1 };
    let Some(top) = counts.iter().map(|&c| bucket_of(c)).max() else {
        return Vec::new();
    };
    let mut buckets: Vec<HistogramBucket> = (0..=top)
        .map(|b| match b {
            0 => HistogramBucket {
                min: 0,
                max: 0,
                count: 0,
            },
            b => HistogramBucket {
                min: 1 << (b - 1),
                max: (1 << b) - 1,
                count: 0,
            },
        })
        .collect();
    for &c in counts {
        buckets[bucket_of(c)].count += 1;
    }
    buckets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{PreprocessConfig, StopList};

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn doc(id: &str, text: &str, label: Option<u8>) -> Document {
        Document {
            id: id.into(),
            text: text.into(),
            label,
        }
    }

    #[test]
    fn load_csv_with_names() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.csv",
            "id,text,label\na,\"Hello, world\",male\nb,bye,female\n",
        );
        let c = Corpus::load(&p, None, &LabelMap::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.labels().unwrap(), [1, 0]);
        assert_eq!(c.documents[0].text, "Hello, world");
    }

    #[test]
    fn load_empty_file_is_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["e.csv", "e.jsonl", "h.csv"] {
            let body = if name == "h.csv" {
                "id,text,label\n"
            } else {
                ""
            };
            let p = write(dir.path(), name, body);
            let err = Corpus::load(&p, None, &LabelMap::default()).unwrap_err();
            assert_eq!(err.to_string(), "empty corpus", "{name}");
        }
    }

    #[test]
    fn unknown_label_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.csv", "id,text,label\na,x,male\nb,y,other\n");
        let err = Corpus::load(&p, None, &LabelMap::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("other"));
    }

    #[test]
    fn missing_column_and_duplicate_id() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.csv", "id,body\na,x\n");
        assert!(Corpus::load(&p, None, &LabelMap::default())
            .unwrap_err()
            .to_string()
            .contains("text"));
        let p = write(dir.path(), "d.tsv", "id\ttext\na\tx\na\ty\n");
        assert!(Corpus::load(&p, None, &LabelMap::default())
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
    }

    #[test]
    fn tsv_and_jsonl_and_optional_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.tsv", "text\tid\nhi there\tx1\n");
        let c = Corpus::load(&p, None, &LabelMap::default()).unwrap();
        assert_eq!(c.documents[0], doc("x1", "hi there", None));

        let p = write(
            dir.path(),
            "c.jsonl",
            "{\"id\":\"a\",\"text\":\"t\",\"label\":1}\n\n{\"id\":\"b\",\"text\":\"u\",\"label\":\"female\"}\n{\"id\":\"c\",\"text\":\"v\"}\n",
        );
        let c = Corpus::load(&p, None, &LabelMap::default()).unwrap();
        assert_eq!(
            c.documents.iter().map(|d| d.label).collect::<Vec<_>>(),
            [Some(1), Some(0), None]
        );
        assert!(!c.is_fully_labeled());
        assert!(c.labels().is_err());
    }

    #[test]
    fn jsonl_malformed_row_has_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "c.jsonl",
            "{\"id\":\"a\",\"text\":\"t\"}\n{oops\n",
        );
        let err = Corpus::load(&p, None, &LabelMap::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn custom_label_map() {
        let map = LabelMap::new(BTreeMap::from([("f".into(), 0), ("m".into(), 1)])).unwrap();
        assert_eq!(map.resolve("m"), Some(1));
        assert_eq!(map.resolve("male"), None);
        assert!(LabelMap::new(BTreeMap::from([("x".into(), 2)])).is_err());
    }

    fn balanced(n_per_class: usize) -> Corpus {
        let docs = (0..2 * n_per_class)
            .map(|i| doc(&format!("d{i}"), "text", Some((i % 2) as u8)))
            .collect();
        Corpus::new(docs, LabelMap::default()).unwrap()
    }

    #[test]
    fn split_is_stratified() {
        let c = balanced(50);
        let (train, test) = c.split(0.4, 9).unwrap();
        let count = |c: &Corpus, l| c.iter().filter(|d| d.label == Some(l)).count();
        assert_eq!((count(&test, 0), count(&test, 1)), (20, 20));
        assert_eq!(train.len(), 60);
    }

    #[test]
    fn split_unbalanced_sizes() {
        let docs = (0..6000)
            .map(|i| doc(&format!("d{i}"), "t", Some((i < 3600) as u8)))
            .collect();
        let c = Corpus::new(docs, LabelMap::default()).unwrap();
        let (train, test) = c.split(0.5, 1).unwrap();
        assert_eq!((train.len(), test.len()), (3000, 3000));
    }

    #[test]
    fn split_is_deterministic_partition() {
        let c = balanced(30);
        let (a_train, a_test) = c.split(0.3, 5).unwrap();
        let (b_train, b_test) = c.split(0.3, 5).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);
        let train_ids: HashSet<_> = a_train.iter().map(|d| &d.id).collect();
        assert!(a_test.iter().all(|d| !train_ids.contains(&d.id)));
        assert_eq!(a_train.len() + a_test.len(), c.len());
        let (c_train, _) = c.split(0.3, 6).unwrap();
        assert_ne!(a_train, c_train);
    }

    #[test]
    fn split_errors() {
        let c = balanced(5);
        assert!(c.split(0.0, 1).is_err());
        assert!(c.split(1.0, 1).is_err());
        let lonely = Corpus::new(
            vec![
                doc("a", "x", Some(0)),
                doc("b", "y", Some(0)),
                doc("c", "z", Some(1)),
            ],
            LabelMap::default(),
        )
        .unwrap();
        assert!(lonely.split(0.5, 1).is_err());
    }

    #[test]
    fn stats_balance_and_warnings() {
        let pre = Preprocessor::default();
        let s = balanced(5).stats(&pre);
        assert_eq!(s.balance, Some(0.5));
        assert!(s.warnings.is_empty());

        let one = Corpus::new(
            vec![doc("a", "x", Some(1)), doc("b", "y", Some(1))],
            LabelMap::default(),
        )
        .unwrap();
        let s = one.stats(&pre);
        assert_eq!(s.balance, Some(1.0));
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn stats_histogram_by_hand() {
        let pre = Preprocessor::with_stops(&PreprocessConfig::default(), StopList::minimal());
        // token counts after preprocessing: 0, 1, 3, 5
        let docs = vec![
            doc("a", "is am", Some(0)),
            doc("b", "cats", Some(0)),
            doc("c", "red green blue", Some(1)),
            doc("d", "one two three four five", Some(1)),
        ];
        let s = Corpus::new(docs, LabelMap::default()).unwrap().stats(&pre);
        let got: Vec<(usize, usize, usize)> = s
            .token_histogram
            .iter()
            .map(|b| (b.min, b.max, b.count))
            .collect();
        assert_eq!(got, [(0, 0, 1), (1, 1, 1), (2, 3, 1), (4, 7, 1)]);
        assert_eq!(s.total_tokens, 9);
    }

    #[test]
    fn jsonl_round_trip_is_byte_exact() {
        let c = Corpus::new(
            vec![
                doc("a", "Ünïcode \"quoted\"\ttab", Some(1)),
                doc("b", "plain", None),
                doc("c", "", Some(0)),
            ],
            LabelMap::default(),
        )
        .unwrap();
        let mut first = Vec::new();
        c.write_jsonl(&mut first).unwrap();
        let back =
            Corpus::read_jsonl(first.as_slice(), &LabelMap::default(), Path::new("mem")).unwrap();
        assert_eq!(back, c);
        let mut second = Vec::new();
        back.write_jsonl(&mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn csv_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = Corpus::new(
            vec![doc("a", "comma, \"quote\"\nnewline", Some(1))],
            LabelMap::default(),
        )
        .unwrap();
        let p = dir.path().join("c.csv");
        c.save(&p, CorpusFormat::Csv).unwrap();
        assert_eq!(Corpus::load(&p, None, &LabelMap::default()).unwrap(), c);
    }
}
