//! End-to-end model: preprocessing and feature spaces fitted on a training
//! corpus, the trained ensemble, and the on-disk model directory.
//!
//! Directory layout:
//!
//! ```text
//! manifest.json         config, seeds, member specs, feature descriptors
//! vocabulary.json       TF-IDF vocabulary (when there are dnn members)
//! sequence_index.json   embedding rows in order (when there are cnn members)
//! model_00.net ...      one network per member
//! report.json           per-member specs and loss curves
//! ```

use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::ensemble::{
    train_ensemble, EmbeddingInit, EnsembleConfig, EnsembleInputs, EnsemblePrediction, Family,
    ModelSpec, TrainedEnsemble, TrainedModel,
};
use crate::error::{Error, Result};
use crate::features::{encode_sequence, EmbeddingTable, SequenceIndex, Vocabulary};
use crate::metrics::{confusion, derive_metrics, MetricsReport};
use crate::nn::{LayerSpec, Network, Tensor};
use crate::preprocess::{PreprocessConfig, Preprocessor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub min_df: usize,
    pub max_features: usize,
    /// Scale each TF-IDF vector to unit length.
    pub l2_normalize: bool,
    pub max_len: usize,
    /// Whitespace-separated `word v1 … vd` file; required when `cnn_count > 0`.
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: Option<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            min_df: 1,
            max_features: 10_000,
            l2_normalize: false,
            max_len: 128,
            embeddings: None,
            embedding_dim: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub ensemble: EnsembleConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let f = &self.features;
        if f.min_df == 0 || f.max_features == 0 || f.max_len == 0 {
            return Err(Error::Invalid(
                "min_df, max_features and max_len must be positive".into(),
            ));
        }
        if f.embedding_dim == Some(0) {
            return Err(Error::Invalid("embedding_dim must be positive".into()));
        }
        self.ensemble.validate()?;
        if self.ensemble.cnn_count > 0 && f.embeddings.is_none() {
            return Err(Error::Invalid(
                "cnn_count > 0 needs features.embeddings to point at an embedding file".into(),
            ));
        }
        Ok(())
    }

    /// Loads the configured embedding table when convolutional members need it.
    pub fn load_embeddings(&self) -> Result<Option<EmbeddingTable>> {
        match (&self.features.embeddings, self.ensemble.cnn_count) {
            (Some(path), c) if c > 0 => {
                if !path.is_file() {
                    return Err(Error::Invalid(format!(
                        "embedding file {} does not exist",
                        path.display()
                    )));
                }
                EmbeddingTable::load(path, self.features.embedding_dim).map(Some)
            }
            _ => Ok(None),
        }
    }
}

/// Sizes of the fitted feature spaces, recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tfidf_dim: Option<usize>,
    pub l2_normalize: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    /// Embedding-layer rows, padding row included.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
}

/// Fitted preprocessing and feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    pub preprocessor: Preprocessor,
    pub vocabulary: Option<Vocabulary>,
    pub sequence_index: Option<SequenceIndex>,
    pub max_len: usize,
    pub l2_normalize: bool,
    pub embedding_dim: Option<usize>,
}

impl FeatureSpace {
    /// Fits the spaces the configured members need. Returns the embedding
    /// rows for convolutional members: row 0 is padding, then every table
    /// word seen in the training text, in table order.
    pub fn fit(
        corpus: &Corpus,
        config: &PipelineConfig,
        embeddings: Option<&EmbeddingTable>,
    ) -> Result<(Self, Option<EmbeddingInit>)> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let preprocessor = Preprocessor::from_config(&config.preprocess)?;
        let vocabulary = if config.ensemble.dnn_count > 0 {
            let streams: Vec<_> = corpus
                .iter()
                .map(|d| preprocessor.run(&d.id, &d.text))
                .collect();
            let vocab = Vocabulary::build(
                &streams,
                config.features.min_df,
                config.features.max_features,
            )?;
            if vocab.is_empty() {
                return Err(Error::Invalid(format!(
                    "no term reaches min_df = {}; the TF-IDF space is empty",
                    config.features.min_df
                )));
            }
            Some(vocab)
        } else {
            None
        };

        let mut init = None;
        let sequence_index = if config.ensemble.cnn_count > 0 {
            let table = embeddings.ok_or_else(|| {
                Error::Invalid("convolutional members need an embedding table".into())
            })?;
            let seen: std::collections::HashSet<String> = corpus
                .iter()
                .flat_map(|d| preprocessor.run_unstemmed(&d.id, &d.text).tokens)
                .collect();
            let words: Vec<String> = table
                .words()
                .iter()
                .filter(|w| seen.contains(*w))
                .cloned()
                .collect();
            if words.is_empty() {
                log::warn!(
                    "no training token has an embedding; convolutional members see only padding"
                );
            }
            let mut values = vec![0.0; table.dim()];
            for w in &words {
                values.extend_from_slice(table.lookup(w));
            }
            init = Some(EmbeddingInit {
                rows: words.len() + 1,
                dim: table.dim(),
                values,
            });
            Some(SequenceIndex::new(words))
        } else {
            None
        };

        let space = FeatureSpace {
            preprocessor,
            vocabulary,
            sequence_index,
            max_len: config.features.max_len,
            l2_normalize: config.features.l2_normalize,
            embedding_dim: embeddings
                .filter(|_| config.ensemble.cnn_count > 0)
                .map(EmbeddingTable::dim),
        };
        Ok((space, init))
    }

    pub fn descriptor(&self) -> FeatureDescriptor {
        let seq = self.sequence_index.as_ref();
        FeatureDescriptor {
            tfidf_dim: self.vocabulary.as_ref().map(Vocabulary::len),
            l2_normalize: self.l2_normalize,
            max_len: seq.map(|_| self.max_len),
            embedding_rows: seq.map(|s| s.len() + 1),
            embedding_dim: seq.and(self.embedding_dim),
        }
    }

    pub fn tfidf_input(&self, doc: &Document) -> Option<Tensor> {
        let vocab = self.vocabulary.as_ref()?;
        let mut v = vocab.tfidf(&self.preprocessor.run(&doc.id, &doc.text));
        if self.l2_normalize {
            v = v.l2_normalized();
        }
        Some(Tensor::vector(v.to_dense()))
    }

    pub fn sequence_input(&self, doc: &Document) -> Option<Tensor> {
        let index = self.sequence_index.as_ref()?;
        let stream = self.preprocessor.run_unstemmed(&doc.id, &doc.text);
        let seq = encode_sequence(&stream, |t| index.get(t), self.max_len);
        Some(Tensor::vector(
            seq.indices.into_iter().map(|i| i as f64).collect(),
        ))
    }

    pub fn transform<'a>(&self, docs: impl IntoIterator<Item = &'a Document>) -> EnsembleInputs {
        let docs: Vec<&Document> = docs.into_iter().collect();
        let collect = |f: &dyn Fn(&Document) -> Option<Tensor>| -> Option<Vec<Tensor>> {
            docs.iter().map(|d| f(d)).collect()
        };
        EnsembleInputs {
            tfidf: self
                .vocabulary
                .as_ref()
                .and_then(|_| collect(&|d| self.tfidf_input(d))),
            sequences: self
                .sequence_index
                .as_ref()
                .and_then(|_| collect(&|d| self.sequence_input(d))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub features: FeatureSpace,
    pub ensemble: TrainedEnsemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub index: usize,
    pub family: Family,
    pub seed: u64,
    pub dropout: f64,
    pub parameters: usize,
    pub layers: Vec<LayerSpec>,
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub documents: usize,
    pub features: FeatureDescriptor,
    pub members: Vec<MemberReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberScore {
    pub index: usize,
    pub family: Family,
    pub accuracy: f64,
}

/// Ensemble metrics plus each member's accuracy on the same documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub ensemble: MetricsReport,
    pub members: Vec<MemberScore>,
    pub median_member_accuracy: f64,
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}  {:<6}  Accuracy", "Model", "Family")?;
        for m in &self.members {
            writeln!(
                f,
                "{:<8}  {:<6}  {:.4}",
                m.index,
                m.family.to_string(),
                m.accuracy
            )?;
        }
        writeln!(
            f,
            "{:<8}  {:<6}  {:.4}",
            "median", "", self.median_member_accuracy
        )?;
        if let Some(acc) = self.ensemble.accuracy {
            writeln!(f, "{:<8}  {:<6}  {:.4}", "ensemble", "", acc)?;
        }
        writeln!(f)?;
        write!(f, "{}", self.ensemble)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => values[n / 2],
        _ => (values[n / 2 - 1] + values[n / 2]) / 2.0,
    }
}

pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.json";
const VOCABULARY: &str = "vocabulary.json";
const SEQUENCE_INDEX: &str = "sequence_index.json";
const MANIFEST_FORMAT: &str = "rmdl-ensemble";
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberEntry {
    index: usize,
    file: String,
    spec: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    ensemble: EnsembleConfig,
    features: FeatureDescriptor,
    preprocessor: Preprocessor,
    members: Vec<MemberEntry>,
}

pub fn member_file(index: usize) -> String {
    format!("model_{index:02}.net")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| Error::io(path, e))?;
    std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

fn mismatch(msg: String) -> Error {
    Error::Invalid(format!("feature-space mismatch: {msg}"))
}

impl Model {
    /// Fits features on `corpus` (which must be fully labeled) and trains
    /// the ensemble on up to `jobs` threads.
    pub fn train(
        corpus: &Corpus,
        config: &PipelineConfig,
        embeddings: Option<&EmbeddingTable>,
        jobs: Option<usize>,
    ) -> Result<Model> {
        config.validate()?;
        let labels = corpus.labels()?;
        let (features, init) = FeatureSpace::fit(corpus, config, embeddings)?;
        let inputs = features.transform(corpus.iter());
        let ensemble = train_ensemble(&inputs, &labels, init.as_ref(), &config.ensemble, jobs)?;
        Ok(Model { features, ensemble })
    }

    pub fn inputs<'a>(&self, docs: impl IntoIterator<Item = &'a Document>) -> EnsembleInputs {
        self.features.transform(docs)
    }

    pub fn predict<'a>(
        &self,
        docs: impl IntoIterator<Item = &'a Document>,
    ) -> Result<Vec<EnsemblePrediction>> {
        self.ensemble.predict(&self.inputs(docs))
    }

    /// Scores the ensemble and every member on a labeled corpus.
    pub fn evaluate(&self, corpus: &Corpus, beta: f64) -> Result<Evaluation> {
        let labels = corpus.labels()?;
        let votes = self.ensemble.vote_matrix(&self.inputs(corpus.iter()))?;
        let finals = votes
            .iter()
            .map(|v| crate::ensemble::majority_vote(v))
            .collect::<Result<Vec<u8>>>()?;
        let ensemble = derive_metrics(&confusion(&finals, &labels)?, beta);
        let members: Vec<MemberScore> = self
            .ensemble
            .models
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let correct = votes
                    .iter()
                    .zip(&labels)
                    .filter(|(v, &y)| v[j] == y)
                    .count();
                MemberScore {
                    index: m.index,
                    family: m.spec.family,
                    accuracy: correct as f64 / labels.len() as f64,
                }
            })
            .collect();
        let mut accs: Vec<f64> = members.iter().map(|m| m.accuracy).collect();
        Ok(Evaluation {
            ensemble,
            members,
            median_member_accuracy: median(&mut accs),
        })
    }

    pub fn report(&self, documents: usize) -> TrainingReport {
        TrainingReport {
            documents,
            features: self.features.descriptor(),
            members: self
                .ensemble
                .models
                .iter()
                .map(|m| MemberReport {
                    index: m.index,
                    family: m.spec.family,
                    seed: m.spec.seed,
                    dropout: m.spec.dropout,
                    parameters: m.network.param_count(),
                    layers: m.spec.layers.clone(),
                    loss_curve: m.loss_curve.clone(),
                })
                .collect(),
        }
    }

    fn manifest(&self) -> Manifest {
        Manifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            ensemble: self.ensemble.config.clone(),
            features: self.features.descriptor(),
            preprocessor: self.features.preprocessor.clone(),
            members: self
                .ensemble
                .models
                .iter()
                .map(|m| MemberEntry {
                    index: m.index,
                    file: member_file(m.index),
                    spec: m.spec.clone(),
                })
                .collect(),
        }
    }

    /// Writes the model directory, creating it if needed. `documents` is
    /// recorded in the training report.
    pub fn save(&self, dir: impl AsRef<Path>, documents: usize) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join(MANIFEST), &self.manifest())?;
        if let Some(vocab) = &self.features.vocabulary {
            write_json(&dir.join(VOCABULARY), vocab)?;
        }
        if let Some(index) = &self.features.sequence_index {
            write_json(&dir.join(SEQUENCE_INDEX), index)?;
        }
        for m in &self.ensemble.models {
            m.network.save(dir.join(member_file(m.index)))?;
        }
        write_json(&dir.join(REPORT), &self.report(documents))
    }

    /// Reads a model directory and checks that every member network matches
    /// the recorded feature spaces.
    pub fn load(dir: impl AsRef<Path>) -> Result<Model> {
        let dir = dir.as_ref();
        let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
        if manifest.format != MANIFEST_FORMAT || manifest.version != MANIFEST_VERSION {
            return Err(Error::Invalid(format!(
                "{}: unsupported manifest {} v{}",
                dir.display(),
                manifest.format,
                manifest.version
            )));
        }
        manifest.ensemble.validate()?;
        let desc = &manifest.features;
        let vocabulary: Option<Vocabulary> = match desc.tfidf_dim {
            Some(_) => Some(read_json(&dir.join(VOCABULARY))?),
            None => None,
        };
        let sequence_index: Option<SequenceIndex> = match desc.embedding_rows {
            Some(_) => Some(read_json(&dir.join(SEQUENCE_INDEX))?),
            None => None,
        };
        let features = FeatureSpace {
            preprocessor: manifest.preprocessor,
            vocabulary,
            sequence_index,
            max_len: desc.max_len.unwrap_or(0),
            l2_normalize: desc.l2_normalize,
            embedding_dim: desc.embedding_dim,
        };
        if features.descriptor() != *desc {
            return Err(mismatch(format!(
                "manifest records {:?}, stored vocabularies give {:?}",
                desc,
                features.descriptor()
            )));
        }
        if manifest.members.len() != manifest.ensemble.size() {
            return Err(Error::Invalid(format!(
                "manifest lists {} members, config expects {}",
                manifest.members.len(),
                manifest.ensemble.size()
            )));
        }

        let report: Option<TrainingReport> = {
            let path = dir.join(REPORT);
            if path.is_file() {
                Some(read_json(&path)?)
            } else {
                None
            }
        };
        let mut models = Vec::with_capacity(manifest.members.len());
        for (pos, entry) in manifest.members.into_iter().enumerate() {
            if entry.index != pos {
                return Err(Error::Invalid(format!(
                    "member {pos} is recorded as index {}",
                    entry.index
                )));
            }
            let path = dir.join(&entry.file);
            let network = Network::load(&path)?;
            check_member(&path, &entry.spec, &network, &features)?;
            let loss_curve = report
                .as_ref()
                .and_then(|r| r.members.get(pos))
                .map(|m| m.loss_curve.clone())
                .unwrap_or_default();
            models.push(TrainedModel {
                index: entry.index,
                spec: entry.spec,
                network,
                loss_curve,
            });
        }
        Ok(Model {
            features,
            ensemble: TrainedEnsemble {
                config: manifest.ensemble,
                models,
            },
        })
    }
}

fn check_member(
    path: &Path,
    spec: &ModelSpec,
    net: &Network,
    features: &FeatureSpace,
) -> Result<()> {
    let desc = features.descriptor();
    let expected_input = match spec.family {
        Family::Dnn => desc.tfidf_dim,
        Family::Cnn => desc.max_len,
    };
    let Some(expected_input) = expected_input else {
        return Err(mismatch(format!(
            "{}: no {} feature space recorded",
            path.display(),
            spec.family
        )));
    };
    if net.input_shape() != [expected_input] {
        return Err(mismatch(format!(
            "{}: network input {:?}, feature space gives [{expected_input}]",
            path.display(),
            net.input_shape()
        )));
    }
    let mut layers: Vec<&LayerSpec> = net.specs().collect();
    if spec.family == Family::Cnn {
        match layers.first() {
            Some(LayerSpec::Embedding { vocab, dim, .. })
                if Some(*vocab) == desc.embedding_rows && Some(*dim) == desc.embedding_dim => {}
            other => {
                return Err(mismatch(format!(
                    "{}: embedding layer {other:?} does not match {:?} rows of dim {:?}",
                    path.display(),
                    desc.embedding_rows,
                    desc.embedding_dim
                )))
            }
        }
        layers.remove(0);
    }
    if layers.into_iter().ne(spec.layers.iter()) {
        return Err(Error::Invalid(format!(
            "{}: layers differ from the manifest spec",
            path.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, toy_embeddings, Difficulty, SyntheticConfig};

    fn small_config(dnn: usize, cnn: usize) -> PipelineConfig {
        let mut config = PipelineConfig::default();
        config.ensemble.dnn_count = dnn;
        config.ensemble.cnn_count = cnn;
        config.ensemble.epochs = 2;
        config.ensemble.architecture.dnn.units = [8, 16];
        config.ensemble.architecture.cnn.filters = [4, 8];
        config.ensemble.architecture.cnn.dense_units = [8, 8];
        config.features.max_len = 16;
        if cnn > 0 {
            config.features.embeddings = Some("unused.txt".into());
        }
        config
    }

    #[test]
    fn cnn_without_embeddings_is_rejected() {
        let mut config = small_config(1, 1);
        config.features.embeddings = None;
        assert!(config.validate().is_err());
        assert!(small_config(1, 0).validate().is_ok());
    }

    #[test]
    fn missing_embedding_file_names_the_path() {
        let mut config = small_config(0, 1);
        config.features.embeddings = Some("/nonexistent/glove.txt".into());
        let err = config.load_embeddings().unwrap_err();
        assert!(err.to_string().contains("/nonexistent/glove.txt"), "{err}");
    }

    #[test]
    fn sequence_index_keeps_seen_table_words() {
        let syn = SyntheticConfig::new(5, Difficulty::Easy, 1);
        let corpus = generate(&syn).unwrap();
        let mut table = toy_embeddings(&syn, 4).unwrap();
        table.insert("neverseen", vec![9.0; 4]).unwrap();
        let (space, init) = FeatureSpace::fit(&corpus, &small_config(0, 1), Some(&table)).unwrap();
        let index = space.sequence_index.as_ref().unwrap();
        assert!(index.get("neverseen").is_none());
        let init = init.unwrap();
        assert_eq!(init.rows, index.len() + 1);
        assert!(init.values[..4].iter().all(|&v| v == 0.0));
        let first = &index.words()[0];
        assert_eq!(&init.values[4..8], table.get(first).unwrap());
        assert!(space.vocabulary.is_none());
    }

    #[test]
    fn save_load_round_trip() {
        let syn = SyntheticConfig::new(10, Difficulty::Easy, 2);
        let corpus = generate(&syn).unwrap();
        let table = toy_embeddings(&syn, 4).unwrap();
        let model = Model::train(&corpus, &small_config(2, 1), Some(&table), Some(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path(), corpus.len()).unwrap();
        for f in [
            MANIFEST,
            REPORT,
            VOCABULARY,
            SEQUENCE_INDEX,
            "model_00.net",
            "model_01.net",
            "model_02.net",
        ] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let back = Model::load(dir.path()).unwrap();
        assert_eq!(back.features, model.features);
        assert_eq!(back.ensemble.config, model.ensemble.config);
        for (a, b) in back.ensemble.models.iter().zip(&model.ensemble.models) {
            assert_eq!(a.spec, b.spec);
            assert_eq!(a.loss_curve, b.loss_curve);
            assert_eq!(a.network, b.network);
        }
        assert_eq!(back, model);
        assert_eq!(
            back.predict(corpus.iter()).unwrap(),
            model.predict(corpus.iter()).unwrap()
        );
    }

    #[test]
    fn load_rejects_swapped_member_file() {
        let syn = SyntheticConfig::new(10, Difficulty::Easy, 2);
        let corpus = generate(&syn).unwrap();
        let model = Model::train(&corpus, &small_config(1, 0), None, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path(), corpus.len()).unwrap();
        // a network on a different input width
        let other = Network::new(
            vec![3],
            vec![LayerSpec::Dense { units: 1 }, LayerSpec::Sigmoid],
            0,
        )
        .unwrap();
        other.save(dir.path().join("model_00.net")).unwrap();
        let err = Model::load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("mismatch"), "{err}");
    }

    #[test]
    fn evaluation_reports_members_and_median() {
        let syn = SyntheticConfig::new(10, Difficulty::Easy, 4);
        let corpus = generate(&syn).unwrap();
        let model = Model::train(&corpus, &small_config(3, 0), None, None).unwrap();
        let eval = model.evaluate(&corpus, 1.0).unwrap();
        assert_eq!(eval.members.len(), 3);
        assert_eq!(eval.ensemble.confusion.total(), 20);
        let text = eval.to_string();
        assert!(text.contains("median") && text.contains("Accuracy"));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
