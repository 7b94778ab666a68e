//! Random multimodel deep learning (RMDL) for binary text classification.
//!
//! Documents are preprocessed ([`preprocess`]), turned into TF-IDF vectors
//! and embedding-index sequences ([`features`]), and classified by an
//! ensemble of randomly shaped fully connected and convolutional networks
//! ([`ensemble`], built on [`nn`] and [`optim`]) whose binary votes are
//! combined by majority. [`metrics`] scores the result; [`pipeline`] ties it
//! together and persists trained models.

pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod pipeline;
pub mod preprocess;
pub mod synthetic;

pub use corpus::{Corpus, CorpusFormat, CorpusStats, Document, LabelMap};
pub use ensemble::{
    majority_vote, predict_model, sample_spec, train_ensemble, EnsembleConfig, EnsembleInputs,
    EnsemblePrediction, Family, ModelSpec, TrainedEnsemble, TrainedModel,
};
pub use error::{Error, Result};
pub use features::{
    encode_sequence, tfidf, EmbeddingTable, IndexSequence, TfidfVector, Vocabulary,
};
pub use metrics::{confusion, derive_metrics, ConfusionMatrix, MetricsReport};
pub use nn::{LayerSpec, Network, Tensor};
pub use optim::{Adam, AdamConfig};
pub use pipeline::{
    Evaluation, FeatureConfig, FeatureSpace, Model, PipelineConfig, TrainingReport,
};
pub use preprocess::{PreprocessConfig, Preprocessor, StopList, TokenStream};
