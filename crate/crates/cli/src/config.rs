//! The training run file: one JSON object, unknown keys rejected.
//!
//! Only `corpus` and `output` are required (either may also come from the
//! command line). Relative paths are resolved against the config file's
//! directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rmdl_core::corpus::{CorpusFormat, LabelMap};
use rmdl_core::ensemble::EnsembleConfig;
use rmdl_core::pipeline::{FeatureConfig, PipelineConfig};
use rmdl_core::preprocess::PreprocessConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Inferred from the corpus extension when absent.
    pub format: Option<CorpusFormat>,
    pub label_map: Option<LabelMap>,
    /// Concurrent model trainings; all processors when absent.
    pub jobs: Option<usize>,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub ensemble: EnsembleConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.corpus);
        resolve(&mut config.output);
        resolve(&mut config.features.embeddings);
        resolve(&mut config.preprocess.stopwords_file);
        Ok(config)
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            preprocess: self.preprocess.clone(),
            features: self.features.clone(),
            ensemble: self.ensemble.clone(),
        }
    }

    /// Checks everything that can be checked before loading data.
    pub fn validate(&self) -> Result<()> {
        if self.corpus.is_none() {
            bail!(rmdl_core::Error::Invalid(
                "no corpus given (config `corpus` or --corpus)".into()
            ));
        }
        if self.output.is_none() {
            bail!(rmdl_core::Error::Invalid(
                "no output directory given (config `output` or --output)".into()
            ));
        }
        if self.jobs == Some(0) {
            bail!(rmdl_core::Error::Invalid("jobs must be positive".into()));
        }
        self.pipeline().validate()?;
        Ok(())
    }
}
