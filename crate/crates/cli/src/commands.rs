use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use rmdl_core::corpus::{Corpus, CorpusFormat, LabelMap};
use rmdl_core::ensemble::EnsemblePrediction;
use rmdl_core::metrics::{confusion, derive_metrics};
use rmdl_core::pipeline::Model;
use rmdl_core::preprocess::Preprocessor;
use rmdl_core::synthetic::{
    generate, save_embeddings, toy_embeddings, Difficulty, SyntheticConfig,
};
use rmdl_core::Error;

use crate::config::RunConfig;

const LABEL_MAP: &str = "label_map.json";

pub struct TrainArgs {
    pub config: PathBuf,
    pub corpus: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
}

pub fn train(args: TrainArgs) -> Result<()> {
    let mut config = RunConfig::load(&args.config)?;
    config.corpus = args.corpus.or(config.corpus);
    config.output = args.output.or(config.output);
    config.jobs = args.jobs.or(config.jobs);
    config.validate()?;
    let (corpus_path, output) = (
        config.corpus.clone().unwrap(),
        config.output.clone().unwrap(),
    );

    let pipeline = config.pipeline();
    // fail on a bad embedding path before touching the corpus
    let embeddings = pipeline.load_embeddings()?;
    let label_map = config.label_map.clone().unwrap_or_default();
    let corpus = Corpus::load(&corpus_path, config.format, &label_map)?;
    if !corpus.is_fully_labeled() {
        return Err(Error::Invalid(format!(
            "{}: training needs a label on every row",
            corpus_path.display()
        ))
        .into());
    }
    log::info!(
        "training {} dnn + {} cnn models on {} documents",
        pipeline.ensemble.dnn_count,
        pipeline.ensemble.cnn_count,
        corpus.len()
    );
    let model = Model::train(&corpus, &pipeline, embeddings.as_ref(), config.jobs)?;
    model.save(&output, corpus.len())?;
    write_json(&output.join(LABEL_MAP), &label_map)?;

    let report = model.report(corpus.len());
    for m in &report.members {
        writeln!(
            io::stdout(),
            "model {:>2}  {}  seed {:<20}  params {:>8}  final loss {:.6}",
            m.index,
            m.family,
            m.seed,
            m.parameters,
            m.loss_curve.last().copied().unwrap_or(f64::NAN)
        )?;
    }
    writeln!(
        io::stdout(),
        "saved {} models to {}",
        report.members.len(),
        output.display()
    )?;
    Ok(())
}

fn load_model(dir: &Path) -> Result<(Model, LabelMap)> {
    let model =
        Model::load(dir).with_context(|| format!("loading model from {}", dir.display()))?;
    let map_path = dir.join(LABEL_MAP);
    let label_map = if map_path.is_file() {
        serde_json::from_reader(BufReader::new(File::open(&map_path)?))
            .with_context(|| format!("parsing {}", map_path.display()))?
    } else {
        LabelMap::default()
    };
    Ok((model, label_map))
}

pub fn eval(
    model_dir: &Path,
    corpus_path: &Path,
    format: Option<CorpusFormat>,
    beta: f64,
    json: Option<&Path>,
) -> Result<()> {
    let (model, label_map) = load_model(model_dir)?;
    let corpus = Corpus::load(corpus_path, format, &label_map)?;
    if !corpus.is_fully_labeled() {
        return Err(Error::Invalid(format!(
            "{}: evaluation needs a label on every row",
            corpus_path.display()
        ))
        .into());
    }
    let evaluation = model.evaluate(&corpus, beta)?;
    write!(io::stdout(), "{evaluation}")?;
    match json {
        Some(path) => write_json(path, &evaluation)?,
        None => writeln!(
            io::stdout(),
            "\n{}",
            serde_json::to_string_pretty(&evaluation)?
        )?,
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct PredictionRow {
    id: String,
    #[serde(flatten)]
    prediction: EnsemblePrediction,
}

pub fn predict(
    model_dir: &Path,
    input: &Path,
    format: Option<CorpusFormat>,
    output: Option<&Path>,
) -> Result<()> {
    let (model, label_map) = load_model(model_dir)?;
    let corpus = match Corpus::load(input, format, &label_map) {
        Ok(c) => c,
        Err(Error::EmptyCorpus) => Corpus::new(Vec::new(), label_map)?,
        Err(e) => return Err(e.into()),
    };
    let predictions = if corpus.is_empty() {
        Vec::new()
    } else {
        model.predict(corpus.iter())?
    };

    let sink: Box<dyn Write> = match output {
        Some(path) => {
            Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    for (doc, prediction) in corpus.iter().zip(predictions) {
        let row = PredictionRow {
            id: doc.id.clone(),
            prediction,
        };
        writeln!(w, "{}", serde_json::to_string(&row)?)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct FinalOnly {
    id: String,
    #[serde(rename = "final")]
    final_label: u8,
}

/// Scores a predictions file (`predict` output) against a labeled corpus, joined by id.
pub fn metrics(
    predictions: &Path,
    labels: &Path,
    format: Option<CorpusFormat>,
    beta: f64,
) -> Result<()> {
    let corpus = Corpus::load(labels, format, &LabelMap::default())?;
    let gold: HashMap<&str, Option<u8>> = corpus.iter().map(|d| (d.id.as_str(), d.label)).collect();
    let reader = BufReader::new(
        File::open(predictions).with_context(|| format!("opening {}", predictions.display()))?,
    );
    let (mut preds, mut truth) = (Vec::new(), Vec::new());
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: FinalOnly = serde_json::from_str(&line).map_err(|e| {
            Error::Invalid(format!("{}: line {}: {e}", predictions.display(), i + 1))
        })?;
        let label = gold
            .get(row.id.as_str())
            .ok_or_else(|| Error::Invalid(format!("prediction for unknown id {:?}", row.id)))?
            .ok_or_else(|| Error::Invalid(format!("document {:?} has no label", row.id)))?;
        preds.push(row.final_label);
        truth.push(label);
    }
    let report = derive_metrics(&confusion(&preds, &truth)?, beta);
    write!(io::stdout(), "{report}")?;
    writeln!(io::stdout(), "\n{}", serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

pub fn stats(corpus_path: &Path, format: Option<CorpusFormat>) -> Result<()> {
    let corpus = Corpus::load(corpus_path, format, &LabelMap::default())?;
    let stats = corpus.stats(&Preprocessor::default());
    for w in &stats.warnings {
        log::warn!("{w}");
    }
    writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&stats)?)?;
    Ok(())
}

pub struct SynthArgs {
    pub output: PathBuf,
    pub docs_per_class: usize,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub embeddings: Option<PathBuf>,
    pub dim: usize,
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let config = SyntheticConfig::new(args.docs_per_class, args.difficulty, args.seed);
    let corpus = generate(&config)?;
    let format = CorpusFormat::from_path(&args.output).ok_or_else(|| {
        anyhow!(Error::Invalid(format!(
            "{}: use a .csv, .tsv or .jsonl name",
            args.output.display()
        )))
    })?;
    corpus.save(&args.output, format)?;
    writeln!(
        io::stdout(),
        "wrote {} documents to {}",
        corpus.len(),
        args.output.display()
    )?;
    if let Some(path) = args.embeddings {
        save_embeddings(&toy_embeddings(&config, args.dim)?, &path)?;
        writeln!(io::stdout(), "wrote toy embeddings to {}", path.display())?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
