//! Random multimodel ensembles: `d` fully connected members on TF-IDF input
//! and `c` convolutional members on embedding sequences, each with a randomly
//! drawn architecture, trained independently and combined by majority vote.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Head, LayerSpec, Network, Tensor};
use crate::optim::{Adam, AdamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dnn,
    Cnn,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Dnn => "dnn",
            Family::Cnn => "cnn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
}

impl Activation {
    fn layer(self) -> LayerSpec {
        match self {
            Activation::Relu => LayerSpec::Relu,
            Activation::Sigmoid => LayerSpec::Sigmoid,
        }
    }
}

/// Inclusive `[min, max]`.
pub type Bounds = [usize; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnRanges {
    pub hidden_layers: Bounds,
    pub units: Bounds,
}

impl Default for DnnRanges {
    fn default() -> Self {
        DnnRanges {
            hidden_layers: [1, 3],
            units: [64, 512],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnRanges {
    pub conv_layers: Bounds,
    pub filters: Bounds,
    pub kernel: Bounds,
    pub pool_width: usize,
    pub dense_units: Bounds,
}

impl Default for CnnRanges {
    fn default() -> Self {
        CnnRanges {
            conv_layers: [1, 2],
            filters: [32, 128],
            kernel: [3, 7],
            pool_width: 2,
            dense_units: [64, 256],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub dnn: DnnRanges,
    pub cnn: CnnRanges,
    /// Candidate dropout rates; one is drawn per model.
    pub dropout: Vec<f64>,
    pub head: Head,
    pub hidden_activation: Activation,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig {
            dnn: DnnRanges::default(),
            cnn: CnnRanges::default(),
            dropout: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            head: Head::Sigmoid,
            hidden_activation: Activation::Relu,
        }
    }
}

impl ArchitectureConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, [lo, hi]: Bounds| {
            if lo == 0 || lo > hi {
                Err(Error::Invalid(format!(
                    "range {name} = [{lo}, {hi}] must satisfy 1 <= min <= max"
                )))
            } else {
                Ok(())
            }
        };
        check("dnn.hidden_layers", self.dnn.hidden_layers)?;
        check("dnn.units", self.dnn.units)?;
        check("cnn.conv_layers", self.cnn.conv_layers)?;
        check("cnn.filters", self.cnn.filters)?;
        check("cnn.kernel", self.cnn.kernel)?;
        check("cnn.dense_units", self.cnn.dense_units)?;
        if self.cnn.pool_width == 0 {
            return Err(Error::Invalid("cnn.pool_width must be positive".into()));
        }
        if self.dropout.is_empty() || self.dropout.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::Invalid(
                "dropout candidates must be nonempty and in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Fully connected members (`d`).
    pub dnn_count: usize,
    /// Convolutional members (`c`). Defaults to 0 since they need an
    /// embedding file.
    pub cnn_count: usize,
    pub architecture: ArchitectureConfig,
    /// Fine-tune the embedding table of convolutional members.
    pub train_embeddings: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            dnn_count: 3,
            cnn_count: 0,
            architecture: ArchitectureConfig::default(),
            train_embeddings: false,
            epochs: 20,
            batch_size: 32,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn size(&self) -> usize {
        self.dnn_count + self.cnn_count
    }

    pub fn validate(&self) -> Result<()> {
        if self.size() == 0 {
            return Err(Error::Invalid("ensemble needs at least one model".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Invalid(
                "epochs and batch_size must be positive".into(),
            ));
        }
        self.architecture.validate()?;
        self.adam.validate()
    }

    /// Family of model `index`: fully connected members come first.
    pub fn family_of(&self, index: usize) -> Family {
        if index < self.dnn_count {
            Family::Dnn
        } else {
            Family::Cnn
        }
    }

    /// `master_seed XOR index`.
    pub fn model_seed(&self, index: usize) -> u64 {
        self.seed ^ index as u64
    }

    /// Draws every member's architecture from its own seeded stream.
    pub fn sample_specs(&self) -> Vec<ModelSpec> {
        (0..self.size())
            .map(|i| {
                let seed = self.model_seed(i);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                sample_spec(&mut rng, self.family_of(i), &self.architecture, seed)
            })
            .collect()
    }
}

/// A sampled member architecture. `layers` is the stack after the input
/// (after the embedding lookup for convolutional members), head included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub seed: u64,
    pub dropout: f64,
    pub layers: Vec<LayerSpec>,
}

fn draw(rng: &mut impl Rng, [lo, hi]: Bounds) -> usize {
    rng.gen_range(lo..=hi)
}

/// Draws layer counts and sizes uniformly from the inclusive ranges.
pub fn sample_spec(
    rng: &mut impl Rng,
    family: Family,
    arch: &ArchitectureConfig,
    seed: u64,
) -> ModelSpec {
    let dropout = *arch.dropout.choose(rng).expect("validated nonempty");
    let act = arch.hidden_activation.layer();
    let mut layers = Vec::new();
    let push_dropout = |layers: &mut Vec<LayerSpec>| {
        if dropout > 0.0 {
            layers.push(LayerSpec::Dropout { rate: dropout });
        }
    };
    match family {
        Family::Dnn => {
            for _ in 0..draw(rng, arch.dnn.hidden_layers) {
                layers.push(LayerSpec::Dense {
                    units: draw(rng, arch.dnn.units),
                });
                layers.push(act.clone());
                push_dropout(&mut layers);
            }
        }
        Family::Cnn => {
            for _ in 0..draw(rng, arch.cnn.conv_layers) {
                layers.push(LayerSpec::Conv1d {
                    filters: draw(rng, arch.cnn.filters),
                    kernel: draw(rng, arch.cnn.kernel),
                });
                layers.push(act.clone());
                layers.push(LayerSpec::Maxpool1d {
                    width: arch.cnn.pool_width,
                });
            }
            layers.push(LayerSpec::Flatten);
            layers.push(LayerSpec::Dense {
                units: draw(rng, arch.cnn.dense_units),
            });
            layers.push(act.clone());
            push_dropout(&mut layers);
        }
    }
    match arch.head {
        Head::Sigmoid => layers.extend([LayerSpec::Dense { units: 1 }, LayerSpec::Sigmoid]),
        Head::Softmax => layers.extend([LayerSpec::Dense { units: 2 }, LayerSpec::Softmax]),
    }
    ModelSpec {
        family,
        seed,
        dropout,
        layers,
    }
}

/// Embedding rows for convolutional members: row 0 is padding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingInit {
    pub rows: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

/// Per-document inputs for each family, aligned by document.
#[derive(Debug, Clone, Default)]
pub struct EnsembleInputs {
    /// Dense TF-IDF vectors, shape `[V]`.
    pub tfidf: Option<Vec<Tensor>>,
    /// Index sequences as float tensors, shape `[max_len]`.
    pub sequences: Option<Vec<Tensor>>,
}

impl EnsembleInputs {
    fn for_family(&self, family: Family) -> Result<&[Tensor]> {
        let inputs = match family {
            Family::Dnn => self.tfidf.as_deref(),
            Family::Cnn => self.sequences.as_deref(),
        };
        inputs.ok_or_else(|| Error::Invalid(format!("no {family} feature space in the inputs")))
    }

    pub fn len(&self) -> usize {
        self.tfidf
            .as_ref()
            .or(self.sequences.as_ref())
            .map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub index: usize,
    pub spec: ModelSpec,
    pub network: Network,
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
}

/// Sigmoid head: 1 iff `p >= 0.5`. Softmax head: argmax, ties to class 0.
pub fn predict_model(network: &Network, input: &Tensor) -> Result<u8> {
    let out = network.output(input)?;
    Ok(match network.head() {
        Head::Sigmoid => (out[0] >= 0.5) as u8,
        Head::Softmax => (out[1] > out[0]) as u8,
    })
}

/// `⌊1/2 + (Σy − 1/2)/n⌋` in integer arithmetic: `⌊(n + 2Σy − 1) / 2n⌋`.
/// Exact ties go to class 0.
pub fn majority_vote(votes: &[u8]) -> Result<u8> {
    if votes.is_empty() {
        return Err(Error::Invalid("majority vote over zero models".into()));
    }
    if votes.iter().any(|&v| v > 1) {
        return Err(Error::Invalid("votes must be 0 or 1".into()));
    }
    let n = votes.len() as u64;
    let sum: u64 = votes.iter().map(|&v| v as u64).sum();
    Ok(((n + 2 * sum - 1) / (2 * n)) as u8)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub votes: Vec<u8>,
    #[serde(rename = "final")]
    pub final_label: u8,
}

impl EnsemblePrediction {
    pub fn from_votes(votes: Vec<u8>) -> Result<Self> {
        let final_label = majority_vote(&votes)?;
        Ok(EnsemblePrediction { votes, final_label })
    }

    pub fn is_consistent(&self) -> bool {
        majority_vote(&self.votes).is_ok_and(|v| v == self.final_label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedEnsemble {
    pub config: EnsembleConfig,
    pub models: Vec<TrainedModel>,
}

fn mix(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Builds the member network for a spec on a given input shape.
pub fn build_network(
    spec: &ModelSpec,
    input_len: usize,
    embedding: Option<&EmbeddingInit>,
    train_embeddings: bool,
) -> Result<Network> {
    let mut layers = Vec::with_capacity(spec.layers.len() + 1);
    if spec.family == Family::Cnn {
        let emb = embedding.ok_or_else(|| {
            Error::Invalid("convolutional members need an embedding table".into())
        })?;
        layers.push(LayerSpec::Embedding {
            vocab: emb.rows,
            dim: emb.dim,
            trainable: train_embeddings,
        });
    }
    layers.extend(spec.layers.iter().cloned());
    let mut net = Network::new(vec![input_len], layers, mix(spec.seed, 1))?;
    if let Some(emb) = embedding.filter(|_| spec.family == Family::Cnn) {
        net.set_embedding_table(&emb.values)?;
    }
    Ok(net)
}

fn train_member(
    index: usize,
    spec: ModelSpec,
    inputs: &[Tensor],
    labels: &[u8],
    embedding: Option<&EmbeddingInit>,
    config: &EnsembleConfig,
) -> Result<TrainedModel> {
    let diverged = |message: String| Error::Diverged {
        index,
        seed: spec.seed,
        message,
    };
    let input_len = inputs.first().map(|t| t.len()).unwrap_or(0);
    let mut net = build_network(&spec, input_len, embedding, config.train_embeddings)?;
    let mut adam = Adam::new(config.adam)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.seed, 2));
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            net.zero_grad();
            for &i in batch {
                let trace = net
                    .forward(&inputs[i], Some(&mut rng))
                    .map_err(|e| match e {
                        Error::NonFinite(m) => diverged(m),
                        other => other,
                    })?;
                total += net.backward(&trace, labels[i])?;
            }
            let scale = 1.0 / batch.len() as f64;
            let mut params = net.trainable_params_mut();
            params.iter_mut().for_each(|t| t.scale_grad(scale));
            adam.step(&mut params)
                .map_err(|e| diverged(e.to_string()))?;
        }
        let mean = total / inputs.len() as f64;
        if !mean.is_finite() {
            return Err(diverged(format!("loss became {mean} at epoch {epoch}")));
        }
        log::info!(
            "model {index} ({}) epoch {} loss {mean:.6}",
            spec.family,
            epoch + 1
        );
        loss_curve.push(mean);
    }
    net.zero_grad();
    Ok(TrainedModel {
        index,
        spec,
        network: net,
        loss_curve,
    })
}

/// Trains every member, in parallel on up to `jobs` threads (all cores when
/// `None`). Results do not depend on `jobs`.
pub fn train_ensemble(
    inputs: &EnsembleInputs,
    labels: &[u8],
    embedding: Option<&EmbeddingInit>,
    config: &EnsembleConfig,
    jobs: Option<usize>,
) -> Result<TrainedEnsemble> {
    config.validate()?;
    if labels.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Invalid(format!("label {bad} is not 0 or 1")));
    }
    if config.size().is_multiple_of(2) {
        log::warn!(
            "ensemble of {} models: exact vote ties resolve to class 0",
            config.size()
        );
    }
    let specs = config.sample_specs();
    let mut work = Vec::with_capacity(specs.len());
    for (index, spec) in specs.into_iter().enumerate() {
        let member_inputs = inputs.for_family(spec.family)?;
        if member_inputs.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} {} inputs for {} labels",
                member_inputs.len(),
                spec.family,
                labels.len()
            )));
        }
        work.push((index, spec, member_inputs));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let models = pool.install(|| {
        work.into_par_iter()
            .map(|(index, spec, member_inputs)| {
                train_member(index, spec, member_inputs, labels, embedding, config)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(TrainedEnsemble {
        config: config.clone(),
        models,
    })
}

impl TrainedEnsemble {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// `votes[doc][model]`.
    pub fn vote_matrix(&self, inputs: &EnsembleInputs) -> Result<Vec<Vec<u8>>> {
        let n_docs = inputs.len();
        let mut votes = vec![Vec::with_capacity(self.models.len()); n_docs];
        for model in &self.models {
            let member_inputs = inputs.for_family(model.spec.family)?;
            let column: Vec<u8> = member_inputs
                .par_iter()
                .map(|x| predict_model(&model.network, x))
                .collect::<Result<_>>()?;
            for (row, v) in votes.iter_mut().zip(column) {
                row.push(v);
            }
        }
        Ok(votes)
    }

    pub fn predict(&self, inputs: &EnsembleInputs) -> Result<Vec<EnsemblePrediction>> {
        self.vote_matrix(inputs)?
            .into_iter()
            .map(EnsemblePrediction::from_votes)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vote_examples() {
        assert_eq!(majority_vote(&[1, 1, 0]).unwrap(), 1);
        for n in 1..10 {
            assert_eq!(majority_vote(&vec![0; n]).unwrap(), 0);
        }
        assert_eq!(majority_vote(&[1, 1, 0, 0]).unwrap(), 0);
        assert_eq!(majority_vote(&[1]).unwrap(), 1);
        assert!(majority_vote(&[]).is_err());
        assert!(majority_vote(&[2]).is_err());
    }

    #[test]
    fn degenerate_ranges_give_unique_spec() {
        let arch = ArchitectureConfig {
            dnn: DnnRanges {
                hidden_layers: [2, 2],
                units: [16, 16],
            },
            dropout: vec![0.0],
            ..ArchitectureConfig::default()
        };
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        let sa = sample_spec(&mut a, Family::Dnn, &arch, 7);
        let sb = sample_spec(&mut b, Family::Dnn, &arch, 7);
        assert_eq!(sa, sb);
        assert_eq!(
            sa.layers,
            [
                LayerSpec::Dense { units: 16 },
                LayerSpec::Relu,
                LayerSpec::Dense { units: 16 },
                LayerSpec::Relu,
                LayerSpec::Dense { units: 1 },
                LayerSpec::Sigmoid
            ]
        );
    }

    #[test]
    fn sampled_dnn_specs_respect_ranges() {
        let arch = ArchitectureConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let spec = sample_spec(&mut rng, Family::Dnn, &arch, 0);
            let dense: Vec<usize> = spec
                .layers
                .iter()
                .filter_map(|l| match l {
                    LayerSpec::Dense { units } => Some(*units),
                    _ => None,
                })
                .collect();
            let hidden = &dense[..dense.len() - 1];
            assert!((1..=3).contains(&hidden.len()));
            assert!(hidden.iter().all(|u| (64..=512).contains(u)));
            assert!(arch.dropout.contains(&spec.dropout));
        }
    }

    #[test]
    fn sampled_cnn_specs_respect_ranges() {
        let arch = ArchitectureConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let spec = sample_spec(&mut rng, Family::Cnn, &arch, 0);
            let convs: Vec<(usize, usize)> = spec
                .layers
                .iter()
                .filter_map(|l| match l {
                    LayerSpec::Conv1d { filters, kernel } => Some((*filters, *kernel)),
                    _ => None,
                })
                .collect();
            assert!((1..=2).contains(&convs.len()));
            for (f, k) in convs {
                assert!((32..=128).contains(&f) && (3..=7).contains(&k));
            }
            assert!(spec.layers.contains(&LayerSpec::Flatten));
        }
    }

    #[test]
    fn same_rng_state_same_spec() {
        let arch = ArchitectureConfig::default();
        let a = sample_spec(&mut ChaCha8Rng::seed_from_u64(3), Family::Cnn, &arch, 3);
        let b = sample_spec(&mut ChaCha8Rng::seed_from_u64(3), Family::Cnn, &arch, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn model_seeds_are_master_xor_index() {
        let config = EnsembleConfig {
            seed: 0b1010,
            dnn_count: 2,
            cnn_count: 2,
            ..EnsembleConfig::default()
        };
        let specs = config.sample_specs();
        let seeds: Vec<u64> = specs.iter().map(|s| s.seed).collect();
        assert_eq!(seeds, [0b1010, 0b1011, 0b1000, 0b1001]);
        let families: Vec<Family> = specs.iter().map(|s| s.family).collect();
        assert_eq!(
            families,
            [Family::Dnn, Family::Dnn, Family::Cnn, Family::Cnn]
        );
    }

    #[test]
    fn softmax_head_spec_ends_in_two_units() {
        let arch = ArchitectureConfig {
            head: Head::Softmax,
            ..ArchitectureConfig::default()
        };
        let spec = sample_spec(&mut ChaCha8Rng::seed_from_u64(0), Family::Dnn, &arch, 0);
        assert_eq!(
            spec.layers[spec.layers.len() - 2..],
            [LayerSpec::Dense { units: 2 }, LayerSpec::Softmax]
        );
    }

    #[test]
    fn config_validation() {
        assert!(EnsembleConfig {
            dnn_count: 0,
            cnn_count: 0,
            ..EnsembleConfig::default()
        }
        .validate()
        .is_err());
        let mut bad = EnsembleConfig::default();
        bad.architecture.dnn.units = [10, 5];
        assert!(bad.validate().is_err());
        let mut bad = EnsembleConfig::default();
        bad.architecture.dropout = vec![1.0];
        assert!(bad.validate().is_err());
        assert!(EnsembleConfig {
            epochs: 0,
            ..EnsembleConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn softmax_prediction_is_argmax() {
        let mut net = Network::new(
            vec![1],
            vec![LayerSpec::Dense { units: 2 }, LayerSpec::Softmax],
            0,
        )
        .unwrap();
        // bias (b0, b1) with zero weights gives softmax of the bias
        {
            let mut params = net.params_mut();
            params.next().unwrap().values_mut().fill(0.0);
            params
                .next()
                .unwrap()
                .values_mut()
                .copy_from_slice(&[0.3f64.ln(), 0.7f64.ln()]);
        }
        let out = net.output(&Tensor::vector(vec![1.0])).unwrap();
        assert!((out[1] - 0.7).abs() < 1e-12);
        assert_eq!(predict_model(&net, &Tensor::vector(vec![1.0])).unwrap(), 1);
    }

    #[test]
    fn half_probability_votes_one() {
        let mut net = Network::new(
            vec![3],
            vec![LayerSpec::Dense { units: 1 }, LayerSpec::Sigmoid],
            0,
        )
        .unwrap();
        net.params_mut().for_each(|t| t.values_mut().fill(0.0));
        for x in [[0.0, 0.0, 0.0], [5.0, -2.0, 1.0]] {
            assert_eq!(predict_model(&net, &Tensor::vector(x.to_vec())).unwrap(), 1);
        }
    }

    fn xor_data() -> (EnsembleInputs, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..200 {
            let a = rng.gen_bool(0.5) as u8;
            let b = rng.gen_bool(0.5) as u8;
            let jitter = |v: u8, rng: &mut ChaCha8Rng| v as f64 + rng.gen_range(-0.1..0.1);
            xs.push(Tensor::vector(vec![
                jitter(a, &mut rng),
                jitter(b, &mut rng),
            ]));
            ys.push(a ^ b);
        }
        (
            EnsembleInputs {
                tfidf: Some(xs),
                sequences: None,
            },
            ys,
        )
    }

    fn xor_config(seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            dnn_count: 3,
            cnn_count: 0,
            architecture: ArchitectureConfig {
                dnn: DnnRanges {
                    hidden_layers: [1, 2],
                    units: [8, 16],
                },
                dropout: vec![0.0],
                ..ArchitectureConfig::default()
            },
            epochs: 200,
            batch_size: 16,
            seed,
            adam: AdamConfig {
                learning_rate: 0.01,
                ..AdamConfig::default()
            },
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn learns_xor() {
        let (inputs, labels) = xor_data();
        let trained = train_ensemble(&inputs, &labels, None, &xor_config(1), Some(2)).unwrap();
        let preds = trained.predict(&inputs).unwrap();
        let correct = preds
            .iter()
            .zip(&labels)
            .filter(|(p, &y)| p.final_label == y)
            .count();
        assert!(
            correct as f64 / labels.len() as f64 >= 0.95,
            "{correct}/200"
        );
        assert!(preds.iter().all(EnsemblePrediction::is_consistent));
        for m in &trained.models {
            assert_eq!(m.loss_curve.len(), 200);
            assert!(m.loss_curve.last() < m.loss_curve.first());
        }
    }

    #[test]
    fn training_is_deterministic_across_thread_counts() {
        let (inputs, labels) = xor_data();
        let config = EnsembleConfig {
            epochs: 5,
            ..xor_config(9)
        };
        let a = train_ensemble(&inputs, &labels, None, &config, Some(1)).unwrap();
        let b = train_ensemble(&inputs, &labels, None, &config, Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.vote_matrix(&inputs).unwrap(),
            b.vote_matrix(&inputs).unwrap()
        );
    }

    #[test]
    fn single_model_ensemble_equals_its_model() {
        let (inputs, labels) = xor_data();
        let config = EnsembleConfig {
            dnn_count: 1,
            epochs: 3,
            ..xor_config(2)
        };
        let trained = train_ensemble(&inputs, &labels, None, &config, None).unwrap();
        let preds = trained.predict(&inputs).unwrap();
        for (p, x) in preds.iter().zip(inputs.tfidf.as_ref().unwrap()) {
            assert_eq!(
                p.final_label,
                predict_model(&trained.models[0].network, x).unwrap()
            );
        }
    }

    #[test]
    fn missing_feature_space_is_an_error() {
        let (inputs, labels) = xor_data();
        let config = EnsembleConfig {
            dnn_count: 0,
            cnn_count: 1,
            ..xor_config(2)
        };
        assert!(train_ensemble(&inputs, &labels, None, &config, None).is_err());
    }

    #[test]
    fn divergence_reports_model_index_and_seed() {
        let (inputs, labels) = xor_data();
        let mut config = EnsembleConfig {
            dnn_count: 1,
            epochs: 3,
            ..xor_config(77)
        };
        config.adam.learning_rate = 1e200;
        let err = train_ensemble(&inputs, &labels, None, &config, None).unwrap_err();
        match err {
            Error::Diverged { index, seed, .. } => assert_eq!((index, seed), (0, 77)),
            other => panic!("unexpected {other}"),
        }
    }
}
