use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::{self, LayerSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Probabilities are clamped to `[CLAMP, 1 - CLAMP]` before taking logs.
pub const CLAMP: f64 = 1e-7;

/// Binary cross-entropy of a clamped probability.
pub fn bce_loss(pred: f64, label: u8) -> f64 {
    let p = pred.clamp(CLAMP, 1.0 - CLAMP);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Output head: one sigmoid unit, or a two-way softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    #[default]
    Sigmoid,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    spec: LayerSpec,
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    params: Vec<Tensor>,
}

/// Everything backprop needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[i]` is the input of layer `i`; the last entry is the output.
    activations: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
    argmax: Vec<Option<Vec<usize>>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has an output")
    }
}

/// A feed-forward stack ending in a classification head.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    seed: u64,
    head: Head,
}

impl Network {
    /// Builds the stack and draws Glorot-uniform weights (biases zero) from `seed`.
    pub fn new(input_shape: Vec<usize>, specs: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::with_zero_params(input_shape, specs, seed)?;
        for layer in &mut net.layers {
            let (fan_in, fan_out) = layer.spec.fans(&layer.input_shape);
            if let Some(weights) = layer.params.first_mut() {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for w in weights.values_mut() {
                    *w = rng.gen_range(-bound..=bound);
                }
            }
        }
        Ok(net)
    }

    pub(crate) fn with_zero_params(
        input_shape: Vec<usize>,
        specs: Vec<LayerSpec>,
        seed: u64,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Invalid("network has no layers".into()));
        }
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::Shape(format!("bad input shape {input_shape:?}")));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut shape = input_shape.clone();
        for (i, spec) in specs.into_iter().enumerate() {
            spec.validate()?;
            if matches!(spec, LayerSpec::Embedding { .. }) && i != 0 {
                return Err(Error::Invalid("embedding must be the first layer".into()));
            }
            let output_shape = spec
                .output_shape(&shape)
                .map_err(|e| Error::Shape(format!("layer {i}: {e}")))?;
            if output_shape.contains(&0) {
                return Err(Error::Shape(format!(
                    "layer {i} ({}) produces an empty output",
                    spec.name()
                )));
            }
            let params = spec
                .param_shapes(&shape)
                .into_iter()
                .map(Tensor::zeros)
                .collect();
            layers.push(Layer {
                spec,
                input_shape: shape,
                output_shape: output_shape.clone(),
                params,
            });
            shape = output_shape;
        }
        let last = layers.last().expect("nonempty");
        let head = match (&last.spec, last.input_shape.as_slice()) {
            (LayerSpec::Sigmoid, [1]) => Head::Sigmoid,
            (LayerSpec::Softmax, [2]) => Head::Softmax,
            _ => {
                return Err(Error::Invalid(
                    "network must end in sigmoid over 1 unit or softmax over 2 units".into(),
                ))
            }
        };
        Ok(Network {
            input_shape,
            layers,
            seed,
            head,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn specs(&self) -> impl Iterator<Item = &LayerSpec> {
        self.layers.iter().map(|l| &l.spec)
    }

    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| l.params.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params.iter_mut())
    }

    /// Parameters the optimizer should update (frozen embeddings excluded).
    pub fn trainable_params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .filter(|l| {
                !matches!(
                    l.spec,
                    LayerSpec::Embedding {
                        trainable: false,
                        ..
                    }
                )
            })
            .flat_map(|l| l.params.iter_mut())
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().map(Tensor::len).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().for_each(Tensor::zero_grad);
    }

    /// Overwrites the embedding table of the first layer.
    pub fn set_embedding_table(&mut self, rows: &[f64]) -> Result<()> {
        let layer = self
            .layers
            .first_mut()
            .filter(|l| matches!(l.spec, LayerSpec::Embedding { .. }))
            .ok_or_else(|| Error::Invalid("network has no embedding layer".into()))?;
        let table = &mut layer.params[0];
        if table.len() != rows.len() {
            return Err(Error::Shape(format!(
                "embedding table needs {} values, got {}",
                table.len(),
                rows.len()
            )));
        }
        table.values_mut().copy_from_slice(rows);
        Ok(())
    }

    /// Runs the stack. Passing an rng turns on training mode (dropout active).
    pub fn forward(
        &self,
        input: &Tensor,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<ForwardTrace> {
        if input.shape() != self.input_shape.as_slice() {
            return Err(Error::Shape(format!(
                "input shape {:?} does not match network input {:?}",
                input.shape(),
                self.input_shape
            )));
        }
        if !input.is_finite() {
            return Err(Error::NonFinite("network input".into()));
        }
        let n = self.layers.len();
        let mut activations = Vec::with_capacity(n + 1);
        let mut masks = vec![None; n];
        let mut argmax = vec![None; n];
        activations.push(input.values().to_vec());

        for (i, layer) in self.layers.iter().enumerate() {
            let x = &activations[i];
            let out = match layer.spec {
                LayerSpec::Dense { units } => {
                    let mut out = vec![0.0; units];
                    layer::dense_forward(
                        layer.params[0].values(),
                        layer.params[1].values(),
                        x,
                        &mut out,
                    );
                    out
                }
                LayerSpec::Embedding { vocab, dim, .. } => {
                    layer::embedding_forward(layer.params[0].values(), vocab, dim, x)?
                }
                LayerSpec::Conv1d { filters, kernel } => layer::conv1d_forward(
                    layer.params[0].values(),
                    layer.params[1].values(),
                    x,
                    layer.input_shape[0],
                    layer.input_shape[1],
                    filters,
                    kernel,
                ),
                LayerSpec::Maxpool1d { width } => {
                    let channels = layer.input_shape.get(1).copied().unwrap_or(1);
                    let (out, idx) =
                        layer::maxpool_forward(x, layer.input_shape[0], channels, width);
                    argmax[i] = Some(idx);
                    out
                }
                LayerSpec::Flatten => x.clone(),
                LayerSpec::Dropout { rate } => match rng.as_deref_mut() {
                    Some(rng) if rate > 0.0 => {
                        let keep = 1.0 / (1.0 - rate);
                        let mask: Vec<f64> = (0..x.len())
                            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
                            .collect();
                        let out = x.iter().zip(&mask).map(|(a, m)| a * m).collect();
                        masks[i] = Some(mask);
                        out
                    }
                    _ => x.clone(),
                },
                LayerSpec::Relu => x.iter().map(|&v| v.max(0.0)).collect(),
                LayerSpec::Sigmoid => x.iter().map(|&v| layer::sigmoid(v)).collect(),
                LayerSpec::Softmax => layer::softmax(x),
            };
            debug_assert_eq!(out.len(), layer.output_shape.iter().product::<usize>());
            activations.push(out);
        }
        if activations
            .last()
            .is_some_and(|o| o.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite("network output".into()));
        }
        Ok(ForwardTrace {
            activations,
            masks,
            argmax,
        })
    }

    /// Head output in evaluation mode.
    pub fn output(&self, input: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward(input, None)?.output().to_vec())
    }

    /// Probability of class 1 in evaluation mode.
    pub fn predict_proba(&self, input: &Tensor) -> Result<f64> {
        let out = self.output(input)?;
        Ok(match self.head {
            Head::Sigmoid => out[0],
            Head::Softmax => out[1],
        })
    }

    pub fn loss(&self, output: &[f64], label: u8) -> f64 {
        match self.head {
            Head::Sigmoid => bce_loss(output[0], label),
            Head::Softmax => -output[label as usize].clamp(CLAMP, 1.0 - CLAMP).ln(),
        }
    }

    /// Accumulates parameter gradients of the loss for `trace` and returns the loss.
    ///
    /// The head gradient is the fused `p - y` form, the exact derivative of the
    /// unclamped cross-entropy through the sigmoid or softmax.
    pub fn backward(&mut self, trace: &ForwardTrace, label: u8) -> Result<f64> {
        if label > 1 {
            return Err(Error::Invalid(format!("label {label} is not 0 or 1")));
        }
        if trace.activations.len() != self.layers.len() + 1 {
            return Err(Error::Shape("trace does not belong to this network".into()));
        }
        let out = trace.output();
        let loss = self.loss(out, label);
        let mut delta: Vec<f64> = match self.head {
            Head::Sigmoid => vec![out[0] - label as f64],
            Head::Softmax => vec![out[0] - (label == 0) as u8 as f64, out[1] - label as f64],
        };

        for i in (0..self.layers.len() - 1).rev() {
            let x = &trace.activations[i];
            let y = &trace.activations[i + 1];
            let layer = &mut self.layers[i];
            delta = match layer.spec {
                LayerSpec::Dense { .. } => {
                    let (w, b) = layer.params.split_at_mut(1);
                    let (wv, dw) = w[0].values_and_grad_mut();
                    layer::dense_backward(wv, x, &delta, dw, b[0].grad_mut())
                }
                LayerSpec::Embedding { dim, .. } => {
                    layer::embedding_backward(x, dim, &delta, layer.params[0].grad_mut());
                    Vec::new()
                }
                LayerSpec::Conv1d { filters, kernel } => {
                    let (w, b) = layer.params.split_at_mut(1);
                    let (wv, dw) = w[0].values_and_grad_mut();
                    layer::conv1d_backward(
                        wv,
                        x,
                        layer.input_shape[1],
                        filters,
                        kernel,
                        &delta,
                        dw,
                        b[0].grad_mut(),
                    )
                }
                LayerSpec::Maxpool1d { .. } => {
                    let idx = trace.argmax[i].as_ref().expect("maxpool trace");
                    layer::maxpool_backward(x.len(), idx, &delta)
                }
                LayerSpec::Flatten => delta,
                LayerSpec::Dropout { .. } => match &trace.masks[i] {
                    Some(mask) => delta.iter().zip(mask).map(|(d, m)| d * m).collect(),
                    None => delta,
                },
                LayerSpec::Relu => delta
                    .iter()
                    .zip(x)
                    .map(|(d, &v)| if v > 0.0 { *d } else { 0.0 })
                    .collect(),
                LayerSpec::Sigmoid => delta
                    .iter()
                    .zip(y)
                    .map(|(d, s)| d * s * (1.0 - s))
                    .collect(),
                LayerSpec::Softmax => {
                    let dot: f64 = delta.iter().zip(y).map(|(d, s)| d * s).sum();
                    delta.iter().zip(y).map(|(d, s)| s * (d - dot)).collect()
                }
            };
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_sigmoid(w: &[f64], b: f64) -> Network {
        let mut net = Network::new(
            vec![w.len()],
            vec![LayerSpec::Dense { units: 1 }, LayerSpec::Sigmoid],
            0,
        )
        .unwrap();
        let mut params = net.params_mut();
        params.next().unwrap().values_mut().copy_from_slice(w);
        params.next().unwrap().values_mut()[0] = b;
        drop(params);
        net
    }

    #[test]
    fn zero_weights_give_one_half() {
        let net = dense_sigmoid(&[0.0, 0.0, 0.0], 0.0);
        let p = net
            .predict_proba(&Tensor::vector(vec![3.0, -1.0, 7.0]))
            .unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn single_unit_by_hand() {
        let net = dense_sigmoid(&[1.0, -1.0], 0.5);
        let p = net.predict_proba(&Tensor::vector(vec![2.0, 1.0])).unwrap();
        assert!((p - 0.817574).abs() < 1e-6);
        assert!((p - 1.0 / (1.0 + (-1.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn bce_examples() {
        assert!(bce_loss(1.0, 1) <= 1.2e-7);
        assert!((bce_loss(0.5, 0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce_loss(0.5, 1) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce_loss(0.9, 0) - std::f64::consts::LN_10).abs() < 1e-12);
        assert!(bce_loss(0.0, 1).is_finite());
    }

    #[test]
    fn sigmoid_head_bias_gradient_is_p_minus_y() {
        for label in [0u8, 1] {
            let mut net = dense_sigmoid(&[0.0, 0.0], 0.0);
            let trace = net.forward(&Tensor::vector(vec![1.0, 2.0]), None).unwrap();
            net.backward(&trace, label).unwrap();
            let bias_grad = net.params().nth(1).unwrap().grad()[0];
            assert_eq!(bias_grad, 0.5 - label as f64);
        }
    }

    #[test]
    fn zero_input_gives_zero_weight_gradient() {
        let mut net = Network::new(
            vec![3],
            vec![
                LayerSpec::Dense { units: 2 },
                LayerSpec::Dense { units: 1 },
                LayerSpec::Sigmoid,
            ],
            9,
        )
        .unwrap();
        let trace = net.forward(&Tensor::vector(vec![0.0; 3]), None).unwrap();
        net.backward(&trace, 1).unwrap();
        assert!(net
            .params()
            .next()
            .unwrap()
            .grad()
            .iter()
            .all(|&g| g == 0.0));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = dense_sigmoid(&[0.0, 0.0], 0.0);
        let err = net
            .forward(&Tensor::vector(vec![1.0; 3]), None)
            .unwrap_err();
        assert!(matches!(err, Error::Shape(_)), "{err}");
    }

    #[test]
    fn head_must_be_sigmoid_or_softmax() {
        assert!(Network::new(vec![2], vec![LayerSpec::Dense { units: 1 }], 0).is_err());
        assert!(Network::new(
            vec![2],
            vec![LayerSpec::Dense { units: 3 }, LayerSpec::Softmax],
            0
        )
        .is_err());
        let net = Network::new(
            vec![2],
            vec![LayerSpec::Dense { units: 2 }, LayerSpec::Softmax],
            0,
        )
        .unwrap();
        assert_eq!(net.head(), Head::Softmax);
    }

    #[test]
    fn dense_after_sequence_needs_flatten() {
        let specs = vec![
            LayerSpec::Embedding {
                vocab: 5,
                dim: 3,
                trainable: false,
            },
            LayerSpec::Dense { units: 1 },
            LayerSpec::Sigmoid,
        ];
        let err = Network::new(vec![4], specs, 0).unwrap_err();
        assert!(err.to_string().contains("flatten"), "{err}");
    }

    #[test]
    fn conv_longer_than_sequence_is_rejected() {
        let specs = vec![
            LayerSpec::Embedding {
                vocab: 5,
                dim: 3,
                trainable: false,
            },
            LayerSpec::Conv1d {
                filters: 2,
                kernel: 5,
            },
            LayerSpec::Flatten,
            LayerSpec::Dense { units: 1 },
            LayerSpec::Sigmoid,
        ];
        assert!(Network::new(vec![4], specs, 0).is_err());
    }

    #[test]
    fn embedding_rejects_out_of_range_index() {
        let specs = vec![
            LayerSpec::Embedding {
                vocab: 3,
                dim: 2,
                trainable: false,
            },
            LayerSpec::Flatten,
            LayerSpec::Dense { units: 1 },
            LayerSpec::Sigmoid,
        ];
        let net = Network::new(vec![2], specs, 0).unwrap();
        assert!(net.forward(&Tensor::vector(vec![1.0, 3.0]), None).is_err());
        assert!(net.forward(&Tensor::vector(vec![1.0, 0.5]), None).is_err());
        assert!(net.forward(&Tensor::vector(vec![1.0, 2.0]), None).is_ok());
    }

    #[test]
    fn frozen_embedding_is_not_trainable() {
        let specs = |trainable| {
            vec![
                LayerSpec::Embedding {
                    vocab: 3,
                    dim: 2,
                    trainable,
                },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 1 },
                LayerSpec::Sigmoid,
            ]
        };
        let mut frozen = Network::new(vec![2], specs(false), 0).unwrap();
        let mut tuned = Network::new(vec![2], specs(true), 0).unwrap();
        assert_eq!(frozen.trainable_params_mut().len(), 2);
        assert_eq!(tuned.trainable_params_mut().len(), 3);
    }

    #[test]
    fn dropout_only_in_training_mode() {
        let specs = vec![
            LayerSpec::Dense { units: 8 },
            LayerSpec::Dropout { rate: 0.5 },
            LayerSpec::Dense { units: 1 },
            LayerSpec::Sigmoid,
        ];
        let net = Network::new(vec![4], specs, 3).unwrap();
        let x = Tensor::vector(vec![1.0, -2.0, 0.5, 3.0]);
        let a = net.output(&x).unwrap();
        let b = net.output(&x).unwrap();
        assert_eq!(a, b);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut outs = Vec::new();
        for _ in 0..8 {
            outs.push(net.forward(&x, Some(&mut rng)).unwrap().output()[0]);
        }
        assert!(outs.iter().any(|&o| o != a[0]));
    }

    #[test]
    fn dropout_rate_zero_is_identity_even_when_training() {
        let with = Network::new(
            vec![3],
            vec![
                LayerSpec::Dense { units: 4 },
                LayerSpec::Dropout { rate: 0.0 },
                LayerSpec::Dense { units: 1 },
                LayerSpec::Sigmoid,
            ],
            5,
        )
        .unwrap();
        let x = Tensor::vector(vec![0.3, 0.1, -0.7]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(
            with.forward(&x, Some(&mut rng)).unwrap().output(),
            with.output(&x).unwrap()
        );
    }

    #[test]
    fn same_seed_same_weights() {
        let specs = || {
            vec![
                LayerSpec::Dense { units: 5 },
                LayerSpec::Relu,
                LayerSpec::Dense { units: 1 },
                LayerSpec::Sigmoid,
            ]
        };
        let a = Network::new(vec![3], specs(), 11).unwrap();
        let b = Network::new(vec![3], specs(), 11).unwrap();
        let c = Network::new(vec![3], specs(), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn glorot_bounds_hold() {
        let net = Network::new(
            vec![30],
            vec![
                LayerSpec::Dense { units: 20 },
                LayerSpec::Dense { units: 1 },
                LayerSpec::Sigmoid,
            ],
            1,
        )
        .unwrap();
        let bound = (6.0f64 / 50.0).sqrt();
        let w = net.params().next().unwrap();
        assert!(w.values().iter().all(|v| v.abs() <= bound));
        assert!(net
            .params()
            .nth(1)
            .unwrap()
            .values()
            .iter()
            .all(|&b| b == 0.0));
    }
}
