//! Layer kinds and their forward/backward kernels.
//!
//! Shapes: vectors are `[n]`, sequences are `[len, channels]` (row-major,
//! one row per position). Convolution is valid-padded with stride 1; max
//! pooling uses stride equal to its width and drops a ragged tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        units: usize,
    },
    /// Index lookup; row 0 is the padding row. `vocab` counts all rows.
    Embedding {
        vocab: usize,
        dim: usize,
        #[serde(default)]
        trainable: bool,
    },
    Conv1d {
        filters: usize,
        kernel: usize,
    },
    Maxpool1d {
        width: usize,
    },
    Flatten,
    Dropout {
        rate: f64,
    },
    Relu,
    Sigmoid,
    Softmax,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Embedding { .. } => "embedding",
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Maxpool1d { .. } => "maxpool1d",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Relu => "relu",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::Softmax => "softmax",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |what: &str, v: usize| {
            if v == 0 {
                Err(Error::Invalid(format!(
                    "{} {what} must be positive",
                    self.name()
                )))
            } else {
                Ok(())
            }
        };
        match *self {
            LayerSpec::Dense { units } => positive("units", units),
            LayerSpec::Embedding { vocab, dim, .. } => {
                positive("vocab", vocab)?;
                positive("dim", dim)
            }
            LayerSpec::Conv1d { filters, kernel } => {
                positive("filters", filters)?;
                positive("kernel", kernel)
            }
            LayerSpec::Maxpool1d { width } => positive("width", width),
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => Err(Error::Invalid(
                format!("dropout rate {rate} outside [0, 1)"),
            )),
            _ => Ok(()),
        }
    }

    /// Output shape for a given input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mismatch = |want: &str| {
            Err(Error::Shape(format!(
                "{} expects {want}, got input shape {input:?}",
                self.name()
            )))
        };
        match *self {
            LayerSpec::Dense { units } => match input {
                [_] => Ok(vec![units]),
                _ => mismatch("a rank-1 input (insert flatten)"),
            },
            LayerSpec::Embedding { dim, .. } => match input {
                [len] => Ok(vec![*len, dim]),
                _ => mismatch("a rank-1 index sequence"),
            },
            LayerSpec::Conv1d { filters, kernel } => match input {
                [len, _] if *len >= kernel => Ok(vec![len - kernel + 1, filters]),
                _ => mismatch(&format!("[len >= {kernel}, channels]")),
            },
            LayerSpec::Maxpool1d { width } => match input {
                [len] if *len >= width => Ok(vec![len / width]),
                [len, c] if *len >= width => Ok(vec![len / width, *c]),
                _ => mismatch(&format!("a sequence of length >= {width}")),
            },
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Softmax => match input {
                [_] => Ok(input.to_vec()),
                _ => mismatch("a rank-1 input"),
            },
            LayerSpec::Dropout { .. } | LayerSpec::Relu | LayerSpec::Sigmoid => Ok(input.to_vec()),
        }
    }

    /// Parameter tensor shapes, weights first.
    pub fn param_shapes(&self, input: &[usize]) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense { units } => vec![vec![units, input[0]], vec![units]],
            LayerSpec::Embedding { vocab, dim, .. } => vec![vec![vocab, dim]],
            LayerSpec::Conv1d { filters, kernel } => {
                vec![vec![filters, kernel, input[1]], vec![filters]]
            }
            _ => Vec::new(),
        }
    }

    /// `(fan_in, fan_out)` for the uniform Glorot bound.
    pub(crate) fn fans(&self, input: &[usize]) -> (usize, usize) {
        match *self {
            LayerSpec::Dense { units } => (input[0], units),
            LayerSpec::Embedding { vocab, dim, .. } => (vocab, dim),
            LayerSpec::Conv1d { filters, kernel } => (kernel * input[1], kernel * filters),
            _ => (0, 0),
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Nonzero positions when the vector is sparse enough to be worth it.
fn sparse_support(x: &[f64]) -> Option<Vec<usize>> {
    let nz: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
    (nz.len() * 2 < x.len()).then_some(nz)
}

pub(crate) fn dense_forward(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    match sparse_support(x) {
        Some(nz) => {
            for (i, o) in out.iter_mut().enumerate() {
                let row = &w[i * n..(i + 1) * n];
                *o = b[i] + nz.iter().map(|&j| row[j] * x[j]).sum::<f64>();
            }
        }
        None => {
            for (i, o) in out.iter_mut().enumerate() {
                let row = &w[i * n..(i + 1) * n];
                *o = b[i] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
            }
        }
    }
}

/// Accumulates `dW += δ xᵀ`, `db += δ` and returns `Wᵀ δ`.
pub(crate) fn dense_backward(
    w: &[f64],
    x: &[f64],
    delta: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let n = x.len();
    let mut dx = vec![0.0; n];
    let nz = sparse_support(x);
    for (i, &d) in delta.iter().enumerate() {
        db[i] += d;
        if d == 0.0 {
            continue;
        }
        let row = &w[i * n..(i + 1) * n];
        let drow = &mut dw[i * n..(i + 1) * n];
        match &nz {
            Some(nz) => nz.iter().for_each(|&j| drow[j] += d * x[j]),
            None => drow.iter_mut().zip(x).for_each(|(g, xj)| *g += d * xj),
        }
        dx.iter_mut().zip(row).for_each(|(g, wj)| *g += d * wj);
    }
    dx
}

pub(crate) fn embedding_forward(
    table: &[f64],
    vocab: usize,
    dim: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(x.len() * dim);
    for &v in x {
        let idx = embedding_row(v, vocab)?;
        out.extend_from_slice(&table[idx * dim..(idx + 1) * dim]);
    }
    Ok(out)
}

pub(crate) fn embedding_row(v: f64, vocab: usize) -> Result<usize> {
    if v.fract() != 0.0 || v < 0.0 || v >= vocab as f64 {
        return Err(Error::Shape(format!(
            "embedding index {v} outside 0..{vocab}"
        )));
    }
    Ok(v as usize)
}

pub(crate) fn embedding_backward(x: &[f64], dim: usize, delta: &[f64], dtable: &mut [f64]) {
    for (pos, &v) in x.iter().enumerate() {
        let idx = v as usize;
        let src = &delta[pos * dim..(pos + 1) * dim];
        dtable[idx * dim..(idx + 1) * dim]
            .iter_mut()
            .zip(src)
            .for_each(|(g, d)| *g += d);
    }
}

/// `out[t, f] = b[f] + Σ_k Σ_c W[f, k, c] · x[t + k, c]`
pub(crate) fn conv1d_forward(
    w: &[f64],
    b: &[f64],
    x: &[f64],
    len: usize,
    channels: usize,
    filters: usize,
    kernel: usize,
) -> Vec<f64> {
    let out_len = len - kernel + 1;
    let span = kernel * channels;
    let mut out = vec![0.0; out_len * filters];
    for t in 0..out_len {
        // the window is contiguous in row-major [len, channels]
        let window = &x[t * channels..t * channels + span];
        for f in 0..filters {
            let wf = &w[f * span..(f + 1) * span];
            out[t * filters + f] = b[f] + wf.iter().zip(window).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv1d_backward(
    w: &[f64],
    x: &[f64],
    channels: usize,
    filters: usize,
    kernel: usize,
    delta: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let span = kernel * channels;
    let out_len = delta.len() / filters;
    let mut dx = vec![0.0; x.len()];
    for t in 0..out_len {
        let base = t * channels;
        for f in 0..filters {
            let d = delta[t * filters + f];
            if d == 0.0 {
                continue;
            }
            db[f] += d;
            let wf = &w[f * span..(f + 1) * span];
            let dwf = &mut dw[f * span..(f + 1) * span];
            let window = &x[base..base + span];
            dwf.iter_mut().zip(window).for_each(|(g, xv)| *g += d * xv);
            dx[base..base + span]
                .iter_mut()
                .zip(wf)
                .for_each(|(g, wv)| *g += d * wv);
        }
    }
    dx
}

/// Returns pooled values and, for each output, the input position of the
/// first maximum in its window.
pub(crate) fn maxpool_forward(
    x: &[f64],
    len: usize,
    channels: usize,
    width: usize,
) -> (Vec<f64>, Vec<usize>) {
    let out_len = len / width;
    let mut out = Vec::with_capacity(out_len * channels);
    let mut argmax = Vec::with_capacity(out_len * channels);
    for p in 0..out_len {
        for c in 0..channels {
            let mut best = (p * width) * channels + c;
            for k in 1..width {
                let pos = (p * width + k) * channels + c;
                if x[pos] > x[best] {
                    best = pos;
                }
            }
            out.push(x[best]);
            argmax.push(best);
        }
    }
    (out, argmax)
}

pub(crate) fn maxpool_backward(input_len: usize, argmax: &[usize], delta: &[f64]) -> Vec<f64> {
    let mut dx = vec![0.0; input_len];
    for (&pos, &d) in argmax.iter().zip(delta) {
        dx[pos] += d;
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxpool_width_two() {
        let (out, argmax) = maxpool_forward(&[1.0, 3.0, 2.0, 0.0], 4, 1, 2);
        assert_eq!(out, [3.0, 2.0]);
        assert_eq!(argmax, [1, 2]);
    }

    #[test]
    fn maxpool_ties_route_to_first_max() {
        let (_, argmax) = maxpool_forward(&[5.0, 5.0], 2, 1, 2);
        assert_eq!(argmax, [0]);
        assert_eq!(maxpool_backward(2, &argmax, &[1.0]), [1.0, 0.0]);
    }

    #[test]
    fn maxpool_drops_ragged_tail() {
        let (out, _) = maxpool_forward(&[1.0, 2.0, 3.0, 4.0, 9.0], 5, 1, 2);
        assert_eq!(out, [2.0, 4.0]);
    }

    #[test]
    fn conv1d_all_ones_kernel_is_window_sum() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let out = conv1d_forward(&[1.0; 3], &[0.0], &x, 5, 1, 1, 3);
        let oracle: Vec<f64> = x.windows(3).map(|w| w.iter().sum()).collect();
        assert_eq!(out, oracle);
    }

    #[test]
    fn conv1d_multichannel_by_hand() {
        // x: 3 positions x 2 channels, one filter of width 2
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let w = [1.0, 0.0, 0.0, 1.0]; // picks x[t,0] + x[t+1,1]
        let out = conv1d_forward(&w, &[0.5], &x, 3, 2, 1, 2);
        assert_eq!(out, [1.0 + 4.0 + 0.5, 3.0 + 6.0 + 0.5]);
    }

    #[test]
    fn dense_sparse_and_dense_paths_agree() {
        let w: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
        let b = [0.1, 0.2, 0.3];
        let sparse_x = [0.0, 2.0, 0.0, 0.0];
        let mut out = [0.0; 3];
        dense_forward(&w, &b, &sparse_x, &mut out);
        for i in 0..3 {
            let full: f64 = b[i] + (0..4).map(|j| w[i * 4 + j] * sparse_x[j]).sum::<f64>();
            assert!((out[i] - full).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_is_a_distribution() {
        let p = softmax(&[1000.0, -1000.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0).is_finite());
        assert!(sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn validate_rejects_bad_sizes() {
        assert!(LayerSpec::Dense { units: 0 }.validate().is_err());
        assert!(LayerSpec::Dropout { rate: 1.0 }.validate().is_err());
        assert!(LayerSpec::Dropout { rate: 0.0 }.validate().is_ok());
    }

    #[test]
    fn layer_spec_json_is_tagged() {
        let json = serde_json::to_string(&LayerSpec::Conv1d {
            filters: 4,
            kernel: 3,
        })
        .unwrap();
        assert_eq!(json, r#"{"kind":"conv1d","filters":4,"kernel":3}"#);
    }
}
