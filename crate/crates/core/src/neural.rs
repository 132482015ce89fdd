//! Minimal feed-forward network engine: forward pass, exact backpropagation,
//! plain SGD, and a lossless flat parameter layout used as the federation
//! exchange and checkpoint format.
//!
//! Hidden layers use rectified-linear activations. The output head is either
//! linear (action values) or softmax (action probabilities). All functions are
//! pure with respect to their inputs; nothing here holds global state.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Output head of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputHead {
    Linear,
    Softmax,
}

/// Shape of a fully-connected network: at least two layer sizes
/// (input, ..., output), every size at least one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub layer_sizes: Vec<usize>,
    pub head: OutputHead,
}

impl NetworkSpec {
    pub fn new(layer_sizes: Vec<usize>, head: OutputHead) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidParameter(
                "a network needs at least an input and an output layer".into(),
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidParameter(
                "all layer sizes must be at least 1".into(),
            ));
        }
        Ok(Self { layer_sizes, head })
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Total number of parameters: per layer, `fan_in * fan_out + fan_out`.
    pub fn param_len(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// Flattened network parameters plus the shape that interprets them.
///
/// Canonical ordering, which is also the checkpoint and federation wire
/// contract: layers in order, each layer's weight matrix row-major
/// (`fan_out` rows of `fan_in` columns), followed by that layer's biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub spec: NetworkSpec,
}

impl ParameterVector {
    pub fn zeros(spec: NetworkSpec) -> Self {
        let len = spec.param_len();
        Self {
            values: vec![0.0; len],
            spec,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Offsets of one layer's weights and biases inside the flat vector.
#[derive(Debug, Clone, Copy)]
struct LayerSlice {
    fan_in: usize,
    fan_out: usize,
    weights: usize,
    biases: usize,
}

fn layer_slices(spec: &NetworkSpec) -> Vec<LayerSlice> {
    let mut out = Vec::with_capacity(spec.layer_sizes.len() - 1);
    let mut offset = 0;
    for w in spec.layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        out.push(LayerSlice {
            fan_in,
            fan_out,
            weights: offset,
            biases: offset + fan_in * fan_out,
        });
        offset += fan_in * fan_out + fan_out;
    }
    out
}

/// Glorot-uniform initialization: weights uniform in
/// `±sqrt(6 / (fan_in + fan_out))`, biases zero.
pub fn init_params<R: Rng>(spec: &NetworkSpec, rng: &mut R) -> ParameterVector {
    let mut params = ParameterVector::zeros(spec.clone());
    for layer in layer_slices(spec) {
        let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
        for i in 0..layer.fan_in * layer.fan_out {
            params.values[layer.weights + i] = rng.gen_range(-limit..limit);
        }
        // Biases stay zero.
    }
    params
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Log-probabilities computed jointly: `z - max - ln(sum(exp(z - max)))`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - max - log_sum).collect()
}

fn check_input(params: &ParameterVector, input: &[f64]) -> Result<()> {
    if input.len() != params.spec.input_size() {
        return Err(Error::DimensionMismatch {
            expected: params.spec.input_size(),
            actual: input.len(),
        });
    }
    if params.values.len() != params.spec.param_len() {
        return Err(Error::DimensionMismatch {
            expected: params.spec.param_len(),
            actual: params.values.len(),
        });
    }
    Ok(())
}

fn affine(layer: &LayerSlice, values: &[f64], input: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for row in 0..layer.fan_out {
        let w = &values[layer.weights + row * layer.fan_in..layer.weights + (row + 1) * layer.fan_in];
        let mut acc = values[layer.biases + row];
        for (wi, xi) in w.iter().zip(input) {
            acc += wi * xi;
        }
        out.push(acc);
    }
}

/// Pre-head outputs (logits). For a linear head this equals [`forward`].
pub fn forward_logits(params: &ParameterVector, input: &[f64]) -> Result<Vec<f64>> {
    check_input(params, input)?;
    let layers = layer_slices(&params.spec);
    let mut current = input.to_vec();
    let mut next = Vec::new();
    for (k, layer) in layers.iter().enumerate() {
        affine(layer, &params.values, &current, &mut next);
        if k + 1 < layers.len() {
            for v in next.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        std::mem::swap(&mut current, &mut next);
    }
    Ok(current)
}

/// Full forward pass through the output head.
pub fn forward(params: &ParameterVector, input: &[f64]) -> Result<Vec<f64>> {
    let logits = forward_logits(params, input)?;
    Ok(match params.spec.head {
        OutputHead::Linear => logits,
        OutputHead::Softmax => softmax(&logits),
    })
}

/// Forward pass that keeps every layer's post-activation values for backprop.
/// `activations[0]` is the input; the last entry holds the logits.
fn forward_trace(params: &ParameterVector, input: &[f64]) -> Vec<Vec<f64>> {
    let layers = layer_slices(&params.spec);
    let mut activations = Vec::with_capacity(layers.len() + 1);
    activations.push(input.to_vec());
    for (k, layer) in layers.iter().enumerate() {
        let mut out = Vec::new();
        affine(layer, &params.values, activations.last().unwrap(), &mut out);
        if k + 1 < layers.len() {
            for v in out.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        activations.push(out);
    }
    activations
}

/// Accumulate the parameter gradient for one input, given the loss gradient
/// at the logits, into `acc` (same layout and length as the parameters).
pub fn accumulate_gradient_from_logits(
    params: &ParameterVector,
    input: &[f64],
    logit_grad: &[f64],
    acc: &mut [f64],
) -> Result<()> {
    check_input(params, input)?;
    if logit_grad.len() != params.spec.output_size() {
        return Err(Error::DimensionMismatch {
            expected: params.spec.output_size(),
            actual: logit_grad.len(),
        });
    }
    if acc.len() != params.values.len() {
        return Err(Error::DimensionMismatch {
            expected: params.values.len(),
            actual: acc.len(),
        });
    }
    let layers = layer_slices(&params.spec);
    let activations = forward_trace(params, input);
    let mut delta = logit_grad.to_vec();
    for (k, layer) in layers.iter().enumerate().rev() {
        let below = &activations[k];
        for row in 0..layer.fan_out {
            let d = delta[row];
            if d != 0.0 {
                let w_row = layer.weights + row * layer.fan_in;
                for (j, &x) in below.iter().enumerate() {
                    acc[w_row + j] += d * x;
                }
            }
            acc[layer.biases + row] += d;
        }
        if k == 0 {
            break;
        }
        // Propagate through the weights, then through the ReLU of layer k-1.
        let mut prev = vec![0.0; layer.fan_in];
        for row in 0..layer.fan_out {
            let d = delta[row];
            if d != 0.0 {
                let w_row = layer.weights + row * layer.fan_in;
                for (j, p) in prev.iter_mut().enumerate() {
                    *p += d * params.values[w_row + j];
                }
            }
        }
        for (p, &a) in prev.iter_mut().zip(below) {
            if a <= 0.0 {
                *p = 0.0;
            }
        }
        delta = prev;
    }
    Ok(())
}

/// Exact gradient of a scalar loss whose gradient with respect to the network
/// *output* is `output_grad`. For a softmax head the output is the
/// probability vector, so the softmax Jacobian is applied before
/// backpropagating.
pub fn gradient(
    params: &ParameterVector,
    input: &[f64],
    output_grad: &[f64],
) -> Result<ParameterVector> {
    check_input(params, input)?;
    if output_grad.len() != params.spec.output_size() {
        return Err(Error::DimensionMismatch {
            expected: params.spec.output_size(),
            actual: output_grad.len(),
        });
    }
    let logit_grad = match params.spec.head {
        OutputHead::Linear => output_grad.to_vec(),
        OutputHead::Softmax => {
            let probs = softmax(&forward_logits(params, input)?);
            let dot: f64 = output_grad.iter().zip(&probs).map(|(g, p)| g * p).sum();
            probs
                .iter()
                .zip(output_grad)
                .map(|(&p, &g)| p * (g - dot))
                .collect()
        }
    };
    let mut grad = ParameterVector::zeros(params.spec.clone());
    accumulate_gradient_from_logits(params, input, &logit_grad, &mut grad.values)?;
    Ok(grad)
}

/// One plain SGD step: `params - alpha * grad`, elementwise.
pub fn sgd_step(params: &ParameterVector, grad: &ParameterVector, alpha: f64) -> Result<ParameterVector> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be positive, got {alpha}"
        )));
    }
    if params.spec != grad.spec || params.values.len() != grad.values.len() {
        return Err(Error::SpecMismatch);
    }
    let values = params
        .values
        .iter()
        .zip(&grad.values)
        .map(|(p, g)| p - alpha * g)
        .collect();
    Ok(ParameterVector {
        values,
        spec: params.spec.clone(),
    })
}

/// The flat values in canonical order.
pub fn flatten(params: &ParameterVector) -> Vec<f64> {
    params.values.clone()
}

/// Rebuild a parameter vector from flat values; the length must match `spec`.
pub fn unflatten(values: Vec<f64>, spec: NetworkSpec) -> Result<ParameterVector> {
    if values.len() != spec.param_len() {
        return Err(Error::DimensionMismatch {
            expected: spec.param_len(),
            actual: values.len(),
        });
    }
    Ok(ParameterVector { values, spec })
}

// --- checkpoint format ---------------------------------------------------
//
// Version 1 layout, little-endian throughout:
//   magic   4 bytes  "NNP1"
//   head    1 byte   0 = linear, 1 = softmax
//   layers  u32      number of layer sizes
//   sizes   u32 * layers
//   values  f64 * param_len

const CHECKPOINT_MAGIC: &[u8; 4] = b"NNP1";

/// Serialize parameters into the versioned checkpoint format.
pub fn write_params<W: Write>(params: &ParameterVector, mut w: W) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&[match params.spec.head {
        OutputHead::Linear => 0u8,
        OutputHead::Softmax => 1u8,
    }])?;
    w.write_all(&(params.spec.layer_sizes.len() as u32).to_le_bytes())?;
    for &s in &params.spec.layer_sizes {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    for &v in &params.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Parse a checkpoint produced by [`write_params`].
pub fn read_params<R: Read>(mut r: R) -> Result<ParameterVector> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte)?;
    let head = match byte[0] {
        0 => OutputHead::Linear,
        1 => OutputHead::Softmax,
        other => return Err(Error::Checkpoint(format!("unknown head tag {other}"))),
    };
    let mut u32_buf = [0u8; 4];
    r.read_exact(&mut u32_buf)?;
    let layer_count = u32::from_le_bytes(u32_buf) as usize;
    if layer_count < 2 {
        return Err(Error::Checkpoint("fewer than two layer sizes".into()));
    }
    let mut sizes = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        r.read_exact(&mut u32_buf)?;
        sizes.push(u32::from_le_bytes(u32_buf) as usize);
    }
    let spec = NetworkSpec::new(sizes, head)
        .map_err(|e| Error::Checkpoint(format!("invalid shape: {e}")))?;
    let mut values = Vec::with_capacity(spec.param_len());
    let mut f64_buf = [0u8; 8];
    for _ in 0..spec.param_len() {
        r.read_exact(&mut f64_buf)?;
        values.push(f64::from_le_bytes(f64_buf));
    }
    Ok(ParameterVector { values, spec })
}

pub fn save_params(params: &ParameterVector, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_params(params, std::io::BufWriter::new(file))
}

pub fn load_params(path: &Path) -> Result<ParameterVector> {
    let file = std::fs::File::open(path)?;
    read_params(std::io::BufReader::new(file))
}
