//! Fully connected networks with exact manual backpropagation.
//!
//! Two network roles share this code: the control net maps (parameters,
//! time [, duration]) to one raw value per independent control group, with
//! ReLU hidden layers and a sigmoid output rescaled to (-1, 1); the
//! duration net maps parameters to a positive gate duration through a
//! smooth, bounded head. The backward pass returns exact gradients with
//! respect to every weight and bias *and* with respect to the inputs --
//! the input cotangent is how time and duration inputs receive gradient
//! when durations are optimized.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_INIT};

/// Hyperparameters of one network: hidden depth/width, Adam learning rate,
/// and the rescaling factor applied to the freshly drawn initial weights
/// (values well above 1 keep the initial control amplitudes away from 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub layers: usize,
    pub units: usize,
    pub learning_rate: f64,
    pub init_scale: f64,
}

/// Documented search ranges for the hyperparameters.
pub mod hyper_ranges {
    pub const LAYERS: [usize; 2] = [4, 10];
    pub const UNITS: [usize; 2] = [150, 300];
    pub const LEARNING_RATE: [f64; 2] = [1e-4, 1e-2];
    pub const INIT_SCALE: [f64; 2] = [1.8, 2.2];
}

/// Output nonlinearity of the last layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutputHead {
    /// `2 sigmoid(z) - 1`, each output strictly inside (-1, 1).
    Control,
    /// `min + softplus(z) - softplus(z - (max - min))`: smooth, strictly
    /// increasing, bounded to (min, max). Keeps durations positive.
    Duration { min: f64, max: f64 },
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl OutputHead {
    fn apply(&self, z: f64) -> f64 {
        match *self {
            OutputHead::Control => 2.0 * sigmoid(z) - 1.0,
            OutputHead::Duration { min, max } => {
                min + softplus(z) - softplus(z - (max - min))
            }
        }
    }

    fn slope(&self, z: f64) -> f64 {
        match *self {
            OutputHead::Control => {
                let s = sigmoid(z);
                2.0 * s * (1.0 - s)
            }
            OutputHead::Duration { min, max } => sigmoid(z) - sigmoid(z - (max - min)),
        }
    }

    /// Pre-activation that produces `value`; bisection on the monotone head.
    pub fn inverse(&self, value: f64) -> f64 {
        let (mut lo, mut hi) = match *self {
            OutputHead::Control => (-40.0, 40.0),
            OutputHead::Duration { min, max } => (-40.0, 40.0 + (max - min)),
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.apply(mid) < value {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// One dense layer; `weights` is row-major `[out x in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Parameters of a fully connected network.
///
/// Serialized layout (stable; checkpoints interoperate across
/// implementations): `sizes = [d_in, hidden.., d_out]`, one `DenseLayer`
/// per consecutive size pair with row-major weights, plus the head spec.
/// Hidden activations are ReLU; the last layer applies the head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub sizes: Vec<usize>,
    pub head: OutputHead,
    pub layers: Vec<DenseLayer>,
}

/// Cached forward pass: layer inputs and pre-activations, enough for an
/// exact backward pass.
#[derive(Debug, Clone)]
pub struct MlpTape {
    /// `acts[l]` is the input to layer `l`; `acts[0]` is the network input.
    acts: Vec<Vec<f64>>,
    /// Pre-activations `z_l = W_l acts[l] + b_l`.
    pre: Vec<Vec<f64>>,
}

impl MlpTape {
    /// Smallest |pre-activation| across hidden layers; finite-difference
    /// checks resample when this is too close to a ReLU kink.
    pub fn kink_distance(&self) -> f64 {
        let hidden = self.pre.len().saturating_sub(1);
        self.pre[..hidden]
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, &z| m.min(z.abs()))
    }
}

/// Per-parameter gradients, same shape as [`MlpParams::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub layers: Vec<DenseLayer>,
}

impl MlpGradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| DenseLayer {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|x| *x *= factor);
            l.biases.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite()))
    }
}

impl MlpParams {
    /// Initialize with `hyper.layers` ReLU hidden layers of `hyper.units`
    /// units. Weights and biases are drawn from the uniform fan-in rule
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, then everything is multiplied
    /// by `hyper.init_scale`. Deterministic given `seed`.
    pub fn init(hyper: &HyperParams, d_in: usize, d_out: usize, head: OutputHead, seed: u64) -> Result<Self> {
        if d_in == 0 || d_out == 0 || hyper.layers == 0 || hyper.units == 0 {
            return Err(Error::InvalidConfig(
                "network sizes must be positive".into(),
            ));
        }
        let mut sizes = Vec::with_capacity(hyper.layers + 2);
        sizes.push(d_in);
        sizes.extend(std::iter::repeat_n(hyper.units, hyper.layers));
        sizes.push(d_out);

        let mut rng = stream_rng(seed, STREAM_INIT, 0);
        let beta = hyper.init_scale;
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| beta * rng.random_range(-bound..bound))
                    .collect();
                let biases = (0..fan_out)
                    .map(|_| beta * rng.random_range(-bound..bound))
                    .collect();
                DenseLayer { weights, biases }
            })
            .collect();
        Ok(Self { sizes, head, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Parameter at flat index (weights then biases, layer by layer).
    pub fn get_flat(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.weights.len() {
                return l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.biases.len() {
                return l.biases[idx];
            }
            idx -= l.biases.len();
        }
        panic!("flat parameter index out of range");
    }

    pub fn set_flat(&mut self, mut idx: usize, value: f64) {
        for l in &mut self.layers {
            if idx < l.weights.len() {
                l.weights[idx] = value;
                return;
            }
            idx -= l.weights.len();
            if idx < l.biases.len() {
                l.biases[idx] = value;
                return;
            }
            idx -= l.biases.len();
        }
        panic!("flat parameter index out of range");
    }

    /// Mutable references to every parameter in flat order; the optimizer
    /// zips these with flat gradients.
    pub fn flat_mut(&mut self) -> Vec<&mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
            .collect()
    }

    /// Shift the output bias of a scalar-output net so that the forward
    /// value at `input` equals `target` (used to start duration nets at the
    /// configured initial duration).
    pub fn calibrate_scalar_output(&mut self, input: &[f64], target: f64) -> Result<()> {
        if self.output_dim() != 1 {
            return Err(Error::InvalidConfig(
                "output calibration requires a scalar head".into(),
            ));
        }
        let (_, tape) = self.forward(input)?;
        let z = tape.pre.last().unwrap()[0];
        let z_target = self.head.inverse(target);
        let last = self.layers.last_mut().unwrap();
        last.biases[0] += z_target - z;
        Ok(())
    }

    /// Evaluate the network, returning the output and the tape for a
    /// subsequent backward pass.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, MlpTape)> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        let depth = self.layers.len();
        let mut acts = Vec::with_capacity(depth);
        let mut pre = Vec::with_capacity(depth);
        let mut x = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let mut z = vec![0.0; n_out];
            for r in 0..n_out {
                let row = &layer.weights[r * n_in..(r + 1) * n_in];
                let mut s = layer.biases[r];
                for (w, xi) in row.iter().zip(&x) {
                    s += w * xi;
                }
                z[r] = s;
            }
            let next = if l + 1 == depth {
                z.iter().map(|&v| self.head.apply(v)).collect()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            acts.push(x);
            pre.push(z);
            x = next;
        }
        Ok((x, MlpTape { acts, pre }))
    }

    /// Exact reverse pass: gradients of `sum_i cotangent[i] * output[i]`
    /// with respect to all parameters and with respect to the input.
    pub fn backward(&self, tape: &MlpTape, cotangent: &[f64]) -> Result<(MlpGradients, Vec<f64>)> {
        let depth = self.layers.len();
        if tape.acts.len() != depth
            || tape.pre.len() != depth
            || (0..depth).any(|l| {
                tape.acts[l].len() != self.sizes[l] || tape.pre[l].len() != self.sizes[l + 1]
            })
        {
            return Err(Error::DimensionMismatch(
                "stale tape: shape does not match network".into(),
            ));
        }
        if cotangent.len() != self.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "cotangent length {} does not match output dim {}",
                cotangent.len(),
                self.output_dim()
            )));
        }

        let mut grads = MlpGradients::zeros_like(self);
        // delta = dL/dz for the current layer, starting from the head
        let mut delta: Vec<f64> = tape.pre[depth - 1]
            .iter()
            .zip(cotangent)
            .map(|(&z, &g)| g * self.head.slope(z))
            .collect();

        for l in (0..depth).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            let x = &tape.acts[l];
            for r in 0..n_out {
                let d = delta[r];
                g.biases[r] = d;
                let row = &mut g.weights[r * n_in..(r + 1) * n_in];
                for (w, xi) in row.iter_mut().zip(x) {
                    *w = d * xi;
                }
            }
            // input cotangent of this layer: W^T delta
            let mut back = vec![0.0; n_in];
            for r in 0..n_out {
                let d = delta[r];
                let row = &layer.weights[r * n_in..(r + 1) * n_in];
                for (b, w) in back.iter_mut().zip(row) {
                    *b += w * d;
                }
            }
            if l > 0 {
                // gate through the ReLU of the previous layer
                delta = back
                    .iter()
                    .zip(&tape.pre[l - 1])
                    .map(|(&b, &z)| if z > 0.0 { b } else { 0.0 })
                    .collect();
            } else {
                return Ok((grads, back));
            }
        }
        unreachable!("loop returns at l == 0");
    }
}
