//! A small dense feed-forward network with per-layer learnable activations,
//! exact reverse-mode gradients for weights, biases and activation
//! coefficients, an AdamW-style optimizer whose weight decay never touches
//! activation parameters, and a polynomial-mapping degree verifier.

use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::activations::Activation;
use crate::data::{Dataset, Split};
use crate::rng::CounterRng;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("dimension mismatch: layer expects {expected} inputs, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("interpolation nodes too clustered for a stable fit")]
    ConditioningFailure,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint: {0}")]
    Serde(#[from] serde_json::Error),
}

/// One dense layer: `y = act(W x + b)`, with `act = None` on the final
/// (linear) layer. The activation's coefficient set is shared by every unit
/// in the layer.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Option<Activation>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    /// Per-feature statistics of the training split, applied before the
    /// first layer so inputs are standardized.
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
}

pub struct ForwardCache {
    /// `inputs[l]` is the input to layer `l`; `inputs[layers.len()]` is the
    /// network output.
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activations `z_l = W_l a_l + b_l` per layer.
    pub preacts: Vec<Vec<f64>>,
}

pub struct LayerGrads {
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
    pub d_activation: Vec<f64>,
}

pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl MlpModel {
    /// He-style initialization: zero-mean normal weights with std
    /// `sqrt(gain / fan_in)`, zero biases, the given activation cloned into
    /// every hidden layer, identity input statistics.
    pub fn new(dims: &[usize], activation: &Activation, gain: f64, seed: u64) -> MlpModel {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let rng = CounterRng::new(seed);
        let mut layers = Vec::new();
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let std = crate::gains::he_style_weight_std(fan_in, gain);
            let stream = rng.substream(l as u64);
            let weights: Vec<f64> = (0..fan_in * fan_out)
                .map(|i| std * stream.normal(i as u64))
                .collect();
            let last = l == dims.len() - 2;
            layers.push(Layer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                bias: vec![0.0; fan_out],
                activation: if last { None } else { Some(activation.clone()) },
            });
        }
        MlpModel {
            layers,
            input_mean: vec![0.0; dims[0]],
            input_std: vec![1.0; dims[0]],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| (v - self.input_mean[i]) / self.input_std[i])
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache), NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut inputs = vec![self.standardize(x)];
        let mut preacts = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let a = inputs.last().unwrap();
            let mut z = layer.bias.clone();
            for j in 0..layer.out_dim {
                let row = &layer.weights[j * layer.in_dim..(j + 1) * layer.in_dim];
                z[j] += row.iter().zip(a).map(|(w, ai)| w * ai).sum::<f64>();
            }
            let out = match &layer.activation {
                Some(act) => act.eval_batch(&z),
                None => z.clone(),
            };
            preacts.push(z);
            inputs.push(out);
        }
        let logits = inputs.last().unwrap().clone();
        Ok((logits, ForwardCache { inputs, preacts }))
    }

    /// Exact reverse-mode gradients for one sample. `loss_grad` is dL/dy at
    /// the network output.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &[f64]) -> Gradients {
        let mut upstream = loss_grad.to_vec();
        let mut layers: Vec<LayerGrads> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.preacts[l];
            let a = &cache.inputs[l];
            let mut d_activation = Vec::new();
            let dz: Vec<f64> = match &layer.activation {
                Some(act) => {
                    d_activation = vec![0.0; act.params().len()];
                    let mut dz = vec![0.0; layer.out_dim];
                    for j in 0..layer.out_dim {
                        dz[j] = upstream[j] * act.deriv(z[j]);
                        for (p, g) in act.param_grad(z[j]).into_iter().enumerate() {
                            d_activation[p] += upstream[j] * g;
                        }
                    }
                    dz
                }
                None => upstream.clone(),
            };
            let mut d_weights = vec![0.0; layer.weights.len()];
            for j in 0..layer.out_dim {
                for i in 0..layer.in_dim {
                    d_weights[j * layer.in_dim + i] = dz[j] * a[i];
                }
            }
            let mut next_upstream = vec![0.0; layer.in_dim];
            for j in 0..layer.out_dim {
                for i in 0..layer.in_dim {
                    next_upstream[i] += layer.weights[j * layer.in_dim + i] * dz[j];
                }
            }
            layers.push(LayerGrads {
                d_weights,
                d_bias: dz,
                d_activation,
            });
            upstream = next_upstream;
        }
        layers.reverse();
        Gradients { layers }
    }

    /// Flattened parameter vector: per layer `weights, bias, activation
    /// params`, layers in order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(&layer.weights);
            out.extend(&layer.bias);
            if let Some(act) = &layer.activation {
                out.extend(act.params());
            }
        }
        out
    }

    pub fn unflatten(&mut self, params: &[f64]) {
        let mut at = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&params[at..at + nw]);
            at += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&params[at..at + nb]);
            at += nb;
            if let Some(act) = &mut layer.activation {
                let na = act.params().len();
                act.set_params(&params[at..at + na]);
                at += na;
            }
        }
        assert_eq!(at, params.len());
    }

    /// True exactly for weight-matrix entries: biases and activation
    /// coefficients are never decayed.
    pub fn decay_mask(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(std::iter::repeat(true).take(layer.weights.len()));
            out.extend(std::iter::repeat(false).take(layer.bias.len()));
            if let Some(act) = &layer.activation {
                out.extend(std::iter::repeat(false).take(act.params().len()));
            }
        }
        out
    }

    pub fn trainable_mask(&self, freeze: Freeze) -> Vec<bool> {
        let mut out = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let affine_trainable = match freeze {
                Freeze::None => true,
                Freeze::Weights => l == last,
            };
            out.extend(std::iter::repeat(affine_trainable).take(layer.weights.len() + layer.bias.len()));
            if let Some(act) = &layer.activation {
                out.extend(act.trainable_mask());
            }
        }
        out
    }

    fn flatten_grads(&self, grads: &Gradients) -> Vec<f64> {
        let mut out = Vec::new();
        for lg in &grads.layers {
            out.extend(&lg.d_weights);
            out.extend(&lg.d_bias);
            out.extend(&lg.d_activation);
        }
        out
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, NnError> {
        let (logits, _) = self.forward(x)?;
        Ok(argmax(&logits))
    }

    pub fn accuracy(&self, xs: &[[f64; 2]], ys: &[u8]) -> f64 {
        let mut hits = 0usize;
        for (x, &y) in xs.iter().zip(ys) {
            if self.predict(x).unwrap() == y as usize {
                hits += 1;
            }
        }
        hits as f64 / xs.len().max(1) as f64
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), NnError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<MlpModel, NnError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Softmax cross-entropy for one sample: returns `(loss, dL/dlogits)`.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + m - logits[label];
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

/// Mean-squared error for fitting-style regression: `(loss, dL/dy)`.
pub fn squared_error(output: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let n = output.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; output.len()];
    for i in 0..output.len() {
        let r = output[i] - target[i];
        loss += r * r / n;
        grad[i] = 2.0 * r / n;
    }
    (loss, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    AdamW,
}

/// Parameter groups excluded from gradient updates. `Weights` freezes every
/// affine layer except the last, leaving the final linear layer and all
/// activation coefficients trainable (the fine-tuning protocol).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Freeze {
    None,
    Weights,
}

impl FromStr for Freeze {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, NnError> {
        match s {
            "none" => Ok(Freeze::None),
            "weights" => Ok(Freeze::Weights),
            other => Err(NnError::InvalidConfig(format!("unknown freeze mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub freeze: Freeze,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 64,
            learning_rate: 0.02,
            weight_decay: 1e-4,
            seed: 0,
            optimizer: Optimizer::AdamW,
            freeze: Freeze::None,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrainTrace {
    pub rows: Vec<TraceRow>,
    pub final_test_accuracy: f64,
}

impl TrainTrace {
    pub fn save_csv(&self, path: &Path) -> Result<(), NnError> {
        let mut out = String::from("epoch,train_loss,test_acc\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", r.epoch, r.train_loss, r.test_acc));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// AdamW-style optimizer state over the flattened parameter vector. Decay is
/// decoupled and masked; frozen entries are never touched.
struct OptState {
    m1: Vec<f64>,
    m2: Vec<f64>,
    t: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn optimizer_step(
    params: &mut [f64],
    grads: &[f64],
    config: &TrainConfig,
    decay: &[bool],
    trainable: &[bool],
    state: &mut OptState,
) {
    state.t += 1;
    let lr = config.learning_rate;
    for i in 0..params.len() {
        if !trainable[i] {
            continue;
        }
        let step = match config.optimizer {
            Optimizer::Sgd => lr * grads[i],
            Optimizer::AdamW => {
                state.m1[i] = ADAM_BETA1 * state.m1[i] + (1.0 - ADAM_BETA1) * grads[i];
                state.m2[i] = ADAM_BETA2 * state.m2[i] + (1.0 - ADAM_BETA2) * grads[i] * grads[i];
                let m1 = state.m1[i] / (1.0 - ADAM_BETA1.powi(state.t as i32));
                let m2 = state.m2[i] / (1.0 - ADAM_BETA2.powi(state.t as i32));
                lr * m1 / (m2.sqrt() + ADAM_EPS)
            }
        };
        params[i] -= step;
        if decay[i] {
            params[i] -= lr * config.weight_decay * params[i];
        }
    }
}

/// One masked optimizer step from explicit gradients; exposed so the
/// decay-mask invariant can be checked differentially.
pub fn apply_step(model: &mut MlpModel, grads: &Gradients, config: &TrainConfig) {
    let mut params = model.flatten();
    let flat = model.flatten_grads(grads);
    let decay = model.decay_mask();
    let trainable = model.trainable_mask(config.freeze);
    let mut state = OptState {
        m1: vec![0.0; params.len()],
        m2: vec![0.0; params.len()],
        t: 0,
    };
    optimizer_step(&mut params, &flat, config, &decay, &trainable, &mut state);
    model.unflatten(&params);
}

/// Minibatch training with softmax cross-entropy. Deterministic given the
/// config seed; the input standardization statistics are taken from the
/// training split and stored on the model.
pub fn train(model: &mut MlpModel, data: &Dataset, config: &TrainConfig) -> Result<TrainTrace, NnError> {
    if config.batch_size == 0 {
        return Err(NnError::InvalidConfig("batch_size must be >= 1".into()));
    }
    let (mean, std) = data.train_stats();
    model.input_mean = mean.to_vec();
    model.input_std = std.to_vec();
    let (train_x, train_y) = data.subset(Split::Train);
    let (test_x, test_y) = data.subset(Split::Test);

    let mean_loss = |model: &MlpModel| -> Result<f64, NnError> {
        let mut total = 0.0;
        for (x, &y) in train_x.iter().zip(&train_y) {
            let (logits, _) = model.forward(x)?;
            total += cross_entropy(&logits, y as usize).0;
        }
        Ok(total / train_x.len().max(1) as f64)
    };

    let mut rows = Vec::new();
    if config.epochs == 0 {
        let loss = mean_loss(model)?;
        let acc = model.accuracy(&test_x, &test_y);
        rows.push(TraceRow {
            epoch: 0,
            train_loss: loss,
            test_acc: acc,
        });
        return Ok(TrainTrace {
            rows,
            final_test_accuracy: acc,
        });
    }

    let mut params = model.flatten();
    let decay = model.decay_mask();
    let trainable = model.trainable_mask(config.freeze);
    let mut state = OptState {
        m1: vec![0.0; params.len()],
        m2: vec![0.0; params.len()],
        t: 0,
    };
    let rng = CounterRng::new(config.seed);
    let mut step = 0usize;
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..train_x.len()).collect();
        rng.substream(epoch as u64).shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            model.unflatten(&params);
            let mut batch_grads = vec![0.0; params.len()];
            let mut batch_loss = 0.0;
            for &i in batch {
                let (logits, cache) = model.forward(&train_x[i])?;
                let (loss, lgrad) = cross_entropy(&logits, train_y[i] as usize);
                batch_loss += loss;
                let grads = model.backward(&cache, &lgrad);
                for (acc, g) in batch_grads.iter_mut().zip(model.flatten_grads(&grads)) {
                    *acc += g;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            batch_loss *= scale;
            if !batch_loss.is_finite() {
                return Err(NnError::NonFiniteLoss { step });
            }
            for g in &mut batch_grads {
                *g *= scale;
            }
            optimizer_step(&mut params, &batch_grads, config, &decay, &trainable, &mut state);
            epoch_loss += batch_loss * batch.len() as f64;
            step += 1;
        }
        model.unflatten(&params);
        epoch_loss /= train_x.len() as f64;
        let acc = model.accuracy(&test_x, &test_y);
        rows.push(TraceRow {
            epoch: epoch + 1,
            train_loss: epoch_loss,
            test_acc: acc,
        });
    }
    let final_test_accuracy = rows.last().unwrap().test_acc;
    Ok(TrainTrace {
        rows,
        final_test_accuracy,
    })
}

/// Dense prediction grid for external boundary plotting:
/// `x,y,predicted_class,class_1_probability` rows over `[lo,hi]^2`.
pub fn boundary_grid_csv(model: &MlpModel, lo: f64, hi: f64, resolution: usize) -> Result<String, NnError> {
    let mut out = String::from("x,y,predicted_class,class_1_probability\n");
    for i in 0..resolution {
        for j in 0..resolution {
            let x = lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
            let y = lo + (hi - lo) * j as f64 / (resolution - 1) as f64;
            let (logits, _) = model.forward(&[x, y])?;
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
            let p1 = exps[1] / exps.iter().sum::<f64>();
            out.push_str(&format!("{:.6},{:.6},{},{:.6e}\n", x, y, argmax(&logits), p1));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PolymapReport {
    pub degree_bound: usize,
    pub effective_degree: usize,
    pub max_rel_err: f64,
    pub passed: bool,
}

/// Checks that the network restricted to a line `x(t) = t * direction` is a
/// univariate polynomial of degree at most `degree_bound`: interpolates at
/// `degree_bound + 1` Chebyshev nodes, then compares against the network at
/// 100 held-out points.
pub fn verify_polynomial_mapping(
    model: &MlpModel,
    direction: &[f64],
    degree_bound: usize,
) -> Result<PolymapReport, NnError> {
    for layer in &model.layers[..model.layers.len() - 1] {
        match &layer.activation {
            Some(Activation::Hermite(_)) | None => {}
            Some(_) => {
                return Err(NnError::InvalidConfig(
                    "polynomial-mapping check requires Hermite activations".into(),
                ))
            }
        }
    }
    let m = degree_bound + 1;
    let nodes: Vec<f64> = (0..m)
        .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / m as f64).cos())
        .collect();
    for i in 0..m {
        for j in 0..i {
            if (nodes[i] - nodes[j]).abs() < 1e-9 {
                return Err(NnError::ConditioningFailure);
            }
        }
    }
    let eval_net = |t: f64| -> Result<Vec<f64>, NnError> {
        let x: Vec<f64> = direction.iter().map(|d| t * d).collect();
        Ok(model.forward(&x)?.0)
    };
    let out_dim = model.output_dim();
    let vand = DMatrix::from_fn(m, m, |r, c| nodes[r].powi(c as i32));
    let mut rhs = DMatrix::zeros(m, out_dim);
    for (r, &t) in nodes.iter().enumerate() {
        for (c, v) in eval_net(t)?.into_iter().enumerate() {
            rhs[(r, c)] = v;
        }
    }
    let coeffs = vand
        .lu()
        .solve(&rhs)
        .ok_or(NnError::ConditioningFailure)?;

    let mut effective_degree = 0;
    let scale = coeffs.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
    for c in 0..out_dim {
        for k in 0..m {
            if coeffs[(k, c)].abs() > 1e-6 * scale {
                effective_degree = effective_degree.max(k);
            }
        }
    }

    let mut max_rel_err = 0.0f64;
    for i in 0..100 {
        let t = -1.0 + 2.0 * (i as f64 + 0.5) / 100.0;
        let truth = eval_net(t)?;
        let denom = truth.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
        for c in 0..out_dim {
            let mut p = 0.0;
            for k in (0..m).rev() {
                p = p * t + coeffs[(k, c)];
            }
            max_rel_err = max_rel_err.max((p - truth[c]).abs() / denom);
        }
    }
    Ok(PolymapReport {
        degree_bound,
        effective_degree,
        max_rel_err,
        passed: max_rel_err <= 1e-6 && effective_degree <= degree_bound,
    })
}
