//! Small feed-forward networks over embedding vectors.
//!
//! Two heads share one parameter layout:
//!
//! * **Softmax classifier**: ReLU hidden layers, a linear output layer with
//!   one unit per pseudo-label, softmax on top, trained on cross-entropy.
//! * **Twin scorer**: a ReLU encoder applied to both inputs, the element-wise
//!   absolute difference of the two encodings, then a single linear unit with
//!   a sigmoid, trained on binary cross-entropy over same/different pairs.
//!   The absolute difference makes the score exactly symmetric.
//!
//! Parameters live in one flat vector (layer by layer, weights row-major
//! `out × in` followed by biases) and are optimized with Adam.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::EmbeddingSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Softmax,
    TwinSigmoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNet {
    head: Head,
    /// Input, hidden and output widths. For the twin head the last entry is 1
    /// and the final layer reads the encoding difference.
    layer_dims: Vec<usize>,
    params: Vec<f64>,
    classes: Vec<String>,
    seed: u64,
    /// Mean training loss of each epoch.
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden_dims: vec![64],
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwinConfig {
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    pub pairs_per_epoch: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TwinConfig {
    fn default() -> Self {
        Self {
            hidden_dims: vec![64],
            epochs: 30,
            pairs_per_epoch: 8192,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

/// Class-indexed training data.
#[derive(Debug, Clone)]
pub struct LabeledData {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub classes: Vec<String>,
}

impl LabeledData {
    /// Classes ordered as given; every label in `set` must be among them.
    pub fn with_classes(set: &EmbeddingSet, classes: Vec<String>) -> Result<Self> {
        let labels = set
            .labels()
            .ok_or_else(|| Error::invalid("training set has no labels"))?;
        let y = labels
            .iter()
            .map(|l| {
                classes
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| Error::invalid(format!("label `{l}` not in class list")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            x: set.to_f64(),
            y,
            classes,
        })
    }

    /// Classes in sorted label order.
    pub fn from_set(set: &EmbeddingSet) -> Result<Self> {
        let labels = set
            .labels()
            .ok_or_else(|| Error::invalid("training set has no labels"))?;
        let mut classes: Vec<String> = labels.to_vec();
        classes.sort();
        classes.dedup();
        Self::with_classes(set, classes)
    }

    fn check(&self) -> Result<()> {
        if self.x.nrows() != self.y.len() || self.x.nrows() == 0 {
            return Err(Error::invalid("training data is empty or misaligned"));
        }
        let mut seen = vec![false; self.classes.len()];
        for &c in &self.y {
            seen[c] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub class_index: usize,
    pub label: String,
    pub probability: f64,
}

/// The μ most probable classes, most probable first.
#[derive(Debug, Clone, PartialEq)]
pub struct TopMuPrediction {
    pub candidates: Vec<Candidate>,
}

struct LayerShape {
    input: usize,
    output: usize,
    offset: usize,
}

impl LayerShape {
    fn bias_offset(&self) -> usize {
        self.offset + self.input * self.output
    }
}

/// Activations of every layer for one input; `acts[0]` is the input.
type Activations = Vec<Vec<f64>>;

impl FeedForwardNet {
    fn init(head: Head, layer_dims: Vec<usize>, classes: Vec<String>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for w in layer_dims.windows(2) {
            let (input, output) = (w[0], w[1]);
            let he = Normal::new(0.0, (2.0 / input as f64).sqrt()).expect("positive std");
            params.extend((0..input * output).map(|_| he.sample(&mut rng)));
            params.extend(std::iter::repeat_n(0.0, output));
        }
        Self {
            head,
            layer_dims,
            params,
            classes,
            seed,
            loss_trace: Vec::new(),
        }
    }

    /// A freshly initialized, untrained classifier.
    pub fn new_classifier(input: usize, hidden: &[usize], classes: Vec<String>, seed: u64) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(classes.len());
        Self::init(Head::Softmax, dims, classes, seed)
    }

    /// A freshly initialized, untrained twin scorer.
    pub fn new_twin(input: usize, hidden: &[usize], seed: u64) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(1);
        Self::init(Head::TwinSigmoid, dims, Vec::new(), seed)
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params = params;
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    fn layers(&self) -> Vec<LayerShape> {
        let mut offset = 0;
        self.layer_dims
            .windows(2)
            .map(|w| {
                let l = LayerShape {
                    input: w[0],
                    output: w[1],
                    offset,
                };
                offset += w[0] * w[1] + w[1];
                l
            })
            .collect()
    }

    fn affine(&self, layer: &LayerShape, input: &[f64], relu: bool) -> Vec<f64> {
        let w = &self.params[layer.offset..layer.bias_offset()];
        let b = &self.params[layer.bias_offset()..layer.bias_offset() + layer.output];
        (0..layer.output)
            .map(|o| {
                let row = &w[o * layer.input..(o + 1) * layer.input];
                let v = b[o] + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>();
                if relu {
                    v.max(0.0)
                } else {
                    v
                }
            })
            .collect()
    }

    /// Forward through `layers`, ReLU after each.
    fn forward_relu(&self, layers: &[LayerShape], x: &[f64]) -> Activations {
        let mut acts = vec![x.to_vec()];
        for l in layers {
            let next = self.affine(l, acts.last().unwrap(), true);
            acts.push(next);
        }
        acts
    }

    /// Backprop `delta` (gradient w.r.t. the post-ReLU output of the last of
    /// `layers`) down to the first layer, accumulating into `grad`.
    fn backward_relu(
        &self,
        layers: &[LayerShape],
        acts: &Activations,
        mut delta: Vec<f64>,
        grad: &mut [f64],
    ) {
        for (li, l) in layers.iter().enumerate().rev() {
            let out = &acts[li + 1];
            for (d, &a) in delta.iter_mut().zip(out) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            delta = self.backward_affine(l, &acts[li], &delta, grad, li > 0);
        }
    }

    /// Accumulates weight and bias gradients of one affine layer given the
    /// gradient w.r.t. its pre-activation output; returns the gradient
    /// w.r.t. its input when `need_input` is set.
    fn backward_affine(
        &self,
        l: &LayerShape,
        input: &[f64],
        delta: &[f64],
        grad: &mut [f64],
        need_input: bool,
    ) -> Vec<f64> {
        let mut d_in = if need_input {
            vec![0.0; l.input]
        } else {
            Vec::new()
        };
        let w = &self.params[l.offset..l.bias_offset()];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let g = &mut grad[l.offset + o * l.input..l.offset + (o + 1) * l.input];
            for (gi, &x) in g.iter_mut().zip(input) {
                *gi += d * x;
            }
            grad[l.bias_offset() + o] += d;
            if need_input {
                let row = &w[o * l.input..(o + 1) * l.input];
                for (di, &wi) in d_in.iter_mut().zip(row) {
                    *di += d * wi;
                }
            }
        }
        d_in
    }

    fn require(&self, head: Head) -> Result<()> {
        if self.head != head {
            return Err(Error::invalid(format!(
                "operation needs a {head:?} network, this one is {:?}",
                self.head
            )));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn logits(&self, x: &[f64]) -> (Activations, Vec<f64>) {
        let layers = self.layers();
        let (hidden, out) = layers.split_at(layers.len() - 1);
        let acts = self.forward_relu(hidden, x);
        let logits = self.affine(&out[0], acts.last().unwrap(), false);
        (acts, logits)
    }

    /// Class probabilities for one embedding.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.require(Head::Softmax)?;
        self.check_input(x)?;
        Ok(softmax(&self.logits(x).1))
    }

    /// The `mu` most probable classes, ties resolved toward the lower class
    /// index.
    pub fn predict_top_mu(&self, x: &[f64], mu: usize) -> Result<TopMuPrediction> {
        let probs = self.predict_proba(x)?;
        if mu < 1 || mu > probs.len() {
            return Err(Error::invalid(format!(
                "mu must lie in 1..={}, got {mu}",
                probs.len()
            )));
        }
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        let candidates = order
            .into_iter()
            .take(mu)
            .map(|c| Candidate {
                class_index: c,
                label: self.classes[c].clone(),
                probability: probs[c],
            })
            .collect();
        Ok(TopMuPrediction { candidates })
    }

    /// Mean cross-entropy of the classifier on a batch and its gradient.
    pub fn classifier_loss_and_grad(
        &self,
        x: &Array2<f64>,
        y: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        self.require(Head::Softmax)?;
        let rows: Vec<usize> = (0..x.nrows()).collect();
        Ok(self.classifier_batch(x, y, &rows))
    }

    fn classifier_batch(&self, x: &Array2<f64>, y: &[usize], rows: &[usize]) -> (f64, Vec<f64>) {
        let layers = self.layers();
        let (hidden, out) = layers.split_at(layers.len() - 1);
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / rows.len() as f64;
        for &r in rows {
            let xr: Vec<f64> = x.row(r).to_vec();
            let acts = self.forward_relu(hidden, &xr);
            let logits = self.affine(&out[0], acts.last().unwrap(), false);
            let p = softmax(&logits);
            loss -= p[y[r]].max(f64::MIN_POSITIVE).ln() * scale;
            let mut delta: Vec<f64> = p.iter().map(|v| v * scale).collect();
            delta[y[r]] -= scale;
            let d_hidden = self.backward_affine(
                &out[0],
                acts.last().unwrap(),
                &delta,
                &mut grad,
                !hidden.is_empty(),
            );
            if !hidden.is_empty() {
                self.backward_relu(hidden, &acts, d_hidden, &mut grad);
            }
        }
        (loss, grad)
    }

    /// Encoder output for one embedding (twin head only).
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.require(Head::TwinSigmoid)?;
        self.check_input(x)?;
        let layers = self.layers();
        let mut acts = self.forward_relu(&layers[..layers.len() - 1], x);
        Ok(acts.pop().unwrap())
    }

    fn twin_logit(&self, ea: &[f64], eb: &[f64]) -> f64 {
        let layers = self.layers();
        let diff: Vec<f64> = ea.iter().zip(eb).map(|(a, b)| (a - b).abs()).collect();
        self.affine(layers.last().unwrap(), &diff, false)[0]
    }

    /// Similarity in (0, 1) of two precomputed encodings.
    pub fn twin_score_encoded(&self, ea: &[f64], eb: &[f64]) -> f64 {
        sigmoid(self.twin_logit(ea, eb))
    }

    /// Similarity in (0, 1) of two embeddings.
    pub fn twin_score(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let ea = self.encode(a)?;
        let eb = self.encode(b)?;
        Ok(self.twin_score_encoded(&ea, &eb))
    }

    /// Mean binary cross-entropy of the twin scorer over pairs
    /// `(a[i], b[i])` with targets `same[i]`, and its gradient.
    pub fn twin_loss_and_grad(
        &self,
        a: &Array2<f64>,
        b: &Array2<f64>,
        same: &[bool],
    ) -> Result<(f64, Vec<f64>)> {
        self.require(Head::TwinSigmoid)?;
        let pairs: Vec<(usize, usize, bool)> = (0..a.nrows()).map(|i| (i, i, same[i])).collect();
        Ok(self.twin_batch(a, b, &pairs))
    }

    fn twin_batch(
        &self,
        xa: &Array2<f64>,
        xb: &Array2<f64>,
        pairs: &[(usize, usize, bool)],
    ) -> (f64, Vec<f64>) {
        let layers = self.layers();
        let (encoder, head) = layers.split_at(layers.len() - 1);
        let head = &head[0];
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / pairs.len() as f64;
        for &(i, j, same) in pairs {
            let a: Vec<f64> = xa.row(i).to_vec();
            let b: Vec<f64> = xb.row(j).to_vec();
            let acts_a = self.forward_relu(encoder, &a);
            let acts_b = self.forward_relu(encoder, &b);
            let ea = acts_a.last().unwrap();
            let eb = acts_b.last().unwrap();
            let diff: Vec<f64> = ea.iter().zip(eb).map(|(p, q)| (p - q).abs()).collect();
            let z = self.affine(head, &diff, false)[0];
            let target = if same { 1.0 } else { 0.0 };
            // BCE with logits: softplus(z) − t·z.
            loss += (softplus(z) - target * z) * scale;
            let dz = (sigmoid(z) - target) * scale;
            let d_diff = self.backward_affine(head, &diff, &[dz], &mut grad, true);
            let d_ea: Vec<f64> = d_diff
                .iter()
                .zip(ea.iter().zip(eb))
                .map(|(d, (p, q))| d * sign(p - q))
                .collect();
            let d_eb: Vec<f64> = d_ea.iter().map(|d| -d).collect();
            self.backward_relu(encoder, &acts_a, d_ea, &mut grad);
            self.backward_relu(encoder, &acts_b, d_eb, &mut grad);
        }
        (loss, grad)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let header = CheckpointHeader {
            head: self.head,
            layer_dims: self.layer_dims.clone(),
            seed: self.seed,
            classes: self.classes.clone(),
        };
        let write = || -> std::io::Result<()> {
            let mut w = BufWriter::new(File::create(path)?);
            serde_json::to_writer(&mut w, &header)?;
            w.write_all(b"\n")?;
            for p in &self.params {
                w.write_all(&(*p as f32).to_le_bytes())?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    /// Reads a checkpoint; parameters come back at `f32` precision.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut line = String::new();
        r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        let header: CheckpointHeader = serde_json::from_str(line.trim_end())
            .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        let mut net = Self::init(header.head, header.layer_dims, header.classes, header.seed);
        if bytes.len() != net.params.len() * 4 {
            return Err(Error::Format(format!(
                "checkpoint holds {} parameter bytes, expected {}",
                bytes.len(),
                net.params.len() * 4
            )));
        }
        net.params = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Ok(net)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    head: Head,
    layer_dims: Vec<usize>,
    seed: u64,
    classes: Vec<String>,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains a softmax classifier with seeded mini-batch Adam on cross-entropy.
pub fn train_classifier(data: &LabeledData, config: &ClassifierConfig) -> Result<FeedForwardNet> {
    data.check()?;
    if config.batch_size == 0 {
        return Err(Error::invalid("batch_size must be >= 1"));
    }
    let mut net = FeedForwardNet::new_classifier(
        data.x.ncols(),
        &config.hidden_dims,
        data.classes.clone(),
        config.seed,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5EED_C1A5);
    let mut adam = Adam::new(net.params.len(), config.learning_rate);
    let mut order: Vec<usize> = (0..data.x.nrows()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (loss, grad) = net.classifier_batch(&data.x, &data.y, batch);
            adam.step(&mut net.params, &grad);
            epoch_loss += loss * batch.len() as f64;
        }
        epoch_loss /= order.len() as f64;
        if !epoch_loss.is_finite() || net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                iteration: net.loss_trace.len(),
            });
        }
        net.loss_trace.push(epoch_loss);
    }
    Ok(net)
}

/// Balanced same/different pairs: even slots draw a same-class partner,
/// odd slots a different-class one.
fn sample_pairs(
    y: &[usize],
    by_class: &[Vec<usize>],
    count: usize,
    rng: &mut impl Rng,
) -> Vec<(usize, usize, bool)> {
    let n = y.len();
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let i = rng.random_range(0..n);
        let want_same = pairs.len() % 2 == 0;
        let j = if want_same {
            let pool = &by_class[y[i]];
            pool[rng.random_range(0..pool.len())]
        } else {
            loop {
                let j = rng.random_range(0..n);
                if y[j] != y[i] {
                    break j;
                }
            }
        };
        pairs.push((i, j, want_same));
    }
    pairs
}

/// Trains a twin scorer on a balanced set of same/different pseudo-label
/// pairs, drawn once and reshuffled every epoch.
pub fn train_siamese(data: &LabeledData, config: &TwinConfig) -> Result<FeedForwardNet> {
    data.check()?;
    if config.batch_size == 0 || config.pairs_per_epoch == 0 {
        return Err(Error::invalid(
            "batch_size and pairs_per_epoch must be >= 1",
        ));
    }
    let mut net = FeedForwardNet::new_twin(data.x.ncols(), &config.hidden_dims, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7E1A_5EED);
    let mut adam = Adam::new(net.params.len(), config.learning_rate);
    let mut by_class = vec![Vec::new(); data.classes.len()];
    for (i, &c) in data.y.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut pairs = sample_pairs(&data.y, &by_class, config.pairs_per_epoch, &mut rng);
    for _ in 0..config.epochs {
        pairs.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in pairs.chunks(config.batch_size) {
            let (loss, grad) = net.twin_batch(&data.x, &data.x, batch);
            adam.step(&mut net.params, &grad);
            epoch_loss += loss * batch.len() as f64;
        }
        epoch_loss /= pairs.len() as f64;
        if !epoch_loss.is_finite() || net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                iteration: net.loss_trace.len(),
            });
        }
        net.loss_trace.push(epoch_loss);
    }
    Ok(net)
}

/// Mean twin score between `x` and every member of a class.
pub fn siamese_class_score(
    net: &FeedForwardNet,
    x: &[f64],
    members: &[ArrayView1<f64>],
) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::invalid("class has no members"));
    }
    let ex = net.encode(x)?;
    let mut total = 0.0;
    for m in members {
        let em = net.encode(&m.to_vec())?;
        total += net.twin_score_encoded(&ex, &em);
    }
    Ok(total / members.len() as f64)
}

/// Mean of already computed pairwise scores.
pub fn mean_score(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid("class has no members"));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> LabeledData {
        let x = Array2::from_shape_fn((12, 3), |(i, j)| {
            let c = i % 3;
            (c * 4) as f64 + ((i * 7 + j * 3) % 5) as f64 * 0.1 + j as f64 * 0.01
        });
        LabeledData {
            x,
            y: (0..12).map(|i| i % 3).collect(),
            classes: vec!["M_1".into(), "M_2".into(), "M_3".into()],
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let net = FeedForwardNet::new_classifier(3, &[5], toy().classes, 1);
        let p = net.predict_proba(&[0.3, -2.0, 7.0]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let top = net.predict_top_mu(&[0.3, -2.0, 7.0], 3).unwrap();
        let s: f64 = top.candidates.iter().map(|c| c.probability).sum();
        assert!((s - 1.0).abs() < 1e-6);
        assert!(top
            .candidates
            .windows(2)
            .all(|w| w[0].probability >= w[1].probability));
    }

    #[test]
    fn top_one_is_argmax() {
        let net = FeedForwardNet::new_classifier(3, &[5], toy().classes, 2);
        let x = [1.0, 0.5, -1.0];
        let p = net.predict_proba(&x).unwrap();
        let argmax = (0..3).fold(0, |b, c| if p[c] > p[b] { c } else { b });
        assert_eq!(
            net.predict_top_mu(&x, 1).unwrap().candidates[0].class_index,
            argmax
        );
        assert!(net.predict_top_mu(&x, 0).is_err());
        assert!(net.predict_top_mu(&x, 4).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let mut d = toy();
        d.y = vec![1; 12];
        assert!(matches!(
            train_classifier(&d, &ClassifierConfig::default()),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            train_siamese(&d, &TwinConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = ClassifierConfig {
            epochs: 5,
            ..Default::default()
        };
        let a = train_classifier(&toy(), &cfg).unwrap();
        let b = train_classifier(&toy(), &cfg).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn twin_is_symmetric_and_bounded() {
        let net = FeedForwardNet::new_twin(3, &[4], 5);
        let a = [0.1, 2.0, -1.0];
        let b = [3.0, -0.5, 0.25];
        let s = net.twin_score(&a, &b).unwrap();
        assert_eq!(s, net.twin_score(&b, &a).unwrap());
        assert!(s > 0.0 && s < 1.0);
    }

    #[test]
    fn class_score_is_member_mean() {
        let net = FeedForwardNet::new_twin(2, &[3], 9);
        let x = [0.5, 0.5];
        let members = array![[1.0, 0.0], [0.0, 2.0]];
        let single = siamese_class_score(&net, &x, &[members.row(0)]).unwrap();
        assert_eq!(single, net.twin_score(&x, &[1.0, 0.0]).unwrap());
        let views: Vec<_> = members.outer_iter().collect();
        let once = siamese_class_score(&net, &x, &views).unwrap();
        let twice: Vec<_> = views.iter().chain(views.iter()).cloned().collect();
        let doubled = siamese_class_score(&net, &x, &twice).unwrap();
        assert!((once - doubled).abs() < 1e-15);
        assert!(siamese_class_score(&net, &x, &[]).is_err());
        assert!((mean_score(&[0.2, 0.4, 0.9]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net = FeedForwardNet::new_classifier(3, &[4], toy().classes, 3);
        net.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let newline = bytes.iter().position(|&b| b == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&bytes[..newline]).unwrap();
        assert_eq!(header["head"], "softmax");
        assert_eq!(header["layer_dims"], serde_json::json!([3, 4, 3]));
        assert_eq!(bytes.len() - newline - 1, net.params().len() * 4);
        let back = FeedForwardNet::load(&path).unwrap();
        assert_eq!(back.layer_dims(), net.layer_dims());
        for (a, b) in back.params().iter().zip(net.params()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn wrong_head_is_rejected() {
        let twin = FeedForwardNet::new_twin(3, &[4], 0);
        assert!(twin.predict_proba(&[0.0; 3]).is_err());
        let cls = FeedForwardNet::new_classifier(3, &[4], toy().classes, 0);
        assert!(cls.encode(&[0.0; 3]).is_err());
        assert!(cls.predict_proba(&[0.0; 2]).is_err());
    }
}
