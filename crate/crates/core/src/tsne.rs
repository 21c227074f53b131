//! Exact t-SNE down to two dimensions.
//!
//! Both stages reorder points canonically by id before doing any
//! floating-point accumulation or drawing random numbers, then map results
//! back to input order. Permuting the input rows therefore permutes the
//! output rows identically, bit for bit.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::EmbeddingSet;
use crate::error::{Error, Result};

/// Symmetric joint probabilities over all point pairs.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    pub ids: Vec<String>,
    pub p: Array2<f64>,
    pub perplexity: f64,
    /// Gaussian bandwidth of each point's conditional distribution.
    pub bandwidths: Vec<f64>,
    /// Shannon entropy, in bits, of each conditional distribution.
    pub entropies: Vec<f64>,
}

impl AffinityMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Embedding2D {
    pub ids: Vec<String>,
    /// N×2 coordinates in input row order.
    pub points: Array2<f64>,
    /// KL(P‖Q) against the unexaggerated P: entry `t` is the value after
    /// `t` updates, so the trace holds `iterations + 1` values.
    pub kl_trace: Vec<f64>,
}

impl Embedding2D {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    pub early_exaggeration_factor: f64,
    pub early_exaggeration_iters: usize,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            early_exaggeration_factor: 12.0,
            early_exaggeration_iters: 250,
            init_std: 1e-4,
            seed: 0,
        }
    }
}

impl TsneConfig {
    /// Requested perplexity clamped to (N − 1) / 3.
    pub fn effective_perplexity(&self, n: usize) -> f64 {
        self.perplexity.min((n as f64 - 1.0) / 3.0)
    }
}

fn canonical_order(ids: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    order
}

const ENTROPY_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 200;

/// Conditional distribution of one point given its squared distances to
/// every other point. Returns (probabilities, precision β, entropy in nats).
fn conditional_row(dist: &[f64], target_entropy: f64) -> Option<(Vec<f64>, f64, f64)> {
    let dmin = dist.iter().cloned().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = dist.iter().map(|d| d - dmin).collect();
    let scale = shifted.iter().sum::<f64>() / shifted.len() as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let eval = |beta: f64| -> (Vec<f64>, f64) {
        let w: Vec<f64> = shifted.iter().map(|d| (-beta * d).exp()).collect();
        let z: f64 = w.iter().sum();
        let mean_d: f64 = w.iter().zip(&shifted).map(|(w, d)| w * d).sum::<f64>() / z;
        let p = w.into_iter().map(|w| w / z).collect();
        (p, z.ln() + beta * mean_d)
    };

    // Entropy falls monotonically in β; bisect on ln β.
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for _ in 0..MAX_BISECTIONS {
        let t = 0.5 * (lo + hi);
        let beta = t.exp() / scale;
        let (p, h) = eval(beta);
        let err = h - target_entropy;
        let done = err.abs() < ENTROPY_TOL;
        best = Some((p, beta, h));
        if done {
            break;
        }
        if err > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
    }
    best.filter(|(_, _, h)| (h - target_entropy).abs() < 1e-6)
}

/// Perplexity-calibrated joint probabilities for `set`.
pub fn compute_affinities(set: &EmbeddingSet, perplexity: f64) -> Result<AffinityMatrix> {
    let n = set.len();
    if n < 4 {
        return Err(Error::invalid(format!(
            "t-SNE needs at least 4 points, got {n}"
        )));
    }
    if !(perplexity > 0.0 && perplexity < n as f64) {
        return Err(Error::invalid(format!(
            "perplexity must lie in (0, {n}), got {perplexity}"
        )));
    }
    let order = canonical_order(set.ids());
    let x = set.to_f64();
    let target = perplexity.ln();

    let mut cond = Array2::<f64>::zeros((n, n));
    let mut bandwidths = vec![0.0; n];
    let mut entropies = vec![0.0; n];
    let mut dist = Vec::with_capacity(n - 1);
    for (ci, &i) in order.iter().enumerate() {
        dist.clear();
        let xi = x.row(i);
        for &j in order.iter().filter(|&&j| j != i) {
            let d: f64 = xi
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dist.push(d);
        }
        let (p, beta, h) = conditional_row(&dist, target).ok_or(Error::PerplexityUnreachable {
            index: i,
            perplexity,
        })?;
        let mut k = 0;
        for (cj, &j) in order.iter().enumerate() {
            if cj == ci {
                continue;
            }
            cond[[i, j]] = p[k];
            k += 1;
        }
        bandwidths[i] = (0.5 / beta).sqrt();
        entropies[i] = h / std::f64::consts::LN_2;
    }

    let denom = 2.0 * n as f64;
    let mut p = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[[i, j]] = (cond[[i, j]] + cond[[j, i]]) / denom;
            }
        }
    }
    Ok(AffinityMatrix {
        ids: set.ids().to_vec(),
        p,
        perplexity,
        bandwidths,
        entropies,
    })
}

/// Packed strict upper triangle, row-major.
struct Triangle {
    n: usize,
    data: Vec<f64>,
}

impl Triangle {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * (n - 1) / 2],
        }
    }

    fn from_matrix(m: &Array2<f64>, order: &[usize]) -> Self {
        let n = order.len();
        let mut t = Self::zeros(n);
        let mut k = 0;
        for a in 0..n {
            for b in (a + 1)..n {
                t.data[k] = m[[order[a], order[b]]];
                k += 1;
            }
        }
        t
    }
}

/// Unnormalized Student-t kernel values and their sum over ordered pairs.
fn student_t(y: &[[f64; 2]], num: &mut Triangle) -> f64 {
    let n = num.n;
    let mut k = 0;
    let mut z = 0.0;
    for i in 0..n {
        let yi = y[i];
        for yj in &y[(i + 1)..n] {
            let dx = yi[0] - yj[0];
            let dy = yi[1] - yj[1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num.data[k] = v;
            z += v;
            k += 1;
        }
    }
    2.0 * z
}

fn kl_from(p: &Triangle, num: &Triangle, z: f64, p_log_p: f64) -> f64 {
    // KL = Σ p ln p − Σ p ln q over ordered pairs, with q = num / z and Σ p = 1.
    let cross: f64 = p
        .data
        .iter()
        .zip(&num.data)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * q.ln())
        .sum();
    p_log_p - 2.0 * cross + z.ln()
}

fn p_log_p(p: &Triangle) -> f64 {
    2.0 * p
        .data
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}

fn gradient(
    p: &Triangle,
    num: &Triangle,
    z: f64,
    exaggeration: f64,
    y: &[[f64; 2]],
    grad: &mut [[f64; 2]],
) {
    let n = p.n;
    grad.iter_mut().for_each(|g| *g = [0.0; 2]);
    let mut k = 0;
    for i in 0..n {
        let yi = y[i];
        let mut gi = [0.0; 2];
        for j in (i + 1)..n {
            let w = num.data[k];
            let m = 4.0 * (exaggeration * p.data[k] - w / z) * w;
            let dx = m * (yi[0] - y[j][0]);
            let dy = m * (yi[1] - y[j][1]);
            gi[0] += dx;
            gi[1] += dy;
            grad[j][0] -= dx;
            grad[j][1] -= dy;
            k += 1;
        }
        grad[i][0] += gi[0];
        grad[i][1] += gi[1];
    }
}

fn to_points(y: &Array2<f64>) -> Vec<[f64; 2]> {
    y.outer_iter().map(|r| [r[0], r[1]]).collect()
}

/// KL(P‖Q) for the layout `y` (rows in the same order as `p`).
pub fn kl_divergence(p: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let order: Vec<usize> = (0..p.nrows()).collect();
    let pt = Triangle::from_matrix(p, &order);
    let pts = to_points(y);
    let mut num = Triangle::zeros(pt.n);
    let z = student_t(&pts, &mut num);
    kl_from(&pt, &num, z, p_log_p(&pt))
}

/// Gradient of KL(αP‖Q) with respect to `y`, α being the exaggeration.
pub fn kl_gradient(p: &Array2<f64>, y: &Array2<f64>, exaggeration: f64) -> Array2<f64> {
    let order: Vec<usize> = (0..p.nrows()).collect();
    let pt = Triangle::from_matrix(p, &order);
    let pts = to_points(y);
    let mut num = Triangle::zeros(pt.n);
    let z = student_t(&pts, &mut num);
    let mut grad = vec![[0.0; 2]; pt.n];
    gradient(&pt, &num, z, exaggeration, &pts, &mut grad);
    Array2::from_shape_fn((pt.n, 2), |(i, c)| grad[i][c])
}

/// Optimizes a 2-D layout for `affinities` by momentum gradient descent
/// with per-coordinate adaptive gains. Velocity and gains restart when the
/// exaggeration phase ends.
pub fn run_tsne(affinities: &AffinityMatrix, config: &TsneConfig) -> Result<Embedding2D> {
    let n = affinities.len();
    if n < 2 || affinities.p.dim() != (n, n) {
        return Err(Error::invalid("affinity matrix must be square with N >= 2"));
    }
    let order = canonical_order(&affinities.ids);
    let p = Triangle::from_matrix(&affinities.p, &order);
    let plogp = p_log_p(&p);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.init_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut grad = vec![[0.0f64; 2]; n];
    let mut num = Triangle::zeros(n);
    let mut kl_trace = Vec::with_capacity(config.iterations);

    for iter in 0..=config.iterations {
        let z = student_t(&y, &mut num);
        let kl = kl_from(&p, &num, z, plogp);
        if !kl.is_finite() {
            return Err(Error::Diverged { iteration: iter });
        }
        kl_trace.push(kl);
        if iter == config.iterations {
            break;
        }

        let exaggeration = if iter < config.early_exaggeration_iters {
            config.early_exaggeration_factor
        } else {
            1.0
        };
        let momentum = if iter < config.momentum_switch_iter {
            config.initial_momentum
        } else {
            config.final_momentum
        };
        gradient(&p, &num, z, exaggeration, &y, &mut grad);
        if iter == config.early_exaggeration_iters {
            update.iter_mut().for_each(|u| *u = [0.0; 2]);
            gains.iter_mut().for_each(|g| *g = [1.0; 2]);
        }

        for i in 0..n {
            for c in 0..2 {
                let g = grad[i][c];
                let gain = &mut gains[i][c];
                *gain = if (g > 0.0) != (update[i][c] > 0.0) {
                    *gain + 0.2
                } else {
                    *gain * 0.8
                };
                *gain = gain.max(0.01);
                update[i][c] = momentum * update[i][c] - config.learning_rate * *gain * g;
                y[i][c] += update[i][c];
            }
        }
        let mean = y
            .iter()
            .fold([0.0; 2], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        let mean = [mean[0] / n as f64, mean[1] / n as f64];
        for v in y.iter_mut() {
            v[0] -= mean[0];
            v[1] -= mean[1];
        }
    }

    let mut points = Array2::<f64>::zeros((n, 2));
    for (c, &i) in order.iter().enumerate() {
        points[[i, 0]] = y[c][0];
        points[[i, 1]] = y[c][1];
    }
    Ok(Embedding2D {
        ids: affinities.ids.clone(),
        points,
        kl_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn set(rows: Array2<f32>) -> EmbeddingSet {
        let ids = (0..rows.nrows()).map(|i| format!("p{i:03}")).collect();
        EmbeddingSet::new(ids, rows, None).unwrap()
    }

    #[test]
    fn square_corners_symmetric() {
        let s = set(array![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let a = compute_affinities(&s, 2.0).unwrap();
        assert!((a.p.sum() - 1.0).abs() < 1e-12);
        for i in 0..4 {
            assert_eq!(a.p[[i, i]], 0.0);
            for j in 0..4 {
                assert_eq!(a.p[[i, j]], a.p[[j, i]]);
            }
            // Two adjacent corners at distance 1, one diagonal at distance 2.
            assert!((a.p[[i, (i + 1) % 4]] - a.p[[i, (i + 3) % 4]]).abs() < 1e-15);
            assert!((a.entropies[i] - 1.0).abs() < 1e-4);
        }
        assert!((a.p[[0, 2]] - a.p[[1, 3]]).abs() < 1e-15);
        assert!(a.p[[0, 2]] < a.p[[0, 1]]);
    }

    #[test]
    fn coincident_neighbours_are_unreachable() {
        let s = set(array![[1.0], [1.0], [1.0], [1.0], [1.0]]);
        match compute_affinities(&s, 2.0) {
            Err(Error::PerplexityUnreachable { index, .. }) => assert!(index < 5),
            other => panic!("expected unreachable perplexity, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_preconditions() {
        let s = set(array![[0.0], [1.0], [2.0]]);
        assert!(compute_affinities(&s, 1.0).is_err());
        let s = set(array![[0.0], [1.0], [2.0], [4.0]]);
        assert!(compute_affinities(&s, 4.0).is_err());
        assert!(compute_affinities(&s, 0.0).is_err());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let s = set(array![
            [0.0, 0.0],
            [1.0, 0.2],
            [5.0, 5.0],
            [5.5, 4.0],
            [9.0, 0.0],
            [0.3, 8.0]
        ]);
        let a = compute_affinities(&s, 2.0).unwrap();
        let cfg = TsneConfig {
            iterations: 200,
            seed: 11,
            ..Default::default()
        };
        let x = run_tsne(&a, &cfg).unwrap();
        let y = run_tsne(&a, &cfg).unwrap();
        assert_eq!(x.points, y.points);
        assert_eq!(x.kl_trace, y.kl_trace);
        assert!(x.kl_trace.iter().all(|&kl| kl >= 0.0));
    }

    #[test]
    fn perplexity_clamp() {
        let cfg = TsneConfig::default();
        assert_eq!(cfg.effective_perplexity(10), 3.0);
        assert_eq!(cfg.effective_perplexity(1000), 30.0);
    }
}
