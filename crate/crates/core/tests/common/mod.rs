//! Independent oracles and fixtures shared by the integration tests and the
//! acceptance binary. Nothing here calls into the code it checks.

#![allow(dead_code)]

use cikics::synth::Mixture;
use cikics::EmbeddingSet;
use ndarray::Array2;

/// Pairwise precision, recall and F1 by enumerating every unordered pair.
pub fn brute_prf<P: PartialEq, T: PartialEq>(pred: &[P], truth: &[T]) -> (f64, f64, f64) {
    let (mut tp, mut same_pred, mut same_truth) = (0u64, 0u64, 0u64);
    for i in 0..pred.len() {
        for j in i + 1..pred.len() {
            let sp = pred[i] == pred[j];
            let st = truth[i] == truth[j];
            same_pred += sp as u64;
            same_truth += st as u64;
            tp += (sp && st) as u64;
        }
    }
    let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = div(tp, same_pred);
    let r = div(tp, same_truth);
    let f = if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    };
    (p, r, f)
}

/// Lower-middle median of all pairwise squared distances, by sorting.
pub fn brute_median_sq(points: &Array2<f64>) -> f64 {
    let n = points.nrows();
    let mut d = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            d.push((&points.row(i) - &points.row(j)).mapv(|v| v * v).sum());
        }
    }
    d.sort_by(f64::total_cmp);
    d[(d.len() - 1) / 2]
}

/// Plain bisection on the Gaussian precision of one conditional row.
/// Returns (precision, entropy in bits).
pub fn bisection_row(sq_dists: &[f64], perplexity: f64) -> (f64, f64) {
    let entropy_bits = |prec: f64| {
        let w: Vec<f64> = sq_dists.iter().map(|d| (-prec * d).exp()).collect();
        let s: f64 = w.iter().sum();
        -w.iter()
            .map(|v| v / s)
            .filter(|&p| p > 0.0)
            .map(|p| p * p.log2())
            .sum::<f64>()
    };
    let target = perplexity.log2();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while entropy_bits(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy_bits(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let prec = 0.5 * (lo + hi);
    (prec, entropy_bits(prec))
}

/// Central finite differences of `f` at `x`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let up = f(&probe);
            probe[i] = orig - eps;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Largest component error relative to the largest reference component.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

/// Eight well-separated isotropic blobs.
pub fn separated_blobs(per_class: usize, dim: usize, seed: u64) -> EmbeddingSet {
    Mixture::balanced(8, per_class, dim, 40.0, 1.0, seed).generate()
}

/// Eight elongated, partly overlapping classes (N=1600, d=64).
pub fn overlapping_mixture(seed: u64) -> EmbeddingSet {
    overlapping_mixture_sized(200, seed)
}

pub fn overlapping_mixture_sized(per_class: usize, seed: u64) -> EmbeddingSet {
    Mixture::balanced(8, per_class, 64, 6.5, 1.0, seed)
        .with_stretch(8.0)
        .generate()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Majority-label fraction of the given member set.
pub fn group_purity(members: &[usize], labels: &[String]) -> f64 {
    let mut counts = std::collections::HashMap::new();
    for &i in members {
        *counts.entry(&labels[i]).or_insert(0usize) += 1;
    }
    *counts.values().max().unwrap_or(&0) as f64 / members.len() as f64
}
