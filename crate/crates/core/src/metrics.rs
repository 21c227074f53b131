//! External clustering metrics: pair-counting precision/recall/F1, NMI,
//! purity, and per-cluster accuracy aggregates.
//!
//! All functions take a predicted cluster label and a ground-truth class per
//! sample. Both label types are opaque; only equality matters, so every
//! metric is invariant under relabeling.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clusters whose accuracy is below this count as low-purity.
pub const LOW_PURITY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub nmi: f64,
    pub purity: f64,
    pub ave_acc: f64,
    pub min_acc: f64,
    pub fpp: f64,
    pub lpp: f64,
    pub per_cluster_acc: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterQuality {
    /// Majority-label fraction of each cluster, ordered by cluster label.
    pub acc: Vec<f64>,
    pub ave_acc: f64,
    pub min_acc: f64,
    /// Fraction of clusters whose accuracy is exactly 1.
    pub fpp: f64,
    /// Fraction of clusters whose accuracy is below 0.8.
    pub lpp: f64,
}

/// Contingency table keyed by predicted cluster (ordered) then by dense
/// truth-class index.
struct Contingency {
    cells: BTreeMap<usize, BTreeMap<usize, u64>>,
    cluster_sizes: Vec<u64>,
    class_sizes: Vec<u64>,
    n: u64,
}

fn contingency<P, T>(pred: &[P], truth: &[T]) -> Result<Contingency>
where
    P: Ord,
    T: Eq + Hash,
{
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "label length mismatch: {} predicted vs {} truth",
            pred.len(),
            truth.len()
        )));
    }
    let mut cluster_rank: BTreeMap<&P, usize> = pred.iter().map(|p| (p, 0)).collect();
    for (rank, v) in cluster_rank.values_mut().enumerate() {
        *v = rank;
    }
    let mut class_ids: HashMap<&T, usize> = HashMap::new();
    let mut cells: BTreeMap<usize, BTreeMap<usize, u64>> = BTreeMap::new();
    let mut cluster_sizes = vec![0u64; cluster_rank.len()];
    let mut class_sizes = Vec::new();
    for (p, t) in pred.iter().zip(truth) {
        let c = cluster_rank[p];
        let next = class_ids.len();
        let k = *class_ids.entry(t).or_insert(next);
        if k == class_sizes.len() {
            class_sizes.push(0);
        }
        class_sizes[k] += 1;
        cluster_sizes[c] += 1;
        *cells.entry(c).or_default().entry(k).or_default() += 1;
    }
    Ok(Contingency {
        cells,
        cluster_sizes,
        class_sizes,
        n: pred.len() as u64,
    })
}

fn pairs(n: u64) -> u128 {
    let n = n as u128;
    n * n.saturating_sub(1) / 2
}

fn ratio(num: u128, den: u128) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Pair-counting precision, recall and F1 over all unordered sample pairs.
/// Empty denominators give 0.
pub fn pairwise_prf<P, T>(pred: &[P], truth: &[T]) -> Result<PairwiseScores>
where
    P: Ord,
    T: Eq + Hash,
{
    if pred.len() < 2 {
        return Err(Error::invalid("pairwise metrics need at least 2 samples"));
    }
    let c = contingency(pred, truth)?;
    let same_cluster: u128 = c.cluster_sizes.iter().map(|&s| pairs(s)).sum();
    let same_class: u128 = c.class_sizes.iter().map(|&s| pairs(s)).sum();
    let both: u128 = c
        .cells
        .values()
        .flat_map(|row| row.values())
        .map(|&v| pairs(v))
        .sum();
    let precision = ratio(both, same_cluster);
    let recall = ratio(both, same_class);
    Ok(PairwiseScores {
        precision,
        recall,
        f1: harmonic(precision, recall),
    })
}

fn entropy(counts: impl Iterator<Item = u64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `2 I(pred; truth) / (H(pred) + H(truth))`, natural logs; 0 when either
/// entropy is 0.
pub fn nmi<P, T>(pred: &[P], truth: &[T]) -> Result<f64>
where
    P: Ord,
    T: Eq + Hash,
{
    let c = contingency(pred, truth)?;
    if c.n == 0 {
        return Ok(0.0);
    }
    let n = c.n as f64;
    let h_pred = entropy(c.cluster_sizes.iter().copied(), n);
    let h_truth = entropy(c.class_sizes.iter().copied(), n);
    if h_pred <= 0.0 || h_truth <= 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (&i, row) in &c.cells {
        for (&j, &nij) in row {
            let nij = nij as f64;
            let a = c.cluster_sizes[i] as f64;
            let b = c.class_sizes[j] as f64;
            mi += nij / n * (n * nij / (a * b)).ln();
        }
    }
    Ok((2.0 * mi / (h_pred + h_truth)).clamp(0.0, 1.0))
}

/// Fraction of samples carrying the majority class of their cluster.
pub fn purity<P, T>(pred: &[P], truth: &[T]) -> Result<f64>
where
    P: Ord,
    T: Eq + Hash,
{
    let c = contingency(pred, truth)?;
    if c.n == 0 {
        return Err(Error::invalid("purity of an empty labeling"));
    }
    let majority: u64 = c
        .cells
        .values()
        .map(|row| row.values().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / c.n as f64)
}

pub fn per_cluster_quality<P, T>(pred: &[P], truth: &[T]) -> Result<ClusterQuality>
where
    P: Ord,
    T: Eq + Hash,
{
    let c = contingency(pred, truth)?;
    if c.n == 0 {
        return Err(Error::invalid("per-cluster quality of an empty labeling"));
    }
    let acc: Vec<f64> = c
        .cells
        .iter()
        .map(|(&i, row)| *row.values().max().unwrap() as f64 / c.cluster_sizes[i] as f64)
        .collect();
    Ok(quality_from_acc(acc))
}

/// Aggregates a list of per-cluster accuracies.
pub fn quality_from_acc(acc: Vec<f64>) -> ClusterQuality {
    let h = acc.len() as f64;
    let ave_acc = acc.iter().sum::<f64>() / h;
    let min_acc = acc.iter().cloned().fold(f64::INFINITY, f64::min);
    let fpp = acc.iter().filter(|&&a| a == 1.0).count() as f64 / h;
    let lpp = acc.iter().filter(|&&a| a < LOW_PURITY_THRESHOLD).count() as f64 / h;
    ClusterQuality {
        acc,
        ave_acc,
        min_acc,
        fpp,
        lpp,
    }
}

/// Every metric at once.
pub fn evaluate<P, T>(pred: &[P], truth: &[T]) -> Result<MetricsReport>
where
    P: Ord,
    T: Eq + Hash,
{
    let prf = pairwise_prf(pred, truth)?;
    let q = per_cluster_quality(pred, truth)?;
    Ok(MetricsReport {
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        nmi: nmi(pred, truth)?,
        purity: purity(pred, truth)?,
        ave_acc: q.ave_acc,
        min_acc: q.min_acc,
        fpp: q.fpp,
        lpp: q.lpp,
        per_cluster_acc: q.acc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_single_cluster() {
        let truth = ["a", "a", "b", "b"];
        let p = pairwise_prf(&[0, 0, 1, 1], &truth).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
        // 6 pairs, 2 same-class, all same-cluster.
        let p = pairwise_prf(&[0, 0, 0, 0], &truth).unwrap();
        assert_eq!(p.precision, 1.0 / 3.0);
        assert_eq!(p.recall, 1.0);
        assert!((p.f1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_singletons_have_zero_precision_by_convention() {
        let p = pairwise_prf(&[0, 1, 2], &["a", "a", "b"]).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
        assert!(pairwise_prf(&[0, 1], &["a"]).is_err());
    }

    #[test]
    fn nmi_hand_cases() {
        assert!((nmi(&[3, 3, 7, 7, 1], &["x", "x", "y", "y", "z"]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&[0, 0, 0, 0], &["a", "a", "b", "b"]).unwrap(), 0.0);
        // Contingency [[1,1],[1,1]]: every cell equals the independence product.
        assert!(nmi(&[0, 0, 1, 1], &["a", "b", "a", "b"]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn purity_hand_cases() {
        let pred = [0, 0, 0, 1, 1, 1];
        let truth = ["a", "a", "b", "b", "b", "a"];
        assert!((purity(&pred, &truth).unwrap() - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(purity(&[0, 0, 1], &["a", "a", "b"]).unwrap(), 1.0);
    }

    #[test]
    fn per_cluster_hand_cases() {
        let q = per_cluster_quality(&[0, 0, 0, 0], &["a", "a", "a", "b"]).unwrap();
        assert_eq!(q.acc, vec![0.75]);

        let q = quality_from_acc(vec![1.0, 0.75]);
        assert_eq!(
            (q.ave_acc, q.min_acc, q.fpp, q.lpp),
            (0.875, 0.75, 0.5, 0.5)
        );

        let q = per_cluster_quality(&[0, 1, 2, 3], &["a", "b", "a", "c"]).unwrap();
        assert_eq!(q.acc, vec![1.0; 4]);
        assert_eq!((q.fpp, q.lpp), (1.0, 0.0));
    }

    #[test]
    fn acc_is_ordered_by_cluster_label() {
        let q = per_cluster_quality(&[5, 5, 1, 1, 1], &["a", "b", "c", "c", "c"]).unwrap();
        assert_eq!(q.acc, vec![1.0, 0.5]);
    }

    #[test]
    fn report_json_keys() {
        let r = evaluate(&[0, 0, 1, 1], &["a", "a", "b", "b"]).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        for key in [
            "precision",
            "recall",
            "f1",
            "nmi",
            "purity",
            "ave_acc",
            "min_acc",
            "fpp",
            "lpp",
            "per_cluster_acc",
        ] {
            assert!(json.contains(&format!("\"{key}\"")), "{key}");
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(nmi(&[0, 1], &["a"]).is_err());
        assert!(purity(&[0, 1], &["a"]).is_err());
        assert!(per_cluster_quality(&[0, 1], &["a"]).is_err());
    }
}
