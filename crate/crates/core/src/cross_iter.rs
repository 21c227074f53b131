//! Cross-iterative under-clustering.
//!
//! Each round clusters the kernel rows of the current abnormal set into k
//! groups, keeps the largest group as the next abnormal set and harvests the
//! other k − 1 as small high-purity "normal" clusters. The normal clusters
//! are then merged, through k-means over their centroids in the 2-D layout,
//! into the requested number of pseudo-labelled clusters `M_1..M_m`.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::EmbeddingSet;
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::kmeans::{self, KMeansParams};

/// Rounds stop once the abnormal set has fewer than this many multiples of k
/// members.
pub const MIN_ABNORMAL_FACTOR: usize = 2;

/// Default per-round cluster count: `round(2√N)`.
pub fn default_k(n: usize) -> usize {
    (2.0 * (n as f64).sqrt()).round() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub cluster_sizes: Vec<usize>,
    /// Index (within this round's clustering) of the cluster kept as abnormal.
    pub abnormal_cluster: usize,
    pub abnormal_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum StopReason {
    Completed,
    AbnormalTooSmall {
        iteration: usize,
        size: usize,
        threshold: usize,
    },
    TooFewDistinct {
        iteration: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ClusterState {
    /// Normal clusters in harvest order; each holds ascending sample indices.
    pub normal_pool: Vec<Vec<usize>>,
    pub abnormal: Vec<usize>,
    /// Merged clusters; `merged[j]` carries `pseudo_labels[j]`.
    pub merged: Vec<Vec<usize>>,
    pub pseudo_labels: Vec<String>,
    /// Merged-cluster index of each normal cluster.
    pub merge_map: Vec<usize>,
    /// h×2 centroids of the normal clusters in the 2-D layout.
    pub centroid_set: Array2<f64>,
    pub trace: Vec<IterationTrace>,
    pub stop: StopReason,
}

impl ClusterState {
    pub fn h(&self) -> usize {
        self.normal_pool.len()
    }

    pub fn m(&self) -> usize {
        self.merged.len()
    }

    pub fn normal_count(&self) -> usize {
        self.normal_pool.iter().map(Vec::len).sum()
    }

    /// Per-sample merged-cluster index, `None` for abnormal samples.
    pub fn merged_labels(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (j, members) in self.merged.iter().enumerate() {
            for &i in members {
                out[i] = Some(j);
            }
        }
        out
    }

    /// Per-sample normal-cluster index, `None` for abnormal samples.
    pub fn normal_labels(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (g, members) in self.normal_pool.iter().enumerate() {
            for &i in members {
                out[i] = Some(g);
            }
        }
        out
    }

    pub fn write_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        for t in &self.trace {
            serde_json::to_writer(&mut out, t).expect("trace serializes");
            out.push(b'\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(|e| Error::io(path, e))
    }
}

/// Runs up to `beta` rounds of k-means over kernel rows, peeling off normal
/// clusters and shrinking the abnormal set.
///
/// Rounds after the first are skipped once the abnormal set holds fewer than
/// `2k` samples; the reason is recorded in [`ClusterState::stop`].
pub fn cross_iterative_cluster(
    kernel: &KernelMatrix,
    k: usize,
    beta: usize,
    seed: u64,
) -> Result<ClusterState> {
    let n = kernel.len();
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2, got {k}")));
    }
    if beta < 1 {
        return Err(Error::invalid("beta must be >= 1"));
    }
    if n <= k {
        return Err(Error::invalid(format!("need N > k, got N={n}, k={k}")));
    }
    let z = &kernel.z;
    let first = z.row(0);
    if z.outer_iter().all(|r| r == first) {
        return Err(Error::DegenerateGeometry(
            "all kernel rows are identical".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut abnormal: Vec<usize> = (0..n).collect();
    let mut normal_pool = Vec::new();
    let mut trace = Vec::new();
    let mut stop = StopReason::Completed;
    let threshold = MIN_ABNORMAL_FACTOR * k;

    for iteration in 1..=beta {
        let round_seed = rng.next_u64();
        if iteration > 1 && abnormal.len() < threshold {
            stop = StopReason::AbnormalTooSmall {
                iteration,
                size: abnormal.len(),
                threshold,
            };
            break;
        }
        let rows = z.select(Axis(0), &abnormal);
        let result = match kmeans::kmeans_with(&rows, &KMeansParams::new(k, round_seed)) {
            Ok(r) => r,
            Err(Error::TooFewDistinct { .. }) if iteration > 1 => {
                stop = StopReason::TooFewDistinct { iteration };
                break;
            }
            Err(e) => return Err(e),
        };
        let groups = result.members();
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        let mut largest = 0;
        for (c, &s) in sizes.iter().enumerate() {
            if s > sizes[largest] {
                largest = c;
            }
        }
        let mut next_abnormal = Vec::new();
        for (c, group) in groups.into_iter().enumerate() {
            let mut members: Vec<usize> = group.into_iter().map(|local| abnormal[local]).collect();
            members.sort_unstable();
            if c == largest {
                next_abnormal = members;
            } else if !members.is_empty() {
                normal_pool.push(members);
            }
        }
        trace.push(IterationTrace {
            iteration,
            cluster_sizes: sizes,
            abnormal_cluster: largest,
            abnormal_size: next_abnormal.len(),
        });
        abnormal = next_abnormal;
    }

    Ok(ClusterState {
        normal_pool,
        abnormal,
        merged: Vec::new(),
        pseudo_labels: Vec::new(),
        merge_map: Vec::new(),
        centroid_set: Array2::zeros((0, 2)),
        trace,
        stop,
    })
}

/// Merges the normal clusters into `m` groups by k-means over their layout
/// centroids, keeping the lowest-inertia result of `restarts` seedings.
/// Each normal cluster moves wholesale; groups are labelled `M_1..M_m` in
/// centroid-cluster order.
pub fn merge_normal_clusters(
    mut state: ClusterState,
    layout: &Array2<f64>,
    m: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusterState> {
    let h = state.h();
    if m < 1 || h < m {
        return Err(Error::invalid(format!(
            "cannot merge {h} normal clusters into {m} groups"
        )));
    }
    let dim = layout.ncols();
    let mut centroids = Array2::<f64>::zeros((h, dim));
    for (g, members) in state.normal_pool.iter().enumerate() {
        let c = layout
            .select(Axis(0), members)
            .mean_axis(Axis(0))
            .expect("non-empty cluster");
        centroids.row_mut(g).assign(&c);
    }

    let assignment: Vec<usize> = if m == h {
        (0..h).collect()
    } else {
        let params = kmeans::KMeansParams {
            restarts,
            ..kmeans::KMeansParams::new(m, seed)
        };
        kmeans::kmeans_with(&centroids, &params)?.labels
    };
    // Drop any merged group k-means left empty, keeping index order.
    let mut used: Vec<usize> = assignment.clone();
    used.sort_unstable();
    used.dedup();
    let remap = |j: usize| used.binary_search(&j).expect("used label");
    let merge_map: Vec<usize> = assignment.iter().map(|&j| remap(j)).collect();

    let mut merged = vec![Vec::new(); used.len()];
    for (g, members) in state.normal_pool.iter().enumerate() {
        merged[merge_map[g]].extend_from_slice(members);
    }
    for group in merged.iter_mut() {
        group.sort_unstable();
    }
    state.pseudo_labels = (1..=merged.len()).map(|j| format!("M_{j}")).collect();
    state.merged = merged;
    state.merge_map = merge_map;
    state.centroid_set = centroids;
    Ok(state)
}

/// The merged samples of `set` labelled with their pseudo-labels, in
/// ascending sample order, together with their original indices.
pub fn pseudo_labeled_training_set(
    state: &ClusterState,
    set: &EmbeddingSet,
) -> Result<(EmbeddingSet, Vec<usize>)> {
    if state.merged.is_empty() {
        return Err(Error::invalid(
            "no merged clusters to build a training set from",
        ));
    }
    let mut rows: Vec<(usize, usize)> = state
        .merged
        .iter()
        .enumerate()
        .flat_map(|(j, members)| members.iter().map(move |&i| (i, j)))
        .collect();
    rows.sort_unstable();
    let indices: Vec<usize> = rows.iter().map(|&(i, _)| i).collect();
    let labels = rows
        .iter()
        .map(|&(_, j)| state.pseudo_labels[j].clone())
        .collect();
    let subset = set.subset(&indices)?.with_labels(Some(labels))?;
    Ok((subset, indices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rbf_kernel_matrix;
    use ndarray::array;

    fn state_with_pool(pool: Vec<Vec<usize>>, abnormal: Vec<usize>) -> ClusterState {
        ClusterState {
            normal_pool: pool,
            abnormal,
            merged: Vec::new(),
            pseudo_labels: Vec::new(),
            merge_map: Vec::new(),
            centroid_set: Array2::zeros((0, 2)),
            trace: Vec::new(),
            stop: StopReason::Completed,
        }
    }

    #[test]
    fn default_k_rounds_two_root_n() {
        assert_eq!(default_k(1600), 80);
        assert_eq!(default_k(10), 6);
    }

    #[test]
    fn two_blobs_single_round() {
        let mut pts = Vec::new();
        for i in 0..30 {
            pts.push([(i % 6) as f64 * 0.1, (i / 6) as f64 * 0.1]);
        }
        for i in 0..10 {
            pts.push([50.0 + (i % 5) as f64 * 0.1, (i / 5) as f64 * 0.1]);
        }
        let layout = Array2::from_shape_fn((40, 2), |(i, c)| pts[i][c]);
        let kernel = rbf_kernel_matrix(&layout, 20.0).unwrap();
        let state = cross_iterative_cluster(&kernel, 2, 1, 7).unwrap();
        assert_eq!(state.h(), 1);
        assert_eq!(state.abnormal.len() + state.normal_count(), 40);
        let mut all: Vec<usize> = state
            .abnormal
            .iter()
            .chain(&state.normal_pool[0])
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
        assert_eq!(state.abnormal, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_degenerate_kernel() {
        let layout = Array2::<f64>::zeros((10, 2));
        let kernel = rbf_kernel_matrix(&layout, 1.0).unwrap();
        assert!(matches!(
            cross_iterative_cluster(&kernel, 2, 1, 0),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn merge_groups_nearby_centroids() {
        let layout = array![[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0], [9.0, 9.0]];
        let state = state_with_pool(vec![vec![0], vec![1], vec![2], vec![3]], vec![4]);
        let merged = merge_normal_clusters(state, &layout, 2, 1, 3).unwrap();
        let mut groups = merged.merged.clone();
        groups.sort();
        assert_eq!(groups, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(merged.pseudo_labels, vec!["M_1", "M_2"]);
        assert_eq!(merged.abnormal, vec![4]);
    }

    #[test]
    fn merge_identity_when_m_equals_h() {
        let layout = array![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        let pool = vec![vec![0, 1], vec![3], vec![2]];
        let merged =
            merge_normal_clusters(state_with_pool(pool.clone(), vec![]), &layout, 3, 1, 0).unwrap();
        assert_eq!(merged.merged, pool);
        assert!(merge_normal_clusters(state_with_pool(pool, vec![]), &layout, 4, 1, 0).is_err());
    }

    #[test]
    fn training_set_from_merged() {
        let ids = (0..4).map(|i| format!("x{i}")).collect();
        let set = EmbeddingSet::new(
            ids,
            Array2::from_shape_fn((4, 2), |(i, j)| (i + j) as f32),
            None,
        )
        .unwrap();
        let mut state = state_with_pool(vec![vec![0, 1], vec![2]], vec![3]);
        state.merged = vec![vec![0, 1], vec![2]];
        state.pseudo_labels = vec!["M_1".into(), "M_2".into()];
        let (train, idx) = pseudo_labeled_training_set(&state, &set).unwrap();
        assert_eq!(idx, vec![0, 1, 2]);
        assert_eq!(train.len(), 4 - state.abnormal.len());
        assert_eq!(train.labels().unwrap(), ["M_1", "M_1", "M_2"]);
    }
}
