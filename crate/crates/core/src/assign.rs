//! Assignment of abnormal-cluster samples to merged clusters.
//!
//! For each abnormal sample the classifier proposes its top-μ pseudo-labels.
//! Each candidate then gets two similarity scores in [0, 1]: a distance-based
//! finder score and the mean twin-network score against the class members.
//! The sample joins the candidate with the highest mean of the two.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::cross_iter::ClusterState;
use crate::dataset::{AssignmentRecord, EmbeddingSet, Source};
use crate::error::{Error, Result};
use crate::neural::FeedForwardNet;

/// Which scores decide the final class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// Classifier argmax only.
    Im,
    /// Best finder score among the top-μ candidates.
    ImSf,
    /// Best twin score among the top-μ candidates.
    ImSn,
    /// Best mean of finder and twin scores.
    #[default]
    Full,
}

impl AblationMode {
    pub const ALL: [AblationMode; 4] = [
        AblationMode::Im,
        AblationMode::ImSf,
        AblationMode::ImSn,
        AblationMode::Full,
    ];
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "im" => Ok(AblationMode::Im),
            "im_sf" => Ok(AblationMode::ImSf),
            "im_sn" => Ok(AblationMode::ImSn),
            "full" => Ok(AblationMode::Full),
            other => Err(Error::invalid(format!("unknown ablation mode `{other}`"))),
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationMode::Im => "im",
            AblationMode::ImSf => "im_sf",
            AblationMode::ImSn => "im_sn",
            AblationMode::Full => "full",
        })
    }
}

/// Space the finder measures distances in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinderSpace {
    /// The original d-dimensional embeddings.
    #[default]
    Embedding,
    /// The 2-D t-SNE layout.
    Layout,
}

/// What the finder measures distance to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinderReference {
    /// Mean squared distance to every class member.
    #[default]
    Members,
    /// Squared distance to the class centroid.
    Centroid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignerConfig {
    pub mu: usize,
    pub mode: AblationMode,
    pub finder_space: FinderSpace,
    pub finder_reference: FinderReference,
}

impl Default for AssignerConfig {
    fn default() -> Self {
        Self {
            mu: 3,
            mode: AblationMode::Full,
            finder_space: FinderSpace::Embedding,
            finder_reference: FinderReference::Members,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub pseudo_label: String,
    pub class_index: usize,
    pub probability: f64,
    pub s_finder: f64,
    pub s_siamese: f64,
    pub s_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScoreRow {
    pub id: String,
    pub candidates: Vec<CandidateScore>,
    pub chosen: String,
}

#[derive(Debug, Clone)]
pub struct Assignment {
    /// One record per input sample, in input order.
    pub records: Vec<AssignmentRecord>,
    /// One row per abnormal sample, in abnormal-set order.
    pub rows: Vec<CandidateScoreRow>,
}

impl Assignment {
    /// Final merged-cluster index of every sample.
    pub fn cluster_labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.cluster_index).collect()
    }

    pub fn write_scores(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        for row in &self.rows {
            serde_json::to_writer(&mut out, row).expect("score row serializes");
            out.push(b'\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(|e| Error::io(path, e))
    }
}

fn sq_dist(a: ArrayView1<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Converts class distances into scores: softmax of `−d_j / T` with `T` the
/// mean distance. Smaller distance, higher score; all-zero distances give a
/// uniform result.
pub fn distance_scores(distances: &[f64]) -> Vec<f64> {
    let n = distances.len() as f64;
    let t = distances.iter().sum::<f64>() / n;
    if t.is_nan() || t <= 0.0 {
        return vec![1.0 / n; distances.len()];
    }
    let logits: Vec<f64> = distances.iter().map(|d| -d / t).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Finder scores of `x` against each candidate class, given as member row
/// indices into `vectors`.
pub fn finder_scores(
    vectors: &Array2<f64>,
    x: &[f64],
    classes: &[&[usize]],
    reference: FinderReference,
) -> Result<Vec<f64>> {
    if classes.is_empty() {
        return Err(Error::invalid("no candidate classes"));
    }
    let mut distances = Vec::with_capacity(classes.len());
    for members in classes {
        if members.is_empty() {
            return Err(Error::invalid("candidate class has no members"));
        }
        let d = match reference {
            FinderReference::Members => {
                members
                    .iter()
                    .map(|&i| sq_dist(vectors.row(i), x))
                    .sum::<f64>()
                    / members.len() as f64
            }
            FinderReference::Centroid => {
                let c = vectors
                    .select(Axis(0), members)
                    .mean_axis(Axis(0))
                    .expect("non-empty");
                sq_dist(c.view(), x)
            }
        };
        distances.push(d);
    }
    Ok(distance_scores(&distances))
}

/// Index of the best score; ties go to the candidate with the lower class
/// index.
fn pick(scores: &[f64], class_index: &[usize]) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best]
            || (scores[i] == scores[best] && class_index[i] < class_index[best])
        {
            best = i;
        }
    }
    best
}

/// Element-wise mean of the two score vectors and the index it selects.
pub fn fuse(s_finder: &[f64], s_siamese: &[f64], class_index: &[usize]) -> (Vec<f64>, usize) {
    let avg: Vec<f64> = s_finder
        .iter()
        .zip(s_siamese)
        .map(|(a, b)| (a + b) / 2.0)
        .collect();
    let chosen = pick(&avg, class_index);
    (avg, chosen)
}

/// Produces one assignment record per sample: merged samples keep their
/// merged cluster (`normal`), abnormal samples get the fused decision
/// (`assigned`).
pub fn assign_abnormal(
    set: &EmbeddingSet,
    layout: Option<&Array2<f64>>,
    state: &ClusterState,
    classifier: &FeedForwardNet,
    twin: &FeedForwardNet,
    config: &AssignerConfig,
) -> Result<Assignment> {
    let n = set.len();
    if state.merged.is_empty() {
        return Err(Error::invalid("no merged clusters to assign into"));
    }
    if classifier.classes() != state.pseudo_labels.as_slice() {
        return Err(Error::invalid(
            "classifier classes do not match the merged pseudo-labels",
        ));
    }
    if config.mu < 1 || config.mu > state.m() {
        return Err(Error::invalid(format!(
            "mu must lie in 1..={}, got {}",
            state.m(),
            config.mu
        )));
    }
    let x = set.to_f64();
    let finder_vectors = match config.finder_space {
        FinderSpace::Embedding => x.clone(),
        FinderSpace::Layout => layout
            .ok_or_else(|| Error::invalid("layout-space finder needs the 2-D layout"))?
            .clone(),
    };
    if finder_vectors.nrows() != n {
        return Err(Error::invalid(
            "finder vectors do not match the embedding set",
        ));
    }

    let labels = state.merged_labels(n);
    let mut records: Vec<Option<AssignmentRecord>> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.map(|j| AssignmentRecord {
                id: set.ids()[i].clone(),
                cluster_index: j,
                pseudo_label: state.pseudo_labels[j].clone(),
                source: Source::Normal,
            })
        })
        .collect();

    // Encode every merged member once; abnormal queries are scored against
    // these.
    let mut encodings: Vec<Option<Vec<f64>>> = vec![None; n];
    if !state.abnormal.is_empty() {
        for members in &state.merged {
            for &i in members {
                encodings[i] = Some(twin.encode(x.row(i).as_slice().expect("contiguous row"))?);
            }
        }
    }

    let mut rows = Vec::with_capacity(state.abnormal.len());
    for &a in &state.abnormal {
        if labels[a].is_some() {
            return Err(Error::invalid(format!(
                "sample {a} is both abnormal and merged"
            )));
        }
        let xa = x.row(a).to_vec();
        let top = classifier.predict_top_mu(&xa, config.mu)?;
        let class_index: Vec<usize> = top.candidates.iter().map(|c| c.class_index).collect();
        let classes: Vec<&[usize]> = class_index
            .iter()
            .map(|&j| state.merged[j].as_slice())
            .collect();
        let query = finder_vectors.row(a).to_vec();
        let s_finder = finder_scores(&finder_vectors, &query, &classes, config.finder_reference)?;
        let ea = twin.encode(&xa)?;
        let s_siamese: Vec<f64> = classes
            .iter()
            .map(|members| {
                let total: f64 = members
                    .iter()
                    .map(|&i| {
                        twin.twin_score_encoded(&ea, encodings[i].as_ref().expect("encoded member"))
                    })
                    .sum();
                total / members.len() as f64
            })
            .collect();
        let (s_avg, fused) = fuse(&s_finder, &s_siamese, &class_index);
        let chosen = match config.mode {
            AblationMode::Im => 0,
            AblationMode::ImSf => pick(&s_finder, &class_index),
            AblationMode::ImSn => pick(&s_siamese, &class_index),
            AblationMode::Full => fused,
        };
        let j = class_index[chosen];
        let candidates = top
            .candidates
            .iter()
            .enumerate()
            .map(|(c, cand)| CandidateScore {
                pseudo_label: cand.label.clone(),
                class_index: cand.class_index,
                probability: cand.probability,
                s_finder: s_finder[c],
                s_siamese: s_siamese[c],
                s_avg: s_avg[c],
            })
            .collect();
        rows.push(CandidateScoreRow {
            id: set.ids()[a].clone(),
            candidates,
            chosen: state.pseudo_labels[j].clone(),
        });
        records[a] = Some(AssignmentRecord {
            id: set.ids()[a].clone(),
            cluster_index: j,
            pseudo_label: state.pseudo_labels[j].clone(),
            source: Source::Assigned,
        });
    }

    let records = records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or_else(|| Error::invalid(format!("sample {i} is neither merged nor abnormal")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Assignment { records, rows })
}
