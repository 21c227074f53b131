//! Self-supervised clustering of unlabeled embedding sets.
//!
//! The pipeline lays the embeddings out in two dimensions with t-SNE, builds
//! an RBF kernel over the layout and runs cross-iterative kernel k-means: each
//! round keeps the `k - 1` smaller clusters as "normal" and re-clusters the
//! largest one. After `beta` rounds the normal clusters are merged into `m`
//! pseudo-labelled groups, a classifier and a twin (siamese) scorer are
//! trained on them, and the leftover abnormal samples are assigned by fusing
//! a distance-based finder score with the twin score.
//!
//! ```no_run
//! use cikics::{pipeline, synth::Mixture, PipelineConfig};
//!
//! let set = Mixture::balanced(8, 100, 32, 6.0, 1.0, 7).generate();
//! let config = PipelineConfig { clusters: 8, ..Default::default() };
//! let outcome = pipeline::run_on_set(set, &config).unwrap();
//! println!("{:?}", outcome.metrics.map(|m| m.f1));
//! ```

pub mod assign;
pub mod cross_iter;
pub mod dataset;
pub mod error;
pub mod kernel;
pub mod kmeans;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod plot;
pub mod synth;
pub mod tsne;

pub use assign::{AblationMode, AssignerConfig, Assignment};
pub use cross_iter::ClusterState;
pub use dataset::{AssignmentRecord, EmbeddingSet, Format, Source};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use pipeline::{KChoice, PipelineConfig};
