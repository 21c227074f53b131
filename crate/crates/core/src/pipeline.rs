//! End-to-end orchestration: embeddings → t-SNE → kernel → cross-iterative
//! clustering → classifier and twin scorer → abnormal assignment → metrics.
//!
//! Every random choice derives from the single `seed` of [`PipelineConfig`],
//! so a configuration reproduces its outputs byte for byte.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::assign::{self, AblationMode, AssignerConfig, Assignment, FinderReference, FinderSpace};
use crate::cross_iter::{self, ClusterState};
use crate::dataset::{self, AssignmentRecord, EmbeddingSet, Format, Source};
use crate::error::{Error, Result, StageExt};
use crate::kernel::{self, KernelMatrix, SigmaRule, SigmaSchedule};
use crate::kmeans;
use crate::metrics::{self, MetricsReport};
use crate::neural::{self, ClassifierConfig, FeedForwardNet, LabeledData, TwinConfig};
use crate::plot::{self, Series};
use crate::tsne::{self, Embedding2D, TsneConfig};

/// Per-round cluster count of the cross-iterative stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KChoice {
    /// `round(2√N)`.
    #[default]
    Auto,
    Fixed(usize),
}

impl KChoice {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            KChoice::Auto => cross_iter::default_k(n),
            KChoice::Fixed(k) => k,
        }
    }
}

impl FromStr for KChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(KChoice::Auto);
        }
        s.parse()
            .map(KChoice::Fixed)
            .map_err(|_| Error::invalid(format!("k must be `auto` or an integer, got `{s}`")))
    }
}

impl fmt::Display for KChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KChoice::Auto => f.write_str("auto"),
            KChoice::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl Serialize for KChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KChoice::Auto => s.serialize_str("auto"),
            KChoice::Fixed(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for KChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(k) => Ok(KChoice::Fixed(k)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub embeddings: PathBuf,
    pub format: Format,
    /// Final (merged) cluster count m.
    pub clusters: usize,
    pub k: KChoice,
    pub beta: usize,
    /// k-means seedings tried when merging normal clusters.
    pub merge_restarts: usize,
    pub mu: usize,
    pub sigma_rule: SigmaRule,
    /// Stage settings; their own `seed` fields are ignored in favour of
    /// seeds derived from `seed`.
    pub tsne: TsneConfig,
    pub classifier: ClassifierConfig,
    pub twin: TwinConfig,
    pub finder_space: FinderSpace,
    pub finder_reference: FinderReference,
    pub seed: u64,
    pub ablation: AblationMode,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            embeddings: PathBuf::new(),
            format: Format::Csv,
            clusters: 8,
            k: KChoice::Auto,
            beta: 3,
            merge_restarts: 10,
            mu: 3,
            sigma_rule: SigmaRule::CrossIterative,
            tsne: TsneConfig::default(),
            classifier: ClassifierConfig::default(),
            twin: TwinConfig::default(),
            finder_space: FinderSpace::Embedding,
            finder_reference: FinderReference::Members,
            seed: 0,
            ablation: AblationMode::Full,
            out: PathBuf::from("out"),
        }
    }
}

// Stage tags for seed derivation.
const SEED_TSNE: u64 = 1;
const SEED_CROSS: u64 = 2;
const SEED_MERGE: u64 = 3;
const SEED_CLASSIFIER: u64 = 4;
const SEED_TWIN: u64 = 5;
const SEED_BASELINE: u64 = 6;

/// SplitMix64 of the master seed mixed with a stage tag.
pub fn derive_seed(seed: u64, stage: u64) -> u64 {
    let mut z = seed ^ stage.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl PipelineConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
    }

    /// Checks the values that can be validated before seeing the data.
    pub fn validate(&self) -> Result<()> {
        if self.clusters < 1 {
            return Err(Error::invalid("clusters must be >= 1"));
        }
        if let KChoice::Fixed(k) = self.k {
            if k < 2 {
                return Err(Error::invalid("k must be >= 2"));
            }
        }
        if self.beta < 1 {
            return Err(Error::invalid("beta must be >= 1"));
        }
        if self.mu < 1 || self.mu > self.clusters {
            return Err(Error::invalid(format!(
                "mu must lie in 1..={}",
                self.clusters
            )));
        }
        if self.tsne.perplexity.is_nan() || self.tsne.perplexity <= 0.0 {
            return Err(Error::invalid("perplexity must be positive"));
        }
        Ok(())
    }

    /// The configuration with every stage seed replaced by the one actually
    /// used, as recorded in `config.json`.
    pub fn effective(&self) -> PipelineConfig {
        let mut c = self.clone();
        c.tsne.seed = derive_seed(self.seed, SEED_TSNE);
        c.classifier.seed = derive_seed(self.seed, SEED_CLASSIFIER);
        c.twin.seed = derive_seed(self.seed, SEED_TWIN);
        c
    }

    fn tsne_config(&self) -> TsneConfig {
        TsneConfig {
            seed: derive_seed(self.seed, SEED_TSNE),
            ..self.tsne.clone()
        }
    }

    fn assigner_config(&self, mode: AblationMode) -> AssignerConfig {
        AssignerConfig {
            mu: self.mu,
            mode,
            finder_space: self.finder_space,
            finder_reference: self.finder_reference,
        }
    }
}

/// The stages that do not depend on the merged cluster count.
#[derive(Debug, Clone)]
pub struct Upstream {
    pub set: EmbeddingSet,
    pub layout: Embedding2D,
    pub sigma: SigmaSchedule,
    pub kernel: KernelMatrix,
    pub k: usize,
}

pub fn embed(set: &EmbeddingSet, config: &PipelineConfig) -> Result<Embedding2D> {
    let tsne_cfg = config.tsne_config();
    let perplexity = tsne_cfg.effective_perplexity(set.len());
    let affinities = tsne::compute_affinities(set, perplexity).stage("tsne")?;
    tsne::run_tsne(&affinities, &tsne_cfg).stage("tsne")
}

/// t-SNE layout plus the kernel matrix of the cross-iterative stage.
pub fn prepare(set: EmbeddingSet, config: &PipelineConfig) -> Result<Upstream> {
    config.validate()?;
    let layout = embed(&set, config)?;
    prepare_with_layout(set, layout, config)
}

pub fn prepare_with_layout(
    set: EmbeddingSet,
    layout: Embedding2D,
    config: &PipelineConfig,
) -> Result<Upstream> {
    let n = set.len();
    let k = config.k.resolve(n);
    let median = kernel::median_pairwise_sq_dist(&layout.points).stage("kernel")?;
    let sigma =
        kernel::compute_sigma_with(config.sigma_rule, median, k, n, config.beta).stage("kernel")?;
    let kernel = kernel::rbf_kernel_matrix(&layout.points, sigma.sigma).stage("kernel")?;
    Ok(Upstream {
        set,
        layout,
        sigma,
        kernel,
        k,
    })
}

/// Clustering and trained models for one merged cluster count; everything
/// the assigner needs.
#[derive(Debug, Clone)]
pub struct Clustered {
    pub state: ClusterState,
    pub classifier: FeedForwardNet,
    pub twin: FeedForwardNet,
}

pub fn cluster_and_train(up: &Upstream, config: &PipelineConfig) -> Result<Clustered> {
    let state = cross_iter::cross_iterative_cluster(
        &up.kernel,
        up.k,
        config.beta,
        derive_seed(config.seed, SEED_CROSS),
    )
    .stage("cross_iterative")?;
    let state = cross_iter::merge_normal_clusters(
        state,
        &up.layout.points,
        config.clusters,
        config.merge_restarts,
        derive_seed(config.seed, SEED_MERGE),
    )
    .stage("merge")?;
    let (train, _) = cross_iter::pseudo_labeled_training_set(&state, &up.set).stage("merge")?;
    let data = LabeledData::with_classes(&train, state.pseudo_labels.clone()).stage("neural")?;
    let classifier = neural::train_classifier(
        &data,
        &ClassifierConfig {
            seed: derive_seed(config.seed, SEED_CLASSIFIER),
            ..config.classifier.clone()
        },
    )
    .stage("classifier")?;
    let twin = neural::train_siamese(
        &data,
        &TwinConfig {
            seed: derive_seed(config.seed, SEED_TWIN),
            ..config.twin.clone()
        },
    )
    .stage("siamese")?;
    Ok(Clustered {
        state,
        classifier,
        twin,
    })
}

pub fn assign_with(
    up: &Upstream,
    clustered: &Clustered,
    config: &PipelineConfig,
    mode: AblationMode,
) -> Result<Assignment> {
    assign::assign_abnormal(
        &up.set,
        Some(&up.layout.points),
        &clustered.state,
        &clustered.classifier,
        &clustered.twin,
        &config.assigner_config(mode),
    )
    .stage("assign")
}

fn evaluate_labels(set: &EmbeddingSet, labels: &[usize]) -> Result<Option<MetricsReport>> {
    match set.labels() {
        Some(truth) => metrics::evaluate(labels, truth).stage("metrics").map(Some),
        None => Ok(None),
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub upstream: Upstream,
    pub clustered: Clustered,
    pub assignment: Assignment,
    /// Present only when the embeddings carry ground-truth labels.
    pub metrics: Option<MetricsReport>,
}

/// Runs every stage on an in-memory set without touching the filesystem.
pub fn run_on_set(set: EmbeddingSet, config: &PipelineConfig) -> Result<PipelineOutcome> {
    let upstream = prepare(set, config)?;
    run_from_upstream(upstream, config)
}

pub fn run_from_upstream(upstream: Upstream, config: &PipelineConfig) -> Result<PipelineOutcome> {
    let clustered = cluster_and_train(&upstream, config)?;
    let assignment = assign_with(&upstream, &clustered, config, config.ablation)?;
    let metrics = evaluate_labels(&upstream.set, &assignment.cluster_labels())?;
    Ok(PipelineOutcome {
        upstream,
        clustered,
        assignment,
        metrics,
    })
}

/// Metrics for every ablation mode from one shared clustering and one pair
/// of trained models.
pub fn run_ablation(
    set: EmbeddingSet,
    config: &PipelineConfig,
) -> Result<Vec<(AblationMode, Assignment, Option<MetricsReport>)>> {
    let up = prepare(set, config)?;
    let clustered = cluster_and_train(&up, config)?;
    AblationMode::ALL
        .iter()
        .map(|&mode| {
            let a = assign_with(&up, &clustered, config, mode)?;
            let m = evaluate_labels(&up.set, &a.cluster_labels())?;
            Ok((mode, a, m))
        })
        .collect()
}

pub fn load_input(config: &PipelineConfig) -> Result<EmbeddingSet> {
    EmbeddingSet::load(&config.embeddings, config.format).stage("dataset")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub const METRICS_NOTE: &str =
    "Input embeddings carry no ground-truth labels; metrics were not computed.\n";

fn write_metrics_or_note(metrics: Option<&MetricsReport>, dir: &Path, stem: &str) -> Result<()> {
    match metrics {
        Some(m) => write_json(m, &dir.join(format!("{stem}.json"))),
        None => {
            let path = dir.join(format!("{stem}_note.txt"));
            fs::write(&path, METRICS_NOTE).map_err(|e| Error::io(path, e))
        }
    }
}

/// Loads the configured embeddings, runs the pipeline and writes into
/// `config.out`:
///
/// * `assignments.csv`: one record per sample
/// * `metrics.json`, or `metrics_note.txt` when the input has no labels
/// * `iterations.jsonl`: per-round cluster sizes of the cross-iterative stage
/// * `scores.jsonl`: candidate scores of every abnormal sample
/// * `layout.csv`: the 2-D t-SNE layout
/// * `config.json`: the effective configuration
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let set = load_input(config)?;
    let outcome = run_on_set(set, config)?;
    write_outcome(&outcome, config)?;
    Ok(outcome)
}

pub fn write_outcome(outcome: &PipelineOutcome, config: &PipelineConfig) -> Result<()> {
    let dir = &config.out;
    ensure_dir(dir)?;
    dataset::save_assignments(&outcome.assignment.records, dir.join("assignments.csv"))?;
    write_metrics_or_note(outcome.metrics.as_ref(), dir, "metrics")?;
    outcome
        .clustered
        .state
        .write_trace(dir.join("iterations.jsonl"))?;
    outcome.assignment.write_scores(dir.join("scores.jsonl"))?;
    dataset::save_layout(
        outcome.upstream.set.ids(),
        &outcome.upstream.layout.points,
        dir.join("layout.csv"),
    )?;
    write_json(&config.effective(), &dir.join("config.json"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// K-means++ on the raw embeddings.
    Kmeans,
    /// K-means++ on the RBF kernel rows of the t-SNE layout, bandwidth from
    /// a single round (β = 1) at k = m.
    KernelKmeans,
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Baseline::Kmeans),
            "kernel_kmeans" | "kkm" => Ok(Baseline::KernelKmeans),
            other => Err(Error::invalid(format!("unknown baseline `{other}`"))),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Baseline::Kmeans => "kmeans",
            Baseline::KernelKmeans => "kernel_kmeans",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub labels: Vec<usize>,
    pub metrics: Option<MetricsReport>,
}

/// Runs a baseline at `config.clusters` clusters. `layout` is required for
/// the kernel baseline and computed when absent.
pub fn baseline_on_set(
    set: &EmbeddingSet,
    layout: Option<&Embedding2D>,
    algo: Baseline,
    config: &PipelineConfig,
) -> Result<BaselineOutcome> {
    let m = config.clusters;
    let seed = derive_seed(config.seed, SEED_BASELINE);
    let labels = match algo {
        Baseline::Kmeans => {
            kmeans::kmeans(&set.to_f64(), m, seed)
                .stage("kmeans")?
                .labels
        }
        Baseline::KernelKmeans => {
            let owned;
            let layout = match layout {
                Some(l) => l,
                None => {
                    owned = embed(set, config)?;
                    &owned
                }
            };
            let median = kernel::median_pairwise_sq_dist(&layout.points).stage("kernel")?;
            let sigma =
                kernel::compute_sigma_with(config.sigma_rule, median, m.max(2), set.len(), 1)
                    .stage("kernel")?;
            let z = kernel::rbf_kernel_matrix(&layout.points, sigma.sigma).stage("kernel")?;
            kmeans::kmeans(&z.z, m, seed).stage("kernel_kmeans")?.labels
        }
    };
    let metrics = evaluate_labels(set, &labels)?;
    Ok(BaselineOutcome { labels, metrics })
}

fn baseline_records(set: &EmbeddingSet, labels: &[usize]) -> Vec<AssignmentRecord> {
    set.ids()
        .iter()
        .zip(labels)
        .map(|(id, &c)| AssignmentRecord {
            id: id.clone(),
            cluster_index: c,
            pseudo_label: format!("C_{}", c + 1),
            source: Source::Normal,
        })
        .collect()
}

/// Loads the embeddings, runs the baseline and writes
/// `baseline_<algo>_assignments.csv` plus `baseline_<algo>_metrics.json`
/// (or a note file) into `config.out`.
pub fn run_baseline(config: &PipelineConfig, algo: Baseline) -> Result<BaselineOutcome> {
    config.validate()?;
    let set = load_input(config)?;
    let outcome = baseline_on_set(&set, None, algo, config)?;
    ensure_dir(&config.out)?;
    dataset::save_assignments(
        &baseline_records(&set, &outcome.labels),
        config.out.join(format!("baseline_{algo}_assignments.csv")),
    )?;
    write_metrics_or_note(
        outcome.metrics.as_ref(),
        &config.out,
        &format!("baseline_{algo}_metrics"),
    )?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub m: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub nmi: f64,
    pub purity: f64,
}

impl SweepRow {
    fn new(algorithm: &str, m: usize, r: &MetricsReport) -> Self {
        Self {
            algorithm: algorithm.into(),
            m,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            nmi: r.nmi,
            purity: r.purity,
        }
    }
}

pub const SWEEP_ALGORITHMS: [&str; 3] = ["cikics", "kmeans", "kernel_kmeans"];

/// Metrics of the pipeline and both baselines for every merged cluster count
/// in `m_values`. The t-SNE layout and kernel are computed once and shared.
pub fn sweep_on_set(
    set: EmbeddingSet,
    config: &PipelineConfig,
    m_values: &[usize],
) -> Result<Vec<SweepRow>> {
    if set.labels().is_none() {
        return Err(Error::invalid(
            "sweeps need ground-truth labels in the embeddings",
        ));
    }
    if m_values.is_empty() {
        return Err(Error::invalid("empty cluster-count range"));
    }
    let mut base = config.clone();
    base.clusters = *m_values.iter().max().unwrap();
    base.mu = base.mu.min(*m_values.iter().min().unwrap()).max(1);
    base.validate()?;
    let up = prepare(set, &base)?;
    let mut rows = Vec::new();
    for &m in m_values {
        let cfg = PipelineConfig {
            clusters: m,
            mu: config.mu.min(m),
            ..config.clone()
        };
        let clustered = cluster_and_train(&up, &cfg)?;
        let a = assign_with(&up, &clustered, &cfg, cfg.ablation)?;
        let r = evaluate_labels(&up.set, &a.cluster_labels())?.expect("labels checked");
        rows.push(SweepRow::new("cikics", m, &r));
        for algo in [Baseline::Kmeans, Baseline::KernelKmeans] {
            let b = baseline_on_set(&up.set, Some(&up.layout), algo, &cfg)?;
            rows.push(SweepRow::new(
                &algo.to_string(),
                m,
                &b.metrics.expect("labels checked"),
            ));
        }
    }
    Ok(rows)
}

pub fn write_sweep_table(rows: &[SweepRow], path: &Path) -> Result<()> {
    let write = || -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| Error::io(path, std::io::Error::other(e)))
}

pub fn read_sweep_table(path: &Path) -> Result<Vec<SweepRow>> {
    let mut rdr =
        csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// One SVG line chart per metric (`sweep_f1.svg`, `sweep_nmi.svg`,
/// `sweep_purity.svg`) with a line per algorithm. Returns the written paths.
pub fn write_sweep_plots(rows: &[SweepRow], dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut algorithms: Vec<&str> = Vec::new();
    for r in rows {
        if !algorithms.contains(&r.algorithm.as_str()) {
            algorithms.push(&r.algorithm);
        }
    }
    type Column = (&'static str, &'static str, fn(&SweepRow) -> f64);
    let metrics: [Column; 3] = [
        ("f1", "Pairwise F1", |r| r.f1),
        ("nmi", "NMI", |r| r.nmi),
        ("purity", "Purity", |r| r.purity),
    ];
    let mut paths = Vec::new();
    for (key, title, get) in metrics {
        let series: Vec<Series> = algorithms
            .iter()
            .map(|&a| Series {
                name: a.to_string(),
                points: rows
                    .iter()
                    .filter(|r| r.algorithm == a)
                    .map(|r| (r.m as f64, get(r)))
                    .collect(),
            })
            .collect();
        let svg = plot::line_chart(
            &format!("{title} by cluster count"),
            "clusters (m)",
            title,
            &series,
        );
        let path = dir.join(format!("sweep_{key}.svg"));
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads the embeddings, sweeps `m_values` and writes `sweep.csv` and the
/// per-metric SVG charts into `config.out`.
pub fn sweep_clusters(config: &PipelineConfig, m_values: &[usize]) -> Result<Vec<SweepRow>> {
    let set = load_input(config)?;
    let rows = sweep_on_set(set, config, m_values)?;
    ensure_dir(&config.out)?;
    write_sweep_table(&rows, &config.out.join("sweep.csv"))?;
    write_sweep_plots(&rows, &config.out)?;
    Ok(rows)
}

/// Parses `a..b` or `a..=b` (both inclusive) or a comma-separated list.
pub fn parse_m_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::invalid(format!("cannot parse cluster range `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a == 0 || b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

/// Metrics of an assignment file against the labels of an embedding file.
pub fn evaluate_assignments(
    set: &EmbeddingSet,
    records: &[AssignmentRecord],
) -> Result<MetricsReport> {
    let truth = set
        .labels()
        .ok_or_else(|| Error::invalid("embeddings carry no ground-truth labels"))?;
    if records.len() != set.len() {
        return Err(Error::invalid(format!(
            "{} assignment records for {} samples",
            records.len(),
            set.len()
        )));
    }
    let index: std::collections::HashMap<&str, usize> = records
        .iter()
        .map(|r| (r.id.as_str(), r.cluster_index))
        .collect();
    let pred = set
        .ids()
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::invalid(format!("no assignment for id `{id}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    metrics::evaluate(&pred, truth)
}
