use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use cikics::assign::{FinderReference, FinderSpace};
use cikics::kernel::SigmaRule;
use cikics::pipeline::{self, Baseline};
use cikics::{AblationMode, EmbeddingSet, Error, Format, KChoice, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "cikics",
    version,
    about = "Self-supervised clustering of embedding sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write assignments, metrics and traces.
    Run(ConfigArgs),
    /// Run a baseline clustering at the configured cluster count.
    Baseline {
        #[arg(long, default_value = "kmeans")]
        algo: Baseline,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate the pipeline and both baselines over a range of cluster counts.
    Sweep {
        /// Inclusive range such as `6..10`, or a list such as `4,8,12`.
        #[arg(long, default_value = "6..10")]
        range: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score an assignments CSV against the labels of an embedding file.
    Eval {
        #[arg(long)]
        assignments: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Write the metrics JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG charts from a sweep CSV.
    Plot {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Embedding file to cluster.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// `csv` or `binary`.
    #[arg(long)]
    format: Option<Format>,
    /// Number of final clusters m.
    #[arg(long)]
    clusters: Option<usize>,
    /// Per-round cluster count, `auto` or an integer.
    #[arg(long)]
    k: Option<KChoice>,
    /// Number of cross-iterative rounds.
    #[arg(long)]
    beta: Option<usize>,
    /// Candidate classes scored per abnormal sample.
    #[arg(long)]
    mu: Option<usize>,
    /// k-means restarts when merging normal clusters.
    #[arg(long)]
    merge_restarts: Option<usize>,
    /// `cross-iterative` or `global-alignment`.
    #[arg(long)]
    sigma_rule: Option<String>,
    /// `embedding` or `layout`.
    #[arg(long)]
    finder_space: Option<String>,
    /// `members` or `centroid`.
    #[arg(long)]
    finder_reference: Option<String>,
    /// Seed for every random stage.
    #[arg(long)]
    seed: Option<u64>,
    /// `im`, `im_sf`, `im_sn` or `full`.
    #[arg(long)]
    ablation: Option<AblationMode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override any field, nested ones included: `--set tsne.perplexity=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn require_file(path: &Path) -> Result<(), Error> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "no such input file: {}",
            path.display()
        )))
    }
}

fn snake(s: &str) -> String {
    s.replace('-', "_")
}

fn enum_value<T: serde::de::DeserializeOwned>(flag: &str, s: &str) -> Result<T, Error> {
    serde_json::from_value(Value::String(snake(s)))
        .map_err(|_| Error::InvalidArgument(format!("invalid value `{s}` for --{flag}")))
}

fn apply_override(root: &mut Value, entry: &str) -> Result<(), Error> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("--set expects KEY=VALUE, got `{entry}`")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let path: Vec<String> = key.split('.').map(snake).collect();
    let mut node = root;
    for (i, part) in path.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            Error::InvalidArgument(format!("`{key}` does not name a config field"))
        })?;
        if !obj.contains_key(part) {
            return Err(Error::InvalidArgument(format!(
                "unknown config field `{key}`"
            )));
        }
        if i + 1 == path.len() {
            obj.insert(part.clone(), value);
            return Ok(());
        }
        node = obj.get_mut(part).expect("checked");
    }
    Err(Error::InvalidArgument("empty --set key".into()))
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig, Error> {
        let mut c = match &self.config {
            Some(path) => {
                require_file(path)?;
                PipelineConfig::from_json_file(path)?
            }
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.embeddings {
            c.embeddings = v.clone();
        }
        if let Some(v) = self.format {
            c.format = v;
        }
        if let Some(v) = self.clusters {
            c.clusters = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.beta {
            c.beta = v;
        }
        if let Some(v) = self.mu {
            c.mu = v;
        }
        if let Some(v) = self.merge_restarts {
            c.merge_restarts = v;
        }
        if let Some(v) = &self.sigma_rule {
            c.sigma_rule = enum_value::<SigmaRule>("sigma-rule", v)?;
        }
        if let Some(v) = &self.finder_space {
            c.finder_space = enum_value::<FinderSpace>("finder-space", v)?;
        }
        if let Some(v) = &self.finder_reference {
            c.finder_reference = enum_value::<FinderReference>("finder-reference", v)?;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.ablation {
            c.ablation = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if !self.overrides.is_empty() {
            let mut root = serde_json::to_value(&c).expect("config serializes");
            for entry in &self.overrides {
                apply_override(&mut root, entry)?;
            }
            c = serde_json::from_value(root)
                .map_err(|e| Error::InvalidArgument(format!("--set: {e}")))?;
        }
        if c.embeddings.as_os_str().is_empty() {
            return Err(Error::InvalidArgument("--embeddings is required".into()));
        }
        require_file(&c.embeddings)?;
        c.validate()?;
        Ok(c)
    }
}

// Write errors (a closed pipe, say) are not worth failing the run over.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn print_json<T: serde::Serialize>(value: &T) {
    say(&serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let outcome = pipeline::run_pipeline(&config)?;
            let state = &outcome.clustered.state;
            eprintln!(
                "{} samples: {} normal clusters merged into {}, {} assigned from the abnormal cluster; outputs in {}",
                outcome.upstream.set.len(),
                state.h(),
                state.m(),
                state.abnormal.len(),
                config.out.display()
            );
            if let Some(m) = &outcome.metrics {
                print_json(m);
            }
        }
        Command::Baseline { algo, config } => {
            let config = config.resolve()?;
            let outcome = pipeline::run_baseline(&config, algo)?;
            if let Some(m) = &outcome.metrics {
                print_json(m);
            }
        }
        Command::Sweep { range, config } => {
            let m_values = pipeline::parse_m_range(&range)?;
            let config = config.resolve()?;
            let rows = pipeline::sweep_clusters(&config, &m_values)?;
            for r in rows {
                say(&format!(
                    "{:<14} m={:<3} f1={:.4} nmi={:.4} purity={:.4}",
                    r.algorithm, r.m, r.f1, r.nmi, r.purity
                ));
            }
        }
        Command::Eval {
            assignments,
            embeddings,
            format,
            out,
        } => {
            require_file(&embeddings)?;
            require_file(&assignments)?;
            let set = EmbeddingSet::load(&embeddings, format)?;
            let records = cikics::dataset::load_assignments(&assignments)?;
            let report = pipeline::evaluate_assignments(&set, &records)?;
            match out {
                Some(path) => {
                    let text = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
                    std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
                }
                None => print_json(&report),
            }
        }
        Command::Plot { table, out } => {
            require_file(&table)?;
            let rows = pipeline::read_sweep_table(&table)?;
            for path in pipeline::write_sweep_plots(&rows, &out)? {
                say(&path.display().to_string());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
