//! The pipeline against k-means++ on the raw embeddings and single-shot
//! kernel k-means on the t-SNE layout.

use cikics::pipeline::{self, Baseline, PipelineConfig};
use cikics::synth::Mixture;

fn main() -> cikics::Result<()> {
    let set = Mixture::balanced(8, 80, 64, 6.5, 1.0, 4)
        .with_stretch(8.0)
        .generate();
    let config = PipelineConfig {
        clusters: 8,
        seed: 4,
        ..Default::default()
    };
    let up = pipeline::prepare(set, &config)?;
    for algo in [Baseline::Kmeans, Baseline::KernelKmeans] {
        let b = pipeline::baseline_on_set(&up.set, Some(&up.layout), algo, &config)?;
        let m = b.metrics.unwrap();
        println!(
            "{algo:<14} F1 {:.3} NMI {:.3} purity {:.3}",
            m.f1, m.nmi, m.purity
        );
    }
    let outcome = pipeline::run_from_upstream(up, &config)?;
    let m = outcome.metrics.unwrap();
    println!(
        "{:<14} F1 {:.3} NMI {:.3} purity {:.3}",
        "cikics", m.f1, m.nmi, m.purity
    );
    Ok(())
}
