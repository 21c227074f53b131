//! Cross-iterative under-clustering followed by the centroid merge.

use cikics::cross_iter;
use cikics::pipeline::{self, PipelineConfig};
use cikics::synth::Mixture;

fn main() -> cikics::Result<()> {
    let set = Mixture::balanced(8, 60, 64, 9.0, 1.0, 5).generate();
    let config = PipelineConfig {
        clusters: 8,
        seed: 5,
        ..Default::default()
    };
    let up = pipeline::prepare(set, &config)?;
    println!("k={} sigma={:.2}", up.k, up.sigma.sigma);

    let state = cross_iter::cross_iterative_cluster(&up.kernel, up.k, config.beta, 5)?;
    for t in &state.trace {
        println!(
            "round {}: abnormal cluster {} of size {} (largest of {:?})",
            t.iteration, t.abnormal_cluster, t.abnormal_size, t.cluster_sizes
        );
    }
    println!("stop: {:?}", state.stop);

    let labels = up.set.labels().expect("generated sets are labelled");
    let pure = state
        .normal_pool
        .iter()
        .filter(|g| g.iter().all(|&i| labels[i] == labels[g[0]]))
        .count();
    println!(
        "{} normal clusters, {pure} of them single-class; {} abnormal samples",
        state.h(),
        state.abnormal.len()
    );

    let merged = cross_iter::merge_normal_clusters(state, &up.layout.points, 8, 10, 5)?;
    for (label, group) in merged.pseudo_labels.iter().zip(&merged.merged) {
        println!("{label}: {} samples", group.len());
    }
    Ok(())
}
