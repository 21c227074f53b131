//! Compares the four assigner modes on one shared clustering.

use cikics::pipeline::{self, PipelineConfig};
use cikics::synth::Mixture;

fn main() -> cikics::Result<()> {
    let set = Mixture::balanced(8, 80, 64, 6.5, 1.0, 3)
        .with_stretch(8.0)
        .generate();
    let config = PipelineConfig {
        clusters: 8,
        seed: 3,
        ..Default::default()
    };
    for (mode, assignment, metrics) in pipeline::run_ablation(set, &config)? {
        let m = metrics.unwrap();
        println!(
            "{mode:<6} F1 {:.3} AveAcc {:.3} ({} samples assigned)",
            m.f1,
            m.ave_acc,
            assignment.rows.len()
        );
    }
    Ok(())
}
