//! Sweeps the merged cluster count and writes the table plus SVG charts.

use std::path::Path;

use cikics::pipeline::{self, PipelineConfig};
use cikics::synth::Mixture;

fn main() -> cikics::Result<()> {
    let set = Mixture::balanced(8, 50, 64, 6.5, 1.0, 8)
        .with_stretch(8.0)
        .generate();
    let config = PipelineConfig {
        seed: 8,
        ..Default::default()
    };
    let rows = pipeline::sweep_on_set(set, &config, &[6, 7, 8, 9, 10])?;
    let out = Path::new("sweep_out");
    std::fs::create_dir_all(out).ok();
    pipeline::write_sweep_table(&rows, &out.join("sweep.csv"))?;
    for path in pipeline::write_sweep_plots(&rows, out)? {
        println!("wrote {}", path.display());
    }
    for r in rows.iter().filter(|r| r.algorithm == "cikics") {
        println!("m={:<2} F1 {:.3} NMI {:.3}", r.m, r.f1, r.nmi);
    }
    Ok(())
}
