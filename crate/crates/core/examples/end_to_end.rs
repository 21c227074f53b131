//! File-to-file run: writes an embedding CSV, then runs the pipeline from a
//! configuration exactly as the command-line tool does.

use cikics::pipeline::{self, KChoice, PipelineConfig};
use cikics::synth::Mixture;
use cikics::{AblationMode, Format};

fn main() -> cikics::Result<()> {
    let dir = std::path::PathBuf::from("e2e_out");
    std::fs::create_dir_all(&dir).ok();
    let input = dir.join("embeddings.csv");
    Mixture::balanced(8, 120, 64, 6.5, 1.0, 1)
        .with_stretch(8.0)
        .generate()
        .save(&input, Format::Csv)?;

    let config = PipelineConfig {
        embeddings: input,
        format: Format::Csv,
        clusters: 8,
        k: KChoice::Auto,
        beta: 3,
        mu: 3,
        seed: 1,
        ablation: AblationMode::Full,
        out: dir.clone(),
        ..Default::default()
    };
    let outcome = pipeline::run_pipeline(&config)?;
    println!("stop reason: {:?}", outcome.clustered.state.stop);
    if let Some(m) = outcome.metrics {
        println!(
            "F1 {:.3} NMI {:.3} purity {:.3} FPP {:.3} LPP {:.3}",
            m.f1, m.nmi, m.purity, m.fpp, m.lpp
        );
    }
    for entry in std::fs::read_dir(&dir).unwrap() {
        println!("  {}", entry.unwrap().path().display());
    }
    Ok(())
}
