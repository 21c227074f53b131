//! Writes a labelled synthetic embedding set in both file formats.
//!
//! ```text
//! cargo run --example generate_mixture -- out/mixture
//! ```

use cikics::synth::Mixture;
use cikics::{EmbeddingSet, Format};

fn main() -> cikics::Result<()> {
    let stem = std::env::args().nth(1).unwrap_or_else(|| "mixture".into());
    // Eight elongated classes that partly overlap.
    let set = Mixture::balanced(8, 60, 64, 6.5, 1.0, 11)
        .with_stretch(8.0)
        .generate();
    if let Some(parent) = std::path::Path::new(&stem).parent() {
        std::fs::create_dir_all(parent).ok();
    }
    let csv = format!("{stem}.csv");
    let bin = format!("{stem}.bin");
    set.save(&csv, Format::Csv)?;
    set.save(&bin, Format::Binary)?;

    let back = EmbeddingSet::load(&bin, Format::Binary)?;
    assert_eq!(back, set);
    println!("wrote {csv} and {bin}: N={} d={}", set.len(), set.dim());
    Ok(())
}
