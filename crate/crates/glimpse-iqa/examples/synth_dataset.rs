//! Writes the synthetic distortion corpus to disk: PNGs, the MOS listing,
//! and the index CSV. The listing follows the `score filename` convention
//! the TID-style loader reads, so the emitted tree loads back with
//! `load_tid2008`.
//!
//! Run: cargo run --release --example synth_dataset

use glimpse_iqa::commands::cmd_synth;
use glimpse_iqa::config::RunConfig;
use glimpse_iqa::data::load_tid2008;

fn main() -> glimpse_iqa::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.references = 5;
    let out = std::path::Path::new("out/synth_dataset");

    let written = cmd_synth(&cfg, out)?;
    println!("wrote {written} images to {}", out.display());

    let reloaded = load_tid2008(out)?;
    println!(
        "reloaded {} samples across {} references",
        reloaded.samples.len(),
        reloaded.reference_ids.len()
    );
    for s in reloaded.samples.iter().take(4) {
        println!("  class {:>2}, level {}, mos {}", s.class, s.level, s.mos);
    }
    Ok(())
}
