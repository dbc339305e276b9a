//! Scanpath rendering: writes an SVG with the fixation boxes a model
//! chooses on a block-distorted synthetic image.
//!
//! Run: cargo run --release --example visualize_scanpath

use glimpse_iqa::data::{save_image_png, synth_distort, synthetic_reference, DistortionKind, DistortionSpec};
use glimpse_iqa::imgproc::{local_contrast_normalize, NormalizedLocation};
use glimpse_iqa::model::{forward_episode, EpisodeMode, ModelConfig, ModelParams};
use glimpse_iqa::svg::render_scanpath;

fn main() -> glimpse_iqa::Result<()> {
    let out_dir = std::path::Path::new("out/scanpath");
    std::fs::create_dir_all(out_dir)?;

    let reference = synthetic_reference(7, 160, 11);
    let spec = DistortionSpec { kind: DistortionKind::LocalBlockwise, level: 3, seed: 23 };
    let (distorted, mos, _) = synth_distort(&reference, &spec);
    save_image_png(&distorted, &out_dir.join("image.png"))?;

    // a freshly initialized model: the path starts near the center and
    // wanders; train a model and point `visualize` at its checkpoint to
    // see a learned path instead
    let params = ModelParams::init(ModelConfig::desk(4), 1);
    let normalized = local_contrast_normalize(&distorted, 7, 1e-4);
    let episode =
        forward_episode(&params, &normalized, NormalizedLocation::CENTER, 5, EpisodeMode::Eval);

    let mut svg = String::new();
    render_scanpath(&distorted, &episode.trace.locations(), &params.cfg.glimpse.scales, &mut svg)?;
    let path = out_dir.join("scanpath.svg");
    std::fs::write(&path, svg)?;

    println!("image mos {mos}, predicted score {:.3}", episode.trace.score);
    println!("fixations:");
    for (t, step) in episode.trace.steps.iter().enumerate() {
        println!("  step {}: ({:+.3}, {:+.3})", t + 1, step.location.lx, step.location.ly);
    }
    println!("wrote {}", path.display());
    Ok(())
}
