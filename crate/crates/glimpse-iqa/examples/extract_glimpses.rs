//! Multi-scale foveal glimpse extraction on a synthetic texture.
//!
//! Writes the source image and, for a few fixations, the three normalized
//! scale patches, so you can see how the periphery blurs out as the
//! window widens.
//!
//! Run: cargo run --release --example extract_glimpses

use glimpse_iqa::data::{save_image_png, synthetic_reference};
use glimpse_iqa::imgproc::{extract_glimpse, GlimpseConfig, GrayImage, NormalizedLocation};

fn main() -> glimpse_iqa::Result<()> {
    let out_dir = std::path::Path::new("out/glimpses");
    std::fs::create_dir_all(out_dir)?;

    let image = synthetic_reference(3, 160, 42);
    save_image_png(&image, &out_dir.join("source.png"))?;

    let cfg = GlimpseConfig::new([16, 48, 144], 16);
    let fixations = [
        ("center", NormalizedLocation::CENTER),
        ("corner", NormalizedLocation { lx: -0.9, ly: -0.9 }),
        ("offset", NormalizedLocation { lx: 0.5, ly: -0.25 }),
    ];
    for (name, loc) in fixations {
        let stack = extract_glimpse(&image, loc, &cfg);
        let side = cfg.output;
        for (channel, scale) in stack.scales.iter().enumerate() {
            let plane =
                &stack.patches.data()[channel * side * side..(channel + 1) * side * side];
            let patch = GrayImage::new(side, side, plane.to_vec());
            save_image_png(&patch, &out_dir.join(format!("{name}_scale{scale}.png")))?;
        }
        println!(
            "fixation {name:>7} ({:+.2}, {:+.2}): wrote {} patches of {}x{}",
            loc.lx,
            loc.ly,
            stack.scales.len(),
            side,
            side
        );
    }
    println!("see {}", out_dir.display());
    Ok(())
}
