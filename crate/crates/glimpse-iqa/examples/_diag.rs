// scratch diagnostic, not part of the crate
use glimpse_iqa::checkpoint;
use glimpse_iqa::data::*;
use glimpse_iqa::imgproc::*;
use glimpse_iqa::model::*;

fn main() {
    // (1) coarse-channel discriminability of blockwise severity
    let cfg = GlimpseConfig::new([16, 48, 144], 16);
    println!("coarse-channel mean|v| by blockwise level (center fixation, 20 refs):");
    for level in 1..=4u8 {
        let mut acc = 0.0;
        for r in 0..20u32 {
            let reference = synthetic_reference(500 + r, 160, 7);
            let spec = DistortionSpec { kind: DistortionKind::LocalBlockwise, level, seed: 1000 + r as u64 };
            let (img, _, _) = synth_distort(&reference, &spec);
            let norm = local_contrast_normalize(&img, 7, 1e-4);
            let ref_norm = local_contrast_normalize(&reference, 7, 1e-4);
            let g = extract_glimpse(&norm, NormalizedLocation::CENTER, &cfg);
            let gr = extract_glimpse(&ref_norm, NormalizedLocation::CENTER, &cfg);
            // coarse channel = channel 2; mean |distorted - clean| isolates the block signal
            let d: f64 = g.patches.data()[512..768]
                .iter()
                .zip(&gr.patches.data()[512..768])
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 256.0;
            acc += d;
        }
        println!("  level {level}: {:.4}", acc / 20.0);
    }
    // same for additive as a reference point
    println!("coarse-channel mean|delta| by additive level:");
    for level in 1..=4u8 {
        let mut acc = 0.0;
        for r in 0..20u32 {
            let reference = synthetic_reference(500 + r, 160, 7);
            let spec = DistortionSpec { kind: DistortionKind::AdditiveGaussian, level, seed: 1000 + r as u64 };
            let (img, _, _) = synth_distort(&reference, &spec);
            let norm = local_contrast_normalize(&img, 7, 1e-4);
            let ref_norm = local_contrast_normalize(&reference, 7, 1e-4);
            let g = extract_glimpse(&norm, NormalizedLocation::CENTER, &cfg);
            let gr = extract_glimpse(&ref_norm, NormalizedLocation::CENTER, &cfg);
            let d: f64 = g.patches.data()[512..768]
                .iter()
                .zip(&gr.patches.data()[512..768])
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 256.0;
            acc += d;
        }
        println!("  level {level}: {:.4}", acc / 20.0);
    }

    // (2) learned scanpath spread of the last experiment's checkpoint
    let args: Vec<String> = std::env::args().collect();
    if args.len() > 1 {
        let mcfg = ModelConfig {
            glimpse: cfg,
            conv_channels: [16, 32, 32, 64],
            rnn_hidden: 128,
            fc_hidden: 96,
            num_classes: 4,
        };
        let params = checkpoint::load(std::path::Path::new(&args[1]), mcfg).unwrap();
        println!("\neval-mode scanpaths on 6 held-out blockwise images:");
        for i in 0..6u32 {
            let reference = synthetic_reference(900 + i, 160, 7);
            let spec = DistortionSpec { kind: DistortionKind::LocalBlockwise, level: 3, seed: 7 + i as u64 };
            let (img, _, _) = synth_distort(&reference, &spec);
            let centers = blockwise_centers(&reference, &spec);
            let norm = local_contrast_normalize(&img, 7, 1e-4);
            let ep = forward_episode(&params, &norm, NormalizedLocation::CENTER, 5, EpisodeMode::Eval);
            print!("  img {i}: ");
            for s in &ep.trace.steps {
                let (r, c) = loc_to_pixel(s.location, 160, 160);
                print!("({r:.0},{c:.0}) ");
            }
            let last = ep.trace.steps.last().unwrap().location;
            let (lr, lc) = loc_to_pixel(last, 160, 160);
            let dmin = centers
                .iter()
                .map(|&(r, c)| ((lr - r).powi(2) + (lc - c).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            println!(" | blocks at {:?} | final->nearest {dmin:.0}px", centers.iter().map(|&(r, c)| (r as i32, c as i32)).collect::<Vec<_>>());
        }
    }
}

#[allow(dead_code)]
fn geometry_probe() {}
