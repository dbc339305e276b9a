//! The CLI verbs: train, eval, visualize, gradcheck, synth.
//!
//! Each command is a library function so scripts, tests, and the thin
//! binary share one code path. Every command is deterministic given
//! (config, seed, inputs).

use crate::checkpoint;
use crate::config::{DataSource, RunConfig};
use crate::data::{
    load_image, load_tid2008, prepare, split_by_reference, synthetic_dataset, DatasetIndex,
};
use crate::error::Error;
use crate::gradcheck::{full_model_gradcheck, Corruption, GradCheckReport};
use crate::imgproc::{local_contrast_normalize, NormalizedLocation};
use crate::metrics::{evaluate, MetricReport};
use crate::model::{forward_episode, EpisodeMode, ModelConfig, ModelParams};
use crate::parallel;
use crate::svg::render_scanpath;
use crate::train::{train, EpochRow};
use crate::Result;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Builds the dataset named by the config. Fails before any output file
/// is created, so a bad dataset path never leaves partial artifacts.
pub fn build_dataset(cfg: &RunConfig) -> Result<DatasetIndex> {
    match cfg.source {
        DataSource::Synthetic => {
            Ok(synthetic_dataset(cfg.references, cfg.image_size, cfg.data_seed))
        }
        DataSource::Tid2008 => {
            let root = cfg
                .tid2008_root
                .as_ref()
                .ok_or_else(|| Error::Config("data.tid2008_root is not set".into()))?;
            load_tid2008(root)
        }
    }
}

/// Files written by a training run.
#[derive(Debug)]
pub struct TrainArtifacts {
    pub best_checkpoint: PathBuf,
    pub last_checkpoint: PathBuf,
    pub metrics_csv: PathBuf,
    pub best_epoch: Option<usize>,
    pub best_val_srocc: Option<f64>,
}

/// Full training pipeline: dataset, split, preprocess, train, and write
/// the best/last checkpoints plus the per-epoch metrics CSV.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainArtifacts> {
    cfg.validate()?;
    let dataset = build_dataset(cfg)?;
    let split = split_by_reference(&dataset, cfg.train_frac, cfg.val_frac, cfg.split_seed)?;
    let threads = parallel::thread_count(cfg.threads);
    let train_set = prepare(&dataset, &split.train, cfg.lcn_window, cfg.lcn_eps, threads)?;
    let val_set = prepare(&dataset, &split.val, cfg.lcn_window, cfg.lcn_eps, threads)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let metrics_csv = cfg.out_dir.join("metrics.csv");
    let best_checkpoint = cfg.out_dir.join("best.ckpt");
    let last_checkpoint = cfg.out_dir.join("last.ckpt");
    std::fs::write(cfg.out_dir.join("config.txt"), cfg.to_text())?;

    let mut csv = std::io::BufWriter::new(std::fs::File::create(&metrics_csv)?);
    writeln!(csv, "{}", EpochRow::CSV_HEADER)?;

    let mut params = ModelParams::init(cfg.model_config(dataset.num_classes()), cfg.seed);
    let mut tcfg = cfg.train_config();
    tcfg.threads = threads;
    let mut io_err: Option<std::io::Error> = None;
    let outcome = train(
        &mut params,
        &train_set,
        &val_set,
        &dataset.class_names,
        &tcfg,
        |row| {
            if io_err.is_none() {
                if let Err(e) = writeln!(csv, "{}", row.to_csv()) {
                    io_err = Some(e);
                }
            }
        },
    )?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    csv.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;

    checkpoint::save(&outcome.best_params, &best_checkpoint)?;
    checkpoint::save(&params, &last_checkpoint)?;
    Ok(TrainArtifacts {
        best_checkpoint,
        last_checkpoint,
        metrics_csv,
        best_epoch: outcome.best_epoch,
        best_val_srocc: outcome.best_val_srocc,
    })
}

/// Files written by an evaluation run.
#[derive(Debug)]
pub struct EvalArtifacts {
    pub report: MetricReport,
    pub report_csv: PathBuf,
    pub report_txt: PathBuf,
    pub confusion_csv: PathBuf,
}

/// Evaluates a checkpoint on the test split with the testing protocol
/// (center start, deterministic fixations).
pub fn cmd_eval(cfg: &RunConfig, ckpt: &Path) -> Result<EvalArtifacts> {
    cfg.validate()?;
    let dataset = build_dataset(cfg)?;
    let split = split_by_reference(&dataset, cfg.train_frac, cfg.val_frac, cfg.split_seed)?;
    let threads = parallel::thread_count(cfg.threads);
    let params = checkpoint::load(ckpt, cfg.model_config(dataset.num_classes()))?;
    let test_set = prepare(&dataset, &split.test, cfg.lcn_window, cfg.lcn_eps, threads)?;
    let report = evaluate(&params, &test_set, cfg.steps, &dataset.class_names, threads)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let report_csv = cfg.out_dir.join("report.csv");
    let report_txt = cfg.out_dir.join("report.txt");
    let confusion_csv = cfg.out_dir.join("confusion.csv");
    std::fs::write(&report_csv, report.to_csv())?;
    std::fs::write(&report_txt, report.summary())?;
    std::fs::write(&confusion_csv, report.confusion_csv(&dataset.class_names))?;
    Ok(EvalArtifacts { report, report_csv, report_txt, confusion_csv })
}

/// Renders the deterministic scanpath of a checkpoint on one image.
pub fn cmd_visualize(cfg: &RunConfig, ckpt: &Path, image_path: &Path, out_svg: &Path) -> Result<()> {
    cfg.validate()?;
    let raw = load_image(image_path)?;
    // class count does not affect the scanpath, but the checkpoint must
    // match the configured widths, so derive it from the source kind
    let num_classes = match cfg.source {
        DataSource::Synthetic => 4,
        DataSource::Tid2008 => 15,
    };
    let params = checkpoint::load(ckpt, cfg.model_config(num_classes))?;
    let normalized = local_contrast_normalize(&raw, cfg.lcn_window, cfg.lcn_eps);
    let episode = forward_episode(
        &params,
        &normalized,
        NormalizedLocation::CENTER,
        cfg.steps,
        EpisodeMode::Eval,
    );
    let mut svg = String::new();
    render_scanpath(&raw, &episode.trace.locations(), &cfg.scales, &mut svg)?;
    if let Some(parent) = out_svg.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out_svg, svg)?;
    Ok(())
}

/// Runs the finite-difference suite on the width-reduced model and
/// reports the per-parameter error table.
pub fn cmd_gradcheck(corrupt: Option<&str>) -> Result<GradCheckReport> {
    let cfg = ModelConfig::reduced(15);
    let report = full_model_gradcheck(cfg, 3, 1.0, 17, 1e-4, Corruption { tensor: corrupt });
    Ok(report)
}

/// Writes the synthetic corpus to disk: one PNG per sample, a
/// `mos_with_names.txt` listing compatible with the TID-style loader, and
/// the index CSV. Returns the number of images written.
pub fn cmd_synth(cfg: &RunConfig, out_dir: &Path) -> Result<usize> {
    cfg.validate()?;
    let dataset = synthetic_dataset(cfg.references, cfg.image_size, cfg.data_seed);
    std::fs::create_dir_all(out_dir)?;
    let mut listing = String::new();
    let mut index_csv = String::from("path,mos,type,level,reference_id\n");
    let mut written = 0usize;
    for s in &dataset.samples {
        // loader-compatible naming: iRR_TT_L.png with 1-based type
        let name = format!("i{:02}_{:02}_{}.png", s.reference_id + 1, s.class + 1, s.level);
        let img = match &s.source {
            crate::data::ImageSource::Memory(img) => img,
            crate::data::ImageSource::File(_) => unreachable!("synthetic corpus is in-memory"),
        };
        crate::data::save_image_png(img, &out_dir.join(&name))?;
        listing.push_str(&format!("{} {name}\n", s.mos));
        index_csv.push_str(&format!("{name},{},{},{},{}\n", s.mos, s.class, s.level, s.reference_id));
        written += 1;
    }
    std::fs::write(out_dir.join("mos_with_names.txt"), listing)?;
    std::fs::write(out_dir.join("index.csv"), index_csv)?;
    Ok(written)
}
