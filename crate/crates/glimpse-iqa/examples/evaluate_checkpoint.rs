//! Checkpoint round trip: train briefly, save, reload, and verify that
//! evaluation of the reloaded model reproduces the original bit for bit.
//!
//! Run: cargo run --release --example evaluate_checkpoint

use glimpse_iqa::checkpoint;
use glimpse_iqa::commands::{build_dataset, cmd_train};
use glimpse_iqa::config::RunConfig;
use glimpse_iqa::data::{prepare, split_by_reference};
use glimpse_iqa::metrics::evaluate;

fn main() -> glimpse_iqa::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.references = 6;
    cfg.epochs = 8;
    cfg.steps = 3;
    cfg.out_dir = "out/evaluate_checkpoint".into();

    let artifacts = cmd_train(&cfg)?;
    println!("trained; best checkpoint at {}", artifacts.best_checkpoint.display());

    let dataset = build_dataset(&cfg)?;
    let split = split_by_reference(&dataset, cfg.train_frac, cfg.val_frac, cfg.split_seed)?;
    let test = prepare(&dataset, &split.test, cfg.lcn_window, cfg.lcn_eps, 0)?;

    let params = checkpoint::load(&artifacts.best_checkpoint, cfg.model_config(4))?;
    let first = evaluate(&params, &test, cfg.steps, &dataset.class_names, 0)?;
    let again = evaluate(&params, &test, cfg.steps, &dataset.class_names, 0)?;
    assert_eq!(first.srocc, again.srocc, "evaluation must be repeatable");
    assert_eq!(first.confusion, again.confusion);

    println!("{}", first.summary());
    println!("re-evaluation matched exactly");
    Ok(())
}
