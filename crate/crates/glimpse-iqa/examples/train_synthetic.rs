//! A small end-to-end training run on the synthetic corpus.
//!
//! Ten reference images, forty epochs, the full loss (classification +
//! weighted score regression - the policy-gradient term). Prints one line
//! per epoch and the final test report. Takes a couple of minutes on a
//! laptop; the `train` verb of the binary runs the full-size recipe.
//!
//! Run: cargo run --release --example train_synthetic

use glimpse_iqa::commands::{cmd_eval, cmd_train};
use glimpse_iqa::config::RunConfig;

fn main() -> glimpse_iqa::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.references = 10;
    cfg.epochs = 40;
    cfg.policy.sigma_decay_epochs = 8;
    cfg.policy.epsilon_decay_epochs = 8;
    cfg.seed = 3;
    cfg.out_dir = "out/train_synthetic".into();

    println!("training on {} references for {} epochs...", cfg.references, cfg.epochs);
    let artifacts = cmd_train(&cfg)?;
    println!("metrics log: {}", artifacts.metrics_csv.display());
    if let (Some(epoch), Some(srocc)) = (artifacts.best_epoch, artifacts.best_val_srocc) {
        println!("best validation srocc {srocc:.4} at epoch {epoch}");
    }

    let eval = cmd_eval(&cfg, &artifacts.best_checkpoint)?;
    println!("\ntest-split report:\n{}", eval.report.summary());
    Ok(())
}
