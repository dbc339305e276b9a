//! Finite-difference audit of the whole backward pass on the
//! width-reduced model, including a negative control that corrupts one
//! tensor's analytic gradient and shows the check catching it.
//!
//! Run: cargo run --release --example gradient_check

use glimpse_iqa::gradcheck::{full_model_gradcheck, Corruption};
use glimpse_iqa::model::ModelConfig;

fn main() {
    let cfg = ModelConfig::reduced(15);
    let report = full_model_gradcheck(cfg, 3, 1.0, 17, 1e-4, Corruption::default());
    print!("{}", report.table());
    println!(
        "clean run: {} ({} tensors)\n",
        if report.passed() { "passed" } else { "FAILED" },
        report.entries.len()
    );

    let corrupted = full_model_gradcheck(
        cfg,
        3,
        1.0,
        17,
        1e-4,
        Corruption { tensor: Some("rnn1.w_rec") },
    );
    match corrupted.worst_failure() {
        Some(entry) => println!(
            "negative control: corrupting rnn1.w_rec is caught at {} (rel err {:.3e})",
            entry.name, entry.max_rel_err
        ),
        None => println!("negative control FAILED to catch the corruption"),
    }
}
