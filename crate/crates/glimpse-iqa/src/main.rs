//! Thin command-line front end over the library commands.

use glimpse_iqa::commands;
use glimpse_iqa::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
usage: glimpse-iqa <verb> [flags]

verbs:
  train       train a model            (--config, --out, --seed)
  eval        evaluate a checkpoint    (--config, --checkpoint, --out, --seed)
  visualize   render a scanpath SVG    (--config, --checkpoint, --image, --out)
  gradcheck   finite-difference audit of the backward pass
  synth       write the synthetic dataset to disk (--config, --out)

flags:
  --config PATH      run configuration (defaults apply when omitted)
  --checkpoint PATH  model checkpoint file
  --image PATH       input image (PNG or BMP)
  --out PATH         output directory (or SVG path for visualize)
  --seed N           override the run seed

environment:
  GLIMPSE_IQA_SEED     overrides the seed
  GLIMPSE_IQA_THREADS  overrides the worker thread count";

struct Args {
    verb: String,
    config: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    image: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

fn parse_args(mut argv: std::env::Args) -> Result<Args, String> {
    let _ = argv.next();
    let verb = argv.next().ok_or_else(|| "missing verb".to_string())?;
    let mut args = Args {
        verb,
        config: None,
        checkpoint: None,
        image: None,
        out: None,
        seed: None,
    };
    while let Some(flag) = argv.next() {
        let mut value = |name: &str| {
            argv.next().ok_or_else(|| format!("flag {name} needs a value"))
        };
        match flag.as_str() {
            "--config" => args.config = Some(PathBuf::from(value("--config")?)),
            "--checkpoint" => args.checkpoint = Some(PathBuf::from(value("--checkpoint")?)),
            "--image" => args.image = Some(PathBuf::from(value("--image")?)),
            "--out" => args.out = Some(PathBuf::from(value("--out")?)),
            "--seed" => {
                args.seed = Some(
                    value("--seed")?
                        .parse()
                        .map_err(|_| "flag --seed needs an integer".to_string())?,
                )
            }
            other => return Err(format!("unknown flag {other}")),
        }
    }
    Ok(args)
}

fn load_config(args: &Args) -> glimpse_iqa::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg = cfg.with_env_overrides()?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn require(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf, String> {
    path.clone().ok_or_else(|| format!("{flag} is required for this verb"))
}

fn run() -> Result<(), String> {
    let args = parse_args(std::env::args())?;
    match args.verb.as_str() {
        "train" => {
            let cfg = load_config(&args).map_err(|e| e.to_string())?;
            let artifacts = commands::cmd_train(&cfg).map_err(|e| e.to_string())?;
            println!("wrote {}", artifacts.metrics_csv.display());
            println!("wrote {}", artifacts.best_checkpoint.display());
            println!("wrote {}", artifacts.last_checkpoint.display());
            match (artifacts.best_epoch, artifacts.best_val_srocc) {
                (Some(epoch), Some(srocc)) => {
                    println!("best validation srocc {srocc:.4} at epoch {epoch}")
                }
                _ => println!("validation srocc was undefined for every epoch"),
            }
            Ok(())
        }
        "eval" => {
            let cfg = load_config(&args).map_err(|e| e.to_string())?;
            let ckpt = require(&args.checkpoint, "--checkpoint")?;
            let artifacts = commands::cmd_eval(&cfg, &ckpt).map_err(|e| e.to_string())?;
            print!("{}", artifacts.report.summary());
            println!("wrote {}", artifacts.report_csv.display());
            Ok(())
        }
        "visualize" => {
            let cfg = load_config(&args).map_err(|e| e.to_string())?;
            let ckpt = require(&args.checkpoint, "--checkpoint")?;
            let image = require(&args.image, "--image")?;
            let out = require(&args.out, "--out")?;
            commands::cmd_visualize(&cfg, &ckpt, &image, &out).map_err(|e| e.to_string())?;
            println!("wrote {}", out.display());
            Ok(())
        }
        "gradcheck" => {
            let report = commands::cmd_gradcheck(None).map_err(|e| e.to_string())?;
            print!("{}", report.table());
            if report.passed() {
                println!("gradcheck passed ({} tensors)", report.entries.len());
                Ok(())
            } else {
                let worst = report.worst_failure().expect("failing entry");
                Err(format!(
                    "gradient check failed at {} (rel err {:.3e})",
                    worst.name, worst.max_rel_err
                ))
            }
        }
        "synth" => {
            let cfg = load_config(&args).map_err(|e| e.to_string())?;
            let out = args.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
            let n = commands::cmd_synth(&cfg, &out).map_err(|e| e.to_string())?;
            println!("wrote {n} images to {}", out.display());
            Ok(())
        }
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(format!("unknown verb {other:?}\n{USAGE}")),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(cause) => {
            eprintln!("glimpse-iqa: {}", cause.lines().next().unwrap_or("error"));
            if cause.lines().count() > 1 {
                for line in cause.lines().skip(1) {
                    eprintln!("{line}");
                }
            }
            ExitCode::FAILURE
        }
    }
}
