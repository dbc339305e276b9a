//! Run configuration: a flat `key = value` text format with `[sections]`.
//!
//! Unknown keys and out-of-range values are rejected with the key name in
//! the message, and `parse(cfg.to_text())` reproduces the config exactly.

use crate::error::Error;
use crate::imgproc::GlimpseConfig;
use crate::model::ModelConfig;
use crate::policy::{PolicyConfig, RewardSpec};
use crate::train::TrainConfig;
use crate::Result;
use std::path::PathBuf;

/// Where training and evaluation images come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic,
    Tid2008,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    // [run]
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 means all cores.
    pub threads: usize,

    // [data]
    pub source: DataSource,
    pub tid2008_root: Option<PathBuf>,
    pub references: u32,
    pub image_size: usize,
    pub data_seed: u64,
    pub split_seed: u64,
    pub train_frac: f64,
    pub val_frac: f64,
    pub lcn_window: usize,
    pub lcn_eps: f64,

    // [glimpse]
    pub scales: [usize; 3],
    pub patch_size: usize,
    pub steps: usize,

    // [model]
    pub conv_channels: [usize; 4],
    pub rnn_hidden: usize,
    pub fc_hidden: usize,

    // [policy]
    pub policy: PolicyConfig,

    // [train]
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub lambda: f64,
    pub alpha_rein: f64,
    pub reward_threshold: f64,
    /// 0 disables clipping.
    pub grad_clip: f64,
    pub reset_saturation: f64,
    pub reset_fraction: f64,
}

impl Default for RunConfig {
    /// Desk-scale synthetic run: finishes on a laptop while following the
    /// full training recipe (exploration schedules scaled to the shorter
    /// epoch budget).
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            threads: 0,
            source: DataSource::Synthetic,
            tid2008_root: None,
            references: 20,
            image_size: 160,
            data_seed: 7,
            split_seed: 1,
            train_frac: 0.6,
            val_frac: 0.2,
            lcn_window: 7,
            lcn_eps: 1e-4,
            scales: [16, 48, 144],
            patch_size: 16,
            steps: 5,
            conv_channels: [8, 16, 16, 32],
            rnn_hidden: 96,
            fc_hidden: 64,
            policy: PolicyConfig {
                sigma_start: 0.16,
                sigma_end: 0.10,
                sigma_decay_epochs: 15,
                epsilon_start: 0.10,
                epsilon_end: 0.0,
                epsilon_decay_epochs: 15,
                baseline: None,
            },
            epochs: 150,
            batch_size: 32,
            lr_start: 0.001,
            lr_end: 0.0001,
            lambda: 1.0,
            alpha_rein: 0.01,
            reward_threshold: 0.7,
            grad_clip: 0.0,
            reset_saturation: 0.999,
            reset_fraction: 0.9,
        }
    }
}

fn bad(key: &str, detail: impl std::fmt::Display) -> Error {
    Error::Config(format!("key `{key}`: {detail}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| bad(key, format!("cannot parse {v:?}")))
}

fn parse_list<const N: usize>(key: &str, v: &str) -> Result<[usize; N]> {
    let parts: Vec<usize> = v
        .split(',')
        .map(|p| parse_num::<usize>(key, p))
        .collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|_| bad(key, format!("expected {N} comma-separated integers")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: malformed section", lineno + 1)))?;
                section = name.trim().to_string();
                if !["run", "data", "glimpse", "model", "policy", "train"].contains(&section.as_str())
                {
                    return Err(Error::Config(format!("unknown section `[{section}]`")));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let full = format!("{section}.{key}");
            cfg.set(&full, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    fn set(&mut self, full: &str, v: &str) -> Result<()> {
        match full {
            "run.seed" => self.seed = parse_num(full, v)?,
            "run.out_dir" => self.out_dir = PathBuf::from(v),
            "run.threads" => self.threads = parse_num(full, v)?,
            "data.source" => {
                self.source = match v {
                    "synthetic" => DataSource::Synthetic,
                    "tid2008" => DataSource::Tid2008,
                    other => return Err(bad(full, format!("unknown source {other:?}"))),
                }
            }
            "data.tid2008_root" => {
                self.tid2008_root = if v.is_empty() { None } else { Some(PathBuf::from(v)) }
            }
            "data.references" => self.references = parse_num(full, v)?,
            "data.image_size" => self.image_size = parse_num(full, v)?,
            "data.data_seed" => self.data_seed = parse_num(full, v)?,
            "data.split_seed" => self.split_seed = parse_num(full, v)?,
            "data.train_frac" => self.train_frac = parse_num(full, v)?,
            "data.val_frac" => self.val_frac = parse_num(full, v)?,
            "data.lcn_window" => self.lcn_window = parse_num(full, v)?,
            "data.lcn_eps" => self.lcn_eps = parse_num(full, v)?,
            "glimpse.scales" => self.scales = parse_list::<3>(full, v)?,
            "glimpse.patch_size" => self.patch_size = parse_num(full, v)?,
            "glimpse.steps" => self.steps = parse_num(full, v)?,
            "model.conv_channels" => self.conv_channels = parse_list::<4>(full, v)?,
            "model.rnn_hidden" => self.rnn_hidden = parse_num(full, v)?,
            "model.fc_hidden" => self.fc_hidden = parse_num(full, v)?,
            "policy.sigma_start" => self.policy.sigma_start = parse_num(full, v)?,
            "policy.sigma_end" => self.policy.sigma_end = parse_num(full, v)?,
            "policy.sigma_decay_epochs" => self.policy.sigma_decay_epochs = parse_num(full, v)?,
            "policy.epsilon_start" => self.policy.epsilon_start = parse_num(full, v)?,
            "policy.epsilon_end" => self.policy.epsilon_end = parse_num(full, v)?,
            "policy.epsilon_decay_epochs" => {
                self.policy.epsilon_decay_epochs = parse_num(full, v)?
            }
            "policy.baseline" => match v {
                "none" => self.policy.baseline = None,
                "constant" => {
                    self.policy.baseline = Some(self.policy.baseline.unwrap_or(0.0));
                }
                other => return Err(bad(full, format!("expected none|constant, got {other:?}"))),
            },
            // meaningful together with `baseline = constant`; a later
            // `baseline = none` clears it
            "policy.baseline_value" => self.policy.baseline = Some(parse_num(full, v)?),
            "train.epochs" => self.epochs = parse_num(full, v)?,
            "train.batch_size" => self.batch_size = parse_num(full, v)?,
            "train.lr_start" => self.lr_start = parse_num(full, v)?,
            "train.lr_end" => self.lr_end = parse_num(full, v)?,
            "train.lambda" => self.lambda = parse_num(full, v)?,
            "train.alpha_rein" => self.alpha_rein = parse_num(full, v)?,
            "train.reward_threshold" => self.reward_threshold = parse_num(full, v)?,
            "train.grad_clip" => self.grad_clip = parse_num(full, v)?,
            "train.reset_saturation" => self.reset_saturation = parse_num(full, v)?,
            "train.reset_fraction" => self.reset_fraction = parse_num(full, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(bad(key, msg))
            }
        };
        if self.source == DataSource::Synthetic {
            check(self.references >= 3, "data.references", "need at least 3 reference images")?;
            check(self.image_size >= 64, "data.image_size", "must be at least 64")?;
        }
        check(self.train_frac > 0.0 && self.train_frac < 1.0, "data.train_frac", "must be in (0,1)")?;
        check(self.val_frac > 0.0 && self.val_frac < 1.0, "data.val_frac", "must be in (0,1)")?;
        check(
            self.train_frac + self.val_frac < 1.0,
            "data.train_frac",
            "train_frac + val_frac must leave room for the test split",
        )?;
        check(self.lcn_window % 2 == 1, "data.lcn_window", "must be odd")?;
        check(self.lcn_eps > 0.0, "data.lcn_eps", "must be positive")?;
        check(
            self.scales[0] < self.scales[1] && self.scales[1] < self.scales[2],
            "glimpse.scales",
            "must be strictly increasing",
        )?;
        check(
            self.scales.iter().all(|s| s % self.patch_size == 0),
            "glimpse.scales",
            "every scale must be a multiple of glimpse.patch_size",
        )?;
        check(self.patch_size % 4 == 0, "glimpse.patch_size", "must be divisible by 4")?;
        check(self.steps >= 1, "glimpse.steps", "must be at least 1")?;
        check(
            self.conv_channels.iter().all(|c| c % 4 == 0 && *c > 0),
            "model.conv_channels",
            "channels must be positive multiples of 4",
        )?;
        check(self.rnn_hidden >= 2, "model.rnn_hidden", "too small")?;
        check(self.fc_hidden >= 2, "model.fc_hidden", "too small")?;
        check(self.policy.sigma_start > 0.0, "policy.sigma_start", "must be positive")?;
        check(self.policy.sigma_end > 0.0, "policy.sigma_end", "must be positive")?;
        check(
            (0.0..=1.0).contains(&self.policy.epsilon_start),
            "policy.epsilon_start",
            "must be in [0,1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.policy.epsilon_end),
            "policy.epsilon_end",
            "must be in [0,1]",
        )?;
        check(self.epochs >= 1, "train.epochs", "must be at least 1")?;
        check(self.batch_size >= 1, "train.batch_size", "must be at least 1")?;
        check(self.lr_start > 0.0, "train.lr_start", "must be positive")?;
        check(self.lr_end > 0.0, "train.lr_end", "must be positive")?;
        check(self.lambda >= 0.0, "train.lambda", "must be nonnegative")?;
        check(self.alpha_rein >= 0.0, "train.alpha_rein", "must be nonnegative")?;
        check(self.reward_threshold > 0.0, "train.reward_threshold", "must be positive")?;
        check(self.grad_clip >= 0.0, "train.grad_clip", "must be nonnegative (0 disables)")?;
        check(
            self.reset_saturation > 0.0 && self.reset_saturation <= 1.0,
            "train.reset_saturation",
            "must be in (0,1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.reset_fraction),
            "train.reset_fraction",
            "must be in [0,1]",
        )?;
        if self.source == DataSource::Tid2008 {
            check(
                self.tid2008_root.is_some(),
                "data.tid2008_root",
                "required when data.source = tid2008",
            )?;
        }
        Ok(())
    }

    /// Canonical text form; `parse` of this text reproduces `self`.
    pub fn to_text(&self) -> String {
        let source = match self.source {
            DataSource::Synthetic => "synthetic",
            DataSource::Tid2008 => "tid2008",
        };
        let root = self
            .tid2008_root
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let list = |xs: &[usize]| {
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        };
        let (baseline, baseline_value) = match self.policy.baseline {
            None => ("none", 0.0),
            Some(v) => ("constant", v),
        };
        format!(
            "[run]\n\
             seed = {}\n\
             out_dir = {}\n\
             threads = {}\n\
             \n[data]\n\
             source = {source}\n\
             tid2008_root = {root}\n\
             references = {}\n\
             image_size = {}\n\
             data_seed = {}\n\
             split_seed = {}\n\
             train_frac = {}\n\
             val_frac = {}\n\
             lcn_window = {}\n\
             lcn_eps = {}\n\
             \n[glimpse]\n\
             scales = {}\n\
             patch_size = {}\n\
             steps = {}\n\
             \n[model]\n\
             conv_channels = {}\n\
             rnn_hidden = {}\n\
             fc_hidden = {}\n\
             \n[policy]\n\
             sigma_start = {}\n\
             sigma_end = {}\n\
             sigma_decay_epochs = {}\n\
             epsilon_start = {}\n\
             epsilon_end = {}\n\
             epsilon_decay_epochs = {}\n\
             baseline_value = {baseline_value}\n\
             baseline = {baseline}\n\
             \n[train]\n\
             epochs = {}\n\
             batch_size = {}\n\
             lr_start = {}\n\
             lr_end = {}\n\
             lambda = {}\n\
             alpha_rein = {}\n\
             reward_threshold = {}\n\
             grad_clip = {}\n\
             reset_saturation = {}\n\
             reset_fraction = {}\n",
            self.seed,
            self.out_dir.display(),
            self.threads,
            self.references,
            self.image_size,
            self.data_seed,
            self.split_seed,
            self.train_frac,
            self.val_frac,
            self.lcn_window,
            self.lcn_eps,
            list(&self.scales),
            self.patch_size,
            self.steps,
            list(&self.conv_channels),
            self.rnn_hidden,
            self.fc_hidden,
            self.policy.sigma_start,
            self.policy.sigma_end,
            self.policy.sigma_decay_epochs,
            self.policy.epsilon_start,
            self.policy.epsilon_end,
            self.policy.epsilon_decay_epochs,
            self.epochs,
            self.batch_size,
            self.lr_start,
            self.lr_end,
            self.lambda,
            self.alpha_rein,
            self.reward_threshold,
            self.grad_clip,
            self.reset_saturation,
            self.reset_fraction,
        )
    }

    pub fn glimpse_config(&self) -> GlimpseConfig {
        GlimpseConfig::new(self.scales, self.patch_size)
    }

    pub fn model_config(&self, num_classes: usize) -> ModelConfig {
        ModelConfig {
            glimpse: self.glimpse_config(),
            conv_channels: self.conv_channels,
            rnn_hidden: self.rnn_hidden,
            fc_hidden: self.fc_hidden,
            num_classes,
        }
        .validated()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            steps: self.steps,
            lr_start: self.lr_start,
            lr_end: self.lr_end,
            lambda: self.lambda,
            alpha_rein: self.alpha_rein,
            reward: RewardSpec::new(self.reward_threshold),
            policy: self.policy,
            grad_clip: if self.grad_clip > 0.0 { Some(self.grad_clip) } else { None },
            reset_saturation: self.reset_saturation,
            reset_fraction: self.reset_fraction,
            seed: self.seed,
            threads: self.threads,
        }
    }

    /// Applies the environment overrides (`GLIMPSE_IQA_SEED`).
    pub fn with_env_overrides(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var("GLIMPSE_IQA_SEED") {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("GLIMPSE_IQA_SEED: cannot parse {v:?}")))?;
        }
        Ok(self)
    }
}
