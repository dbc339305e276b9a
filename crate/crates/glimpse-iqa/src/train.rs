//! Loss assembly and the training loop.
//!
//! The loss is `L = L_cla + lambda L_reg - alpha J_rein`. The first two
//! terms live on the episode tape; the policy-gradient term enters as
//! injected gradient seeds at the location-mean slots, so one backward
//! sweep per episode yields the full parameter gradient. Episodes within a
//! batch run in parallel with per-item derived seeds and are reduced in a
//! fixed order, which makes the whole trajectory a pure function of
//! (seed, config, data).

use crate::data::PreparedSample;
use crate::error::Error;
use crate::metrics::{evaluate, MetricReport};
use crate::model::{forward_episode, Episode, EpisodeMode, ModelParams};
use crate::optim::{lr_schedule, AdamState};
use crate::parallel;
use crate::policy::{
    reinforce_seeds, reward, schedules, GaussianPolicy, PolicyConfig, RewardSpec,
};
use crate::rng;
use crate::tape::ValueId;
use crate::Result;
use rand::Rng;

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Fixations per episode (T).
    pub steps: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Weight of the score-regression term.
    pub lambda: f64,
    /// Weight of the policy-gradient term.
    pub alpha_rein: f64,
    pub reward: RewardSpec,
    pub policy: PolicyConfig,
    /// Global-norm gradient clip; off by default.
    pub grad_clip: Option<f64>,
    /// A location-mean component counts as saturated when its magnitude
    /// exceeds this.
    pub reset_saturation: f64,
    /// Reset the location head when the saturated fraction over a batch
    /// strictly exceeds this.
    pub reset_fraction: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 32,
            steps: 5,
            lr_start: 0.001,
            lr_end: 0.0001,
            lambda: 1.0,
            alpha_rein: 0.01,
            reward: RewardSpec::default(),
            policy: PolicyConfig::default(),
            grad_clip: None,
            reset_saturation: 0.999,
            reset_fraction: 0.9,
            seed: 0,
            threads: 0,
        }
    }
}

/// Appends the supervised loss to an episode's tape:
/// `nll(logits, class) + lambda * |s - mos|`.
pub fn total_loss(episode: &mut Episode, true_class: usize, true_mos: f64, lambda: f64) -> ValueId {
    let nll = episode.tape.nll_loss(episode.trace.logits_slot, true_class);
    let mae = episode.tape.mae_loss(episode.trace.score_slot, true_mos);
    let scaled = episode.tape.scale(mae, lambda);
    episode.tape.add(nll, scaled)
}

/// Everything one training episode contributes to its batch.
pub struct EpisodeContribution {
    pub grads: Vec<Vec<f64>>,
    pub loss: f64,
    pub reward: f64,
    pub correct: bool,
    /// Count of policy-mean components with magnitude above the
    /// saturation threshold, and the number of components observed.
    pub saturated: (usize, usize),
}

/// Runs one stochastic episode end to end: forward with sampled
/// locations, supervised loss, final-step reward, and one backward sweep
/// with the REINFORCE seeds injected.
#[allow(clippy::too_many_arguments)]
pub fn episode_contribution(
    params: &ModelParams,
    sample: &PreparedSample,
    cfg: &TrainConfig,
    sigma: f64,
    epsilon: f64,
    epoch: usize,
    batch: usize,
    slot: usize,
) -> Result<EpisodeContribution> {
    let mut policy =
        GaussianPolicy::seeded(sigma, epsilon, cfg.seed, &[epoch as u64, batch as u64, slot as u64]);
    let l0 = policy.uniform_location();
    let mut episode =
        forward_episode(params, &sample.image, l0, cfg.steps, EpisodeMode::Train(&mut policy));
    let loss_slot = total_loss(&mut episode, sample.class, sample.mos, cfg.lambda);
    let loss = episode.tape.value(loss_slot).item();
    if !loss.is_finite() {
        return Err(Error::Training(format!(
            "non-finite loss (reference {}, class {})",
            sample.reference_id, sample.class
        )));
    }
    let r = reward(episode.trace.pred_class, sample.class, episode.trace.score, sample.mos, &cfg.reward);
    let advantage = r - cfg.policy.baseline.unwrap_or(0.0);
    let seeds = reinforce_seeds(&episode.trace, advantage, sigma, cfg.alpha_rein);
    let grads = episode.tape.backward_with_seeds(loss_slot, &seeds);

    let mut saturated = 0;
    let mut total = 0;
    for step in &episode.trace.steps {
        if let Some((mx, my)) = step.mu {
            total += 2;
            saturated += (mx.abs() > cfg.reset_saturation) as usize;
            saturated += (my.abs() > cfg.reset_saturation) as usize;
        }
    }
    Ok(EpisodeContribution {
        grads: episode.param_grads(&grads),
        loss,
        reward: r,
        correct: episode.trace.pred_class == sample.class,
        saturated: (saturated, total),
    })
}

/// Saturation statistics over one batch's policy means.
#[derive(Clone, Copy, Debug, Default)]
pub struct MuStats {
    pub saturated: usize,
    pub total: usize,
}

/// The stability-reset trick: when strictly more than `reset_fraction` of
/// the batch's mean components sit hard against the HardTanh rails, the
/// location sampling module is reinitialized (and its optimizer moments
/// cleared). Returns whether a reset fired.
pub fn stability_reset(
    params: &mut ModelParams,
    adam: &mut AdamState,
    stats: MuStats,
    cfg: &TrainConfig,
    reset_rng: &mut rand_chacha::ChaCha8Rng,
) -> bool {
    if stats.total == 0 {
        return false;
    }
    let fraction = stats.saturated as f64 / stats.total as f64;
    if fraction <= cfg.reset_fraction {
        return false;
    }
    params.reset_location_head(reset_rng);
    let (w_idx, b_idx) = Episode::loc_head_indices(params);
    adam.reset_slot(w_idx);
    adam.reset_slot(b_idx);
    true
}

/// Per-epoch training metrics.
#[derive(Clone, Copy, Debug)]
pub struct EpochMetrics {
    pub mean_loss: f64,
    pub mean_reward: f64,
    pub train_acc: f64,
    pub resets: usize,
}

/// One epoch: shuffled mini-batches, parallel episodes, fixed-order
/// gradient reduction, one Adam step per batch.
pub fn train_epoch(
    params: &mut ModelParams,
    adam: &mut AdamState,
    train: &[PreparedSample],
    epoch: usize,
    lr: f64,
    cfg: &TrainConfig,
) -> Result<EpochMetrics> {
    if train.is_empty() {
        return Err(Error::Dataset("training split is empty".into()));
    }
    let (sigma, epsilon) = schedules(epoch, &cfg.policy);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle_rng = rng::stream(cfg.seed, &[0x0e0c, epoch as u64]);
    for i in (1..order.len()).rev() {
        let j = (shuffle_rng.gen::<u64>() as usize) % (i + 1);
        order.swap(i, j);
    }
    let mut reset_rng = rng::stream(cfg.seed, &[0x7e5e7, epoch as u64]);

    let mut loss_sum = 0.0;
    let mut reward_sum = 0.0;
    let mut correct = 0usize;
    let mut resets = 0usize;
    let n_params = params.total_elements();

    for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
        let items: Vec<&PreparedSample> = batch.iter().map(|&i| &train[i]).collect();
        let results = parallel::map_indexed(&items, cfg.threads, |slot, sample| {
            episode_contribution(params, sample, cfg, sigma, epsilon, epoch, batch_idx, slot)
        });

        let m = items.len() as f64;
        let mut batch_grads: Option<Vec<Vec<f64>>> = None;
        let mut stats = MuStats::default();
        for result in results {
            let contrib = result?;
            loss_sum += contrib.loss;
            reward_sum += contrib.reward;
            correct += contrib.correct as usize;
            stats.saturated += contrib.saturated.0;
            stats.total += contrib.saturated.1;
            match &mut batch_grads {
                None => batch_grads = Some(contrib.grads),
                Some(acc) => {
                    for (a, g) in acc.iter_mut().zip(&contrib.grads) {
                        for (x, y) in a.iter_mut().zip(g) {
                            *x += y;
                        }
                    }
                }
            }
        }
        let mut grads = batch_grads.expect("batch cannot be empty");
        for g in &mut grads {
            for v in g.iter_mut() {
                *v /= m;
            }
        }
        if let Some(clip) = cfg.grad_clip {
            let norm: f64 =
                grads.iter().flat_map(|g| g.iter()).map(|v| v * v).sum::<f64>().sqrt();
            if norm > clip {
                let scale = clip / norm;
                for g in &mut grads {
                    for v in g.iter_mut() {
                        *v *= scale;
                    }
                }
            }
        }
        debug_assert_eq!(grads.iter().map(|g| g.len()).sum::<usize>(), n_params);
        adam.step(params, &grads, lr);
        if stability_reset(params, adam, stats, cfg, &mut reset_rng) {
            resets += 1;
        }
    }

    if !params.all_finite() {
        return Err(Error::Training(format!("non-finite parameters after epoch {epoch}")));
    }
    Ok(EpochMetrics {
        mean_loss: loss_sum / train.len() as f64,
        mean_reward: reward_sum / train.len() as f64,
        train_acc: correct as f64 / train.len() as f64,
        resets,
    })
}

/// One row of the per-epoch metrics log.
#[derive(Clone, Debug)]
pub struct EpochRow {
    pub epoch: usize,
    pub lr: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub mean_loss: f64,
    pub mean_reward: f64,
    pub train_acc: f64,
    pub val_srocc: Option<f64>,
    pub val_lcc: Option<f64>,
}

impl EpochRow {
    pub const CSV_HEADER: &'static str =
        "epoch,lr,sigma,epsilon,mean_loss,mean_reward,train_acc,val_srocc,val_lcc";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| match v {
            Some(x) => format!("{x}"),
            None => "undefined".into(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.lr,
            self.sigma,
            self.epsilon,
            self.mean_loss,
            self.mean_reward,
            self.train_acc,
            opt(self.val_srocc),
            opt(self.val_lcc)
        )
    }
}

/// Result of a full training run: the best-validation checkpoint plus its
/// provenance. The parameters passed to [`train`] hold the final-epoch
/// state.
pub struct TrainOutcome {
    pub best_params: ModelParams,
    pub best_epoch: Option<usize>,
    pub best_val_srocc: Option<f64>,
}

/// Drives the whole loop: per epoch trains, evaluates the validation
/// split, reports a row, and tracks the highest-validation-SROCC
/// checkpoint.
pub fn train(
    params: &mut ModelParams,
    train_split: &[PreparedSample],
    val_split: &[PreparedSample],
    class_names: &[String],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRow),
) -> Result<TrainOutcome> {
    let mut adam = AdamState::new(params);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(epoch, cfg.epochs, cfg.lr_start, cfg.lr_end);
        let (sigma, epsilon) = schedules(epoch, &cfg.policy);
        let metrics = train_epoch(params, &mut adam, train_split, epoch, lr, cfg)?;
        let val: Option<MetricReport> = if val_split.is_empty() {
            None
        } else {
            Some(evaluate(params, val_split, cfg.steps, class_names, cfg.threads)?)
        };
        let row = EpochRow {
            epoch,
            lr,
            sigma,
            epsilon,
            mean_loss: metrics.mean_loss,
            mean_reward: metrics.mean_reward,
            train_acc: metrics.train_acc,
            val_srocc: val.as_ref().and_then(|r| r.srocc),
            val_lcc: val.as_ref().and_then(|r| r.lcc),
        };
        if let Some(srocc) = row.val_srocc {
            let better = match &best {
                None => true,
                Some((s, _, _)) => srocc > *s,
            };
            if better {
                best = Some((srocc, epoch, params.clone()));
            }
        }
        on_epoch(&row);
    }
    match best {
        Some((srocc, epoch, p)) => Ok(TrainOutcome {
            best_params: p,
            best_epoch: Some(epoch),
            best_val_srocc: Some(srocc),
        }),
        // no epoch had a defined validation SROCC; fall back to the final
        // parameters so a checkpoint always exists
        None => Ok(TrainOutcome {
            best_params: params.clone(),
            best_epoch: None,
            best_val_srocc: None,
        }),
    }
}
