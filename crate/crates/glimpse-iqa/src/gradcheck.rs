//! Whole-model finite-difference gradient checking.
//!
//! Pins a set of fixation locations, records one episode plus the
//! supervised loss, and sweeps central differences over every parameter
//! element. Locations must be pinned because hard attention makes the loss
//! discontinuous in the fixation coordinates; the recorded gradient treats
//! them as constants, and the sweep must probe the same smooth function.

use crate::data::synthetic_reference;
use crate::imgproc::{local_contrast_normalize, GrayImage, NormalizedLocation};
use crate::model::{forward_episode, EpisodeMode, ModelConfig, ModelParams};
use crate::tape::rel_err;
use crate::train::total_loss;
use rand::Rng;

/// Worst relative error observed for one named tensor.
#[derive(Clone, Debug)]
pub struct GradCheckEntry {
    pub name: String,
    pub max_rel_err: f64,
    pub elements: usize,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.max_rel_err < self.tolerance)
    }

    /// The offending tensor with the largest error, if any fails.
    pub fn worst_failure(&self) -> Option<&GradCheckEntry> {
        self.entries
            .iter()
            .filter(|e| e.max_rel_err >= self.tolerance)
            .max_by(|a, b| a.max_rel_err.partial_cmp(&b.max_rel_err).unwrap())
    }

    pub fn table(&self) -> String {
        let mut out = String::from("tensor,elements,max_rel_err,status\n");
        for e in &self.entries {
            let status = if e.max_rel_err < self.tolerance { "ok" } else { "FAIL" };
            out.push_str(&format!("{},{},{:.3e},{status}\n", e.name, e.elements, e.max_rel_err));
        }
        out
    }
}

/// Test hook: scales the analytic gradient of one named tensor so the
/// check must flag it.
#[derive(Clone, Copy, Debug, Default)]
pub struct Corruption<'a> {
    pub tensor: Option<&'a str>,
}

fn checking_image(cfg: &ModelConfig, seed: u64) -> GrayImage {
    let side = cfg.glimpse.scales[2] * 2;
    let reference = synthetic_reference(0, side, seed);
    local_contrast_normalize(&reference, 7, 1e-4)
}

/// Compares the BPTT gradient of `L_cla + lambda L_reg` against central
/// finite differences for every parameter, on a pinned-location episode.
pub fn full_model_gradcheck(
    cfg: ModelConfig,
    steps: usize,
    lambda: f64,
    seed: u64,
    tolerance: f64,
    corruption: Corruption<'_>,
) -> GradCheckReport {
    let mut rng = crate::rng::stream(seed, &[0x9c]);
    let params = ModelParams::init(cfg, seed);
    let image = checking_image(&cfg, seed);
    let locations: Vec<NormalizedLocation> = (0..steps)
        .map(|_| NormalizedLocation {
            lx: rng.gen::<f64>() * 1.2 - 0.6,
            ly: rng.gen::<f64>() * 1.2 - 0.6,
        })
        .collect();
    let true_class = (rng.gen::<u64>() as usize) % cfg.num_classes;
    let true_mos = 2.0 + rng.gen::<f64>() * 6.0;

    let loss_of = |p: &ModelParams| {
        let mut ep = forward_episode(p, &image, locations[0], steps, EpisodeMode::Pinned(&locations));
        let slot = total_loss(&mut ep, true_class, true_mos, lambda);
        (ep, slot)
    };

    let (episode, loss_slot) = loss_of(&params);
    let grads = episode.tape.backward(loss_slot);
    let analytic = episode.param_grads(&grads);

    let step = 1e-5;
    let mut probe = params.clone();
    let mut entries = Vec::new();
    let names = params.names();
    for (t_idx, name) in names.iter().enumerate() {
        let n = analytic[t_idx].len();
        let corrupt_scale =
            if corruption.tensor == Some(name.as_str()) { 1.02 } else { 1.0 };
        let mut max_err = 0.0_f64;
        for e_idx in 0..n {
            let orig = nth_tensor(&probe, t_idx, |t| t.data()[e_idx]);
            set_nth(&mut probe, t_idx, e_idx, orig + step);
            let (ep_p, slot_p) = loss_of(&probe);
            let plus = ep_p.tape.value(slot_p).item();
            set_nth(&mut probe, t_idx, e_idx, orig - step);
            let (ep_m, slot_m) = loss_of(&probe);
            let minus = ep_m.tape.value(slot_m).item();
            set_nth(&mut probe, t_idx, e_idx, orig);
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[t_idx][e_idx] * corrupt_scale;
            max_err = max_err.max(rel_err(a, numeric, 1e-4));
        }
        entries.push(GradCheckEntry { name: name.clone(), max_rel_err: max_err, elements: n });
    }
    GradCheckReport { entries, tolerance }
}

fn nth_tensor<R>(params: &ModelParams, target: usize, f: impl Fn(&crate::tensor::Tensor) -> R) -> R {
    let mut idx = 0;
    let mut out = None;
    params.for_each(|_, t| {
        if idx == target {
            out = Some(f(t));
        }
        idx += 1;
    });
    out.expect("tensor index in range")
}

fn set_nth(params: &mut ModelParams, target: usize, elem: usize, value: f64) {
    let mut idx = 0;
    params.for_each_mut(|_, t| {
        if idx == target {
            t.data_mut()[elem] = value;
        }
        idx += 1;
    });
}
