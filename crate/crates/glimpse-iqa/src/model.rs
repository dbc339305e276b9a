//! The glimpse network: multi-scale CNN encoder, two-layer recurrent
//! aggregator, and the four heads (next location, per-step score, per-step
//! reliability weight, distortion class).
//!
//! One T-step episode is recorded on a single [`GraphTape`], so the
//! supervised loss backpropagates through time across every step. The
//! attended locations themselves enter the tape as constants — hard
//! attention passes no gradient through glimpse extraction — while the
//! location-head means stay on the tape so the REINFORCE seeds can reach
//! the recurrent weights.

use crate::imgproc::{extract_glimpse, GlimpseConfig, GrayImage, NormalizedLocation};
use crate::tape::{Gradients, GraphTape, ValueId};
use crate::tensor::Tensor;
use rand_chacha::ChaCha8Rng;

/// Widths of every layer in the network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub glimpse: GlimpseConfig,
    /// Output channels of the four multi-scale conv layers; each must be
    /// divisible by 4 for the 2:1:1 branch split.
    pub conv_channels: [usize; 4],
    pub rnn_hidden: usize,
    pub fc_hidden: usize,
    pub num_classes: usize,
}

impl ModelConfig {
    /// Full-scale widths: conv 32/64/64/128, RNN 256, other hidden 128.
    pub fn full(num_classes: usize) -> Self {
        ModelConfig {
            glimpse: GlimpseConfig::full(),
            conv_channels: [32, 64, 64, 128],
            rnn_hidden: 256,
            fc_hidden: 128,
            num_classes,
        }
        .validated()
    }

    /// Desk-scale widths for synthetic-corpus experiments.
    pub fn desk(num_classes: usize) -> Self {
        ModelConfig {
            glimpse: GlimpseConfig::new([16, 48, 144], 16),
            conv_channels: [8, 16, 16, 32],
            rnn_hidden: 96,
            fc_hidden: 64,
            num_classes,
        }
        .validated()
    }

    /// Width-reduced configuration for gradient checking.
    pub fn reduced(num_classes: usize) -> Self {
        ModelConfig {
            glimpse: GlimpseConfig::new([8, 16, 32], 8),
            conv_channels: [8, 8, 8, 16],
            rnn_hidden: 32,
            fc_hidden: 16,
            num_classes,
        }
        .validated()
    }

    pub fn validated(self) -> Self {
        assert!(self.num_classes >= 2, "need at least two classes");
        for c in self.conv_channels {
            assert!(c % 4 == 0, "conv channels must be divisible by 4 for the 2:1:1 split");
        }
        let out = self.glimpse.output;
        assert!(out % 4 == 0, "glimpse output side must be divisible by 4 (two 2x2 pools)");
        assert!(out / 4 >= 1, "glimpse output side too small");
        self
    }

    /// Spatial side left after the two 2x2 pools; the last conv layer is
    /// followed by a global average pool of this size (8 for the
    /// full-scale 32x32 glimpse).
    pub fn final_pool(&self) -> usize {
        self.glimpse.output / 4
    }

    /// (kernel-3, kernel-5, kernel-1) output channels for one conv layer
    /// of total width `c`, in the 2:1:1 ratio.
    pub fn branch_split(c: usize) -> (usize, usize, usize) {
        (c / 2, c / 4, c - c / 2 - c / 4)
    }
}

#[derive(Clone, Debug)]
pub struct LinearParams {
    pub w: Tensor,
    pub b: Tensor,
}

#[derive(Clone, Debug)]
pub struct ConvLayerParams {
    pub w3: Tensor,
    pub b3: Tensor,
    pub w5: Tensor,
    pub b5: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
}

#[derive(Clone, Debug)]
pub struct RnnLayerParams {
    pub w_in: Tensor,
    pub w_rec: Tensor,
    pub b: Tensor,
}

/// All learnable tensors. Tensor names and their canonical order are
/// fixed by [`ModelParams::for_each`]; the checkpoint format and the
/// optimizer state both follow that order.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub cfg: ModelConfig,
    pub conv: Vec<ConvLayerParams>,
    pub patch_fc: LinearParams,
    pub loc_fc: LinearParams,
    pub merge_fc: LinearParams,
    pub rnn1: RnnLayerParams,
    pub rnn2: RnnLayerParams,
    pub loc_head: LinearParams,
    pub score_fc1: LinearParams,
    pub score_fc2: LinearParams,
    pub weight_head: LinearParams,
    pub class_fc1: LinearParams,
    pub class_fc2: LinearParams,
}

/// Scale of the location-head initializer; small weights keep the early
/// means near the image center instead of saturating the HardTanh.
pub const LOC_HEAD_INIT_SCALE: f64 = 0.01;

fn init_linear(out: usize, inp: usize, rng: &mut ChaCha8Rng) -> LinearParams {
    LinearParams {
        w: Tensor::he_uniform(vec![out, inp], inp, rng),
        b: Tensor::zeros(vec![out]),
    }
}

impl ModelParams {
    pub fn init(cfg: ModelConfig, seed: u64) -> Self {
        let mut rng = crate::rng::stream(seed, &[0x700d]);
        let mut conv = Vec::with_capacity(4);
        let mut in_c = 3;
        for &out_c in &cfg.conv_channels {
            let (c3, c5, c1) = ModelConfig::branch_split(out_c);
            conv.push(ConvLayerParams {
                w3: Tensor::he_uniform(vec![c3, in_c, 3, 3], in_c * 9, &mut rng),
                b3: Tensor::zeros(vec![c3]),
                w5: Tensor::he_uniform(vec![c5, in_c, 5, 5], in_c * 25, &mut rng),
                b5: Tensor::zeros(vec![c5]),
                w1: Tensor::he_uniform(vec![c1, in_c, 1, 1], in_c, &mut rng),
                b1: Tensor::zeros(vec![c1]),
            });
            in_c = out_c;
        }
        let fc = cfg.fc_hidden;
        let rnn = cfg.rnn_hidden;
        let mut params = ModelParams {
            patch_fc: init_linear(fc, cfg.conv_channels[3], &mut rng),
            loc_fc: init_linear(fc, 2, &mut rng),
            merge_fc: init_linear(fc, 2 * fc, &mut rng),
            rnn1: RnnLayerParams {
                w_in: Tensor::he_uniform(vec![rnn, fc], fc, &mut rng),
                w_rec: Tensor::he_uniform(vec![rnn, rnn], rnn, &mut rng),
                b: Tensor::zeros(vec![rnn]),
            },
            rnn2: RnnLayerParams {
                w_in: Tensor::he_uniform(vec![rnn, rnn], rnn, &mut rng),
                w_rec: Tensor::he_uniform(vec![rnn, rnn], rnn, &mut rng),
                b: Tensor::zeros(vec![rnn]),
            },
            loc_head: LinearParams {
                w: Tensor::small_uniform(vec![2, rnn], LOC_HEAD_INIT_SCALE, &mut rng),
                b: Tensor::zeros(vec![2]),
            },
            score_fc1: init_linear(fc, rnn, &mut rng),
            score_fc2: init_linear(1, fc, &mut rng),
            weight_head: init_linear(1, rnn, &mut rng),
            class_fc1: init_linear(fc, rnn, &mut rng),
            class_fc2: init_linear(cfg.num_classes, fc, &mut rng),
            conv,
            cfg,
        };
        // the score head starts from a mid-range positive bias so early
        // predictions sit inside the MOS range instead of at dead zero
        params.score_fc2.b.data_mut()[0] = 4.0;
        params
    }

    /// Reinitializes the location sampling module (the stability-reset
    /// trick for saturated means).
    pub fn reset_location_head(&mut self, rng: &mut ChaCha8Rng) {
        self.loc_head.w =
            Tensor::small_uniform(vec![2, self.cfg.rnn_hidden], LOC_HEAD_INIT_SCALE, rng);
        self.loc_head.b = Tensor::zeros(vec![2]);
    }

    /// Visits every tensor as (name, tensor) in the canonical order.
    pub fn for_each<'a>(&'a self, mut f: impl FnMut(String, &'a Tensor)) {
        for (i, layer) in self.conv.iter().enumerate() {
            let n = i + 1;
            f(format!("conv{n}.w3"), &layer.w3);
            f(format!("conv{n}.b3"), &layer.b3);
            f(format!("conv{n}.w5"), &layer.w5);
            f(format!("conv{n}.b5"), &layer.b5);
            f(format!("conv{n}.w1"), &layer.w1);
            f(format!("conv{n}.b1"), &layer.b1);
        }
        for (name, lin) in [
            ("glimpse.patch_fc", &self.patch_fc),
            ("glimpse.loc_fc", &self.loc_fc),
            ("glimpse.merge_fc", &self.merge_fc),
        ] {
            f(format!("{name}.w"), &lin.w);
            f(format!("{name}.b"), &lin.b);
        }
        for (name, rnn) in [("rnn1", &self.rnn1), ("rnn2", &self.rnn2)] {
            f(format!("{name}.w_in"), &rnn.w_in);
            f(format!("{name}.w_rec"), &rnn.w_rec);
            f(format!("{name}.b"), &rnn.b);
        }
        for (name, lin) in [
            ("loc_head", &self.loc_head),
            ("score_fc1", &self.score_fc1),
            ("score_fc2", &self.score_fc2),
            ("weight_head", &self.weight_head),
            ("class_fc1", &self.class_fc1),
            ("class_fc2", &self.class_fc2),
        ] {
            f(format!("{name}.w"), &lin.w);
            f(format!("{name}.b"), &lin.b);
        }
    }

    /// Mutable visit in the same canonical order as [`ModelParams::for_each`].
    pub fn for_each_mut(&mut self, mut f: impl FnMut(String, &mut Tensor)) {
        for (i, layer) in self.conv.iter_mut().enumerate() {
            let n = i + 1;
            f(format!("conv{n}.w3"), &mut layer.w3);
            f(format!("conv{n}.b3"), &mut layer.b3);
            f(format!("conv{n}.w5"), &mut layer.w5);
            f(format!("conv{n}.b5"), &mut layer.b5);
            f(format!("conv{n}.w1"), &mut layer.w1);
            f(format!("conv{n}.b1"), &mut layer.b1);
        }
        for (name, lin) in [
            ("glimpse.patch_fc", &mut self.patch_fc),
            ("glimpse.loc_fc", &mut self.loc_fc),
            ("glimpse.merge_fc", &mut self.merge_fc),
        ] {
            f(format!("{name}.w"), &mut lin.w);
            f(format!("{name}.b"), &mut lin.b);
        }
        for (name, rnn) in [("rnn1", &mut self.rnn1), ("rnn2", &mut self.rnn2)] {
            f(format!("{name}.w_in"), &mut rnn.w_in);
            f(format!("{name}.w_rec"), &mut rnn.w_rec);
            f(format!("{name}.b"), &mut rnn.b);
        }
        for (name, lin) in [
            ("loc_head", &mut self.loc_head),
            ("score_fc1", &mut self.score_fc1),
            ("score_fc2", &mut self.score_fc2),
            ("weight_head", &mut self.weight_head),
            ("class_fc1", &mut self.class_fc1),
            ("class_fc2", &mut self.class_fc2),
        ] {
            f(format!("{name}.w"), &mut lin.w);
            f(format!("{name}.b"), &mut lin.b);
        }
    }

    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        self.for_each(|n, t| out.push((n, t)));
        out
    }

    pub fn names(&self) -> Vec<String> {
        self.named().into_iter().map(|(n, _)| n).collect()
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each(|_, t| ok &= t.is_finite());
        ok
    }

    pub fn total_elements(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, t| n += t.numel());
        n
    }
}

/// Fresh per-episode hidden state.
#[derive(Clone, Debug)]
pub struct HiddenState {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

impl HiddenState {
    pub fn zeros(rnn_hidden: usize) -> Self {
        HiddenState { h1: vec![0.0; rnn_hidden], h2: vec![0.0; rnn_hidden] }
    }
}

/// Record of one step of an episode.
#[derive(Clone, Debug)]
pub struct StepTrace {
    /// The location actually attended (clamped into range).
    pub location: NormalizedLocation,
    /// Policy mean that proposed this location; `None` for the initial
    /// fixation, which is supplied and not policy-driven.
    pub mu: Option<(f64, f64)>,
    /// Raw (unclamped) sampled draw; `None` at the initial step and in
    /// deterministic evaluation.
    pub sample: Option<(f64, f64)>,
    pub score: f64,
    pub raw_weight: f64,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

/// Everything recorded during one T-step forward pass, plus the tape slots
/// the trainer needs for BPTT and REINFORCE injection.
#[derive(Debug)]
pub struct EpisodeTrace {
    pub steps: Vec<StepTrace>,
    /// Softmax-normalized reliability weights, one per step, summing to 1.
    pub weights: Vec<f64>,
    /// Aggregated quality score, sum of weight[t] * score[t].
    pub score: f64,
    pub class_logits: Vec<f64>,
    /// Argmax of the logits; ties break toward the lowest index.
    pub pred_class: usize,
    /// HardTanh output slots of the policy means, aligned with
    /// `steps[1..]`.
    pub(crate) mu_slots: Vec<ValueId>,
    pub(crate) score_slot: ValueId,
    pub(crate) logits_slot: ValueId,
}

impl EpisodeTrace {
    pub fn locations(&self) -> Vec<NormalizedLocation> {
        self.steps.iter().map(|s| s.location).collect()
    }
}

/// A completed forward pass: the tape, the parameter slots on it, and the
/// trace.
pub struct Episode {
    pub tape: GraphTape,
    pub slots: ParamSlots,
    pub trace: EpisodeTrace,
}

impl Episode {
    /// Gradients for every parameter, in canonical tensor order.
    pub fn param_grads(&self, grads: &Gradients) -> Vec<Vec<f64>> {
        self.slots.ordered.iter().map(|&id| grads.grad(id).to_vec()).collect()
    }
}

/// Where the next fixation comes from during an episode.
pub enum EpisodeMode<'a> {
    /// Sample stochastically around each predicted mean.
    Train(&'a mut dyn LocationSampler),
    /// Follow the predicted means exactly (testing protocol).
    Eval,
    /// Use the given fixed locations; the initial-location argument is
    /// ignored. This keeps the loss a smooth function of the parameters
    /// for finite-difference checks.
    Pinned(&'a [NormalizedLocation]),
}

/// Sampling interface the episode uses in training mode; implemented by
/// the Gaussian policy.
pub trait LocationSampler {
    /// Returns (raw draw, clamped location).
    fn sample(&mut self, mu: NormalizedLocation) -> ((f64, f64), NormalizedLocation);
}

struct ConvSlots {
    w3: ValueId,
    b3: ValueId,
    w5: ValueId,
    b5: ValueId,
    w1: ValueId,
    b1: ValueId,
}

struct LinSlots {
    w: ValueId,
    b: ValueId,
}

struct RnnSlots {
    w_in: ValueId,
    w_rec: ValueId,
    b: ValueId,
}

/// Tape slots of all parameters for one episode, in canonical order.
pub struct ParamSlots {
    pub ordered: Vec<ValueId>,
    conv: Vec<ConvSlots>,
    patch_fc: LinSlots,
    loc_fc: LinSlots,
    merge_fc: LinSlots,
    rnn1: RnnSlots,
    rnn2: RnnSlots,
    loc_head: LinSlots,
    score_fc1: LinSlots,
    score_fc2: LinSlots,
    weight_head: LinSlots,
    class_fc1: LinSlots,
    class_fc2: LinSlots,
}

fn register(params: &ModelParams, tape: &mut GraphTape) -> ParamSlots {
    let mut ordered = Vec::new();
    let mut push = |tape: &mut GraphTape, t: &Tensor| {
        let id = tape.leaf(t.clone());
        ordered.push(id);
        id
    };
    let mut conv = Vec::with_capacity(params.conv.len());
    for layer in &params.conv {
        conv.push(ConvSlots {
            w3: push(tape, &layer.w3),
            b3: push(tape, &layer.b3),
            w5: push(tape, &layer.w5),
            b5: push(tape, &layer.b5),
            w1: push(tape, &layer.w1),
            b1: push(tape, &layer.b1),
        });
    }
    let lin = |tape: &mut GraphTape, ordered: &mut Vec<ValueId>, l: &LinearParams| {
        let w = tape.leaf(l.w.clone());
        ordered.push(w);
        let b = tape.leaf(l.b.clone());
        ordered.push(b);
        LinSlots { w, b }
    };
    let rnn = |tape: &mut GraphTape, ordered: &mut Vec<ValueId>, r: &RnnLayerParams| {
        let w_in = tape.leaf(r.w_in.clone());
        ordered.push(w_in);
        let w_rec = tape.leaf(r.w_rec.clone());
        ordered.push(w_rec);
        let b = tape.leaf(r.b.clone());
        ordered.push(b);
        RnnSlots { w_in, w_rec, b }
    };
    let patch_fc = lin(tape, &mut ordered, &params.patch_fc);
    let loc_fc = lin(tape, &mut ordered, &params.loc_fc);
    let merge_fc = lin(tape, &mut ordered, &params.merge_fc);
    let rnn1 = rnn(tape, &mut ordered, &params.rnn1);
    let rnn2 = rnn(tape, &mut ordered, &params.rnn2);
    let loc_head = lin(tape, &mut ordered, &params.loc_head);
    let score_fc1 = lin(tape, &mut ordered, &params.score_fc1);
    let score_fc2 = lin(tape, &mut ordered, &params.score_fc2);
    let weight_head = lin(tape, &mut ordered, &params.weight_head);
    let class_fc1 = lin(tape, &mut ordered, &params.class_fc1);
    let class_fc2 = lin(tape, &mut ordered, &params.class_fc2);
    ParamSlots {
        ordered,
        conv,
        patch_fc,
        loc_fc,
        merge_fc,
        rnn1,
        rnn2,
        loc_head,
        score_fc1,
        score_fc2,
        weight_head,
        class_fc1,
        class_fc2,
    }
}

/// The glimpse encoder g = f_g(x_t, l_t): four multi-scale conv layers on
/// the patch stack, a location pathway, and the merge layer.
fn glimpse_forward(
    tape: &mut GraphTape,
    slots: &ParamSlots,
    cfg: &ModelConfig,
    stack: ValueId,
    loc: ValueId,
) -> ValueId {
    let mut x = stack;
    for (i, layer) in slots.conv.iter().enumerate() {
        let y3 = tape.conv2d(x, layer.w3, layer.b3);
        let y5 = tape.conv2d(x, layer.w5, layer.b5);
        let y1 = tape.conv2d(x, layer.w1, layer.b1);
        let cat = tape.concat(&[y3, y5, y1]);
        x = tape.relu(cat);
        if i == 0 || i == 2 {
            x = tape.avg_pool(x, 2);
        }
    }
    // global average pool over whatever spatial extent remains
    x = tape.avg_pool(x, cfg.final_pool());
    let flat = tape.reshape(x, vec![cfg.conv_channels[3]]);
    let p = tape.linear(flat, slots.patch_fc.w, slots.patch_fc.b);
    let p = tape.relu(p);
    let l = tape.linear(loc, slots.loc_fc.w, slots.loc_fc.b);
    let l = tape.relu(l);
    let cat = tape.concat(&[p, l]);
    let m = tape.linear(cat, slots.merge_fc.w, slots.merge_fc.b);
    tape.relu(m)
}

/// One recurrent update: h = ReLU(W_in u + W_rec h_prev + b), applied to
/// both layers with the first layer's output feeding the second.
fn rnn_step(
    tape: &mut GraphTape,
    rnn: &RnnSlots,
    input: ValueId,
    h_prev: ValueId,
) -> ValueId {
    let a = tape.linear(input, rnn.w_in, rnn.b);
    let r = tape.matvec(h_prev, rnn.w_rec);
    let s = tape.add(a, r);
    tape.relu(s)
}

/// Reliability-weighted score aggregation, s = sum softmax(alpha)_t s_t.
/// Plain-value twin of the on-tape aggregation inside `forward_episode`.
pub fn aggregate_score(scores: &[f64], raw_weights: &[f64]) -> f64 {
    assert_eq!(scores.len(), raw_weights.len(), "length mismatch");
    assert!(!scores.is_empty(), "need at least one step");
    let max = raw_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw_weights.iter().map(|&a| (a - max).exp()).collect();
    let denom: f64 = exps.iter().sum();
    exps.iter().zip(scores).map(|(e, s)| e / denom * s).sum()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Runs a T-step episode and records everything needed for BPTT.
///
/// At each step the current location is embedded as a constant, the
/// glimpse CNN and both recurrent layers run, and the score and weight
/// heads read the new top hidden state. Between steps the location head
/// proposes the next mean; the mode decides whether the next fixation is
/// sampled around it, taken exactly, or overridden. Class logits come from
/// the final hidden state only.
pub fn forward_episode(
    params: &ModelParams,
    img: &GrayImage,
    l0: NormalizedLocation,
    steps: usize,
    mode: EpisodeMode<'_>,
) -> Episode {
    assert!(steps >= 1, "episode needs at least one step");
    let cfg = &params.cfg;
    let mut tape = GraphTape::new();
    let slots = register(params, &mut tape);

    let mut mode = mode;
    let mut location = match &mode {
        EpisodeMode::Pinned(locs) => {
            assert_eq!(locs.len(), steps, "pinned locations must cover every step");
            locs[0]
        }
        _ => NormalizedLocation::clamped(l0.lx, l0.ly),
    };
    let mut mu_next: Option<(f64, f64)> = None;
    let mut sample_next: Option<(f64, f64)> = None;

    let mut h1 = tape.leaf(Tensor::zeros(vec![cfg.rnn_hidden]));
    let mut h2 = tape.leaf(Tensor::zeros(vec![cfg.rnn_hidden]));
    let mut trace_steps: Vec<StepTrace> = Vec::with_capacity(steps);
    let mut mu_slots = Vec::with_capacity(steps.saturating_sub(1));
    let mut score_slots = Vec::with_capacity(steps);
    let mut weight_slots = Vec::with_capacity(steps);

    for t in 0..steps {
        let stack = extract_glimpse(img, location, &cfg.glimpse);
        let stack_id = tape.leaf(stack.patches);
        let loc_id = tape.leaf(Tensor::from_vec(vec![location.lx, location.ly]));
        let g = glimpse_forward(&mut tape, &slots, cfg, stack_id, loc_id);
        h1 = rnn_step(&mut tape, &slots.rnn1, g, h1);
        h2 = rnn_step(&mut tape, &slots.rnn2, h1, h2);

        let s_hidden = tape.linear(h2, slots.score_fc1.w, slots.score_fc1.b);
        let s_hidden = tape.relu(s_hidden);
        let s_pre = tape.linear(s_hidden, slots.score_fc2.w, slots.score_fc2.b);
        let s_t = tape.relu(s_pre);
        let a_t = tape.linear(h2, slots.weight_head.w, slots.weight_head.b);
        score_slots.push(s_t);
        weight_slots.push(a_t);

        trace_steps.push(StepTrace {
            location,
            mu: mu_next,
            sample: sample_next,
            score: tape.value(s_t).item(),
            raw_weight: tape.value(a_t).item(),
            h1: tape.value(h1).data().to_vec(),
            h2: tape.value(h2).data().to_vec(),
        });

        if t + 1 < steps {
            let mu_pre = tape.linear(h2, slots.loc_head.w, slots.loc_head.b);
            let mu_id = tape.hardtanh(mu_pre);
            mu_slots.push(mu_id);
            let mu_v = tape.value(mu_id).data();
            let mu = NormalizedLocation { lx: mu_v[0], ly: mu_v[1] };
            mu_next = Some((mu.lx, mu.ly));
            match &mut mode {
                EpisodeMode::Train(sampler) => {
                    let (raw, clamped) = sampler.sample(mu);
                    sample_next = Some(raw);
                    location = clamped;
                }
                EpisodeMode::Eval => {
                    sample_next = None;
                    location = mu;
                }
                EpisodeMode::Pinned(locs) => {
                    sample_next = None;
                    location = locs[t + 1];
                }
            }
        }
    }

    let hidden = tape.linear(h2, slots.class_fc1.w, slots.class_fc1.b);
    let hidden = tape.relu(hidden);
    let logits_slot = tape.linear(hidden, slots.class_fc2.w, slots.class_fc2.b);

    let scores_vec = tape.stack_scalars(&score_slots);
    let weights_vec = tape.stack_scalars(&weight_slots);
    let weights_norm = tape.softmax(weights_vec);
    let score_slot = tape.dot(weights_norm, scores_vec);

    let class_logits = tape.value(logits_slot).data().to_vec();
    let trace = EpisodeTrace {
        weights: tape.value(weights_norm).data().to_vec(),
        score: tape.value(score_slot).item(),
        pred_class: argmax(&class_logits),
        class_logits,
        steps: trace_steps,
        mu_slots,
        score_slot,
        logits_slot,
    };
    Episode { tape, slots, trace }
}

/// Slot accessors used by the trainer.
impl Episode {
    pub fn score_slot(&self) -> ValueId {
        self.trace.score_slot
    }

    pub fn logits_slot(&self) -> ValueId {
        self.trace.logits_slot
    }

    /// Canonical indices of the location-head tensors within the ordered
    /// parameter list (used by the stability reset).
    pub fn loc_head_indices(params: &ModelParams) -> (usize, usize) {
        let names = params.names();
        let w = names.iter().position(|n| n == "loc_head.w").unwrap();
        let b = names.iter().position(|n| n == "loc_head.b").unwrap();
        (w, b)
    }
}
