//! Stochastic location sampling, the multi-task reward, and the REINFORCE
//! gradient term.
//!
//! The policy is an isotropic Gaussian over the next fixation, centered on
//! the location head's output, with epsilon-greedy uniform exploration
//! mixed in. The reward is a binary gate: 1 when the distortion class is
//! right or the score error is under the threshold, assigned only at the
//! final step. The policy-gradient term never has a forward value; it is
//! realized as gradient seeds injected at the recorded mean slots, from
//! which the tape carries them through the location head and the whole
//! recurrent network.

use crate::imgproc::NormalizedLocation;
use crate::model::EpisodeTrace;
use crate::rng;
use crate::tape::ValueId;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Gaussian location sampler with epsilon-greedy exploration.
pub struct GaussianPolicy {
    pub sigma: f64,
    pub epsilon: f64,
    rng: ChaCha8Rng,
}

/// One sampled fixation: the raw Gaussian (or uniform) draw and the
/// clamped location actually attended. The log-density derivative is
/// evaluated at the raw draw; glimpse extraction uses the clamped one.
#[derive(Clone, Copy, Debug)]
pub struct LocationSample {
    pub raw: (f64, f64),
    pub clamped: NormalizedLocation,
}

impl GaussianPolicy {
    pub fn new(sigma: f64, epsilon: f64, rng: ChaCha8Rng) -> Self {
        assert!(sigma > 0.0, "sigma must be positive");
        assert!((0.0..=1.0).contains(&epsilon), "epsilon must be in [0,1]");
        GaussianPolicy { sigma, epsilon, rng }
    }

    pub fn seeded(sigma: f64, epsilon: f64, master: u64, tags: &[u64]) -> Self {
        GaussianPolicy::new(sigma, epsilon, rng::stream(master, tags))
    }

    /// Draws the next fixation. With probability epsilon the draw is
    /// uniform on [-1,1]^2, otherwise Gaussian around `mu`; either way the
    /// attended location is clamped into range.
    pub fn sample(&mut self, mu: NormalizedLocation) -> LocationSample {
        let explore: f64 = self.rng.gen();
        let raw = if explore < self.epsilon {
            (rng::uniform_pm1(&mut self.rng), rng::uniform_pm1(&mut self.rng))
        } else {
            let (zx, zy) = rng::normal_pair(&mut self.rng);
            (mu.lx + self.sigma * zx, mu.ly + self.sigma * zy)
        };
        LocationSample { raw, clamped: NormalizedLocation::clamped(raw.0, raw.1) }
    }

    /// The clamped sampled location; the contract-level sampling operation.
    pub fn sample_location(&mut self, mu: NormalizedLocation) -> NormalizedLocation {
        self.sample(mu).clamped
    }

    /// Uniform draw over [-1,1]^2 for the initial training fixation.
    pub fn uniform_location(&mut self) -> NormalizedLocation {
        NormalizedLocation {
            lx: rng::uniform_pm1(&mut self.rng),
            ly: rng::uniform_pm1(&mut self.rng),
        }
    }
}

impl crate::model::LocationSampler for GaussianPolicy {
    fn sample(&mut self, mu: NormalizedLocation) -> ((f64, f64), NormalizedLocation) {
        let s = GaussianPolicy::sample(self, mu);
        (s.raw, s.clamped)
    }
}

/// Reward gating threshold on the absolute score error, in MOS units.
#[derive(Clone, Copy, Debug)]
pub struct RewardSpec {
    pub score_threshold: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec { score_threshold: 0.7 }
    }
}

impl RewardSpec {
    pub fn new(score_threshold: f64) -> Self {
        assert!(score_threshold > 0.0, "reward threshold must be positive");
        RewardSpec { score_threshold }
    }
}

/// Binary final-step reward: 1 when the classification is correct or the
/// score prediction is accurate enough, 0 otherwise.
pub fn reward(
    pred_class: usize,
    true_class: usize,
    pred_score: f64,
    true_score: f64,
    spec: &RewardSpec,
) -> f64 {
    if pred_class == true_class || (pred_score - true_score).abs() < spec.score_threshold {
        1.0
    } else {
        0.0
    }
}

/// Log density of the isotropic Gaussian policy, summed over both axes.
pub fn log_prob(mu: (f64, f64), a: (f64, f64), sigma: f64) -> f64 {
    assert!(sigma > 0.0);
    let norm = -(2.0 * std::f64::consts::PI).ln() - 2.0 * sigma.ln();
    let dx = (a.0 - mu.0) / sigma;
    let dy = (a.1 - mu.1) / sigma;
    norm - 0.5 * (dx * dx + dy * dy)
}

/// d log p(a | mu, sigma) / d mu = (a - mu) / sigma^2, per axis.
pub fn dlogp_dmu(mu: (f64, f64), a: (f64, f64), sigma: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    ((a.0 - mu.0) / s2, (a.1 - mu.1) / s2)
}

/// Builds the gradient seeds that realize the REINFORCE term for one
/// episode.
///
/// The training loss is `L = L_cla + lambda L_reg - alpha J_rein`, so each
/// recorded mean slot receives `-alpha * R * (a - mu) / sigma^2`. Averaging
/// the resulting episode gradients over a batch of M episodes implements
/// the 1/M sum of the Monte-Carlo estimator.
pub fn reinforce_seeds(
    trace: &EpisodeTrace,
    reward: f64,
    sigma: f64,
    alpha: f64,
) -> Vec<(ValueId, Vec<f64>)> {
    if reward == 0.0 || alpha == 0.0 {
        return Vec::new();
    }
    let mut seeds = Vec::with_capacity(trace.mu_slots.len());
    for (slot, step) in trace.mu_slots.iter().zip(trace.steps.iter().skip(1)) {
        let mu = step.mu.expect("sampled step is missing its policy mean");
        let a = step.sample.expect("sampled step is missing its raw draw");
        let (gx, gy) = dlogp_dmu(mu, a, sigma);
        seeds.push((*slot, vec![-alpha * reward * gx, -alpha * reward * gy]));
    }
    seeds
}

/// Exploration schedule knobs: both sigma and epsilon decline linearly
/// over the first `decay_epochs` epochs and hold afterward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyConfig {
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub sigma_decay_epochs: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_epochs: usize,
    /// Optional constant baseline subtracted from the reward before the
    /// gradient is formed; the plain estimator uses none.
    pub baseline: Option<f64>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            sigma_start: 0.16,
            sigma_end: 0.10,
            sigma_decay_epochs: 100,
            epsilon_start: 0.10,
            epsilon_end: 0.0,
            epsilon_decay_epochs: 100,
            baseline: None,
        }
    }
}

fn lerp_hold(start: f64, end: f64, epoch: usize, decay_epochs: usize) -> f64 {
    if decay_epochs == 0 || epoch >= decay_epochs {
        end
    } else {
        start + (end - start) * epoch as f64 / decay_epochs as f64
    }
}

/// The (sigma, epsilon) pair in effect at a given epoch.
pub fn schedules(epoch: usize, cfg: &PolicyConfig) -> (f64, f64) {
    (
        lerp_hold(cfg.sigma_start, cfg.sigma_end, epoch, cfg.sigma_decay_epochs),
        lerp_hold(cfg.epsilon_start, cfg.epsilon_end, epoch, cfg.epsilon_decay_epochs),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_gaussian_returns_mu() {
        let mut p = GaussianPolicy::seeded(1e-300, 0.0, 1, &[0]);
        let mu = NormalizedLocation { lx: 0.25, ly: -0.5 };
        for _ in 0..10 {
            let a = p.sample_location(mu);
            assert!((a.lx - mu.lx).abs() < 1e-12 && (a.ly - mu.ly).abs() < 1e-12);
        }
    }

    #[test]
    fn epsilon_one_is_uniform_chi_square() {
        // 1e5 draws binned on a 4x4 grid; chi-square with 15 dof must not
        // reject uniformity at p > 0.01 (critical value 30.58)
        let mut p = GaussianPolicy::seeded(0.1, 1.0, 2, &[0]);
        let n = 100_000;
        let mut bins = [0u32; 16];
        for _ in 0..n {
            let a = p.sample_location(NormalizedLocation::CENTER);
            let bx = (((a.lx + 1.0) / 2.0 * 4.0) as usize).min(3);
            let by = (((a.ly + 1.0) / 2.0 * 4.0) as usize).min(3);
            bins[by * 4 + bx] += 1;
        }
        let expect = n as f64 / 16.0;
        let chi2: f64 = bins.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        assert!(chi2 < 30.58, "chi-square {chi2} rejects uniformity");
    }

    #[test]
    fn gaussian_sample_mean_near_mu() {
        let sigma = 0.1;
        let n = 100_000usize;
        let mut p = GaussianPolicy::seeded(sigma, 0.0, 3, &[0]);
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let a = p.sample(NormalizedLocation::CENTER);
            sx += a.raw.0;
            sy += a.raw.1;
        }
        let bound = 3.0 * sigma / (n as f64).sqrt();
        assert!((sx / n as f64).abs() < bound);
        assert!((sy / n as f64).abs() < bound);
    }

    #[test]
    fn sampled_locations_always_in_range() {
        let mut p = GaussianPolicy::seeded(0.5, 0.1, 4, &[0]);
        for i in 0..10_000 {
            let mu = NormalizedLocation::clamped((i % 21) as f64 / 10.0 - 1.0, 0.99);
            assert!(p.sample_location(mu).in_range());
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let draw = || {
            let mut p = GaussianPolicy::seeded(0.16, 0.1, 5, &[7]);
            (0..32)
                .map(|_| {
                    let a = p.sample(NormalizedLocation { lx: 0.1, ly: -0.2 });
                    (a.raw.0.to_bits(), a.raw.1.to_bits())
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn dlogp_zero_at_mean() {
        let g = dlogp_dmu((0.3, -0.4), (0.3, -0.4), 0.12);
        assert_eq!(g, (0.0, 0.0));
    }

    #[test]
    fn dlogp_plugged_arithmetic() {
        // (a - mu) / sigma^2 = 0.2 / 0.01 = 20
        let g = dlogp_dmu((0.3, 0.0), (0.5, 0.0), 0.1);
        assert!((g.0 - 20.0).abs() < 1e-12);
    }

    #[test]
    fn dlogp_matches_finite_differences() {
        let mut rng = crate::rng::stream(6, &[0]);
        use rand::Rng;
        for _ in 0..100 {
            let mu = (rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
            let a = (rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
            let sigma = 0.05 + rng.gen::<f64>() * 0.3;
            let g = dlogp_dmu(mu, a, sigma);
            let h = 1e-6;
            let fdx = (log_prob((mu.0 + h, mu.1), a, sigma) - log_prob((mu.0 - h, mu.1), a, sigma))
                / (2.0 * h);
            let fdy = (log_prob((mu.0, mu.1 + h), a, sigma) - log_prob((mu.0, mu.1 - h), a, sigma))
                / (2.0 * h);
            assert!(crate::tape::rel_err(g.0, fdx, 1e-3) < 1e-6, "{} vs {}", g.0, fdx);
            assert!(crate::tape::rel_err(g.1, fdy, 1e-3) < 1e-6, "{} vs {}", g.1, fdy);
        }
    }

    #[test]
    fn reward_is_a_gate() {
        let spec = RewardSpec::default();
        // class correct, score far off
        assert_eq!(reward(3, 3, 9.0, 4.0, &spec), 1.0);
        // class wrong, score within threshold
        assert_eq!(reward(1, 3, 4.0, 4.69, &spec), 1.0);
        // class wrong, score outside threshold
        assert_eq!(reward(1, 3, 4.0, 4.71, &spec), 0.0);
    }

    #[test]
    fn schedule_endpoints_and_midpoint() {
        let cfg = PolicyConfig::default();
        assert_eq!(schedules(0, &cfg), (0.16, 0.10));
        assert_eq!(schedules(100, &cfg), (0.10, 0.0));
        assert_eq!(schedules(250, &cfg), (0.10, 0.0));
        let (s, e) = schedules(50, &cfg);
        assert!((s - 0.13).abs() < 1e-12);
        assert!((e - 0.05).abs() < 1e-12);
    }
}
