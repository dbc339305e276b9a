//! Adam with bias correction.

use crate::model::ModelParams;

/// Per-parameter first and second moments plus the shared step counter.
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Moments shaped like the model's canonical tensor list.
    pub fn new(params: &ModelParams) -> Self {
        let mut m = Vec::new();
        params.for_each(|_, t| m.push(vec![0.0; t.numel()]));
        let v = m.clone();
        AdamState { m, v, step: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Zeroes the moments of one tensor (used when the location head is
    /// reinitialized, so stale momentum does not drag the fresh weights).
    pub fn reset_slot(&mut self, index: usize) {
        self.m[index].iter_mut().for_each(|x| *x = 0.0);
        self.v[index].iter_mut().for_each(|x| *x = 0.0);
    }

    /// One Adam update. `grads` must be in canonical tensor order.
    pub fn step(&mut self, params: &mut ModelParams, grads: &[Vec<f64>], lr: f64) {
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        let (beta1, beta2, eps) = (self.beta1, self.beta2, self.eps);
        let mut idx = 0;
        let (m, v) = (&mut self.m, &mut self.v);
        params.for_each_mut(|name, tensor| {
            let g = &grads[idx];
            assert_eq!(g.len(), tensor.numel(), "gradient shape mismatch for {name}");
            let (mi, vi) = (&mut m[idx], &mut v[idx]);
            for (((p, &gv), mv), vv) in
                tensor.data_mut().iter_mut().zip(g).zip(mi.iter_mut()).zip(vi.iter_mut())
            {
                *mv = beta1 * *mv + (1.0 - beta1) * gv;
                *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            idx += 1;
        });
    }
}

/// Linear learning-rate decay from `lr_start` at epoch 0 to `lr_end` at
/// the final epoch.
pub fn lr_schedule(epoch: usize, epochs: usize, lr_start: f64, lr_end: f64) -> f64 {
    if epochs <= 1 {
        return lr_start;
    }
    let t = epoch.min(epochs - 1) as f64 / (epochs - 1) as f64;
    lr_start * (1.0 - t) + lr_end * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn tiny_params() -> ModelParams {
        ModelParams::init(ModelConfig::reduced(3), 42)
    }

    fn zero_grads(params: &ModelParams) -> Vec<Vec<f64>> {
        let mut g = Vec::new();
        params.for_each(|_, t| g.push(vec![0.0; t.numel()]));
        g
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut params = tiny_params();
        let before: Vec<Vec<f64>> = params.named().iter().map(|(_, t)| t.data().to_vec()).collect();
        let mut adam = AdamState::new(&params);
        let grads = zero_grads(&params);
        for _ in 0..5 {
            adam.step(&mut params, &grads, 0.01);
        }
        let after: Vec<Vec<f64>> = params.named().iter().map(|(_, t)| t.data().to_vec()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn only_parameters_with_nonzero_gradient_move() {
        let mut params = tiny_params();
        let before: Vec<Vec<f64>> = params.named().iter().map(|(_, t)| t.data().to_vec()).collect();
        let mut grads = zero_grads(&params);
        grads[0][3] = 1.0; // single coordinate of conv1.w3
        let mut adam = AdamState::new(&params);
        adam.step(&mut params, &grads, 0.01);
        let after: Vec<Vec<f64>> = params.named().iter().map(|(_, t)| t.data().to_vec()).collect();
        for (i, (b, a)) in before.iter().zip(&after).enumerate() {
            for (j, (bv, av)) in b.iter().zip(a).enumerate() {
                if i == 0 && j == 3 {
                    assert_ne!(bv, av);
                } else {
                    assert_eq!(bv, av, "tensor {i} element {j} moved without gradient");
                }
            }
        }
    }

    #[test]
    fn first_update_matches_hand_recurrence() {
        // constant gradient 1.0: m1 = 0.1, v1 = 0.001, both bias-corrected
        // back to exactly 1, so the update is lr / (1 + eps)
        let mut params = tiny_params();
        let p0 = params.named()[0].1.data()[0];
        let mut grads = zero_grads(&params);
        grads[0][0] = 1.0;
        let mut adam = AdamState::new(&params);
        let lr = 0.001;
        adam.step(&mut params, &grads, lr);
        let p1 = params.named()[0].1.data()[0];
        let expect = p0 - lr * 1.0 / (1.0 + 1e-8);
        assert!((p1 - expect).abs() < 1e-12, "{p1} vs {expect}");

        // second step with the same gradient, recurrence computed by hand
        let mut m = 0.1;
        let mut v = 0.001;
        m = 0.9 * m + 0.1 * 1.0;
        v = 0.999 * v + 0.001 * 1.0;
        let m_hat = m / (1.0 - 0.9_f64.powi(2));
        let v_hat = v / (1.0 - 0.999_f64.powi(2));
        let expect2 = expect - lr * m_hat / (v_hat.sqrt() + 1e-8);
        adam.step(&mut params, &grads, lr);
        let p2 = params.named()[0].1.data()[0];
        assert!((p2 - expect2).abs() < 1e-12, "{p2} vs {expect2}");
    }

    #[test]
    fn opposite_gradients_move_symmetrically() {
        let mut params = tiny_params();
        let base = params.named()[0].1.data()[0];
        let base2 = params.named()[0].1.data()[1];
        let mut grads = zero_grads(&params);
        grads[0][0] = 0.7;
        grads[0][1] = -0.7;
        let mut adam = AdamState::new(&params);
        adam.step(&mut params, &grads, 0.01);
        let d1 = params.named()[0].1.data()[0] - base;
        let d2 = params.named()[0].1.data()[1] - base2;
        assert!((d1 + d2).abs() < 1e-15, "moves not symmetric: {d1} vs {d2}");
    }

    #[test]
    fn update_magnitude_bounded_by_lr_after_warmup() {
        let mut params = tiny_params();
        let mut grads = zero_grads(&params);
        for g in &mut grads {
            for (i, v) in g.iter_mut().enumerate() {
                *v = ((i % 13) as f64 - 6.0) * 0.3;
            }
        }
        let mut adam = AdamState::new(&params);
        let lr = 0.01;
        for _ in 0..50 {
            adam.step(&mut params, &grads, lr);
        }
        let before: Vec<Vec<f64>> = params.named().iter().map(|(_, t)| t.data().to_vec()).collect();
        adam.step(&mut params, &grads, lr);
        let mut max_delta = 0.0_f64;
        let mut idx = 0;
        params.for_each(|_, t| {
            for (a, b) in t.data().iter().zip(&before[idx]) {
                max_delta = max_delta.max((a - b).abs());
            }
            idx += 1;
        });
        // constant gradients: after warm-up each move is about lr
        assert!(max_delta <= lr * 1.1, "step {max_delta} exceeds ~lr");
    }

    #[test]
    fn lr_schedule_endpoints_and_midpoint() {
        assert_eq!(lr_schedule(0, 1000, 0.001, 0.0001), 0.001);
        assert_eq!(lr_schedule(999, 1000, 0.001, 0.0001), 0.0001);
        let mid = lr_schedule(500, 1001, 0.001, 0.0001);
        assert!((mid - 0.00055).abs() < 1e-12);
    }
}
