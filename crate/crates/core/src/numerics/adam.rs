//! Adam optimizer with bias correction.

use super::param::Param;

/// Per-run optimizer state. Moment buffers are keyed by parameter order,
/// so the caller must pass the same parameter list every step.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl AdamState {
    pub fn new(lr: f32) -> Self {
        AdamState {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one Adam update to every non-frozen parameter and zeroes all
    /// gradients (frozen ones included, so stale grads never accumulate).
    pub fn step(&mut self, params: &mut [&mut Param]) {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
            self.v = self.m.clone();
        }
        assert_eq!(self.m.len(), params.len(), "parameter list changed between steps");
        self.step += 1;
        let t = self.step as f32;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for (idx, param) in params.iter_mut().enumerate() {
            assert_eq!(self.m[idx].len(), param.value.len(), "parameter shape changed");
            if param.frozen {
                param.value.zero_grad();
                continue;
            }
            let has_grad = param.value.grad().is_some();
            if !has_grad {
                continue;
            }
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            // Read grads, then update data in place.
            let grads: Vec<f32> = param.value.grad().unwrap().to_vec();
            let data = param.value.data_mut();
            for i in 0..data.len() {
                let g = grads[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                data[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            param.value.zero_grad();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::tensor::Tensor;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = Param::new(Tensor::new(vec![2], vec![0.5, -0.25]));
        p.value.grad_mut(); // allocate zero grads
        let before = p.value.data().to_vec();
        let mut state = AdamState::new(1e-3);
        state.step(&mut [&mut p]);
        assert_eq!(p.value.data(), &before[..]);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // With g=1 and bias correction, m_hat = 1, v_hat = 1, so the first
        // step is lr / (1 + eps).
        let mut p = Param::new(Tensor::scalar(1.0));
        p.value.grad_mut()[0] = 1.0;
        let mut state = AdamState::new(1e-3);
        state.step(&mut [&mut p]);
        let delta = 1.0 - p.value.data()[0];
        assert!((delta - 1e-3).abs() < 1e-6, "delta {}", delta);
    }

    #[test]
    fn identical_state_gives_identical_results() {
        let run = || {
            let mut p = Param::new(Tensor::new(vec![3], vec![0.1, 0.2, 0.3]));
            let mut state = AdamState::new(1e-2);
            for step in 0..5 {
                for (i, g) in p.value.grad_mut().iter_mut().enumerate() {
                    *g = (step as f32 + 1.0) * 0.1 * (i as f32 - 1.0);
                }
                state.step(&mut [&mut p]);
            }
            p.value.data().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn frozen_parameter_is_never_touched() {
        let mut p = Param::new(Tensor::new(vec![2], vec![0.7, -0.7]));
        p.freeze();
        let before = p.value.data().to_vec();
        let mut state = AdamState::new(0.1);
        for _ in 0..3 {
            p.value.grad_mut().iter_mut().for_each(|g| *g = 5.0);
            state.step(&mut [&mut p]);
        }
        // Bit-identical before/after.
        assert_eq!(p.value.data(), &before[..]);
    }
}
