//! Plain concatenation control head, used by the ablation baselines.
//!
//! No conditional network and no gates: the control stack consumes the
//! fused vector F (length 69) directly.

use super::config::ArchitectureConfig;
use crate::numerics::{Dense, Param, Relu, Tensor};
use crate::rng::Rng;

#[derive(Clone)]
pub struct NaiveConcatNet {
    pub config: ArchitectureConfig,
    ctrl_fc1: Dense,
    ctrl_relu: Relu,
    ctrl_fc2: Dense,
}

impl NaiveConcatNet {
    pub fn new(config: ArchitectureConfig, rng: &mut Rng) -> Self {
        NaiveConcatNet {
            config,
            ctrl_fc1: Dense::new(config.fused_len(), config.f4, rng),
            ctrl_relu: Relu::new(),
            ctrl_fc2: Dense::new(config.f4, 1, rng),
        }
    }

    pub fn forward(&mut self, depth_features: &Tensor, embedding: &Tensor) -> f32 {
        assert_eq!(depth_features.len(), self.config.f3);
        assert_eq!(embedding.len(), self.config.embedding);
        let mut fused = Vec::with_capacity(self.config.fused_len());
        fused.extend_from_slice(depth_features.data());
        fused.extend_from_slice(embedding.data());
        let fused = Tensor::new(vec![self.config.fused_len()], fused);
        let x = self.ctrl_fc1.forward(&fused);
        let x = self.ctrl_relu.forward(&x);
        self.ctrl_fc2.forward(&x).data()[0]
    }

    pub fn backward(&mut self, dpred: f32) -> (Tensor, Tensor) {
        let dx = self.ctrl_fc2.backward(&Tensor::scalar(dpred));
        let dx = self.ctrl_relu.backward(&dx);
        let dfused = self.ctrl_fc1.backward(&dx);
        let f3 = self.config.f3;
        (
            Tensor::new(vec![f3], dfused.data()[..f3].to_vec()),
            Tensor::new(vec![self.config.embedding], dfused.data()[f3..].to_vec()),
        )
    }

    pub fn named_params(&self) -> Vec<(&'static str, &Param)> {
        vec![
            ("ctrl_fc1.weight", &self.ctrl_fc1.weights),
            ("ctrl_fc1.bias", &self.ctrl_fc1.bias),
            ("ctrl_fc2.weight", &self.ctrl_fc2.weights),
            ("ctrl_fc2.bias", &self.ctrl_fc2.bias),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(&'static str, &mut Param)> {
        vec![
            ("ctrl_fc1.weight", &mut self.ctrl_fc1.weights),
            ("ctrl_fc1.bias", &mut self.ctrl_fc1.bias),
            ("ctrl_fc2.weight", &mut self.ctrl_fc2.weights),
            ("ctrl_fc2.bias", &mut self.ctrl_fc2.bias),
        ]
    }

    pub fn control_input_len(&self) -> usize {
        self.ctrl_fc1.in_features
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_input_is_69_wide() {
        let mut rng = Rng::new(1);
        let net = NaiveConcatNet::new(ArchitectureConfig::default(), &mut rng);
        assert_eq!(net.control_input_len(), 69);
    }
}
