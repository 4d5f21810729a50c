//! Conditional-vector sensor fusion head.
//!
//! The fused vector F = depth features ++ embedding (length 69) feeds a
//! small conditional network (dense -> relu -> dense -> tanh, four layers)
//! whose length-S output C captures the inherent status of the two
//! sensors without any supervision. The control stack then consumes
//! F ++ C (length 69 + S) and predicts the steering scalar.

use super::config::ArchitectureConfig;
use crate::numerics::{Dense, Param, Relu, TanhAct, Tensor};
use crate::rng::Rng;

const COND_HIDDEN: usize = 32;

#[derive(Clone)]
pub struct FusionConditionalNet {
    pub config: ArchitectureConfig,
    cond_fc1: Dense,
    cond_relu: Relu,
    cond_fc2: Dense,
    cond_tanh: TanhAct,
    ctrl_fc1: Dense,
    ctrl_relu: Relu,
    ctrl_fc2: Dense,
}

impl FusionConditionalNet {
    pub fn new(config: ArchitectureConfig, rng: &mut Rng) -> Self {
        let fused = config.fused_len();
        let net = FusionConditionalNet {
            config,
            cond_fc1: Dense::new(fused, COND_HIDDEN, rng),
            cond_relu: Relu::new(),
            cond_fc2: Dense::new(COND_HIDDEN, config.conditional, rng),
            cond_tanh: TanhAct::new(),
            ctrl_fc1: Dense::new(config.conditional_control_len(), config.f4, rng),
            ctrl_relu: Relu::new(),
            ctrl_fc2: Dense::new(config.f4, 1, rng),
        };
        assert_eq!(
            net.param_count(),
            Self::expected_param_count(&config),
            "fusion net parameter count mismatch"
        );
        net
    }

    pub fn expected_param_count(cfg: &ArchitectureConfig) -> usize {
        let dense = |i: usize, o: usize| o * i + o;
        dense(cfg.fused_len(), COND_HIDDEN)
            + dense(COND_HIDDEN, cfg.conditional)
            + dense(cfg.conditional_control_len(), cfg.f4)
            + dense(cfg.f4, 1)
    }

    pub fn param_count(&self) -> usize {
        self.named_params()
            .iter()
            .map(|(_, p)| p.value.len())
            .sum()
    }

    /// Returns (steering, conditional vector C).
    pub fn forward(&mut self, depth_features: &Tensor, embedding: &Tensor) -> (f32, Tensor) {
        assert_eq!(
            depth_features.len(),
            self.config.f3,
            "depth feature length {} != {}",
            depth_features.len(),
            self.config.f3
        );
        assert_eq!(
            embedding.len(),
            self.config.embedding,
            "embedding length {} != {}",
            embedding.len(),
            self.config.embedding
        );
        let mut fused = Vec::with_capacity(self.config.fused_len());
        fused.extend_from_slice(depth_features.data());
        fused.extend_from_slice(embedding.data());
        let fused = Tensor::new(vec![self.config.fused_len()], fused);

        let c = self.cond_fc1.forward(&fused);
        let c = self.cond_relu.forward(&c);
        let c = self.cond_fc2.forward(&c);
        let c = self.cond_tanh.forward(&c);

        let mut ctrl_in = Vec::with_capacity(self.config.conditional_control_len());
        ctrl_in.extend_from_slice(fused.data());
        ctrl_in.extend_from_slice(c.data());
        let ctrl_in = Tensor::new(vec![self.config.conditional_control_len()], ctrl_in);
        let x = self.ctrl_fc1.forward(&ctrl_in);
        let x = self.ctrl_relu.forward(&x);
        let y = self.ctrl_fc2.forward(&x);
        (y.data()[0], c)
    }

    /// Backward from d(loss)/d(pred); returns gradients for the two inputs.
    pub fn backward(&mut self, dpred: f32) -> (Tensor, Tensor) {
        let fused_len = self.config.fused_len();
        let s = self.config.conditional;

        let dx = self.ctrl_fc2.backward(&Tensor::scalar(dpred));
        let dx = self.ctrl_relu.backward(&dx);
        let dctrl_in = self.ctrl_fc1.backward(&dx);

        let mut dfused = dctrl_in.data()[..fused_len].to_vec();
        let dc = Tensor::new(vec![s], dctrl_in.data()[fused_len..].to_vec());

        let dc = self.cond_tanh.backward(&dc);
        let dc = self.cond_fc2.backward(&dc);
        let dc = self.cond_relu.backward(&dc);
        let dfused_via_cond = self.cond_fc1.backward(&dc);
        for (a, b) in dfused.iter_mut().zip(dfused_via_cond.data()) {
            *a += b;
        }

        let dfeat = Tensor::new(vec![self.config.f3], dfused[..self.config.f3].to_vec());
        let demb = Tensor::new(vec![self.config.embedding], dfused[self.config.f3..].to_vec());
        (dfeat, demb)
    }

    pub fn named_params(&self) -> Vec<(&'static str, &Param)> {
        vec![
            ("cond_fc1.weight", &self.cond_fc1.weights),
            ("cond_fc1.bias", &self.cond_fc1.bias),
            ("cond_fc2.weight", &self.cond_fc2.weights),
            ("cond_fc2.bias", &self.cond_fc2.bias),
            ("ctrl_fc1.weight", &self.ctrl_fc1.weights),
            ("ctrl_fc1.bias", &self.ctrl_fc1.bias),
            ("ctrl_fc2.weight", &self.ctrl_fc2.weights),
            ("ctrl_fc2.bias", &self.ctrl_fc2.bias),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(&'static str, &mut Param)> {
        vec![
            ("cond_fc1.weight", &mut self.cond_fc1.weights),
            ("cond_fc1.bias", &mut self.cond_fc1.bias),
            ("cond_fc2.weight", &mut self.cond_fc2.weights),
            ("cond_fc2.bias", &mut self.cond_fc2.bias),
            ("ctrl_fc1.weight", &mut self.ctrl_fc1.weights),
            ("ctrl_fc1.bias", &mut self.ctrl_fc1.bias),
            ("ctrl_fc2.weight", &mut self.ctrl_fc2.weights),
            ("ctrl_fc2.bias", &mut self.ctrl_fc2.bias),
        ]
    }

    /// Control-stack input width (69 + S with the default config).
    pub fn control_input_len(&self) -> usize {
        self.ctrl_fc1.in_features
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditional_vector_has_length_s_and_tanh_range() {
        let mut rng = Rng::new(1);
        let mut net = FusionConditionalNet::new(ArchitectureConfig::default(), &mut rng);
        let feats = Tensor::uniform(vec![5], 1.0, &mut rng);
        let emb = Tensor::uniform(vec![64], 1.0, &mut rng);
        let (_, c) = net.forward(&feats, &emb);
        assert_eq!(c.len(), 1);
        assert!(c.data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn control_input_is_70_wide() {
        let mut rng = Rng::new(2);
        let net = FusionConditionalNet::new(ArchitectureConfig::default(), &mut rng);
        assert_eq!(net.control_input_len(), 70);
    }

    #[test]
    #[should_panic(expected = "embedding length")]
    fn wrong_embedding_length_panics() {
        let mut rng = Rng::new(3);
        let mut net = FusionConditionalNet::new(ArchitectureConfig::default(), &mut rng);
        let feats = Tensor::zeros(vec![5]);
        net.forward(&feats, &Tensor::zeros(vec![32]));
    }

    #[test]
    fn param_count_is_2994() {
        let mut rng = Rng::new(4);
        let net = FusionConditionalNet::new(ArchitectureConfig::default(), &mut rng);
        assert_eq!(net.param_count(), 2994);
    }
}
