//! Depth-only steering network.
//!
//! Perception (layers 1-8): conv k5/s2 -> relu -> pool, conv -> relu ->
//! pool, conv -> pool. Layer 9 flattens the [F3, 1, 1] map to a length-F3
//! feature vector. Control (layers 10-12): dense -> relu -> dense to a
//! scalar steering command. On 128x128 input the spatial sizes run
//! 128 -> 62 -> 31 -> 14 -> 7 -> 2 -> 1.

use super::config::ArchitectureConfig;
use crate::numerics::{Conv2d, Dense, MaxPool2d, Param, Relu, Tensor};
use crate::rng::Rng;

#[derive(Clone)]
pub struct DepthNet {
    pub config: ArchitectureConfig,
    conv1: Conv2d,
    relu1: Relu,
    pool1: MaxPool2d,
    conv2: Conv2d,
    relu2: Relu,
    pool2: MaxPool2d,
    conv3: Conv2d,
    pool3: MaxPool2d,
    fc1: Dense,
    relu_fc: Relu,
    fc2: Dense,
    cached_features: Option<Tensor>,
}

impl DepthNet {
    pub fn new(config: ArchitectureConfig, rng: &mut Rng) -> Self {
        let net = DepthNet {
            config,
            conv1: Conv2d::new(1, config.f1, 5, 2, 0, rng),
            relu1: Relu::new(),
            pool1: MaxPool2d::new(),
            conv2: Conv2d::new(config.f1, config.f2, 5, 2, 0, rng),
            relu2: Relu::new(),
            pool2: MaxPool2d::new(),
            conv3: Conv2d::new(config.f2, config.f3, 5, 2, 0, rng),
            pool3: MaxPool2d::new(),
            fc1: Dense::new(config.f3, config.f4, rng),
            relu_fc: Relu::new(),
            fc2: Dense::new(config.f4, 1, rng),
            cached_features: None,
        };
        assert_eq!(
            net.param_count(),
            Self::expected_param_count(&config),
            "depth net parameter count mismatch"
        );
        net
    }

    pub fn expected_param_count(cfg: &ArchitectureConfig) -> usize {
        let conv = |i: usize, o: usize| o * i * 25 + o;
        let dense = |i: usize, o: usize| o * i + o;
        conv(1, cfg.f1)
            + conv(cfg.f1, cfg.f2)
            + conv(cfg.f2, cfg.f3)
            + dense(cfg.f3, cfg.f4)
            + dense(cfg.f4, 1)
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        for (_, p) in self.named_params() {
            n += p.value.len();
        }
        n
    }

    /// Layers 1-9: depth image to the length-F3 feature vector.
    pub fn features(&mut self, depth: &Tensor) -> Tensor {
        assert_eq!(
            depth.shape(),
            &[1, 128, 128],
            "depth input must be [1, 128, 128], got {:?}",
            depth.shape()
        );
        let x = self.conv1.forward(depth);
        let x = self.relu1.forward(&x);
        let x = self.pool1.forward(&x);
        let x = self.conv2.forward(&x);
        let x = self.relu2.forward(&x);
        let x = self.pool2.forward(&x);
        let x = self.conv3.forward(&x);
        let x = self.pool3.forward(&x);
        x.reshaped(vec![self.config.f3])
    }

    /// Layers 10-12 on an existing feature vector.
    pub fn control(&mut self, features: &Tensor) -> f32 {
        let x = self.fc1.forward(features);
        let x = self.relu_fc.forward(&x);
        let y = self.fc2.forward(&x);
        y.data()[0]
    }

    /// Full forward pass: depth image to steering.
    pub fn forward(&mut self, depth: &Tensor) -> f32 {
        let features = self.features(depth);
        let pred = self.control(&features);
        self.cached_features = Some(features);
        pred
    }

    /// Backward through the whole net from d(loss)/d(pred).
    pub fn backward(&mut self, dpred: f32) {
        let dfeat = self.backward_control(dpred);
        self.backward_perception(&dfeat);
    }

    /// Backward through layers 10-12 only; returns the feature gradient.
    pub fn backward_control(&mut self, dpred: f32) -> Tensor {
        self.cached_features = None;
        let dx = self.fc2.backward(&Tensor::scalar(dpred));
        let dx = self.relu_fc.backward(&dx);
        self.fc1.backward(&dx)
    }

    /// Backward through layers 1-8 given the feature gradient.
    pub fn backward_perception(&mut self, dfeatures: &Tensor) {
        let dx = dfeatures.clone().reshaped(vec![self.config.f3, 1, 1]);
        let dx = self.pool3.backward(&dx);
        let dx = self.conv3.backward(&dx);
        let dx = self.pool2.backward(&dx);
        let dx = self.relu2.backward(&dx);
        let dx = self.conv2.backward(&dx);
        let dx = self.pool1.backward(&dx);
        let dx = self.relu1.backward(&dx);
        self.conv1.backward_no_input_grad(&dx);
    }

    /// Marks layers 1-8 frozen; the optimizer will skip them.
    pub fn freeze_perception(&mut self) {
        self.conv1.weights.freeze();
        self.conv1.bias.freeze();
        self.conv2.weights.freeze();
        self.conv2.bias.freeze();
        self.conv3.weights.freeze();
        self.conv3.bias.freeze();
    }

    pub fn named_params(&self) -> Vec<(&'static str, &Param)> {
        vec![
            ("conv1.weight", &self.conv1.weights),
            ("conv1.bias", &self.conv1.bias),
            ("conv2.weight", &self.conv2.weights),
            ("conv2.bias", &self.conv2.bias),
            ("conv3.weight", &self.conv3.weights),
            ("conv3.bias", &self.conv3.bias),
            ("fc1.weight", &self.fc1.weights),
            ("fc1.bias", &self.fc1.bias),
            ("fc2.weight", &self.fc2.weights),
            ("fc2.bias", &self.fc2.bias),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(&'static str, &mut Param)> {
        vec![
            ("conv1.weight", &mut self.conv1.weights),
            ("conv1.bias", &mut self.conv1.bias),
            ("conv2.weight", &mut self.conv2.weights),
            ("conv2.bias", &mut self.conv2.bias),
            ("conv3.weight", &mut self.conv3.weights),
            ("conv3.bias", &mut self.conv3.bias),
            ("fc1.weight", &mut self.fc1.weights),
            ("fc1.bias", &mut self.fc1.bias),
            ("fc2.weight", &mut self.fc2.weights),
            ("fc2.bias", &mut self.fc2.bias),
        ]
    }

    /// Parameters of the control layers only (10-12).
    pub fn control_params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.fc1.weights,
            &mut self.fc1.bias,
            &mut self.fc2.weights,
            &mut self.fc2.bias,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_vector_has_length_five() {
        let mut rng = Rng::new(1);
        let mut net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
        let feats = net.features(&Tensor::zeros(vec![1, 128, 128]));
        assert_eq!(feats.shape(), &[5]);
    }

    #[test]
    fn zero_input_gives_reproducible_features() {
        let mut rng = Rng::new(2);
        let mut net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
        let a = net.features(&Tensor::zeros(vec![1, 128, 128]));
        let b = net.features(&Tensor::zeros(vec![1, 128, 128]));
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = Rng::new(3);
        let mut net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
        let x = Tensor::uniform(vec![1, 128, 128], 1.0, &mut rng);
        assert_eq!(net.forward(&x), net.forward(&x));
    }

    #[test]
    #[should_panic(expected = "must be [1, 128, 128]")]
    fn wrong_shape_is_rejected() {
        let mut rng = Rng::new(4);
        let mut net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
        net.features(&Tensor::zeros(vec![1, 64, 64]));
    }

    #[test]
    fn param_count_is_1461() {
        let mut rng = Rng::new(5);
        let net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
        assert_eq!(net.param_count(), 1461);
    }
}
