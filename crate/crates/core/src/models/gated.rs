//! Weighted-scalar-multiplier fusion head, the interpretable variant.
//!
//! Each sensor's features pass through their own one-layer conditional
//! network (dense -> tanh) producing a scalar gate: M_D for depth features,
//! M_E for the embedding. The control stack consumes the weighted
//! concatenation (M_D * depth_features) ++ (M_E * embedding) of length 69 —
//! no conditional vector, so the control input stays at the fused length.

use super::config::ArchitectureConfig;
use crate::numerics::{Dense, Param, Relu, TanhAct, Tensor};
use crate::rng::Rng;

#[derive(Clone)]
pub struct WeightedGateNet {
    pub config: ArchitectureConfig,
    gate_d_fc: Dense,
    gate_d_tanh: TanhAct,
    gate_e_fc: Dense,
    gate_e_tanh: TanhAct,
    ctrl_fc1: Dense,
    ctrl_relu: Relu,
    ctrl_fc2: Dense,
    cache: Option<GateCache>,
}

#[derive(Clone)]
struct GateCache {
    features: Vec<f32>,
    embedding: Vec<f32>,
    m_d: f32,
    m_e: f32,
}

impl WeightedGateNet {
    pub fn new(config: ArchitectureConfig, rng: &mut Rng) -> Self {
        let net = WeightedGateNet {
            config,
            gate_d_fc: Dense::new(config.f3, 1, rng),
            gate_d_tanh: TanhAct::new(),
            gate_e_fc: Dense::new(config.embedding, 1, rng),
            gate_e_tanh: TanhAct::new(),
            ctrl_fc1: Dense::new(config.fused_len(), config.f4, rng),
            ctrl_relu: Relu::new(),
            ctrl_fc2: Dense::new(config.f4, 1, rng),
            cache: None,
        };
        assert_eq!(
            net.param_count(),
            Self::expected_param_count(&config),
            "gated net parameter count mismatch"
        );
        net
    }

    pub fn expected_param_count(cfg: &ArchitectureConfig) -> usize {
        let dense = |i: usize, o: usize| o * i + o;
        dense(cfg.f3, 1) + dense(cfg.embedding, 1) + dense(cfg.fused_len(), cfg.f4) + dense(cfg.f4, 1)
    }

    pub fn param_count(&self) -> usize {
        self.named_params()
            .iter()
            .map(|(_, p)| p.value.len())
            .sum()
    }

    /// Gate value for a depth feature vector alone.
    pub fn depth_gate(&mut self, depth_features: &Tensor) -> f32 {
        let g = self.gate_d_fc.forward(depth_features);
        self.gate_d_tanh.forward(&g).data()[0]
    }

    /// Gate value for an embedding alone.
    pub fn embedding_gate(&mut self, embedding: &Tensor) -> f32 {
        let g = self.gate_e_fc.forward(embedding);
        self.gate_e_tanh.forward(&g).data()[0]
    }

    /// Returns (steering, M_D, M_E).
    pub fn forward(&mut self, depth_features: &Tensor, embedding: &Tensor) -> (f32, f32, f32) {
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
        let m_d = self.depth_gate(depth_features);
        let m_e = self.embedding_gate(embedding);

        let mut weighted = Vec::with_capacity(self.config.fused_len());
        weighted.extend(depth_features.data().iter().map(|v| v * m_d));
        weighted.extend(embedding.data().iter().map(|v| v * m_e));
        let weighted = Tensor::new(vec![self.config.fused_len()], weighted);
        let x = self.ctrl_fc1.forward(&weighted);
        let x = self.ctrl_relu.forward(&x);
        let y = self.ctrl_fc2.forward(&x);

        self.cache = Some(GateCache {
            features: depth_features.data().to_vec(),
            embedding: embedding.data().to_vec(),
            m_d,
            m_e,
        });
        (y.data()[0], m_d, m_e)
    }

    /// Backward from d(loss)/d(pred); returns gradients for the two inputs.
    pub fn backward(&mut self, dpred: f32) -> (Tensor, Tensor) {
        let cache = self
            .cache
            .take()
            .expect("gated backward called without a recorded forward pass");
        let f3 = self.config.f3;

        let dx = self.ctrl_fc2.backward(&Tensor::scalar(dpred));
        let dx = self.ctrl_relu.backward(&dx);
        let dweighted = self.ctrl_fc1.backward(&dx);
        let (dw_d, dw_e) = dweighted.data().split_at(f3);

        // Product rule: weighted_d = m_d * features.
        let mut dfeat: Vec<f32> = dw_d.iter().map(|g| g * cache.m_d).collect();
        let dm_d: f32 = dw_d.iter().zip(cache.features.iter()).map(|(g, v)| g * v).sum();
        let mut demb: Vec<f32> = dw_e.iter().map(|g| g * cache.m_e).collect();
        let dm_e: f32 = dw_e.iter().zip(cache.embedding.iter()).map(|(g, v)| g * v).sum();

        let dg = self.gate_d_tanh.backward(&Tensor::scalar(dm_d));
        let dfeat_gate = self.gate_d_fc.backward(&dg);
        for (a, b) in dfeat.iter_mut().zip(dfeat_gate.data()) {
            *a += b;
        }
        let dg = self.gate_e_tanh.backward(&Tensor::scalar(dm_e));
        let demb_gate = self.gate_e_fc.backward(&dg);
        for (a, b) in demb.iter_mut().zip(demb_gate.data()) {
            *a += b;
        }

        (
            Tensor::new(vec![f3], dfeat),
            Tensor::new(vec![self.config.embedding], demb),
        )
    }

    pub fn named_params(&self) -> Vec<(&'static str, &Param)> {
        vec![
            ("gate_d.weight", &self.gate_d_fc.weights),
            ("gate_d.bias", &self.gate_d_fc.bias),
            ("gate_e.weight", &self.gate_e_fc.weights),
            ("gate_e.bias", &self.gate_e_fc.bias),
            ("ctrl_fc1.weight", &self.ctrl_fc1.weights),
            ("ctrl_fc1.bias", &self.ctrl_fc1.bias),
            ("ctrl_fc2.weight", &self.ctrl_fc2.weights),
            ("ctrl_fc2.bias", &self.ctrl_fc2.bias),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(&'static str, &mut Param)> {
        vec![
            ("gate_d.weight", &mut self.gate_d_fc.weights),
            ("gate_d.bias", &mut self.gate_d_fc.bias),
            ("gate_e.weight", &mut self.gate_e_fc.weights),
            ("gate_e.bias", &mut self.gate_e_fc.bias),
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
    fn gates_stay_in_open_unit_interval() {
        let mut rng = Rng::new(1);
        let mut net = WeightedGateNet::new(ArchitectureConfig::default(), &mut rng);
        for _ in 0..20 {
            let feats = Tensor::uniform(vec![5], 3.0, &mut rng);
            let emb = Tensor::uniform(vec![64], 3.0, &mut rng);
            let (_, m_d, m_e) = net.forward(&feats, &emb);
            assert!(m_d.abs() < 1.0);
            assert!(m_e.abs() < 1.0);
        }
    }

    #[test]
    fn control_input_is_69_wide() {
        let mut rng = Rng::new(2);
        let net = WeightedGateNet::new(ArchitectureConfig::default(), &mut rng);
        assert_eq!(net.control_input_len(), 69);
    }

    #[test]
    fn gate_depends_only_on_its_own_sensor() {
        let mut rng = Rng::new(3);
        let mut net = WeightedGateNet::new(ArchitectureConfig::default(), &mut rng);
        let feats = Tensor::uniform(vec![5], 1.0, &mut rng);
        let emb_a = Tensor::uniform(vec![64], 1.0, &mut rng);
        let emb_b = Tensor::zeros(vec![64]);
        let (_, m_d_a, _) = net.forward(&feats, &emb_a);
        let (_, m_d_b, _) = net.forward(&feats, &emb_b);
        // Bit-identical: M_D never sees the embedding.
        assert_eq!(m_d_a, m_d_b);
    }

    #[test]
    fn constant_features_give_constant_gate() {
        let mut rng = Rng::new(4);
        let mut net = WeightedGateNet::new(ArchitectureConfig::default(), &mut rng);
        let feats = Tensor::filled(vec![5], 0.3);
        let mut values = Vec::new();
        for _ in 0..5 {
            let emb = Tensor::uniform(vec![64], 1.0, &mut rng);
            let (_, m_d, _) = net.forward(&feats, &emb);
            values.push(m_d);
        }
        assert!(values.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn param_count_is_782() {
        let mut rng = Rng::new(5);
        let net = WeightedGateNet::new(ArchitectureConfig::default(), &mut rng);
        assert_eq!(net.param_count(), 782);
    }
}
