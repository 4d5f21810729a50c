//! Full prediction pipeline: frozen feature extractors plus a fusion head.

use super::config::ArchitectureConfig;
use super::depth::DepthNet;
use super::fusion::FusionConditionalNet;
use super::gated::WeightedGateNet;
use super::naive::NaiveConcatNet;
use super::segmentation::SegmentationAutoencoder;
use crate::numerics::{Param, Tensor};

#[derive(Clone)]
pub enum FusionHead {
    Conditional(FusionConditionalNet),
    Gated(WeightedGateNet),
    Naive(NaiveConcatNet),
}

impl FusionHead {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FusionHead::Conditional(_) => "fusion-conditional",
            FusionHead::Gated(_) => "fusion-gated",
            FusionHead::Naive(_) => "fusion-naive",
        }
    }

    /// Steering prediction alone, discarding gate readouts.
    pub fn forward_value(&mut self, features: &Tensor, embedding: &Tensor) -> f32 {
        match self {
            FusionHead::Conditional(net) => net.forward(features, embedding).0,
            FusionHead::Gated(net) => net.forward(features, embedding).0,
            FusionHead::Naive(net) => net.forward(features, embedding),
        }
    }

    /// Backward from d(loss)/d(pred); returns input gradients.
    pub fn backward(&mut self, dpred: f32) -> (Tensor, Tensor) {
        match self {
            FusionHead::Conditional(net) => net.backward(dpred),
            FusionHead::Gated(net) => net.backward(dpred),
            FusionHead::Naive(net) => net.backward(dpred),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let named: Vec<(&'static str, &mut Param)> = match self {
            FusionHead::Conditional(net) => net.named_params_mut(),
            FusionHead::Gated(net) => net.named_params_mut(),
            FusionHead::Naive(net) => net.named_params_mut(),
        };
        named.into_iter().map(|(_, p)| p).collect()
    }
}

/// Gate/conditional outputs recorded alongside a prediction.
#[derive(Debug, Clone, Default)]
pub struct GateReadout {
    /// Conditional vector C (conditional head only).
    pub conditional: Option<Vec<f32>>,
    /// Depth gate M_D (gated head only).
    pub m_d: Option<f32>,
    /// Embedding gate M_E (gated head only).
    pub m_e: Option<f32>,
}

/// Depth perception + segmentation encoder + fusion head, bundled so a
/// single checkpoint is a complete steering predictor.
#[derive(Clone)]
pub struct SteeringStack {
    pub config: ArchitectureConfig,
    pub depth_net: DepthNet,
    pub autoencoder: SegmentationAutoencoder,
    pub head: FusionHead,
}

impl SteeringStack {
    /// Full prediction from raw sensor images.
    pub fn predict(&mut self, depth: &Tensor, rgb: &Tensor) -> (f32, GateReadout) {
        let features = self.depth_net.features(depth);
        let embedding = self.autoencoder.encode(rgb);
        self.predict_from_features(&features, &embedding)
    }

    /// Prediction from precomputed depth features and embedding.
    pub fn predict_from_features(
        &mut self,
        features: &Tensor,
        embedding: &Tensor,
    ) -> (f32, GateReadout) {
        match &mut self.head {
            FusionHead::Conditional(net) => {
                let (pred, c) = net.forward(features, embedding);
                (
                    pred,
                    GateReadout {
                        conditional: Some(c.data().to_vec()),
                        ..Default::default()
                    },
                )
            }
            FusionHead::Gated(net) => {
                let (pred, m_d, m_e) = net.forward(features, embedding);
                (
                    pred,
                    GateReadout {
                        m_d: Some(m_d),
                        m_e: Some(m_e),
                        ..Default::default()
                    },
                )
            }
            FusionHead::Naive(net) => (net.forward(features, embedding), GateReadout::default()),
        }
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut out: Vec<(String, &mut Param)> = Vec::new();
        for (name, p) in self.depth_net.named_params_mut() {
            out.push((format!("depth.{}", name), p));
        }
        for (name, p) in self.autoencoder.named_params_mut() {
            out.push((format!("seg.{}", name), p));
        }
        let head_params: Vec<(&'static str, &mut Param)> = match &mut self.head {
            FusionHead::Conditional(net) => net.named_params_mut(),
            FusionHead::Gated(net) => net.named_params_mut(),
            FusionHead::Naive(net) => net.named_params_mut(),
        };
        for (name, p) in head_params {
            out.push((format!("head.{}", name), p));
        }
        out
    }
}
