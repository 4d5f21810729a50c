//! Gradient-check harnesses: each bundles a network with a fixed input and
//! target so the finite-difference checker can treat it as a scalar loss.
//!
//! `loss_and_grad` runs the f32 engine; `loss` re-evaluates the same
//! architecture through the f64 reference implementations so central
//! differences are noise-free. The two paths share only the stored f32
//! parameter values.

use super::config::ArchitectureConfig;
use super::depth::DepthNet;
use super::fusion::FusionConditionalNet;
use super::gated::WeightedGateNet;
use super::segmentation::{
    SegmentationAutoencoder, DEC_CHANNELS, DEC_SEED_CHANNELS, DEC_SEED_SPATIAL, ENC_CHANNELS,
    ENC_SPATIAL_OUT,
};
use crate::numerics::gradcheck::{Differentiable, LossProbe};
use crate::numerics::{
    huber_grad, huber_loss, reference, softmax_cross_entropy, softmax_cross_entropy_grad, Param,
    Tensor,
};
use crate::rng::Rng;

const HUBER_DELTA: f32 = 1.0;

fn to_f64(data: &[f32]) -> Vec<f64> {
    data.iter().map(|&v| v as f64).collect()
}

fn find<'a>(params: &'a [(&'static str, &'a Param)], name: &str) -> &'a Param {
    params
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("no parameter named {}", name))
        .1
}

fn find_string<'a>(params: &'a [(String, &'a Param)], name: &str) -> &'a Param {
    params
        .iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("no parameter named {}", name))
        .1
}

pub struct DepthHarness {
    pub net: DepthNet,
    input: Tensor,
    target: f32,
}

impl DepthHarness {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
        let input = Tensor::uniform(vec![1, 128, 128], 0.5, &mut rng);
        DepthHarness {
            net,
            input,
            target: 0.3,
        }
    }
}

impl DepthHarness {
    fn reference_loss(&self) -> (f64, reference::KinkMargin) {
        let cfg = self.net.config;
        let params = self.net.named_params();
        let mut margin = reference::KinkMargin::fresh();
        let x = to_f64(self.input.data());
        let conv = |x: &[f64], h: usize, w: usize, name: &str, ci: usize, co: usize| {
            reference::conv2d(
                x,
                find(&params, &format!("{}.weight", name)).value.data(),
                find(&params, &format!("{}.bias", name)).value.data(),
                ci,
                co,
                h,
                w,
                5,
                2,
                0,
            )
        };
        let (mut x, h, w) = conv(&x, 128, 128, "conv1", 1, cfg.f1);
        reference::relu_tracked(&mut x, &mut margin);
        let (x, h, w) = reference::maxpool2d_tracked(&x, cfg.f1, h, w, &mut margin);
        let (mut x, h, w) = conv(&x, h, w, "conv2", cfg.f1, cfg.f2);
        reference::relu_tracked(&mut x, &mut margin);
        let (x, h, w) = reference::maxpool2d_tracked(&x, cfg.f2, h, w, &mut margin);
        let (x, h, w) = conv(&x, h, w, "conv3", cfg.f2, cfg.f3);
        let (x, _, _) = reference::maxpool2d_tracked(&x, cfg.f3, h, w, &mut margin);
        let mut x = reference::dense(
            &x,
            find(&params, "fc1.weight").value.data(),
            find(&params, "fc1.bias").value.data(),
            cfg.f3,
            cfg.f4,
        );
        reference::relu_tracked(&mut x, &mut margin);
        let y = reference::dense(
            &x,
            find(&params, "fc2.weight").value.data(),
            find(&params, "fc2.bias").value.data(),
            cfg.f4,
            1,
        );
        let loss = reference::huber_tracked(y[0], self.target as f64, HUBER_DELTA as f64, &mut margin);
        (loss, margin)
    }
}

impl Differentiable for DepthHarness {
    fn loss(&mut self) -> f64 {
        self.reference_loss().0
    }

    fn loss_probe(&mut self) -> LossProbe {
        let (loss, margin) = self.reference_loss();
        LossProbe {
            loss,
            margin: margin.margin,
            signature: margin.signature,
        }
    }

    fn loss_and_grad(&mut self) -> f64 {
        for (_, p) in self.net.named_params_mut() {
            p.value.zero_grad();
        }
        let pred = self.net.forward(&self.input);
        let loss = huber_loss(pred, self.target, HUBER_DELTA);
        self.net.backward(huber_grad(pred, self.target, HUBER_DELTA));
        loss as f64
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.named_params_mut().into_iter().map(|(_, p)| p).collect()
    }
}

pub struct SegHarness {
    pub net: SegmentationAutoencoder,
    input: Tensor,
    labels: Vec<u8>,
}

impl SegHarness {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let net = SegmentationAutoencoder::new(ArchitectureConfig::default(), &mut rng);
        let input = Tensor::uniform(vec![3, 128, 128], 0.5, &mut rng);
        let labels = (0..128 * 128).map(|_| rng.below(4) as u8).collect();
        SegHarness { net, input, labels }
    }
}

impl SegHarness {
    fn reference_loss(&self) -> (f64, reference::KinkMargin) {
        let cfg = self.net.config;
        let params = self.net.named_params();
        let mut margin = reference::KinkMargin::fresh();
        let x = to_f64(self.input.data());

        // Encoder.
        let mut cur = x;
        let (mut h, mut w) = (128usize, 128usize);
        for i in 0..4 {
            let (mut next, nh, nw) = reference::conv2d(
                &cur,
                find_string(&params, &format!("enc_conv{}.weight", i + 1)).value.data(),
                find_string(&params, &format!("enc_conv{}.bias", i + 1)).value.data(),
                ENC_CHANNELS[i],
                ENC_CHANNELS[i + 1],
                h,
                w,
                5,
                2,
                0,
            );
            reference::relu_tracked(&mut next, &mut margin);
            cur = next;
            h = nh;
            w = nw;
        }
        debug_assert_eq!((h, w), (ENC_SPATIAL_OUT, ENC_SPATIAL_OUT));
        let embedding = reference::dense(
            &cur,
            find_string(&params, "enc_fc.weight").value.data(),
            find_string(&params, "enc_fc.bias").value.data(),
            ENC_CHANNELS[4] * ENC_SPATIAL_OUT * ENC_SPATIAL_OUT,
            cfg.embedding,
        );

        // Decoder.
        let mut cur = reference::dense(
            &embedding,
            find_string(&params, "dec_fc.weight").value.data(),
            find_string(&params, "dec_fc.bias").value.data(),
            cfg.embedding,
            DEC_SEED_CHANNELS * DEC_SEED_SPATIAL * DEC_SEED_SPATIAL,
        );
        let (mut h, mut w) = (DEC_SEED_SPATIAL, DEC_SEED_SPATIAL);
        for i in 0..4 {
            let (up, uh, uw) = reference::upsample2x(&cur, DEC_CHANNELS[i], h, w);
            let (mut next, nh, nw) = reference::conv2d(
                &up,
                find_string(&params, &format!("dec_conv{}.weight", i + 1)).value.data(),
                find_string(&params, &format!("dec_conv{}.bias", i + 1)).value.data(),
                DEC_CHANNELS[i],
                DEC_CHANNELS[i + 1],
                uh,
                uw,
                3,
                1,
                1,
            );
            reference::relu_tracked(&mut next, &mut margin);
            cur = next;
            h = nh;
            w = nw;
        }
        let (logits, _, _) = reference::conv2d(
            &cur,
            find_string(&params, "dec_logits.weight").value.data(),
            find_string(&params, "dec_logits.bias").value.data(),
            DEC_CHANNELS[4],
            cfg.classes,
            h,
            w,
            3,
            1,
            1,
        );
        let loss = reference::softmax_cross_entropy(&logits, &self.labels, cfg.classes);
        (loss, margin)
    }
}

impl Differentiable for SegHarness {
    fn loss(&mut self) -> f64 {
        self.reference_loss().0
    }

    fn loss_probe(&mut self) -> LossProbe {
        let (loss, margin) = self.reference_loss();
        LossProbe {
            loss,
            margin: margin.margin,
            signature: margin.signature,
        }
    }

    fn loss_and_grad(&mut self) -> f64 {
        for (_, p) in self.net.named_params_mut() {
            p.value.zero_grad();
        }
        let logits = self.net.forward(&self.input);
        let loss = softmax_cross_entropy(&logits, &self.labels);
        let dlogits = softmax_cross_entropy_grad(&logits, &self.labels);
        self.net.backward(&dlogits);
        loss as f64
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.named_params_mut().into_iter().map(|(_, p)| p).collect()
    }
}

pub struct FusionHarness {
    pub net: FusionConditionalNet,
    features: Tensor,
    embedding: Tensor,
    target: f32,
}

impl FusionHarness {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let net = FusionConditionalNet::new(ArchitectureConfig::default(), &mut rng);
        FusionHarness {
            net,
            features: Tensor::uniform(vec![5], 1.0, &mut rng),
            embedding: Tensor::uniform(vec![64], 1.0, &mut rng),
            target: -0.2,
        }
    }
}

impl FusionHarness {
    fn reference_loss(&self) -> (f64, reference::KinkMargin) {
        let cfg = self.net.config;
        let params = self.net.named_params();
        let mut margin = reference::KinkMargin::fresh();
        let mut fused = to_f64(self.features.data());
        fused.extend(to_f64(self.embedding.data()));

        let mut c = reference::dense(
            &fused,
            find(&params, "cond_fc1.weight").value.data(),
            find(&params, "cond_fc1.bias").value.data(),
            cfg.fused_len(),
            32,
        );
        reference::relu_tracked(&mut c, &mut margin);
        let mut c = reference::dense(
            &c,
            find(&params, "cond_fc2.weight").value.data(),
            find(&params, "cond_fc2.bias").value.data(),
            32,
            cfg.conditional,
        );
        reference::tanh(&mut c);

        let mut ctrl_in = fused;
        ctrl_in.extend(c);
        let mut x = reference::dense(
            &ctrl_in,
            find(&params, "ctrl_fc1.weight").value.data(),
            find(&params, "ctrl_fc1.bias").value.data(),
            cfg.conditional_control_len(),
            cfg.f4,
        );
        reference::relu_tracked(&mut x, &mut margin);
        let y = reference::dense(
            &x,
            find(&params, "ctrl_fc2.weight").value.data(),
            find(&params, "ctrl_fc2.bias").value.data(),
            cfg.f4,
            1,
        );
        let loss = reference::huber_tracked(y[0], self.target as f64, HUBER_DELTA as f64, &mut margin);
        (loss, margin)
    }
}

impl Differentiable for FusionHarness {
    fn loss(&mut self) -> f64 {
        self.reference_loss().0
    }

    fn loss_probe(&mut self) -> LossProbe {
        let (loss, margin) = self.reference_loss();
        LossProbe {
            loss,
            margin: margin.margin,
            signature: margin.signature,
        }
    }

    fn loss_and_grad(&mut self) -> f64 {
        for (_, p) in self.net.named_params_mut() {
            p.value.zero_grad();
        }
        let (pred, _) = self.net.forward(&self.features, &self.embedding);
        let loss = huber_loss(pred, self.target, HUBER_DELTA);
        self.net.backward(huber_grad(pred, self.target, HUBER_DELTA));
        loss as f64
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.named_params_mut().into_iter().map(|(_, p)| p).collect()
    }
}

pub struct GatedHarness {
    pub net: WeightedGateNet,
    features: Tensor,
    embedding: Tensor,
    target: f32,
}

impl GatedHarness {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let net = WeightedGateNet::new(ArchitectureConfig::default(), &mut rng);
        GatedHarness {
            net,
            features: Tensor::uniform(vec![5], 1.0, &mut rng),
            embedding: Tensor::uniform(vec![64], 1.0, &mut rng),
            target: 0.4,
        }
    }
}

impl GatedHarness {
    fn reference_loss(&self) -> (f64, reference::KinkMargin) {
        let cfg = self.net.config;
        let params = self.net.named_params();
        let mut margin = reference::KinkMargin::fresh();
        let feats = to_f64(self.features.data());
        let emb = to_f64(self.embedding.data());

        let mut m_d = reference::dense(
            &feats,
            find(&params, "gate_d.weight").value.data(),
            find(&params, "gate_d.bias").value.data(),
            cfg.f3,
            1,
        );
        reference::tanh(&mut m_d);
        let mut m_e = reference::dense(
            &emb,
            find(&params, "gate_e.weight").value.data(),
            find(&params, "gate_e.bias").value.data(),
            cfg.embedding,
            1,
        );
        reference::tanh(&mut m_e);

        let mut weighted: Vec<f64> = feats.iter().map(|v| v * m_d[0]).collect();
        weighted.extend(emb.iter().map(|v| v * m_e[0]));
        let mut x = reference::dense(
            &weighted,
            find(&params, "ctrl_fc1.weight").value.data(),
            find(&params, "ctrl_fc1.bias").value.data(),
            cfg.fused_len(),
            cfg.f4,
        );
        reference::relu_tracked(&mut x, &mut margin);
        let y = reference::dense(
            &x,
            find(&params, "ctrl_fc2.weight").value.data(),
            find(&params, "ctrl_fc2.bias").value.data(),
            cfg.f4,
            1,
        );
        let loss = reference::huber_tracked(y[0], self.target as f64, HUBER_DELTA as f64, &mut margin);
        (loss, margin)
    }
}

impl Differentiable for GatedHarness {
    fn loss(&mut self) -> f64 {
        self.reference_loss().0
    }

    fn loss_probe(&mut self) -> LossProbe {
        let (loss, margin) = self.reference_loss();
        LossProbe {
            loss,
            margin: margin.margin,
            signature: margin.signature,
        }
    }

    fn loss_and_grad(&mut self) -> f64 {
        for (_, p) in self.net.named_params_mut() {
            p.value.zero_grad();
        }
        let (pred, _, _) = self.net.forward(&self.features, &self.embedding);
        let loss = huber_loss(pred, self.target, HUBER_DELTA);
        self.net.backward(huber_grad(pred, self.target, HUBER_DELTA));
        loss as f64
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.named_params_mut().into_iter().map(|(_, p)| p).collect()
    }
}
