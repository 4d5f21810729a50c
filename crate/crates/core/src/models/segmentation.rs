//! Segmentation encoder-decoder without skip connections.
//!
//! Encoder: four conv k5/s2 valid + relu stages with channels
//! 3 -> 8 -> 16 -> 32 -> 32 (spatial 128 -> 62 -> 29 -> 13 -> 5), then a
//! dense layer to the length-64 embedding. Decoder: dense to a [32, 8, 8]
//! map, four nearest-upsample + conv k3/s1/p1 + relu stages up to 128x128,
//! and a final conv to K class logits. The only path from input to logits
//! runs through the embedding bottleneck.

use super::config::ArchitectureConfig;
use crate::numerics::{Conv2d, Dense, Param, Relu, Tensor, Upsample2x};
use crate::rng::Rng;

pub const ENC_CHANNELS: [usize; 5] = [3, 8, 16, 32, 32];
pub const ENC_SPATIAL_OUT: usize = 5;
pub const DEC_SEED_CHANNELS: usize = 32;
pub const DEC_SEED_SPATIAL: usize = 8;
pub const DEC_CHANNELS: [usize; 5] = [32, 16, 8, 6, 6];

#[derive(Clone)]
pub struct SegmentationAutoencoder {
    pub config: ArchitectureConfig,
    enc_conv: Vec<Conv2d>,
    enc_relu: Vec<Relu>,
    enc_fc: Dense,
    dec_fc: Dense,
    dec_up: Vec<Upsample2x>,
    dec_conv: Vec<Conv2d>,
    dec_relu: Vec<Relu>,
    dec_logits: Conv2d,
}

impl SegmentationAutoencoder {
    pub fn new(config: ArchitectureConfig, rng: &mut Rng) -> Self {
        let enc_conv = (0..4)
            .map(|i| Conv2d::new(ENC_CHANNELS[i], ENC_CHANNELS[i + 1], 5, 2, 0, rng))
            .collect();
        let enc_relu = (0..4).map(|_| Relu::new()).collect();
        let flat = ENC_CHANNELS[4] * ENC_SPATIAL_OUT * ENC_SPATIAL_OUT;
        let enc_fc = Dense::new(flat, config.embedding, rng);
        let dec_fc = Dense::new(
            config.embedding,
            DEC_SEED_CHANNELS * DEC_SEED_SPATIAL * DEC_SEED_SPATIAL,
            rng,
        );
        let dec_up = (0..4).map(|_| Upsample2x::new()).collect();
        let dec_conv = (0..4)
            .map(|i| Conv2d::new(DEC_CHANNELS[i], DEC_CHANNELS[i + 1], 3, 1, 1, rng))
            .collect();
        let dec_relu = (0..4).map(|_| Relu::new()).collect();
        let dec_logits = Conv2d::new(DEC_CHANNELS[4], config.classes, 3, 1, 1, rng);
        let net = SegmentationAutoencoder {
            config,
            enc_conv,
            enc_relu,
            enc_fc,
            dec_fc,
            dec_up,
            dec_conv,
            dec_relu,
            dec_logits,
        };
        assert_eq!(
            net.param_count(),
            Self::expected_param_count(&config),
            "segmentation autoencoder parameter count mismatch"
        );
        net
    }

    pub fn expected_param_count(cfg: &ArchitectureConfig) -> usize {
        let conv = |i: usize, o: usize, k: usize| o * i * k * k + o;
        let dense = |i: usize, o: usize| o * i + o;
        let mut n = 0;
        for i in 0..4 {
            n += conv(ENC_CHANNELS[i], ENC_CHANNELS[i + 1], 5);
        }
        n += dense(ENC_CHANNELS[4] * ENC_SPATIAL_OUT * ENC_SPATIAL_OUT, cfg.embedding);
        n += dense(cfg.embedding, DEC_SEED_CHANNELS * DEC_SEED_SPATIAL * DEC_SEED_SPATIAL);
        for i in 0..4 {
            n += conv(DEC_CHANNELS[i], DEC_CHANNELS[i + 1], 3);
        }
        n += conv(DEC_CHANNELS[4], cfg.classes, 3);
        n
    }

    pub fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.value.len()).sum()
    }

    /// RGB image to the length-64 latent embedding.
    pub fn encode(&mut self, rgb: &Tensor) -> Tensor {
        assert_eq!(
            rgb.shape(),
            &[3, 128, 128],
            "rgb input must be [3, 128, 128], got {:?}",
            rgb.shape()
        );
        let mut x = rgb.clone();
        for i in 0..4 {
            x = self.enc_conv[i].forward(&x);
            x = self.enc_relu[i].forward(&x);
        }
        let flat = x.reshaped(vec![ENC_CHANNELS[4] * ENC_SPATIAL_OUT * ENC_SPATIAL_OUT]);
        self.enc_fc.forward(&flat)
    }

    /// Embedding to per-pixel class logits [K, 128, 128].
    pub fn decode(&mut self, embedding: &Tensor) -> Tensor {
        assert_eq!(
            embedding.len(),
            self.config.embedding,
            "embedding must have length {}, got {}",
            self.config.embedding,
            embedding.len()
        );
        let x = self.dec_fc.forward(embedding);
        let mut x = x.reshaped(vec![DEC_SEED_CHANNELS, DEC_SEED_SPATIAL, DEC_SEED_SPATIAL]);
        for i in 0..4 {
            x = self.dec_up[i].forward(&x);
            x = self.dec_conv[i].forward(&x);
            x = self.dec_relu[i].forward(&x);
        }
        self.dec_logits.forward(&x)
    }

    pub fn forward(&mut self, rgb: &Tensor) -> Tensor {
        let embedding = self.encode(rgb);
        self.decode(&embedding)
    }

    /// Backward through decoder then encoder from d(loss)/d(logits).
    pub fn backward(&mut self, dlogits: &Tensor) {
        let dembedding = self.backward_decoder(dlogits);
        self.backward_encoder(&dembedding);
    }

    pub fn backward_decoder(&mut self, dlogits: &Tensor) -> Tensor {
        let mut dx = self.dec_logits.backward(dlogits);
        for i in (0..4).rev() {
            dx = self.dec_relu[i].backward(&dx);
            dx = self.dec_conv[i].backward(&dx);
            dx = self.dec_up[i].backward(&dx);
        }
        let flat = dx.reshaped(vec![DEC_SEED_CHANNELS * DEC_SEED_SPATIAL * DEC_SEED_SPATIAL]);
        self.dec_fc.backward(&flat)
    }

    pub fn backward_encoder(&mut self, dembedding: &Tensor) {
        let dx = self.enc_fc.backward(dembedding);
        let mut dx = dx.reshaped(vec![ENC_CHANNELS[4], ENC_SPATIAL_OUT, ENC_SPATIAL_OUT]);
        for i in (1..4).rev() {
            dx = self.enc_relu[i].backward(&dx);
            dx = self.enc_conv[i].backward(&dx);
        }
        let dx = self.enc_relu[0].backward(&dx);
        self.enc_conv[0].backward_no_input_grad(&dx);
    }

    /// Marks the encoder (convs + embedding dense) frozen.
    pub fn freeze_encoder(&mut self) {
        for conv in &mut self.enc_conv {
            conv.weights.freeze();
            conv.bias.freeze();
        }
        self.enc_fc.weights.freeze();
        self.enc_fc.bias.freeze();
    }

    pub fn named_params(&self) -> Vec<(String, &Param)> {
        let mut out: Vec<(String, &Param)> = Vec::new();
        for (i, conv) in self.enc_conv.iter().enumerate() {
            out.push((format!("enc_conv{}.weight", i + 1), &conv.weights));
            out.push((format!("enc_conv{}.bias", i + 1), &conv.bias));
        }
        out.push(("enc_fc.weight".into(), &self.enc_fc.weights));
        out.push(("enc_fc.bias".into(), &self.enc_fc.bias));
        out.push(("dec_fc.weight".into(), &self.dec_fc.weights));
        out.push(("dec_fc.bias".into(), &self.dec_fc.bias));
        for (i, conv) in self.dec_conv.iter().enumerate() {
            out.push((format!("dec_conv{}.weight", i + 1), &conv.weights));
            out.push((format!("dec_conv{}.bias", i + 1), &conv.bias));
        }
        out.push(("dec_logits.weight".into(), &self.dec_logits.weights));
        out.push(("dec_logits.bias".into(), &self.dec_logits.bias));
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut out: Vec<(String, &mut Param)> = Vec::new();
        for (i, conv) in self.enc_conv.iter_mut().enumerate() {
            out.push((format!("enc_conv{}.weight", i + 1), &mut conv.weights));
            out.push((format!("enc_conv{}.bias", i + 1), &mut conv.bias));
        }
        out.push(("enc_fc.weight".into(), &mut self.enc_fc.weights));
        out.push(("enc_fc.bias".into(), &mut self.enc_fc.bias));
        out.push(("dec_fc.weight".into(), &mut self.dec_fc.weights));
        out.push(("dec_fc.bias".into(), &mut self.dec_fc.bias));
        for (i, conv) in self.dec_conv.iter_mut().enumerate() {
            out.push((format!("dec_conv{}.weight", i + 1), &mut conv.weights));
            out.push((format!("dec_conv{}.bias", i + 1), &mut conv.bias));
        }
        out.push(("dec_logits.weight".into(), &mut self.dec_logits.weights));
        out.push(("dec_logits.bias".into(), &mut self.dec_logits.bias));
        out
    }
}
