//! The staged training pipeline.
//!
//! Stage 1 trains the depth-only model on depth maps. Stage 2 trains the
//! segmentation autoencoder on RGB/semantic pairs. Stage 3 trains a fusion
//! head on top of the frozen depth perception and (by default) frozen
//! segmentation encoder, with per-sample failure injection. Because the
//! extractors are frozen, stage 3 precomputes every sample's depth feature
//! vector and embedding once and trains on those vectors; the RgbWrong
//! substitution then reduces to indexing another sample's embedding, and is
//! redrawn every epoch.

use super::config::TrainConfig;
use super::failure::{sample_failure_mode, substitute_index, FailureMode, FailurePolicy};
use super::metrics::{MetricsLog, MetricsRow};
use crate::error::{Error, Result};
use crate::models::{
    ArchitectureConfig, DepthNet, FusionConditionalNet, FusionHead, NaiveConcatNet,
    SegmentationAutoencoder, SteeringStack, WeightedGateNet,
};
use crate::numerics::{
    huber_grad, huber_loss, pixel_accuracy, softmax_cross_entropy, softmax_cross_entropy_grad,
    AdamState, Tensor,
};
use crate::rng::Rng;
use crate::synthworld::Sample;

/// Which fusion head stage 3 trains, and whether injection is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionVariant {
    /// Conditional-vector head with failure injection.
    Conditional,
    /// Weighted-gate head with failure injection.
    Gated,
    /// Plain concat head trained without any injection (ablation a).
    NaiveNoInjection,
    /// Plain concat head trained with injection (ablation b).
    NaiveWithInjection,
}

impl FusionVariant {
    pub fn injection_enabled(&self) -> bool {
        matches!(self, FusionVariant::Conditional | FusionVariant::Gated | FusionVariant::NaiveWithInjection)
    }

    pub fn stage_name(&self) -> &'static str {
        match self {
            FusionVariant::Conditional => "fusion",
            FusionVariant::Gated => "gated",
            FusionVariant::NaiveNoInjection => "baseline-no-injection",
            FusionVariant::NaiveWithInjection => "baseline-no-conditional",
        }
    }
}

pub struct DepthTrainOutput {
    pub net: DepthNet,
    pub metrics: MetricsLog,
    pub final_loss: f32,
    /// Huber loss of the constant mean-steering predictor on the dataset.
    pub baseline_loss: f32,
}

/// Mean Huber loss of predicting the dataset's mean steering everywhere.
pub fn constant_predictor_baseline(samples: &[Sample], delta: f32) -> f32 {
    let mean: f64 = samples.iter().map(|s| s.steering as f64).sum::<f64>() / samples.len() as f64;
    let total: f64 = samples
        .iter()
        .map(|s| huber_loss(mean as f32, s.steering, delta) as f64)
        .sum();
    (total / samples.len() as f64) as f32
}

fn check_finite(loss: f32, stage: &'static str, epoch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged { stage, epoch, loss })
    }
}

/// Stage 1: steering from depth maps alone.
pub fn train_depth(samples: &[Sample], cfg: &TrainConfig) -> Result<DepthTrainOutput> {
    assert!(!samples.is_empty());
    let mut rng = Rng::new(cfg.seed).fork(0xdeb7);
    let mut net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
    let mut adam = AdamState::new(cfg.learning_rate);
    let mut metrics = MetricsLog::default();
    let baseline = constant_predictor_baseline(samples, cfg.huber_delta);

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut final_loss = f32::MAX;
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0f64;
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f32;
            for &i in batch {
                let sample = &samples[i];
                let pred = net.forward(&sample.depth);
                let loss = huber_loss(pred, sample.steering, cfg.huber_delta);
                epoch_loss += loss as f64;
                let dpred = huber_grad(pred, sample.steering, cfg.huber_delta) * scale;
                net.backward(dpred);
            }
            let mut params: Vec<_> = net.named_params_mut().into_iter().map(|(_, p)| p).collect();
            adam.step(&mut params);
        }
        final_loss = (epoch_loss / samples.len() as f64) as f32;
        check_finite(final_loss, "depth", epoch)?;
        metrics.push(MetricsRow {
            epoch,
            stage: "depth",
            loss: final_loss,
            loss_both_ok: None,
            loss_depth_blank: None,
            loss_rgb_wrong: None,
        });
    }
    Ok(DepthTrainOutput {
        net,
        metrics,
        final_loss,
        baseline_loss: baseline,
    })
}

pub struct SegTrainOutput {
    pub net: SegmentationAutoencoder,
    pub metrics: MetricsLog,
    pub final_loss: f32,
    /// Per-pixel accuracy on the held-out slice of the training weather.
    pub holdout_accuracy: f32,
    pub holdout_size: usize,
}

/// Stage 2: segmentation autoencoder on RGB images and semantic labels.
pub fn train_segmentation(samples: &[Sample], cfg: &TrainConfig) -> Result<SegTrainOutput> {
    assert!(samples.len() >= 10, "segmentation training needs a real dataset");
    let mut rng = Rng::new(cfg.seed).fork(0x5e6);
    let mut net = SegmentationAutoencoder::new(ArchitectureConfig::default(), &mut rng);
    let mut adam = AdamState::new(cfg.learning_rate);
    let mut metrics = MetricsLog::default();

    // Deterministic holdout split.
    let mut order: Vec<usize> = (0..samples.len()).collect();
    rng.shuffle(&mut order);
    let holdout_len = ((samples.len() as f32 * cfg.holdout_fraction) as usize).max(1);
    let (holdout_idx, train_idx) = order.split_at(holdout_len);
    let mut train_order: Vec<usize> = train_idx.to_vec();

    let mut final_loss = f32::MAX;
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut train_order);
        let mut epoch_loss = 0.0f64;
        for batch in train_order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f32;
            for &i in batch {
                let sample = &samples[i];
                let logits = net.forward(&sample.rgb);
                let loss = softmax_cross_entropy(&logits, &sample.semantic);
                epoch_loss += loss as f64;
                let mut dlogits = softmax_cross_entropy_grad(&logits, &sample.semantic);
                dlogits.data_mut().iter_mut().for_each(|g| *g *= scale);
                net.backward(&dlogits);
            }
            let mut params: Vec<_> = net.named_params_mut().into_iter().map(|(_, p)| p).collect();
            adam.step(&mut params);
        }
        final_loss = (epoch_loss / train_order.len() as f64) as f32;
        check_finite(final_loss, "segmentation", epoch)?;
        metrics.push(MetricsRow {
            epoch,
            stage: "segmentation",
            loss: final_loss,
            loss_both_ok: None,
            loss_depth_blank: None,
            loss_rgb_wrong: None,
        });
    }

    let mut acc_sum = 0.0f64;
    for &i in holdout_idx {
        let logits = net.forward(&samples[i].rgb);
        acc_sum += pixel_accuracy(&logits, &samples[i].semantic) as f64;
    }
    let holdout_accuracy = (acc_sum / holdout_idx.len() as f64) as f32;

    Ok(SegTrainOutput {
        net,
        metrics,
        final_loss,
        holdout_accuracy,
        holdout_size: holdout_idx.len(),
    })
}

/// Mean per-pixel accuracy of the autoencoder over a sample set.
pub fn segmentation_accuracy(net: &mut SegmentationAutoencoder, samples: &[Sample]) -> f32 {
    let mut acc_sum = 0.0f64;
    for sample in samples {
        let logits = net.forward(&sample.rgb);
        acc_sum += pixel_accuracy(&logits, &sample.semantic) as f64;
    }
    (acc_sum / samples.len() as f64) as f32
}

pub struct FusionTrainOutput {
    pub stack: SteeringStack,
    pub metrics: MetricsLog,
    pub final_loss: f32,
}

fn snapshot_params(params: &[(String, &mut crate::numerics::Param)]) -> Vec<(String, Vec<f32>)> {
    params
        .iter()
        .map(|(n, p)| (n.clone(), p.value.data().to_vec()))
        .collect()
}

/// Stage 3: train a fusion head over frozen extractors with injection.
pub fn train_fusion_variant(
    mut depth_net: DepthNet,
    mut autoencoder: SegmentationAutoencoder,
    samples: &[Sample],
    cfg: &TrainConfig,
    variant: FusionVariant,
) -> Result<FusionTrainOutput> {
    assert!(samples.len() >= 2, "fusion training needs at least 2 samples");
    let arch = ArchitectureConfig::default();
    let mut rng = Rng::new(cfg.seed).fork(match variant {
        FusionVariant::Conditional => 0xf051,
        FusionVariant::Gated => 0x6a7e,
        FusionVariant::NaiveNoInjection => 0xba5e0,
        FusionVariant::NaiveWithInjection => 0xba5e1,
    });

    depth_net.freeze_perception();
    // Depth perception is always frozen per the staged protocol; the
    // encoder freeze is this crate's default and a config flag.
    if cfg.freeze_encoder {
        autoencoder.freeze_encoder();
    }

    let head_is_conditional =
        matches!(variant, FusionVariant::Conditional) && !cfg.no_conditional_net;
    let mut head = if head_is_conditional {
        FusionHead::Conditional(FusionConditionalNet::new(arch, &mut rng))
    } else {
        match variant {
            FusionVariant::Gated => FusionHead::Gated(WeightedGateNet::new(arch, &mut rng)),
            _ => FusionHead::Naive(NaiveConcatNet::new(arch, &mut rng)),
        }
    };

    let inject = variant.injection_enabled() && !cfg.no_injection;
    let policy = FailurePolicy::default();
    policy.validate();

    // Depth perception is frozen, so features are fixed per sample. With
    // the encoder frozen too (the default), embeddings are precomputed and
    // the whole stage trains on 69-dimensional vectors.
    let features: Vec<Tensor> = samples.iter().map(|s| depth_net.features(&s.depth)).collect();
    let blank_features = depth_net.features(&Tensor::zeros(vec![1, 128, 128]));
    let embeddings: Vec<Tensor> = if cfg.freeze_encoder {
        samples.iter().map(|s| autoencoder.encode(&s.rgb)).collect()
    } else {
        Vec::new()
    };

    let frozen_before = {
        let mut frozen: Vec<(String, &mut crate::numerics::Param)> = Vec::new();
        for (n, p) in depth_net.named_params_mut() {
            if p.frozen {
                frozen.push((format!("depth.{}", n), p));
            }
        }
        for (n, p) in autoencoder.named_params_mut() {
            if p.frozen {
                frozen.push((format!("seg.{}", n), p));
            }
        }
        snapshot_params(&frozen)
    };

    let mut adam = AdamState::new(cfg.learning_rate);
    let mut metrics = MetricsLog::default();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut final_loss = f32::MAX;
    let stage = variant.stage_name();

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0f64;
        let mut mode_loss = [0.0f64; 3];
        let mut mode_count = [0usize; 3];
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f32;
            for &i in batch {
                let mode = if inject {
                    sample_failure_mode(&policy, &mut rng)
                } else {
                    FailureMode::BothOk
                };
                let feats = match mode {
                    FailureMode::DepthBlank => &blank_features,
                    _ => &features[i],
                };
                let emb_index = match mode {
                    FailureMode::RgbWrong => substitute_index(i, samples.len(), &mut rng),
                    _ => i,
                };
                let live_embedding;
                let emb = if cfg.freeze_encoder {
                    &embeddings[emb_index]
                } else {
                    live_embedding = autoencoder.encode(&samples[emb_index].rgb);
                    &live_embedding
                };
                let pred = head.forward_value(feats, emb);
                let loss = huber_loss(pred, samples[i].steering, cfg.huber_delta);
                epoch_loss += loss as f64;
                let slot = match mode {
                    FailureMode::BothOk => 0,
                    FailureMode::DepthBlank => 1,
                    FailureMode::RgbWrong => 2,
                };
                mode_loss[slot] += loss as f64;
                mode_count[slot] += 1;
                let dpred = huber_grad(pred, samples[i].steering, cfg.huber_delta) * scale;
                let (_, demb) = head.backward(dpred);
                if !cfg.freeze_encoder {
                    autoencoder.backward_encoder(&demb);
                }
            }
            let mut params = head.params_mut();
            if !cfg.freeze_encoder {
                // Encoder trains jointly; decoder parameters receive no
                // gradient from this loss and are skipped by the optimizer.
                let mut enc: Vec<_> =
                    autoencoder.named_params_mut().into_iter().map(|(_, p)| p).collect();
                params.append(&mut enc);
            }
            adam.step(&mut params);
        }
        final_loss = (epoch_loss / samples.len() as f64) as f32;
        check_finite(final_loss, variant.stage_name(), epoch)?;
        let mode_mean = |slot: usize| {
            if mode_count[slot] > 0 {
                Some((mode_loss[slot] / mode_count[slot] as f64) as f32)
            } else {
                None
            }
        };
        metrics.push(MetricsRow {
            epoch,
            stage,
            loss: final_loss,
            loss_both_ok: mode_mean(0),
            loss_depth_blank: mode_mean(1),
            loss_rgb_wrong: mode_mean(2),
        });
    }

    // Stage isolation: every frozen parameter must be bit-identical.
    {
        let mut frozen_now: Vec<(String, &crate::numerics::Param)> = Vec::new();
        for (n, p) in depth_net.named_params() {
            if p.frozen {
                frozen_now.push((format!("depth.{}", n), p));
            }
        }
        for (n, p) in autoencoder.named_params() {
            if p.frozen {
                frozen_now.push((format!("seg.{}", n), p));
            }
        }
        assert_eq!(frozen_before.len(), frozen_now.len());
        for ((name, before), (_, now)) in frozen_before.iter().zip(frozen_now.iter()) {
            assert_eq!(
                before.as_slice(),
                now.value.data(),
                "frozen parameter {} changed during fusion training",
                name
            );
        }
    }

    Ok(FusionTrainOutput {
        stack: SteeringStack {
            config: arch,
            depth_net,
            autoencoder,
            head,
        },
        metrics,
        final_loss,
    })
}

/// Stage 3 with the conditional head (the paper's main model).
pub fn train_fusion(
    depth_net: DepthNet,
    autoencoder: SegmentationAutoencoder,
    samples: &[Sample],
    cfg: &TrainConfig,
) -> Result<FusionTrainOutput> {
    let variant = if cfg.no_conditional_net {
        FusionVariant::NaiveWithInjection
    } else {
        FusionVariant::Conditional
    };
    let variant = if cfg.no_injection {
        FusionVariant::NaiveNoInjection
    } else {
        variant
    };
    train_fusion_variant(depth_net, autoencoder, samples, cfg, variant)
}

/// Stage 3 with the weighted-gate head.
pub fn train_gated(
    depth_net: DepthNet,
    autoencoder: SegmentationAutoencoder,
    samples: &[Sample],
    cfg: &TrainConfig,
) -> Result<FusionTrainOutput> {
    train_fusion_variant(depth_net, autoencoder, samples, cfg, FusionVariant::Gated)
}

/// Ablation baselines: (a) no injection, (b) injection without the
/// conditional network. Both produce stacks the evaluation harness accepts.
pub fn train_naive_baseline(
    depth_net: DepthNet,
    autoencoder: SegmentationAutoencoder,
    samples: &[Sample],
    cfg: &TrainConfig,
    with_injection: bool,
) -> Result<FusionTrainOutput> {
    let variant = if with_injection {
        FusionVariant::NaiveWithInjection
    } else {
        FusionVariant::NaiveNoInjection
    };
    train_fusion_variant(depth_net, autoencoder, samples, cfg, variant)
}
