//! Small-scale end-to-end checks of the staged trainers: losses must
//! descend, frozen parameters must stay bit-identical, and reruns must
//! reproduce checkpoints byte for byte.

use fusedrive_core::models::checkpoint::{save_depth_net, save_stack};
use fusedrive_core::models::FusionHead;
use fusedrive_core::synthworld::{generate_dataset, Weather};
use fusedrive_core::training::{
    train_depth, train_fusion_variant, train_segmentation, FusionVariant, TrainConfig,
};

fn tiny_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        seed: 11,
        epochs,
        batch_size: 16,
        n_train: 120,
        ..TrainConfig::default()
    }
}

#[test]
fn depth_training_descends_and_is_reproducible() {
    let (samples, _) = generate_dataset(21, 120, &Weather::train_clear());
    let cfg = tiny_config(4);
    let out1 = train_depth(&samples, &cfg).unwrap();
    assert!(out1.baseline_loss > 0.0);
    let first = out1.metrics.rows.first().unwrap().loss;
    let last = out1.metrics.rows.last().unwrap().loss;
    assert!(last < first, "depth loss did not descend: {} -> {}", first, last);

    // Byte-identical checkpoint on rerun.
    let out2 = train_depth(&samples, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("d1.sfmd");
    let p2 = dir.path().join("d2.sfmd");
    save_depth_net(&p1, &out1.net).unwrap();
    save_depth_net(&p2, &out2.net).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn segmentation_training_descends() {
    let (samples, _) = generate_dataset(22, 60, &Weather::train_clear());
    let mut cfg = tiny_config(2);
    cfg.batch_size = 8;
    let out = train_segmentation(&samples, &cfg).unwrap();
    let first = out.metrics.rows.first().unwrap().loss;
    let last = out.metrics.rows.last().unwrap().loss;
    assert!(last < first, "seg loss did not descend: {} -> {}", first, last);
    assert!(out.holdout_accuracy > 0.2, "accuracy {}", out.holdout_accuracy);
}

#[test]
fn fusion_training_keeps_extractors_frozen_and_reproduces() {
    let (samples, _) = generate_dataset(23, 120, &Weather::train_clear());
    let cfg = tiny_config(3);

    let depth_out = train_depth(&samples, &cfg).unwrap();
    let mut seg_cfg = cfg.clone();
    seg_cfg.epochs = 1;
    seg_cfg.batch_size = 8;
    let seg_out = train_segmentation(&samples, &seg_cfg).unwrap();

    let perception_before: Vec<Vec<f32>> = depth_out
        .net
        .named_params()
        .iter()
        .map(|(_, p)| p.value.data().to_vec())
        .collect();
    let encoder_before: Vec<Vec<f32>> = seg_out
        .net
        .named_params()
        .iter()
        .map(|(_, p)| p.value.data().to_vec())
        .collect();

    let run = |depth: &fusedrive_core::models::DepthNet,
               seg: &fusedrive_core::models::SegmentationAutoencoder| {
        // Clone via checkpoint-free copy: rebuild through save/load in memory
        // is overkill; the trainers consume the nets, so train on clones.
        train_fusion_variant(
            clone_depth(depth),
            clone_seg(seg),
            &samples,
            &cfg,
            FusionVariant::Conditional,
        )
        .unwrap()
    };

    let out1 = run(&depth_out.net, &seg_out.net);
    let out2 = run(&depth_out.net, &seg_out.net);

    // The conditional trace of per-mode losses exists.
    let last = out1.metrics.rows.last().unwrap();
    assert!(last.loss_both_ok.is_some());
    assert!(last.loss_depth_blank.is_some());
    assert!(last.loss_rgb_wrong.is_some());

    // Frozen extractors bit-identical inside the produced stack.
    let mut stack = out1.stack;
    for ((_, p), before) in stack.depth_net.named_params().iter().zip(&perception_before) {
        if p.frozen {
            assert_eq!(p.value.data(), before.as_slice());
        }
    }
    for ((_, p), before) in stack.autoencoder.named_params().iter().zip(&encoder_before) {
        if p.frozen {
            assert_eq!(p.value.data(), before.as_slice());
        }
    }
    assert!(matches!(stack.head, FusionHead::Conditional(_)));

    // Reruns are byte-identical.
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("f1.sfmd");
    let p2 = dir.path().join("f2.sfmd");
    let mut stack2 = out2.stack;
    save_stack(&p1, &mut stack).unwrap();
    save_stack(&p2, &mut stack2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

fn clone_depth(net: &fusedrive_core::models::DepthNet) -> fusedrive_core::models::DepthNet {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tmp.sfmd");
    save_depth_net(&p, net).unwrap();
    fusedrive_core::models::load_depth_net(&p).unwrap()
}

fn clone_seg(
    net: &fusedrive_core::models::SegmentationAutoencoder,
) -> fusedrive_core::models::SegmentationAutoencoder {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tmp.sfmd");
    fusedrive_core::models::save_autoencoder(&p, net).unwrap();
    fusedrive_core::models::load_autoencoder(&p).unwrap()
}

#[test]
fn gated_training_produces_bounded_gates() {
    let (samples, _) = generate_dataset(24, 80, &Weather::train_clear());
    let mut cfg = tiny_config(2);
    cfg.batch_size = 16;
    let depth_out = train_depth(&samples, &cfg).unwrap();
    let mut seg_cfg = cfg.clone();
    seg_cfg.epochs = 1;
    let seg_out = train_segmentation(&samples, &seg_cfg).unwrap();
    let out = train_fusion_variant(
        depth_out.net,
        seg_out.net,
        &samples,
        &cfg,
        FusionVariant::Gated,
    )
    .unwrap();
    let mut stack = out.stack;
    let (_, gates) = stack.predict(&samples[0].depth, &samples[0].rgb);
    let m_d = gates.m_d.unwrap();
    let m_e = gates.m_e.unwrap();
    assert!(m_d.abs() < 1.0, "m_d {}", m_d);
    assert!(m_e.abs() < 1.0, "m_e {}", m_e);
}

#[test]
fn baseline_variants_train_without_injection_machinery() {
    let (samples, _) = generate_dataset(25, 80, &Weather::train_clear());
    let mut cfg = tiny_config(2);
    cfg.batch_size = 16;
    let depth_out = train_depth(&samples, &cfg).unwrap();
    let mut seg_cfg = cfg.clone();
    seg_cfg.epochs = 1;
    let seg_out = train_segmentation(&samples, &seg_cfg).unwrap();

    let out = train_fusion_variant(
        clone_depth(&depth_out.net),
        clone_seg(&seg_out.net),
        &samples,
        &cfg,
        FusionVariant::NaiveNoInjection,
    )
    .unwrap();
    // Without injection every sample is BothOk.
    let last = out.metrics.rows.last().unwrap();
    assert!(last.loss_both_ok.is_some());
    assert!(last.loss_depth_blank.is_none());
    assert!(last.loss_rgb_wrong.is_none());
    assert!(matches!(out.stack.head, FusionHead::Naive(_)));

    let out_b = train_fusion_variant(
        depth_out.net,
        seg_out.net,
        &samples,
        &cfg,
        FusionVariant::NaiveWithInjection,
    )
    .unwrap();
    let last_b = out_b.metrics.rows.last().unwrap();
    assert!(last_b.loss_depth_blank.is_some());
    if let FusionHead::Naive(net) = &out_b.stack.head {
        assert_eq!(net.control_input_len(), 69);
    } else {
        panic!("expected naive head");
    }
}
