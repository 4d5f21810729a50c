//! Finite-difference verification of the analytic gradients for all four
//! architectures, plus the frozen-parameter flow contract.

use fusedrive_core::models::harness::{DepthHarness, FusionHarness, GatedHarness, SegHarness};
use fusedrive_core::models::{ArchitectureConfig, DepthNet};
use fusedrive_core::numerics::gradcheck::{grad_check, Differentiable};
use fusedrive_core::numerics::{huber_grad, huber_loss, reference, AdamState, Dense, Param, Tensor};
use fusedrive_core::rng::Rng;

#[test]
fn depth_net_gradients_match_finite_differences() {
    let mut harness = DepthHarness::random(101);
    let mut rng = Rng::new(5);
    let report = grad_check(&mut harness, 1e-5, 200, &mut rng);
    println!(
        "depth grad check: max rel {:.2e} over {} coords ({} skipped)",
        report.max_rel_error, report.coords_checked, report.coords_skipped
    );
    assert!(report.max_rel_error < 1e-3, "max rel {}", report.max_rel_error);
}

#[test]
fn segmentation_gradients_match_finite_differences() {
    let mut harness = SegHarness::random(102);
    let mut rng = Rng::new(6);
    let report = grad_check(&mut harness, 1e-6, 100, &mut rng);
    println!(
        "seg grad check: max rel {:.2e} over {} coords ({} skipped)",
        report.max_rel_error, report.coords_checked, report.coords_skipped
    );
    assert!(report.max_rel_error < 1e-3, "max rel {}", report.max_rel_error);
}

#[test]
fn fusion_gradients_match_finite_differences() {
    let mut harness = FusionHarness::random(103);
    let mut rng = Rng::new(7);
    let report = grad_check(&mut harness, 1e-5, 200, &mut rng);
    println!(
        "fusion grad check: max rel {:.2e} over {} coords ({} skipped)",
        report.max_rel_error, report.coords_checked, report.coords_skipped
    );
    assert!(report.max_rel_error < 1e-3, "max rel {}", report.max_rel_error);
}

#[test]
fn gated_gradients_match_finite_differences() {
    let mut harness = GatedHarness::random(104);
    let mut rng = Rng::new(8);
    let report = grad_check(&mut harness, 1e-5, 200, &mut rng);
    println!(
        "gated grad check: max rel {:.2e} over {} coords ({} skipped)",
        report.max_rel_error, report.coords_checked, report.coords_skipped
    );
    assert!(report.max_rel_error < 1e-3, "max rel {}", report.max_rel_error);
}

/// A frozen dense layer between two trainable ones: gradients must flow
/// through it untouched while the optimizer never changes its values.
struct SandwichHarness {
    lower: Dense,
    middle: Dense,
    upper: Dense,
    input: Tensor,
    target: f32,
}

impl SandwichHarness {
    fn new(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let lower = Dense::new(6, 6, &mut rng);
        let mut middle = Dense::new(6, 6, &mut rng);
        middle.weights.freeze();
        middle.bias.freeze();
        let upper = Dense::new(6, 1, &mut rng);
        let input = Tensor::uniform(vec![6], 1.0, &mut rng);
        SandwichHarness {
            lower,
            middle,
            upper,
            input,
            target: 0.5,
        }
    }
}

impl Differentiable for SandwichHarness {
    fn loss(&mut self) -> f64 {
        let x: Vec<f64> = self.input.data().iter().map(|&v| v as f64).collect();
        let x = reference::dense(&x, self.lower.weights.value.data(), self.lower.bias.value.data(), 6, 6);
        let x = reference::dense(&x, self.middle.weights.value.data(), self.middle.bias.value.data(), 6, 6);
        let y = reference::dense(&x, self.upper.weights.value.data(), self.upper.bias.value.data(), 6, 1);
        reference::huber(y[0], self.target as f64, 1.0)
    }

    fn loss_and_grad(&mut self) -> f64 {
        for p in self.params_mut() {
            p.value.zero_grad();
        }
        let x = self.lower.forward(&self.input);
        let x = self.middle.forward(&x);
        let y = self.upper.forward(&x);
        let loss = huber_loss(y.data()[0], self.target, 1.0);
        let g = huber_grad(y.data()[0], self.target, 1.0);
        let dx = self.upper.backward(&Tensor::scalar(g));
        let dx = self.middle.backward(&dx);
        let _ = self.lower.backward(&dx);
        loss as f64
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.lower.weights,
            &mut self.lower.bias,
            &mut self.middle.weights,
            &mut self.middle.bias,
            &mut self.upper.weights,
            &mut self.upper.bias,
        ]
    }
}

#[test]
fn gradients_flow_through_frozen_layers() {
    let mut harness = SandwichHarness::new(200);
    let mut rng = Rng::new(9);
    let report = grad_check(&mut harness, 1e-3, 40, &mut rng);
    println!(
        "frozen sandwich grad check: max rel {:.2e} over {} coords",
        report.max_rel_error, report.coords_checked
    );
    assert!(report.max_rel_error < 1e-5, "max rel {}", report.max_rel_error);

    // The lower (trainable) layer must have received gradient signal.
    harness.loss_and_grad();
    let lower_grad_norm: f32 = harness.lower.weights.value.grad().unwrap().iter().map(|g| g * g).sum();
    assert!(lower_grad_norm > 0.0, "no gradient reached the layer beneath the frozen one");

    // Optimizer steps never change the frozen values.
    let frozen_before = harness.middle.weights.value.data().to_vec();
    let mut adam = AdamState::new(1e-2);
    for _ in 0..3 {
        harness.loss_and_grad();
        adam.step(&mut harness.params_mut());
    }
    assert_eq!(harness.middle.weights.value.data(), &frozen_before[..]);
}

#[test]
fn linear_subnetwork_passes_tight_check() {
    struct LinearHarness {
        layer: Dense,
        input: Tensor,
        target: f32,
    }
    impl Differentiable for LinearHarness {
        fn loss(&mut self) -> f64 {
            let x: Vec<f64> = self.input.data().iter().map(|&v| v as f64).collect();
            let y = reference::dense(&x, self.layer.weights.value.data(), self.layer.bias.value.data(), 16, 1);
            reference::huber(y[0], self.target as f64, 1.0)
        }
        fn loss_and_grad(&mut self) -> f64 {
            self.layer.weights.value.zero_grad();
            self.layer.bias.value.zero_grad();
            let y = self.layer.forward(&self.input);
            let loss = huber_loss(y.data()[0], self.target, 1.0);
            let g = huber_grad(y.data()[0], self.target, 1.0);
            self.layer.backward(&Tensor::scalar(g));
            loss as f64
        }
        fn params_mut(&mut self) -> Vec<&mut Param> {
            vec![&mut self.layer.weights, &mut self.layer.bias]
        }
    }
    let mut rng = Rng::new(300);
    let layer = Dense::new(16, 1, &mut rng);
    let input = Tensor::uniform(vec![16], 1.0, &mut rng);
    let mut harness = LinearHarness {
        layer,
        input,
        target: 0.1,
    };
    let report = grad_check(&mut harness, 1e-3, 17, &mut rng);
    assert!(report.max_rel_error < 1e-5, "max rel {}", report.max_rel_error);
}

/// Depth net checked across every qualifying coordinate, not just a
/// subsample: the net is small enough to afford it.
#[test]
fn depth_net_full_coordinate_sweep() {
    let mut harness = DepthHarness::random(105);
    let mut rng = Rng::new(10);
    let total = DepthNet::expected_param_count(&ArchitectureConfig::default());
    let report = grad_check(&mut harness, 1e-5, total, &mut rng);
    println!(
        "depth full sweep: max rel {:.2e} over {} coords ({} skipped)",
        report.max_rel_error, report.coords_checked, report.coords_skipped
    );
    assert!(report.max_rel_error < 1e-3, "max rel {}", report.max_rel_error);
}
