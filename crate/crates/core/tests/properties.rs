//! Property tests for the crate-wide invariants.

use fusedrive_core::numerics::{huber_grad, huber_loss, TanhAct, Tensor};
use fusedrive_core::rng::Rng;
use fusedrive_core::synthworld::{
    build_track, expert_steering, render_view, step_vehicle, VehicleState, Weather, DT,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn huber_is_nonnegative_and_zero_only_at_match(
        pred in -3.0f32..3.0,
        target in -1.0f32..1.0,
        delta in 0.1f32..2.0,
    ) {
        let loss = huber_loss(pred, target, delta);
        prop_assert!(loss >= 0.0);
        if pred == target {
            prop_assert_eq!(loss, 0.0);
        } else {
            prop_assert!(loss > 0.0);
        }
        // Gradient is the clamped error.
        let g = huber_grad(pred, target, delta);
        prop_assert!(g.abs() <= delta + 1e-6);
    }

    #[test]
    fn tanh_outputs_stay_strictly_inside_unit_interval(vals in prop::collection::vec(-1e4f32..1e4, 1..64)) {
        let n = vals.len();
        let y = TanhAct::new().forward(&Tensor::new(vec![n], vals));
        for &v in y.data() {
            prop_assert!(v > -1.0 && v < 1.0);
            prop_assert!(v.is_finite());
        }
    }

    #[test]
    fn expert_steering_is_antisymmetric_under_mirroring(
        seed in 0u64..500,
        s in 0.0f32..150.0,
        lateral in -1.5f32..1.5,
        heading in -0.4f32..0.4,
    ) {
        let track = build_track(seed);
        let mirrored_track = fusedrive_core::synthworld::Track {
            segments: track
                .segments
                .iter()
                .map(|seg| fusedrive_core::synthworld::track::Segment {
                    curvature: -seg.curvature,
                    ..*seg
                })
                .collect(),
            lane_half_width: track.lane_half_width,
        };
        let state = VehicleState { s, lateral, heading_err: heading, speed: 8.0 };
        let mirrored = VehicleState { s, lateral: -lateral, heading_err: -heading, speed: 8.0 };
        prop_assert_eq!(
            expert_steering(&state, &track),
            -expert_steering(&mirrored, &mirrored_track)
        );
    }

    #[test]
    fn depth_and_semantics_ignore_weather(
        seed in 0u64..200,
        s in 0.0f32..120.0,
        lateral in -1.5f32..1.5,
        heading in -0.3f32..0.3,
        noise_seed in 0u64..1000,
    ) {
        let track = build_track(seed);
        let state = VehicleState { s, lateral, heading_err: heading, speed: 8.0 };
        let clear = render_view(&state, &track, &Weather::train_clear(), &mut Rng::new(noise_seed));
        let shifted = render_view(&state, &track, &Weather::shifted_rain(), &mut Rng::new(noise_seed ^ 1));
        prop_assert_eq!(clear.depth.data(), shifted.depth.data());
        prop_assert_eq!(&clear.semantic, &shifted.semantic);
        // Every pixel gets a class below 4.
        for &c in &clear.semantic {
            prop_assert!(c < 4);
        }
    }

    #[test]
    fn arclength_grows_under_moderate_heading(
        seed in 0u64..100,
        commands in prop::collection::vec(-1.0f32..1.0, 30),
    ) {
        let track = build_track(seed);
        let mut state = VehicleState::at_start(5.0);
        for &cmd in &commands {
            let before = state.s;
            state = step_vehicle(&state, cmd, DT, &track);
            if state.heading_err.abs() < std::f32::consts::FRAC_PI_2 {
                prop_assert!(state.s > before);
            }
            prop_assert!(state.heading_err > -std::f32::consts::PI);
            prop_assert!(state.heading_err <= std::f32::consts::PI);
        }
    }

    #[test]
    fn track_invariants_hold_for_any_seed(seed in 0u64..10_000) {
        let track = build_track(seed);
        prop_assert!(track.total_length() > 0.0);
        let mut has_left = false;
        let mut has_right = false;
        for seg in &track.segments {
            prop_assert!(seg.curvature.abs() * track.lane_half_width < 0.5);
            has_left |= seg.curvature > 0.0;
            has_right |= seg.curvature < 0.0;
        }
        prop_assert!(has_left && has_right);
    }
}
