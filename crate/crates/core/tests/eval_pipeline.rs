//! Evaluation-path checks that need no trained weights: gate constancy
//! under blanked sensors, episode determinism, and export round-trips.

use fusedrive_core::eval::{
    export_results, read_summary, run_closed_loop, trace_statistics, LossTable, SensorConfig,
};
use fusedrive_core::models::{
    ArchitectureConfig, DepthNet, FusionHead, SegmentationAutoencoder, SteeringStack,
    WeightedGateNet,
};
use fusedrive_core::rng::Rng;
use fusedrive_core::synthworld::{build_track, Weather};

fn random_gated_stack(seed: u64) -> SteeringStack {
    let config = ArchitectureConfig::default();
    let mut rng = Rng::new(seed);
    SteeringStack {
        config,
        depth_net: DepthNet::new(config, &mut rng),
        autoencoder: SegmentationAutoencoder::new(config, &mut rng),
        head: FusionHead::Gated(WeightedGateNet::new(config, &mut rng)),
    }
}

#[test]
fn blanked_sensor_gate_is_constant_across_an_episode() {
    let mut stack = random_gated_stack(31);
    let track = build_track(6);
    let weather = Weather::train_clear();

    // RGB zeroed: the embedding gate sees a constant input every frame.
    let result = run_closed_loop(&mut stack, &track, &weather, SensorConfig::DepthOnly, 150, 5);
    let stats = trace_statistics(&result.trace, (50, 100)).unwrap();
    let m_e = stats.m_e_or_c.unwrap();
    assert!(m_e.range_full < 1e-6, "blanked M_E range {}", m_e.range_full);

    // Depth zeroed: the depth gate is the constant one.
    let result = run_closed_loop(&mut stack, &track, &weather, SensorConfig::RgbOnly, 150, 5);
    let stats = trace_statistics(&result.trace, (50, 100)).unwrap();
    let m_d = stats.m_d.unwrap();
    assert!(m_d.range_full < 1e-6, "blanked M_D range {}", m_d.range_full);
}

#[test]
fn episodes_are_deterministic_per_seed() {
    let track = build_track(9);
    let weather = Weather::shifted_rain();
    let mut stack_a = random_gated_stack(77);
    let a = run_closed_loop(&mut stack_a, &track, &weather, SensorConfig::BothSensors, 60, 123);
    let mut stack_b = random_gated_stack(77);
    let b = run_closed_loop(&mut stack_b, &track, &weather, SensorConfig::BothSensors, 60, 123);
    assert_eq!(a.trace.to_csv_string(), b.trace.to_csv_string());
    assert_eq!(a.success, b.success);
}

#[test]
fn export_produces_the_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut stack = random_gated_stack(5);
    let track = build_track(2);
    let episode = run_closed_loop(
        &mut stack,
        &track,
        &Weather::train_clear(),
        SensorConfig::BothSensors,
        120,
        7,
    );
    let table = LossTable {
        mean_huber: [[0.008, 0.019], [0.013, 0.014], [0.016, 0.033]],
        counts: [[3000, 3000]; 3],
    };
    let written = export_results(
        &table,
        &[("clear_both".to_string(), episode)],
        7,
        "{\"seed\":7}",
        dir.path(),
    )
    .unwrap();
    assert_eq!(written.len(), 3);
    let losses = std::fs::read_to_string(dir.path().join("losses.csv")).unwrap();
    assert_eq!(losses.lines().count(), 7);
    let summary = read_summary(&dir.path().join("summary.json")).unwrap();
    assert_eq!(summary.seed, 7);
    assert!(summary.episode_success.contains_key("clear_both"));
}
