//! Expert-driven data collection with recovery perturbations.

use serde::{Deserialize, Serialize};

use super::expert::expert_steering;
use super::render::{render_view, Weather, WeatherTag, IMG};
use super::track::{build_track, LANE_HALF_WIDTH};
use super::vehicle::{step_vehicle, VehicleState, DT, SPEED};
use crate::numerics::Tensor;
use crate::rng::Rng;

/// Frames per collection episode. At 8 m/s and dt = 0.1 s an episode covers
/// 120 m, so the first turn of a seeded track falls around frames 50-100.
pub const EPISODE_FRAMES: usize = 150;
/// Probability per frame of a recovery jitter teleport.
const JITTER_PROB: f32 = 0.08;
const LATERAL_JITTER: f32 = 0.6;
const HEADING_JITTER: f32 = 0.15;

/// One collected time step.
#[derive(Debug, Clone)]
pub struct Sample {
    /// [3, 128, 128] in [0, 1].
    pub rgb: Tensor,
    /// [1, 128, 128] normalized inverse range.
    pub depth: Tensor,
    /// 128*128 class ids, values < 4.
    pub semantic: Vec<u8>,
    /// Expert steering in [-1, 1].
    pub steering: f32,
    pub weather: WeatherTag,
    pub episode_id: u32,
    pub frame_index: u32,
}

/// Sidecar description of a generated dataset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub n_samples: usize,
    pub weather: String,
    pub episode_frames: usize,
    pub image_size: usize,
    pub speed: f32,
    pub dt: f32,
    pub lane_half_width: f32,
    pub lateral_jitter: f32,
    pub heading_jitter: f32,
}

fn episode_track_seed(seed: u64, episode: u32) -> u64 {
    // SplitMix-style mix keeps per-episode tracks decorrelated.
    let mut z = seed ^ (episode as u64).wrapping_mul(0xa076_1d64_78bd_642f);
    z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    z ^ (z >> 33)
}

/// Drives the expert controller along seeded tracks, teleport-jittering the
/// pose occasionally so the dataset contains recovery states, and records
/// one sample per frame with the expert label for the rendered pose.
pub fn generate_dataset(seed: u64, n_samples: usize, weather: &Weather) -> (Vec<Sample>, DatasetManifest) {
    assert!(n_samples > 0, "n_samples must be positive");
    let mut samples = Vec::with_capacity(n_samples);
    let base_rng = Rng::new(seed);
    let mut episode: u32 = 0;
    while samples.len() < n_samples {
        let track = build_track(episode_track_seed(seed, episode));
        let mut rng = base_rng.fork(episode as u64);
        let mut state = VehicleState::at_start(4.0);
        for frame in 0..EPISODE_FRAMES {
            if samples.len() >= n_samples {
                break;
            }
            if rng.next_f32() < JITTER_PROB {
                let max_lat = track.lane_half_width - 0.2;
                state.lateral =
                    (state.lateral + rng.range_f32(-LATERAL_JITTER, LATERAL_JITTER)).clamp(-max_lat, max_lat);
                state.heading_err += rng.range_f32(-HEADING_JITTER, HEADING_JITTER);
            }
            let view = render_view(&state, &track, weather, &mut rng);
            let steering = expert_steering(&state, &track);
            samples.push(Sample {
                rgb: view.rgb,
                depth: view.depth,
                semantic: view.semantic,
                steering,
                weather: weather.tag,
                episode_id: episode,
                frame_index: frame as u32,
            });
            state = step_vehicle(&state, steering, DT, &track);
        }
        episode += 1;
    }
    let manifest = DatasetManifest {
        seed,
        n_samples,
        weather: weather.tag.as_str().to_string(),
        episode_frames: EPISODE_FRAMES,
        image_size: IMG,
        speed: SPEED,
        dt: DT,
        lane_half_width: LANE_HALF_WIDTH,
        lateral_jitter: LATERAL_JITTER,
        heading_jitter: HEADING_JITTER,
    };
    (samples, manifest)
}
