//! Closed-loop turn episodes: render, predict, steer, step.

use super::offline::SensorConfig;
use crate::models::SteeringStack;
use crate::rng::Rng;
use crate::synthworld::{
    expert_steering, render_view, step_vehicle, Track, VehicleState, Weather, DT,
};

/// Default episode length; at 8 m/s the first turn of an episode track
/// occupies roughly frames 50-100.
pub const EPISODE_FRAMES: usize = 150;
/// The vehicle starts this far before the first arc.
const APPROACH_DISTANCE: f32 = 40.0;

/// One frame of an episode trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub frame_index: usize,
    /// Depth gate M_D (gated model only).
    pub m_d: Option<f32>,
    /// Embedding gate M_E for the gated model, or the scalar conditional
    /// value C for the conditional model.
    pub m_e_or_c: Option<f32>,
    pub pred_steering: f32,
    pub expert_steering: f32,
    pub lateral: f32,
}

/// Per-frame gate and steering record of one episode.
#[derive(Debug, Clone, Default)]
pub struct ConditionalTrace {
    pub rows: Vec<TraceRow>,
}

impl ConditionalTrace {
    /// trace.csv: frame, m_d, m_e_or_c, pred_steer, expert_steer, lateral.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("frame,m_d,m_e_or_c,pred_steer,expert_steer,lateral\n");
        let fmt = |v: Option<f32>| v.map(|x| format!("{:.6e}", x)).unwrap_or_default();
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6e},{:.6e},{:.6e}\n",
                row.frame_index,
                fmt(row.m_d),
                fmt(row.m_e_or_c),
                row.pred_steering,
                row.expert_steering,
                row.lateral,
            ));
        }
        out
    }
}

/// Episode outcome: success means the lateral offset never left the lane.
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub success: bool,
    pub trajectory: Vec<VehicleState>,
    pub trace: ConditionalTrace,
}

fn start_state(track: &Track) -> VehicleState {
    let s0 = track
        .first_arc_start()
        .map(|arc| (arc - APPROACH_DISTANCE).max(2.0))
        .unwrap_or(2.0);
    VehicleState::at_start(s0)
}

/// Runs the model in the loop for `n_frames`, applying the sensor
/// configuration to each rendered frame. Lane departure is a result, not
/// an error. Steering commands are clamped to the actuator range [-1, 1];
/// the trace records the raw prediction.
pub fn run_closed_loop(
    model: &mut SteeringStack,
    track: &Track,
    weather: &Weather,
    sensor: SensorConfig,
    n_frames: usize,
    noise_seed: u64,
) -> EpisodeResult {
    let mut rng = Rng::new(noise_seed).fork(0xe915);
    let mut state = start_state(track);
    let mut trace = ConditionalTrace::default();
    let mut trajectory = Vec::with_capacity(n_frames);
    let mut success = true;
    for frame in 0..n_frames {
        let view = render_view(&state, track, weather, &mut rng);
        let (depth, rgb) = sensor.apply(&view.depth, &view.rgb);
        let (pred, gates) = model.predict(&depth, &rgb);
        trace.rows.push(TraceRow {
            frame_index: frame,
            m_d: gates.m_d,
            m_e_or_c: gates.m_e.or_else(|| gates.conditional.as_ref().map(|c| c[0])),
            pred_steering: pred,
            expert_steering: expert_steering(&state, track),
            lateral: state.lateral,
        });
        trajectory.push(state);
        if state.lateral.abs() > track.lane_half_width {
            success = false;
        }
        state = step_vehicle(&state, pred.clamp(-1.0, 1.0), DT, track);
    }
    EpisodeResult {
        success,
        trajectory,
        trace,
    }
}

/// The expert controller in the same loop, as the upper-bound reference.
pub fn run_expert_episode(track: &Track, n_frames: usize) -> EpisodeResult {
    let mut state = start_state(track);
    let mut trace = ConditionalTrace::default();
    let mut trajectory = Vec::with_capacity(n_frames);
    let mut success = true;
    for frame in 0..n_frames {
        let steering = expert_steering(&state, track);
        trace.rows.push(TraceRow {
            frame_index: frame,
            m_d: None,
            m_e_or_c: None,
            pred_steering: steering,
            expert_steering: steering,
            lateral: state.lateral,
        });
        trajectory.push(state);
        if state.lateral.abs() > track.lane_half_width {
            success = false;
        }
        state = step_vehicle(&state, steering, DT, track);
    }
    EpisodeResult {
        success,
        trajectory,
        trace,
    }
}
