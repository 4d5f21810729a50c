//! Kinematic vehicle in road-aligned coordinates.

use super::track::Track;

/// Constant forward speed in m/s.
pub const SPEED: f32 = 8.0;
/// Simulation step in seconds.
pub const DT: f32 = 0.1;
/// Yaw rate at full steering command, rad/s.
pub const MAX_YAW_RATE: f32 = 1.6;

/// Vehicle pose relative to the track centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Arclength along the centerline, meters.
    pub s: f32,
    /// Signed offset from the centerline, meters, positive to the left.
    pub lateral: f32,
    /// Heading relative to the centerline tangent, radians, in (-pi, pi].
    pub heading_err: f32,
    /// Forward speed, m/s.
    pub speed: f32,
}

impl VehicleState {
    pub fn at_start(s: f32) -> Self {
        VehicleState {
            s,
            lateral: 0.0,
            heading_err: 0.0,
            speed: SPEED,
        }
    }
}

fn wrap_angle(a: f32) -> f32 {
    let mut a = a;
    while a > std::f32::consts::PI {
        a -= std::f32::consts::TAU;
    }
    while a <= -std::f32::consts::PI {
        a += std::f32::consts::TAU;
    }
    a
}

/// One kinematic step. The steering command maps linearly to yaw rate; the
/// centerline curvature at the current arclength rotates the road frame
/// underneath the vehicle, so tracking an arc requires a matching command.
pub fn step_vehicle(state: &VehicleState, steering: f32, dt: f32, track: &Track) -> VehicleState {
    assert!(dt > 0.0, "dt must be positive");
    let yaw = steering * MAX_YAW_RATE - state.speed * track.curvature_at(state.s);
    let heading_err = wrap_angle(state.heading_err + yaw * dt);
    let lateral = state.lateral + state.speed * heading_err.sin() * dt;
    let s = state.s + state.speed * heading_err.cos() * dt;
    VehicleState {
        s,
        lateral,
        heading_err,
        speed: state.speed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthworld::track::{Segment, SegmentKind, Track};

    fn arc_track(curvature: f32) -> Track {
        Track {
            segments: vec![Segment {
                kind: SegmentKind::Arc,
                length: 500.0,
                curvature,
            }],
            lane_half_width: 2.0,
        }
    }

    #[test]
    fn matched_steering_holds_equilibrium() {
        let track = arc_track(0.05);
        // steering * MAX_YAW_RATE == speed * kappa keeps heading_err at 0.
        let steering = SPEED * 0.05 / MAX_YAW_RATE;
        let mut state = VehicleState::at_start(0.0);
        for _ in 0..100 {
            state = step_vehicle(&state, steering, DT, &track);
        }
        assert!(state.lateral.abs() < 1e-4, "lateral {}", state.lateral);
        assert!(state.heading_err.abs() < 1e-5);
    }

    #[test]
    fn zero_steering_on_arc_drifts_outward() {
        let track = arc_track(0.05);
        let mut state = VehicleState::at_start(0.0);
        let mut last = 0.0f32;
        for step in 0..50 {
            state = step_vehicle(&state, 0.0, DT, &track);
            if step > 2 {
                assert!(
                    state.lateral.abs() > last,
                    "lateral magnitude must grow: {} vs {}",
                    state.lateral.abs(),
                    last
                );
            }
            last = state.lateral.abs();
        }
        // Left turn uncompensated: the road frame rotates left under the
        // vehicle, so the vehicle drifts right of the centerline.
        assert!(state.lateral < 0.0);
    }

    #[test]
    fn arclength_grows_while_heading_moderate() {
        let track = arc_track(-0.08);
        let mut state = VehicleState::at_start(0.0);
        let mut prev_s = state.s;
        for _ in 0..80 {
            state = step_vehicle(&state, 0.3, DT, &track);
            if state.heading_err.abs() < std::f32::consts::FRAC_PI_2 {
                assert!(state.s > prev_s);
            }
            prev_s = state.s;
        }
    }
}
