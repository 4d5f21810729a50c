//! Pure-pursuit expert controller providing ground-truth steering labels.

use super::track::Track;
use super::vehicle::VehicleState;

/// Pursuit aim distance along the centerline, meters.
pub const LOOKAHEAD: f32 = 6.0;
/// Proportional gain from aim angle to steering command.
pub const PURSUIT_GAIN: f32 = 2.0;

/// Steer toward the centerline point `LOOKAHEAD` meters ahead.
///
/// The command is `clamp(gain * angle_to_target, -1, 1)`, smooth in the
/// state, positive for left. Mirroring the world (negating curvature,
/// lateral offset, and heading error) negates the output exactly.
pub fn expert_steering(state: &VehicleState, track: &Track) -> f32 {
    let (forward_c, lateral_c) = track.centerline_offset(state.s, LOOKAHEAD);
    let df = forward_c;
    let dl = lateral_c - state.lateral;
    let (sin_h, cos_h) = state.heading_err.sin_cos();
    // Rotate the target into the vehicle frame.
    let ahead = df * cos_h + dl * sin_h;
    let left = -df * sin_h + dl * cos_h;
    let angle = left.atan2(ahead);
    (PURSUIT_GAIN * angle).clamp(-1.0, 1.0)
}
