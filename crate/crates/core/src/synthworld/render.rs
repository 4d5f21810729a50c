//! Forward-camera renderer producing RGB, depth, and semantic images.
//!
//! The scene is a road corridor on a ground plane, flanked by raised berms
//! at a fixed lateral offset from the centerline. Rows above the fixed
//! horizon are sky. Ground rows project through a pinhole model:
//! d(row) = cam_height * focal / (row - horizon_row). Each ground pixel is
//! classified by its signed lateral distance from the centerline (road,
//! lane marking band, or offroad); rays that leave the corridor hit the
//! berm face and take its distance instead, which is what makes the depth
//! image depend on lateral position and on the curvature ahead. The berms
//! are lower than the camera, so the sky/ground split stays exactly at the
//! horizon row.
//!
//! Depth is normalized inverse range, 1 near and 0 at/after `D_MAX` and for
//! sky, and never depends on weather. Weather only recolors the semantic
//! classes and adds per-pixel Gaussian RGB noise.

use super::track::Track;
use super::vehicle::VehicleState;
use crate::numerics::Tensor;
use crate::rng::Rng;

pub const IMG: usize = 128;
pub const FOCAL: f32 = 64.0;
pub const HORIZON_ROW: f32 = 44.0;
pub const CAM_HEIGHT: f32 = 1.4;
pub const D_MAX: f32 = 60.0;
/// Lateral distance from centerline to the berm walls.
pub const WALL_OFFSET: f32 = 4.0;
/// Berm height; below CAM_HEIGHT so walls never cross the horizon.
pub const WALL_HEIGHT: f32 = 1.0;
/// Half-width of the painted band at each lane edge.
pub const MARKING_HALF: f32 = 0.18;

pub const CLASS_SKY: u8 = 0;
pub const CLASS_ROAD: u8 = 1;
pub const CLASS_MARKING: u8 = 2;
pub const CLASS_OFFROAD: u8 = 3;
pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeatherTag {
    TrainClear,
    ShiftedRain,
}

impl WeatherTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeatherTag::TrainClear => "clear",
            WeatherTag::ShiftedRain => "shifted",
        }
    }
}

/// Appearance model for one weather regime.
#[derive(Debug, Clone)]
pub struct Weather {
    pub tag: WeatherTag,
    /// RGB base color per class id.
    pub palette: [[f32; 3]; NUM_CLASSES],
    pub brightness: f32,
    pub noise_sigma: f32,
}

impl Weather {
    pub fn train_clear() -> Self {
        Weather {
            tag: WeatherTag::TrainClear,
            palette: [
                [0.55, 0.78, 0.95], // sky
                [0.35, 0.35, 0.38], // road
                [0.95, 0.93, 0.80], // lane marking
                [0.40, 0.62, 0.28], // offroad
            ],
            brightness: 1.0,
            noise_sigma: 0.02,
        }
    }

    /// Dark, hue-shifted regime: same geometry, very different appearance.
    /// The class hues trade places relative to the clear palette — the wet
    /// road mirrors the sky, soaked ground turns road-gray, the sky takes
    /// on the vegetation tone — so color cues learned under clear weather
    /// actively mislead here.
    pub fn shifted_rain() -> Self {
        Weather {
            tag: WeatherTag::ShiftedRain,
            palette: [
                [0.40, 0.62, 0.28], // sky
                [0.55, 0.78, 0.95], // wet road mirroring the sky
                [0.30, 0.12, 0.10], // worn marking
                [0.35, 0.35, 0.38], // soaked ground
            ],
            brightness: 0.35,
            noise_sigma: 0.15,
        }
    }

    pub fn from_tag(tag: WeatherTag) -> Self {
        match tag {
            WeatherTag::TrainClear => Weather::train_clear(),
            WeatherTag::ShiftedRain => Weather::shifted_rain(),
        }
    }
}

/// One rendered view: RGB in [0,1], normalized-inverse-range depth, and a
/// per-pixel class image.
pub struct View {
    pub rgb: Tensor,
    pub depth: Tensor,
    pub semantic: Vec<u8>,
}

/// Renders the scene at `state`. Depth and semantics are pure functions of
/// (state, track); `rng` is consumed only by the RGB noise.
pub fn render_view(state: &VehicleState, track: &Track, weather: &Weather, rng: &mut Rng) -> View {
    let semantic_depth = render_geometry(state, track);
    let rgb = colorize(&semantic_depth.semantic, weather, rng);
    View {
        rgb,
        depth: semantic_depth.depth,
        semantic: semantic_depth.semantic,
    }
}

struct Geometry {
    depth: Tensor,
    semantic: Vec<u8>,
}

fn render_geometry(state: &VehicleState, track: &Track) -> Geometry {
    let mut semantic = vec![CLASS_SKY; IMG * IMG];
    let mut depth = vec![0.0f32; IMG * IMG];

    let first_ground_row = HORIZON_ROW.floor() as usize; // row centers below horizon
    // Ground distance along the optical axis per row (pixel centers).
    let mut row_dist = [0.0f32; IMG];
    for (r, slot) in row_dist.iter_mut().enumerate().take(IMG).skip(first_ground_row) {
        let below = (r as f32 + 0.5) - HORIZON_ROW;
        *slot = CAM_HEIGHT * FOCAL / below;
    }
    let max_sight = row_dist[first_ground_row];

    // Centerline lateral offset as a function of forward distance in the
    // vehicle tangent frame, on a 0.5 m grid.
    const X_STEP: f32 = 0.5;
    let profile = track.centerline_profile(state.s, max_sight * 1.6 + 4.0, 0.25);
    let n_grid = (max_sight / X_STEP).ceil() as usize + 2;
    let road_lateral = profile.lateral_by_forward(X_STEP, n_grid);
    let lane = track.lane_half_width;

    let (sin_h, cos_h) = state.heading_err.sin_cos();

    for c in 0..IMG {
        let u = (c as f32 - 63.5) / FOCAL;
        // First forward-axis distance (if any) at which this column's ray
        // leaves the corridor.
        let mut wall_at: Option<f32> = None;
        let mut prev: Option<(f32, f32)> = None; // (axis distance, offset)
        for r in (first_ground_row..IMG).rev() {
            let a = row_dist[r];
            let idx = r * IMG + c;
            if let Some(aw) = wall_at {
                // Already outside the corridor: berm face while the ray is
                // below the berm top, far ground beyond it afterwards.
                let z_at_wall = CAM_HEIGHT * (1.0 - aw / a);
                if z_at_wall <= WALL_HEIGHT {
                    semantic[idx] = CLASS_OFFROAD;
                    depth[idx] = normalize_depth(aw);
                } else {
                    semantic[idx] = CLASS_OFFROAD;
                    depth[idx] = normalize_depth(a);
                }
                continue;
            }
            // Ground intersection in the tangent frame.
            let fwd = a * cos_h - u * a * sin_h;
            let lat = state.lateral + a * sin_h + u * a * cos_h;
            let offset = lat - lateral_at(&road_lateral, X_STEP, fwd);
            if offset.abs() > WALL_OFFSET {
                // Crossed the berm between the previous row and this one.
                let aw = match prev {
                    Some((a_prev, o_prev)) => {
                        let edge = WALL_OFFSET * offset.signum();
                        let denom = offset - o_prev;
                        if denom.abs() > 1e-9 {
                            let t = ((edge - o_prev) / denom).clamp(0.0, 1.0);
                            a_prev + (a - a_prev) * t
                        } else {
                            a
                        }
                    }
                    None => a,
                };
                wall_at = Some(aw);
                semantic[idx] = CLASS_OFFROAD;
                depth[idx] = normalize_depth(aw);
            } else {
                semantic[idx] = classify_corridor(offset, lane);
                depth[idx] = normalize_depth(a);
                prev = Some((a, offset));
            }
        }
    }

    Geometry {
        depth: Tensor::new(vec![1, IMG, IMG], depth),
        semantic,
    }
}

fn lateral_at(road_lateral: &[f32], x_step: f32, fwd: f32) -> f32 {
    if fwd <= 0.0 {
        return road_lateral[0];
    }
    let pos = fwd / x_step;
    let i = (pos as usize).min(road_lateral.len() - 2);
    let frac = pos - i as f32;
    road_lateral[i] + (road_lateral[i + 1] - road_lateral[i]) * frac
}

fn classify_corridor(offset: f32, lane_half_width: f32) -> u8 {
    let dist_to_edge = (offset.abs() - lane_half_width).abs();
    if dist_to_edge <= MARKING_HALF {
        CLASS_MARKING
    } else if offset.abs() < lane_half_width {
        CLASS_ROAD
    } else {
        CLASS_OFFROAD
    }
}

fn normalize_depth(d: f32) -> f32 {
    (1.0 - d / D_MAX).clamp(0.0, 1.0)
}

fn colorize(semantic: &[u8], weather: &Weather, rng: &mut Rng) -> Tensor {
    let mut rgb = vec![0.0f32; 3 * IMG * IMG];
    for (p, &class) in semantic.iter().enumerate() {
        let base = weather.palette[class as usize];
        for ch in 0..3 {
            let mut v = base[ch] * weather.brightness;
            if weather.noise_sigma > 0.0 {
                v += rng.normal_f32() * weather.noise_sigma;
            }
            rgb[ch * IMG * IMG + p] = v.clamp(0.0, 1.0);
        }
    }
    Tensor::new(vec![3, IMG, IMG], rgb)
}
