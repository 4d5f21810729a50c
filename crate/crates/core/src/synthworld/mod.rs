//! Procedural driving world: tracks, rendering, expert labels, vehicle
//! kinematics, dataset generation, and the SFDS file format.

pub mod dataset;
pub mod expert;
pub mod format;
pub mod render;
pub mod track;
pub mod vehicle;

pub use dataset::{generate_dataset, DatasetManifest, Sample, EPISODE_FRAMES};
pub use expert::expert_steering;
pub use format::{read_dataset, read_manifest, write_dataset};
pub use render::{render_view, Weather, WeatherTag, View, IMG, NUM_CLASSES};
pub use track::{build_track, Track};
pub use vehicle::{step_vehicle, VehicleState, DT, SPEED};
