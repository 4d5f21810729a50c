//! The four network architectures and their checkpoint format.

pub mod checkpoint;
pub mod config;
pub mod depth;
pub mod fusion;
pub mod gated;
pub mod harness;
pub mod naive;
pub mod segmentation;
pub mod stack;

pub use checkpoint::{
    load_autoencoder, load_depth_net, load_stack, save_autoencoder, save_depth_net, save_stack,
    ModelKind,
};
pub use config::ArchitectureConfig;
pub use depth::DepthNet;
pub use fusion::FusionConditionalNet;
pub use gated::WeightedGateNet;
pub use naive::NaiveConcatNet;
pub use segmentation::SegmentationAutoencoder;
pub use stack::{FusionHead, GateReadout, SteeringStack};
