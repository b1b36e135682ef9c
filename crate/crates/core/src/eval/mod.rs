//! Synthetic data and evaluation protocols.

pub mod metrics;
pub mod noise;
pub mod scene;

pub use metrics::{
    branch_recovery, match_metrics, orientation_gap, repeatability, scale_gap, CorrespondenceCriteria, MatchMetrics,
    Repeatability,
};
pub use noise::{false_alarm_counts, false_alarm_trial, gen_noise_image, NoiseImage};
pub use scene::{gen_matching_pair, gen_wireframe_scene, SceneSpec, Shape, SyntheticScene};
