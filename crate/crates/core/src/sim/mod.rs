//! Closed-loop kinematic simulation on heightfields.
//!
//! A unicycle drives over an [`ElevationMap`](crate::terrain::ElevationMap);
//! roll and pitch come from a least-squares plane fitted over the robot
//! footprint, and a synthetic IMU turns motion, attitude and local roughness
//! into the samples the vibration measure consumes.

mod episode;
mod kinematics;
mod metrics;
pub mod worlds;

pub use episode::{
    run_episode, EpisodeLog, MapSnapshot, NavigatorConfig, ScenarioClass, ScenarioSpec, StepRecord,
    TerminalStatus,
};
pub use kinematics::{imu_noise_std, step, synth_imu, terrain_attitude, SimParams, TerrainContact};
pub use metrics::{compute_metrics, Metrics};

use thiserror::Error;

use crate::perception::PerceptionError;
use crate::planner::PlannerError;
use crate::rewards::RewardError;
use crate::terrain::TerrainError;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("robot left the world at ({x:.3}, {y:.3})")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error("no episodes to summarize")]
    NoEpisodes,
}
