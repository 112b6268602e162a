//! Terrain-aware local navigation.
//!
//! The stack turns a robot-centric elevation window into a navigation
//! cost-map (attention weights multiplied element-wise with the elevation
//! channel), extracts least-cost waypoints from it, and follows them with a
//! Dynamic Window Approach whose velocity search space is further restricted
//! by attitude (flip-over) and IMU vibration constraints.
//!
//! A kinematic heightfield simulator and a metrics harness close the loop so
//! planner variants can be compared on procedurally generated terrain.

// Small fixed-size matrix loops read better indexed; `!(x > 0.0)` rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod grid;
pub mod perception;
pub mod planner;
pub mod rewards;
pub mod sim;
pub mod terrain;

pub use grid::{Cell, Grid, GridError};
pub use perception::{
    compose_costmap, load_attention_snapshot, reference_attention, AttentionMap, AttentionProvider,
    CostMap, PerceptionError, ReferenceAttention, SnapshotAttention, UniformAttention,
};
pub use planner::{
    admissible, dynamic_window, least_cost_path, plan_velocity, select_waypoint, v_el_box,
    v_vib_box, PlanOutcome, PlanStatus, PlannerError, PlannerLimits, RobotState, VelocityBox,
    WaypointPath,
};
pub use rewards::{
    pca_sigma, r_elev, r_goal, r_stable, r_total, r_vibration, AttitudeObservation,
    GoalObservation, ImuWindow, RewardComponents, RewardError, RewardTerm, RewardWeights,
    VibrationMeasure,
};
pub use terrain::{
    gradient, heading_gradient_vector, load_heightfield, robot_centric_window, ElevationMap,
    GradientField, Pose2D, TerrainError,
};
