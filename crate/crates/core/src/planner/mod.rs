//! Least-cost waypoints and the constrained Dynamic Window Approach.
//!
//! The planner works in the robot-centric window frame: the robot sits at the
//! window center facing `+row`. Velocity spaces are axis-aligned boxes over
//! `(v, omega)`; the searched set is the intersection of the absolute limits,
//! the dynamic window, the attitude box and the vibration box, filtered by
//! arc admissibility against the cost-map.

mod boxes;
mod dwa;
mod path;

pub use boxes::{dynamic_window, v_el_box, v_vib_box, velocity_space, VelocityBox};
pub use dwa::{
    admissible, arc_point, candidate_grid, clearance_along_arc, evaluate_terms, linspace,
    plan_velocity, recovery_command, search_box, CandidateTerms, PlanOutcome, PlanStatus,
    PlanTelemetry, RecoveryReason,
};
pub use path::{goal_cell, least_cost_path, select_waypoint, select_waypoint_index, WaypointPath};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::terrain::Pose2D;

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("no path from the robot cell to {goal:?}")]
    NoPath { goal: crate::grid::Cell },
    #[error("goal cell {goal:?} lies outside the {rows}x{cols} cost-map")]
    GoalOutside {
        goal: crate::grid::Cell,
        rows: usize,
        cols: usize,
    },
    #[error("invalid planner limits: {0}")]
    InvalidLimits(String),
}

/// Pose, attitude and current velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pose: Pose2D,
    /// Roll, positive when the left side is up.
    pub roll: f64,
    /// Pitch, positive nose-up.
    pub pitch: f64,
    pub v: f64,
    pub omega: f64,
}

impl RobotState {
    pub fn at_rest(pose: Pose2D) -> Self {
        Self {
            pose,
            roll: 0.0,
            pitch: 0.0,
            v: 0.0,
            omega: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerLimits {
    /// Absolute linear speed limit (m/s).
    pub v_abs_max: f64,
    /// Absolute yaw-rate limit (rad/s).
    pub omega_abs_max: f64,
    /// Linear acceleration bound (m/s^2).
    pub accel_v: f64,
    /// Angular acceleration bound (rad/s^2).
    pub accel_omega: f64,
    /// Braking deceleration used for the stopping distance (m/s^2).
    pub brake_decel: f64,
    /// Control interval (s).
    pub dt: f64,
    pub lambda_el: f64,
    pub psi_lim: f64,
    pub lambda_vib: f64,
    /// Attitude activation threshold (rad).
    pub phi_act: f64,
    /// Vibration activation threshold.
    pub sigma_act: f64,
    pub v_floor: f64,
    pub omega_window_floor: f64,
    /// Heading weight.
    pub alpha: f64,
    /// Clearance weight.
    pub beta: f64,
    /// Velocity weight.
    pub gamma: f64,
    pub n_v: usize,
    pub n_omega: usize,
    /// Cells at or above this cost are obstacles.
    pub c_obs: f64,
    /// Uniform per-unit-step cost in the waypoint search.
    pub step_cost: f64,
    /// Treat obstacle cells as impassable in the waypoint search.
    pub obstacle_masking: bool,
    /// Apply the attitude box.
    pub attitude_constraint: bool,
    /// Apply the vibration box.
    pub vibration_constraint: bool,
}

impl Default for PlannerLimits {
    fn default() -> Self {
        Self {
            v_abs_max: 1.0,
            omega_abs_max: 1.0,
            accel_v: 1.0,
            accel_omega: 2.0,
            brake_decel: 1.0,
            dt: 0.1,
            lambda_el: 0.1,
            psi_lim: 0.6,
            lambda_vib: 0.05,
            phi_act: 0.1,
            sigma_act: 1.0,
            v_floor: 0.05,
            omega_window_floor: 0.1,
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.5,
            n_v: 11,
            n_omega: 21,
            c_obs: 0.9,
            step_cost: 1e-3,
            obstacle_masking: true,
            attitude_constraint: true,
            vibration_constraint: true,
        }
    }
}

impl PlannerLimits {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let positive = [
            ("v_abs_max", self.v_abs_max),
            ("omega_abs_max", self.omega_abs_max),
            ("accel_v", self.accel_v),
            ("accel_omega", self.accel_omega),
            ("brake_decel", self.brake_decel),
            ("dt", self.dt),
            ("lambda_el", self.lambda_el),
            ("lambda_vib", self.lambda_vib),
            ("phi_act", self.phi_act),
            ("sigma_act", self.sigma_act),
            ("v_floor", self.v_floor),
            ("omega_window_floor", self.omega_window_floor),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("step_cost", self.step_cost),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PlannerError::InvalidLimits(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(self.psi_lim > 0.0 && self.psi_lim < std::f64::consts::FRAC_PI_2) {
            return Err(PlannerError::InvalidLimits(format!(
                "psi_lim must lie in (0, pi/2), got {}",
                self.psi_lim
            )));
        }
        if !(self.c_obs > 0.0 && self.c_obs <= 1.0) {
            return Err(PlannerError::InvalidLimits(format!(
                "c_obs must lie in (0, 1], got {}",
                self.c_obs
            )));
        }
        if self.n_v == 0 || self.n_omega == 0 {
            return Err(PlannerError::InvalidLimits("sample counts must be >= 1".into()));
        }
        Ok(())
    }
}
