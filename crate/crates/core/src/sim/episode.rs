use std::fmt;
use std::io;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kinematics::{step_with_contact, synth_imu_with_roughness, terrain_attitude, SimParams};
use super::SimError;
use crate::grid::Cell;
use crate::perception::{compose_costmap, AttentionMap, AttentionProvider, CostMap};
use crate::planner::{
    goal_cell, least_cost_path, plan_velocity, recovery_command, select_waypoint_index, PlanStatus,
    PlanTelemetry, PlannerError, PlannerLimits, RecoveryReason, RobotState,
};
use crate::rewards::{
    pca_sigma, AttitudeObservation, GoalObservation, ImuWindow, RewardComponents, RewardTrace,
    RewardWeights, VibrationMeasure,
};
use crate::terrain::{heading_gradient_vector, robot_centric_window, ElevationMap, Pose2D};

/// Terrain difficulty by maximum elevation gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioClass {
    /// Gain of at most 1 m.
    Low,
    /// Gain between 1 m and 2 m.
    Medium,
    /// Gain of at least 3 m.
    High,
}

impl ScenarioClass {
    pub fn admits(self, gain: f64) -> bool {
        match self {
            ScenarioClass::Low => gain <= 1.0,
            ScenarioClass::Medium => (1.0..=2.0).contains(&gain),
            ScenarioClass::High => gain >= 3.0,
        }
    }

    /// Class of a gain; gains in the (2, 3) m gap have none.
    pub fn classify(gain: f64) -> Option<Self> {
        [ScenarioClass::Low, ScenarioClass::Medium, ScenarioClass::High]
            .into_iter()
            .find(|c| c.admits(gain))
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioClass::Low => "low",
            ScenarioClass::Medium => "medium",
            ScenarioClass::High => "high",
        }
    }
}

impl fmt::Display for ScenarioClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// World, endpoints and episode limits.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub world: Arc<ElevationMap>,
    pub start: Pose2D,
    pub goal: (f64, f64),
    pub class: Option<ScenarioClass>,
    pub max_steps: usize,
    pub success_radius: f64,
    /// Seeds the IMU noise stream.
    pub noise_seed: u64,
    pub sim: SimParams,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        self.sim.validate()?;
        let bad = |m: String| Err(SimError::Scenario(m));
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if !(self.success_radius > 0.0) {
            return bad("success_radius must be positive".into());
        }
        if !self.world.contains(self.start.x, self.start.y) {
            return bad(format!("start ({}, {}) lies outside the world", self.start.x, self.start.y));
        }
        if !self.world.contains(self.goal.0, self.goal.1) {
            return bad(format!("goal ({}, {}) lies outside the world", self.goal.0, self.goal.1));
        }
        if self.reference_length() <= 0.0 {
            return bad("start already lies within the success radius".into());
        }
        if let Some(class) = self.class {
            let gain = self.world.max_elevation_gain();
            if !class.admits(gain) {
                return bad(format!("elevation gain {gain:.3} m does not fit class {class}"));
            }
        }
        Ok(())
    }

    /// Straight-line distance from the start to the edge of the success disc.
    pub fn reference_length(&self) -> f64 {
        self.start.distance_to(self.goal.0, self.goal.1) - self.success_radius
    }
}

/// Perception and planning settings for one navigator variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavigatorConfig {
    pub limits: PlannerLimits,
    /// Steer toward lookahead waypoints on the least-cost path; otherwise
    /// steer straight at the goal.
    pub use_waypoints: bool,
    /// Waypoint lookahead along the path (m).
    pub lookahead: f64,
    /// Robot-centric window side (cells).
    pub window_size: usize,
    /// Cells ahead used by the elevation reward.
    pub heading_cells: usize,
    pub rewards: RewardWeights,
}

impl Default for NavigatorConfig {
    fn default() -> Self {
        Self {
            limits: PlannerLimits::default(),
            use_waypoints: true,
            lookahead: 2.0,
            window_size: 40,
            heading_cells: 10,
            rewards: RewardWeights::default(),
        }
    }
}

impl NavigatorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.limits.validate()?;
        self.rewards.validate()?;
        if self.window_size < 3 {
            return Err(SimError::Scenario("window_size must be at least 3".into()));
        }
        if self.heading_cells == 0 || self.heading_cells >= self.window_size / 2 {
            return Err(SimError::Scenario(
                "heading_cells must be positive and fit ahead of the robot cell".into(),
            ));
        }
        if !(self.lookahead > 0.0) {
            return Err(SimError::Scenario("lookahead must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Success,
    Collision,
    FlipOver,
    Timeout,
}

impl TerminalStatus {
    pub fn name(self) -> &'static str {
        match self {
            TerminalStatus::Success => "success",
            TerminalStatus::Collision => "collision",
            TerminalStatus::FlipOver => "flip_over",
            TerminalStatus::Timeout => "timeout",
        }
    }
}

impl fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Perception products of one control step.
#[derive(Debug, Clone)]
pub struct MapSnapshot {
    pub window: ElevationMap,
    pub attention: AttentionMap,
    pub costmap: CostMap,
}

/// One control step: the command issued and the state it led to.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Time at the end of the step (s).
    pub t: f64,
    pub state: RobotState,
    pub cmd_v: f64,
    pub cmd_omega: f64,
    pub waypoint: (f64, f64),
    pub status: PlanStatus,
    pub telemetry: PlanTelemetry,
    /// Most recent IMU sample.
    pub imu: [f64; 6],
    pub vibration: VibrationMeasure,
    pub roughness: f64,
    /// Distance traveled since the start (m).
    pub odometer: f64,
    pub rewards: RewardComponents,
}

#[derive(Debug, Serialize)]
struct CsvRow {
    step: usize,
    t: f64,
    x: f64,
    y: f64,
    theta: f64,
    roll: f64,
    pitch: f64,
    v: f64,
    omega: f64,
    cmd_v: f64,
    cmd_omega: f64,
    waypoint_x: f64,
    waypoint_y: f64,
    plan_status: &'static str,
    el_linear_active: bool,
    el_angular_active: bool,
    vib_active: bool,
    search_v_min: f64,
    search_v_max: f64,
    search_omega_min: f64,
    search_omega_max: f64,
    admissible: usize,
    head: f64,
    dist: f64,
    vel: f64,
    objective: f64,
    accel_x: f64,
    accel_y: f64,
    accel_z: f64,
    gyro_x: f64,
    gyro_y: f64,
    gyro_z: f64,
    sigma_pc1: f64,
    sigma_pc2: f64,
    vibration: f64,
    roughness: f64,
    odometer: f64,
}

fn status_name(s: PlanStatus) -> &'static str {
    match s {
        PlanStatus::Nominal => "nominal",
        PlanStatus::Recovery(RecoveryReason::EmptySearchSpace) => "recovery_empty_search_space",
        PlanStatus::Recovery(RecoveryReason::NoAdmissibleCandidate) => "recovery_no_admissible",
        PlanStatus::Recovery(RecoveryReason::NoPath) => "recovery_no_path",
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub scenario: String,
    pub seed: u64,
    pub start: Pose2D,
    pub goal: (f64, f64),
    /// Straight-line reference for the normalized trajectory length.
    pub reference_length: f64,
    pub status: TerminalStatus,
    pub steps: Vec<StepRecord>,
    pub weights: RewardWeights,
    /// Perception products of the first step.
    pub snapshot: Option<MapSnapshot>,
}

impl EpisodeLog {
    pub fn elapsed(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t)
    }

    pub fn path_length(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.odometer)
    }

    pub fn reward_trace(&self) -> RewardTrace {
        RewardTrace {
            weights: self.weights,
            steps: self.steps.iter().map(|s| s.rewards).collect(),
        }
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.steps {
            let tl = &r.telemetry;
            w.serialize(CsvRow {
                step: r.step,
                t: r.t,
                x: r.state.pose.x,
                y: r.state.pose.y,
                theta: r.state.pose.theta,
                roll: r.state.roll,
                pitch: r.state.pitch,
                v: r.state.v,
                omega: r.state.omega,
                cmd_v: r.cmd_v,
                cmd_omega: r.cmd_omega,
                waypoint_x: r.waypoint.0,
                waypoint_y: r.waypoint.1,
                plan_status: status_name(r.status),
                el_linear_active: tl.el_active.linear,
                el_angular_active: tl.el_active.angular,
                vib_active: tl.vib_active,
                search_v_min: tl.search_box.v_min,
                search_v_max: tl.search_box.v_max,
                search_omega_min: tl.search_box.omega_min,
                search_omega_max: tl.search_box.omega_max,
                admissible: tl.admissible,
                head: tl.head,
                dist: tl.dist,
                vel: tl.vel,
                objective: tl.objective,
                accel_x: r.imu[0],
                accel_y: r.imu[1],
                accel_z: r.imu[2],
                gyro_x: r.imu[3],
                gyro_y: r.imu[4],
                gyro_z: r.imu[5],
                sigma_pc1: r.vibration.sigma_pc1,
                sigma_pc2: r.vibration.sigma_pc2,
                vibration: r.vibration.magnitude,
                roughness: r.roughness,
                odometer: r.odometer,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Chooses the steering target: the lookahead waypoint on the least-cost
/// path, or the goal itself when it is closer than the lookahead.
fn is_blocked(costmap: &CostMap, c: Cell, limits: &PlannerLimits) -> bool {
    limits.obstacle_masking && costmap.get(c.row, c.col) >= limits.c_obs
}

/// Unblocked window-boundary cell whose bearing from the robot is closest to
/// `bearing` (local frame, left positive). Used when the projected goal lands
/// on an obstacle.
fn open_boundary_cell(costmap: &CostMap, bearing: f64, limits: &PlannerLimits) -> Option<Cell> {
    let (rows, cols) = (costmap.rows(), costmap.cols());
    let (cr, cc) = costmap.center();
    let angle_to = |c: Cell| {
        let a = (cc as f64 - c.col as f64).atan2(c.row as f64 - cr as f64);
        let d = (a - bearing).rem_euclid(std::f64::consts::TAU);
        d.min(std::f64::consts::TAU - d)
    };
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| Cell::new(r, c)))
        .filter(|c| c.row == 0 || c.col == 0 || c.row == rows - 1 || c.col == cols - 1)
        .filter(|&c| !is_blocked(costmap, c, limits))
        .min_by(|&a, &b| angle_to(a).total_cmp(&angle_to(b)))
}

fn waypoint_for(
    costmap: &CostMap,
    pose: &Pose2D,
    goal: (f64, f64),
    nav: &NavigatorConfig,
) -> Result<(f64, f64), PlannerError> {
    let (fwd, left) = pose.to_local(goal.0, goal.1);
    let res = costmap.resolution();
    let (cr, cc) = costmap.center();
    let goal_inside = (fwd / res).round().abs() <= cr.min(costmap.rows() - 1 - cr) as f64
        && (left / res).round().abs() <= cc.min(costmap.cols() - 1 - cc) as f64;
    let mut target = goal_cell(costmap, pose, goal);
    if !goal_inside && is_blocked(costmap, target, &nav.limits) {
        target = open_boundary_cell(costmap, left.atan2(fwd), &nav.limits).unwrap_or(target);
    }
    let path = least_cost_path(costmap, target, &nav.limits)?.with_frame(*pose);
    let idx = select_waypoint_index(&path, nav.lookahead);
    if idx + 1 == path.cells.len() && goal_inside {
        Ok(goal)
    } else {
        Ok(path.cell_world(path.cells[idx]))
    }
}

/// Runs one closed-loop episode.
///
/// Each control step builds the robot-centric window, queries `provider`
/// for attention, composes the cost-map, picks a target, plans a command and
/// integrates it over the IMU substeps while the velocities ramp linearly
/// from the current values to the command. The episode ends on success
/// (checked every substep), flip-over, collision (the robot enters a cell
/// marked as an obstacle in the planning cost-map, or leaves the world) or
/// after `max_steps`.
pub fn run_episode(
    spec: &ScenarioSpec,
    nav: &NavigatorConfig,
    provider: &dyn AttentionProvider,
) -> Result<EpisodeLog, SimError> {
    spec.validate()?;
    nav.validate()?;
    let params = &spec.sim;
    if (nav.limits.dt - params.control_dt).abs() > 1e-12 {
        return Err(SimError::Scenario(format!(
            "planner dt {} differs from control_dt {}",
            nav.limits.dt, params.control_dt
        )));
    }
    let world = spec.world.as_ref();
    let goal = spec.goal;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
    let substeps = params.substeps();
    let sub_dt = params.control_dt / substeps as f64;

    let contact = terrain_attitude(world, &spec.start, params.footprint_radius);
    let mut state = RobotState {
        roll: contact.roll,
        pitch: contact.pitch,
        ..RobotState::at_rest(spec.start)
    };
    let mut imu_buf: Vec<[f64; 6]> = Vec::with_capacity(params.imu_window + 1);
    let mut vib = VibrationMeasure::ZERO;
    let mut odometer = 0.0;
    let mut steps = Vec::new();
    let mut snapshot = None;
    let mut status = None;

    for step in 0..spec.max_steps {
        let plan_pose = state.pose;
        let window = robot_centric_window(world, &plan_pose, nav.window_size)?;
        let goal_dir = plan_pose.bearing_to(goal.0, goal.1);
        let attention = provider.attention(&window, goal_dir)?;
        let costmap = compose_costmap(&attention, &window)?;

        let target = if nav.use_waypoints {
            match waypoint_for(&costmap, &plan_pose, goal, nav) {
                Ok(w) => Some(w),
                Err(PlannerError::NoPath { .. }) => None,
                Err(e) => return Err(e.into()),
            }
        } else {
            Some(goal)
        };
        let outcome = match target {
            Some(w) => plan_velocity(&state, &costmap, w, &vib, &nav.limits),
            None => {
                let mut o = plan_velocity(&state, &costmap, goal, &vib, &nav.limits);
                let (v, omega) = recovery_command(&state, goal, &nav.limits);
                o.v = v;
                o.omega = omega;
                o.status = PlanStatus::Recovery(RecoveryReason::NoPath);
                o
            }
        };
        let waypoint = target.unwrap_or(goal);

        let (v0, w0) = (state.v, state.omega);
        let mut last_imu = [0.0; 6];
        let mut roughness = 0.0;
        let mut t = 0.0;
        for k in 1..=substeps {
            let frac = k as f64 / substeps as f64;
            let (vk, wk) = if k == substeps {
                (outcome.v, outcome.omega)
            } else {
                (v0 + (outcome.v - v0) * frac, w0 + (outcome.omega - w0) * frac)
            };
            t = step as f64 * params.control_dt + k as f64 * sub_dt;
            let (next, contact) = match step_with_contact(&state, vk, wk, sub_dt, world, params) {
                Ok(r) => r,
                Err(SimError::OutOfBounds { .. }) => {
                    status = Some(TerminalStatus::Collision);
                    break;
                }
                Err(e) => return Err(e),
            };
            last_imu = synth_imu_with_roughness(&state, &next, contact.roughness, sub_dt, &mut rng, params);
            roughness = contact.roughness;
            if imu_buf.len() == params.imu_window {
                imu_buf.remove(0);
            }
            imu_buf.push(last_imu);
            odometer += vk.abs() * sub_dt;
            state = next;
            if AttitudeObservation::within(state.roll, state.pitch, params.flip_bound).is_err() {
                status = Some(TerminalStatus::FlipOver);
                break;
            }
            if state.pose.distance_to(goal.0, goal.1) < spec.success_radius {
                status = Some(TerminalStatus::Success);
                break;
            }
        }
        if imu_buf.len() >= 2 {
            vib = pca_sigma(&ImuWindow::new(imu_buf.clone())?);
        }
        if status.is_none() {
            let (fwd, left) = plan_pose.to_local(state.pose.x, state.pose.y);
            if costmap
                .cost_at_local(fwd, -left)
                .is_some_and(|c| c >= nav.limits.c_obs)
            {
                status = Some(TerminalStatus::Collision);
            }
        }

        let goal_obs = GoalObservation::new(
            state.pose.distance_to(goal.0, goal.1),
            state.pose.bearing_to(goal.0, goal.1),
        )?;
        let attitude = AttitudeObservation {
            roll: state.roll,
            pitch: state.pitch,
        };
        let grads = heading_gradient_vector(&window, nav.heading_cells)?;
        let rewards = RewardComponents::evaluate(&goal_obs, &attitude, &grads, &vib, &nav.rewards)?;

        if step == 0 {
            snapshot = Some(MapSnapshot {
                window,
                attention,
                costmap,
            });
        }
        steps.push(StepRecord {
            step,
            t,
            state,
            cmd_v: outcome.v,
            cmd_omega: outcome.omega,
            waypoint,
            status: outcome.status,
            telemetry: outcome.telemetry,
            imu: last_imu,
            vibration: vib,
            roughness,
            odometer,
            rewards,
        });
        if status.is_some() {
            break;
        }
    }

    Ok(EpisodeLog {
        scenario: spec.name.clone(),
        seed: spec.noise_seed,
        start: spec.start,
        goal,
        reference_length: spec.reference_length(),
        status: status.unwrap_or(TerminalStatus::Timeout),
        steps,
        weights: nav.rewards,
        snapshot,
    })
}
