use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::boxes::{attitude_activation, dynamic_window, v_el_box, v_vib_box, AttitudeActivation};
use super::{PlannerLimits, RobotState, VelocityBox};
use crate::perception::CostMap;
use crate::rewards::VibrationMeasure;

/// `n` evenly spaced samples over `[lo, hi]`, both ends included; a single
/// sample when the interval is degenerate.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![lo];
    }
    let span = hi - lo;
    let last = (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { hi } else { lo + span * k as f64 / last })
        .collect()
}

/// Candidate `(v, omega)` pairs over a box: `v` outer, `omega` inner.
pub fn candidate_grid(b: &VelocityBox, n_v: usize, n_omega: usize) -> Vec<(f64, f64)> {
    if b.is_empty() {
        return Vec::new();
    }
    let vs = linspace(b.v_min, b.v_max, n_v);
    let ws = linspace(b.omega_min, b.omega_max, n_omega);
    vs.iter()
        .flat_map(|&v| ws.iter().map(move |&w| (v, w)))
        .collect()
}

/// Robot-frame `(forward, right)` after arc length `s` along a constant
/// `(v, omega)` arc starting at the window center.
#[inline]
pub fn arc_point(v: f64, omega: f64, s: f64) -> (f64, f64) {
    if omega == 0.0 || v == 0.0 {
        return (s, 0.0);
    }
    let k = omega / v;
    let half = 0.5 * k * s;
    (s * sinc(2.0 * half), -s * half.sin() * sinc(half))
}

/// `sin(x) / x`, continuous at zero.
#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Arc length to the first sample landing on a cell with cost `>= c_obs`,
/// scanning up to `max_len` at quarter-cell spacing. When `include_end` is
/// set the point at exactly `max_len` is also checked.
fn first_obstacle(
    costmap: &CostMap,
    v: f64,
    omega: f64,
    max_len: f64,
    c_obs: f64,
    include_end: bool,
) -> Option<f64> {
    if !(max_len > 0.0) {
        return None;
    }
    let step = costmap.resolution() / 4.0;
    let hit = |s: f64| -> Option<Option<f64>> {
        let (f, r) = arc_point(v, omega, s);
        match costmap.cost_at_local(f, r) {
            Some(c) if c >= c_obs => Some(Some(s)),
            Some(_) => None,
            // left the window
            None => Some(None),
        }
    };
    let mut k = 1usize;
    loop {
        let s = step * k as f64;
        if s >= max_len {
            break;
        }
        if let Some(result) = hit(s) {
            return result;
        }
        k += 1;
    }
    if include_end {
        if let Some(result) = hit(max_len) {
            return result;
        }
    }
    None
}

/// `V_a` membership: the arc reaches no obstacle cell within the stopping
/// distance `v^2 / (2 * brake_decel)`.
pub fn admissible(costmap: &CostMap, v: f64, omega: f64, limits: &PlannerLimits) -> bool {
    if v <= 0.0 {
        return true;
    }
    let stop = v * v / (2.0 * limits.brake_decel);
    first_obstacle(costmap, v, omega, stop, limits.c_obs, true).is_none()
}

/// Window radius in meters (robot cell to the nearest window edge).
fn window_radius(costmap: &CostMap) -> f64 {
    let (cr, cc) = costmap.center();
    let reach = cr
        .min(cc)
        .min(costmap.rows() - 1 - cr)
        .min(costmap.cols() - 1 - cc)
        .max(1);
    reach as f64 * costmap.resolution()
}

/// Free arc length before the first obstacle, capped at the window radius.
pub fn clearance_along_arc(costmap: &CostMap, v: f64, omega: f64, limits: &PlannerLimits) -> f64 {
    let radius = window_radius(costmap);
    if v <= 0.0 {
        return radius;
    }
    first_obstacle(costmap, v, omega, radius, limits.c_obs, false).unwrap_or(radius)
}

/// Raw (unnormalized) objective terms for one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateTerms {
    pub head: f64,
    pub dist: f64,
    pub vel: f64,
}

/// `head = 1 - |bearing error at the dt-predicted pose| / pi`,
/// `dist = clearance / window radius`, `vel = v / v_abs_max`.
pub fn evaluate_terms(
    state: &RobotState,
    costmap: &CostMap,
    waypoint: (f64, f64),
    v: f64,
    omega: f64,
    limits: &PlannerLimits,
) -> CandidateTerms {
    let predicted = state.pose.advance(v, omega, limits.dt);
    let err = predicted.bearing_to(waypoint.0, waypoint.1).abs();
    let radius = window_radius(costmap);
    CandidateTerms {
        head: 1.0 - err / PI,
        dist: (clearance_along_arc(costmap, v, omega, limits) / radius).clamp(0.0, 1.0),
        vel: v / limits.v_abs_max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryReason {
    /// The box intersection is empty.
    EmptySearchSpace,
    /// Every sampled candidate hits an obstacle.
    NoAdmissibleCandidate,
    /// The waypoint search found no route.
    NoPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Nominal,
    Recovery(RecoveryReason),
}

impl PlanStatus {
    pub fn is_recovery(&self) -> bool {
        matches!(self, PlanStatus::Recovery(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanTelemetry {
    pub dynamic_window: VelocityBox,
    pub el_box: VelocityBox,
    pub vib_box: VelocityBox,
    pub search_box: VelocityBox,
    pub el_active: AttitudeActivation,
    pub vib_active: bool,
    pub candidates: usize,
    pub admissible: usize,
    /// Normalized terms of the chosen candidate.
    pub head: f64,
    pub dist: f64,
    pub vel: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub v: f64,
    pub omega: f64,
    pub status: PlanStatus,
    pub telemetry: PlanTelemetry,
}

/// The box intersection searched by [`plan_velocity`], with its parts.
pub fn search_box(
    state: &RobotState,
    vib: &VibrationMeasure,
    limits: &PlannerLimits,
) -> (VelocityBox, VelocityBox, VelocityBox, VelocityBox) {
    let dw = dynamic_window(state, limits);
    let full = super::velocity_space(limits);
    let el = if limits.attitude_constraint {
        v_el_box(state, limits)
    } else {
        full
    };
    let vb = if limits.vibration_constraint {
        v_vib_box(state, vib, limits)
    } else {
        full
    };
    (dw.intersect(&el).intersect(&vb), dw, el, vb)
}

/// Rotate in place toward `target` at the angular floor rate.
pub fn recovery_command(state: &RobotState, target: (f64, f64), limits: &PlannerLimits) -> (f64, f64) {
    let bearing = state.pose.bearing_to(target.0, target.1);
    let w = limits.omega_window_floor.min(limits.omega_abs_max);
    (0.0, if bearing >= 0.0 { w } else { -w })
}

#[inline]
fn normalizer(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[inline]
fn normalize(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (x - lo) / (hi - lo)
    } else {
        1.0
    }
}

/// Constrained DWA step.
///
/// Samples an `n_v x n_omega` grid over `V_s ∩ V_d ∩ V_el ∩ V_vib`, drops
/// candidates failing [`admissible`], min-max normalizes each objective term
/// over the survivors and returns the maximizer of
/// `alpha * head + beta * dist + gamma * vel`. Ties go to smaller `|omega|`,
/// then smaller `v`, then earlier grid position. If nothing survives, the
/// robot rotates in place toward the waypoint.
pub fn plan_velocity(
    state: &RobotState,
    costmap: &CostMap,
    waypoint: (f64, f64),
    vib: &VibrationMeasure,
    limits: &PlannerLimits,
) -> PlanOutcome {
    let (sb, dw, el, vb) = search_box(state, vib, limits);
    let mut telemetry = PlanTelemetry {
        dynamic_window: dw,
        el_box: el,
        vib_box: vb,
        search_box: sb,
        el_active: if limits.attitude_constraint {
            attitude_activation(state, limits)
        } else {
            AttitudeActivation::default()
        },
        vib_active: limits.vibration_constraint && vib.magnitude > limits.sigma_act,
        candidates: 0,
        admissible: 0,
        head: 0.0,
        dist: 0.0,
        vel: 0.0,
        objective: 0.0,
    };

    let recover = |reason: RecoveryReason, telemetry: PlanTelemetry| {
        let (v, omega) = recovery_command(state, waypoint, limits);
        PlanOutcome {
            v,
            omega,
            status: PlanStatus::Recovery(reason),
            telemetry,
        }
    };

    if sb.is_empty() {
        return recover(RecoveryReason::EmptySearchSpace, telemetry);
    }
    let grid = candidate_grid(&sb, limits.n_v, limits.n_omega);
    telemetry.candidates = grid.len();
    let scored: Vec<((f64, f64), CandidateTerms)> = grid
        .into_iter()
        .filter(|&(v, w)| admissible(costmap, v, w, limits))
        .map(|(v, w)| ((v, w), evaluate_terms(state, costmap, waypoint, v, w, limits)))
        .collect();
    telemetry.admissible = scored.len();
    if scored.is_empty() {
        return recover(RecoveryReason::NoAdmissibleCandidate, telemetry);
    }

    let nh = normalizer(scored.iter().map(|(_, t)| t.head));
    let nd = normalizer(scored.iter().map(|(_, t)| t.dist));
    let nv = normalizer(scored.iter().map(|(_, t)| t.vel));

    let mut best: Option<((f64, f64), f64, CandidateTerms)> = None;
    for &((v, w), t) in &scored {
        let n = CandidateTerms {
            head: normalize(t.head, nh),
            dist: normalize(t.dist, nd),
            vel: normalize(t.vel, nv),
        };
        let g = limits.alpha * n.head + limits.beta * n.dist + limits.gamma * n.vel;
        let better = match best {
            None => true,
            Some(((bv, bw), bg, _)) => {
                g > bg || (g == bg && (w.abs() < bw.abs() || (w.abs() == bw.abs() && v < bv)))
            }
        };
        if better {
            best = Some(((v, w), g, n));
        }
    }
    let ((v, omega), g, n) = best.expect("at least one admissible candidate");
    telemetry.head = n.head;
    telemetry.dist = n.dist;
    telemetry.vel = n.vel;
    telemetry.objective = g;
    PlanOutcome {
        v,
        omega,
        status: PlanStatus::Nominal,
        telemetry,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::terrain::Pose2D;
    use approx::assert_abs_diff_eq;

    fn at_rest() -> RobotState {
        RobotState::at_rest(Pose2D::new(0.0, 0.0, 0.0))
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(0.2, 0.2, 5), vec![0.2]);
        assert_eq!(linspace(-0.4, 0.4, 1), vec![-0.4]);
        let g = candidate_grid(&VelocityBox::new(0.0, 0.2, -0.4, 0.4), 11, 21);
        assert_eq!(g.len(), 231);
        assert!(g.contains(&(0.2, 0.0)));
        assert!(candidate_grid(&VelocityBox::EMPTY, 11, 21).is_empty());
    }

    #[test]
    fn arc_geometry() {
        let (f, r) = arc_point(1.0, 0.0, 2.0);
        assert_eq!((f, r), (2.0, 0.0));
        // quarter turn left on a unit circle ends at (1, -1) in (forward, right)
        let (f, r) = arc_point(1.0, 1.0, PI / 2.0);
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn admissibility_examples() {
        let limits = PlannerLimits::default();
        let zero = CostMap::zeros(40, 0.25);
        for v in [0.0, 0.3, 1.0] {
            for w in [-1.0, 0.0, 0.5] {
                assert!(admissible(&zero, v, w, &limits));
            }
        }
        // cost-1 cell 0.5 m straight ahead
        let mut g = Grid::filled(40, 40, 0.0).unwrap();
        g.set(22, 20, 1.0);
        let cm = CostMap::new(g, 0.25);
        // stopping distance 1.0 m with brake 1.0 -> v = sqrt(2)
        assert!(!admissible(&cm, 2f64.sqrt(), 0.0, &limits));
        // stopping distance 0.2 m -> v = sqrt(0.4)
        assert!(admissible(&cm, 0.4f64.sqrt(), 0.0, &limits));
    }

    #[test]
    fn straight_ahead_picks_fastest_straight() {
        let limits = PlannerLimits::default();
        let cm = CostMap::zeros(40, 0.25);
        let out = plan_velocity(&at_rest(), &cm, (3.0, 0.0), &VibrationMeasure::ZERO, &limits);
        assert_eq!(out.status, PlanStatus::Nominal);
        assert_eq!(out.omega, 0.0);
        assert_eq!(out.v, dynamic_window(&at_rest(), &limits).v_max);
        assert_eq!(out.telemetry.candidates, 231);
    }

    #[test]
    fn waypoint_to_the_left_turns_left() {
        let limits = PlannerLimits::default();
        let cm = CostMap::zeros(40, 0.25);
        let out = plan_velocity(&at_rest(), &cm, (0.0, 3.0), &VibrationMeasure::ZERO, &limits);
        assert!(out.omega > 0.0);
        let out = plan_velocity(&at_rest(), &cm, (0.0, -3.0), &VibrationMeasure::ZERO, &limits);
        assert!(out.omega < 0.0);
    }

    #[test]
    fn high_vibration_caps_speed() {
        let limits = PlannerLimits::default();
        let cm = CostMap::zeros(40, 0.25);
        let state = RobotState {
            v: 0.6,
            ..at_rest()
        };
        let vib = VibrationMeasure::new(2.0, 1.0).unwrap();
        let out = plan_velocity(&state, &cm, (5.0, 0.0), &vib, &limits);
        let cap = (state.v - limits.lambda_vib * vib.magnitude).max(limits.v_floor);
        assert!(out.v <= cap);
        // 0.6 cannot brake to the floor in one interval
        assert_eq!(out.status, PlanStatus::Recovery(RecoveryReason::EmptySearchSpace));
        assert_eq!(out.v, 0.0);
    }

    #[test]
    fn boxed_in_robot_recovers() {
        let limits = PlannerLimits::default();
        let mut g = Grid::filled(40, 40, 1.0).unwrap();
        g.set(20, 20, 0.0);
        let cm = CostMap::new(g, 0.25);
        // too fast to stop inside the free cell
        let state = RobotState {
            v: 1.0,
            ..at_rest()
        };
        let out = plan_velocity(&state, &cm, (0.0, -2.0), &VibrationMeasure::ZERO, &limits);
        assert_eq!(out.status, PlanStatus::Recovery(RecoveryReason::NoAdmissibleCandidate));
        assert_eq!((out.v, out.omega), (0.0, -limits.omega_window_floor));
    }

    #[test]
    fn clearance_detects_wall() {
        let limits = PlannerLimits::default();
        let mut g = Grid::filled(40, 40, 0.0).unwrap();
        for c in 0..40 {
            g.set(28, c, 1.0);
        }
        let cm = CostMap::new(g, 0.25);
        let d = clearance_along_arc(&cm, 0.5, 0.0, &limits);
        // first quarter-cell sample rounding onto row 28 (7.5 cells ahead)
        assert_abs_diff_eq!(d, 7.5 * 0.25, epsilon = 1e-12);
        assert_eq!(clearance_along_arc(&cm, 0.0, 0.3, &limits), 4.75);
    }
}
