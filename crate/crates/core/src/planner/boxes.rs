use serde::{Deserialize, Serialize};

use super::{PlannerLimits, RobotState};
use crate::rewards::VibrationMeasure;

/// Axis-aligned `[v_min, v_max] x [omega_min, omega_max]`. A box with an
/// inverted interval on either axis is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityBox {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl VelocityBox {
    pub const EMPTY: VelocityBox = VelocityBox {
        v_min: 1.0,
        v_max: 0.0,
        omega_min: 1.0,
        omega_max: 0.0,
    };

    pub fn new(v_min: f64, v_max: f64, omega_min: f64, omega_max: f64) -> Self {
        Self {
            v_min,
            v_max,
            omega_min,
            omega_max,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.v_min <= self.v_max && self.omega_min <= self.omega_max)
    }

    pub fn intersect(&self, other: &VelocityBox) -> VelocityBox {
        VelocityBox {
            v_min: self.v_min.max(other.v_min),
            v_max: self.v_max.min(other.v_max),
            omega_min: self.omega_min.max(other.omega_min),
            omega_max: self.omega_max.min(other.omega_max),
        }
    }

    pub fn contains(&self, v: f64, omega: f64) -> bool {
        !self.is_empty()
            && v >= self.v_min
            && v <= self.v_max
            && omega >= self.omega_min
            && omega <= self.omega_max
    }
}

/// `V_s`: forward speeds up to `v_abs_max`, yaw rates within `+-omega_abs_max`.
pub fn velocity_space(limits: &PlannerLimits) -> VelocityBox {
    VelocityBox::new(0.0, limits.v_abs_max, -limits.omega_abs_max, limits.omega_abs_max)
}

/// `V_d ∩ V_s`: velocities reachable within one control interval.
pub fn dynamic_window(state: &RobotState, limits: &PlannerLimits) -> VelocityBox {
    let dv = limits.accel_v * limits.dt;
    let dw = limits.accel_omega * limits.dt;
    VelocityBox::new(
        state.v - dv,
        state.v + dv,
        state.omega - dw,
        state.omega + dw,
    )
    .intersect(&velocity_space(limits))
}

/// Which halves of the attitude box are in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttitudeActivation {
    pub linear: bool,
    pub angular: bool,
}

pub fn attitude_activation(state: &RobotState, limits: &PlannerLimits) -> AttitudeActivation {
    AttitudeActivation {
        linear: state.pitch.abs() > limits.phi_act && state.pitch <= limits.psi_lim,
        angular: state.roll.abs() > limits.phi_act,
    }
}

/// Attitude (flip-over) box.
///
/// Linear half: `v <= v_a + lambda_el * tanh(pitch)`, floored at `v_floor`,
/// lifted entirely once pitch exceeds `psi_lim`. Angular half:
/// `|omega - omega_a| <= max(lambda_el * |tanh(roll)|, omega_window_floor)`.
/// Each half only applies once its angle exceeds `phi_act`; otherwise the box
/// is the full `V_s`.
pub fn v_el_box(state: &RobotState, limits: &PlannerLimits) -> VelocityBox {
    let full = velocity_space(limits);
    let active = attitude_activation(state, limits);
    let mut b = full;
    if active.linear {
        let v_pitch = limits.lambda_el * state.pitch.tanh();
        b.v_min = 0.0;
        b.v_max = (state.v + v_pitch).max(limits.v_floor);
    }
    if active.angular {
        let w = (limits.lambda_el * state.roll.tanh().abs()).max(limits.omega_window_floor);
        b.omega_min = state.omega - w;
        b.omega_max = state.omega + w;
    }
    b.intersect(&full)
}

/// Vibration box: `v <= max(v_a - lambda_vib * |sigma|, v_floor)` and
/// `|omega - omega_a| <= max(lambda_vib * |sigma|, omega_window_floor)` when
/// the magnitude exceeds `sigma_act`; the full `V_s` otherwise.
pub fn v_vib_box(state: &RobotState, vib: &VibrationMeasure, limits: &PlannerLimits) -> VelocityBox {
    let full = velocity_space(limits);
    if vib.magnitude <= limits.sigma_act {
        return full;
    }
    let lim = limits.lambda_vib * vib.magnitude;
    let w = lim.max(limits.omega_window_floor);
    VelocityBox::new(
        0.0,
        (state.v - lim).max(limits.v_floor),
        state.omega - w,
        state.omega + w,
    )
    .intersect(&full)
}
