use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::planner::RobotState;
use crate::terrain::{normalize_angle, ElevationMap, Pose2D};

/// Simulator constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Control interval (s).
    pub control_dt: f64,
    /// IMU sample rate (Hz).
    pub imu_rate_hz: f64,
    /// Samples in the vibration window.
    pub imu_window: usize,
    /// Roll/pitch magnitude that counts as a flip-over (rad).
    pub flip_bound: f64,
    /// Radius of the plane-fit neighborhood (m).
    pub footprint_radius: f64,
    /// Accelerometer noise gain: std = k * roughness * speed.
    pub k_noise: f64,
    /// Gyro noise gain.
    pub k_noise_gyro: f64,
    pub gravity: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            control_dt: 0.1,
            imu_rate_hz: 100.0,
            imu_window: 50,
            flip_bound: FRAC_PI_3,
            footprint_radius: 0.5,
            k_noise: 40.0,
            k_noise_gyro: 10.0,
            gravity: 9.81,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Scenario(m.to_string()));
        if !(self.control_dt > 0.0) || !(self.imu_rate_hz > 0.0) {
            return bad("control_dt and imu_rate_hz must be positive");
        }
        let sub = self.control_dt * self.imu_rate_hz;
        if (sub - sub.round()).abs() > 1e-9 || sub.round() < 1.0 {
            return bad("control_dt * imu_rate_hz must be a positive integer");
        }
        if self.imu_window < 2 {
            return bad("imu_window must be at least 2");
        }
        if !(self.flip_bound > 0.0 && self.flip_bound < std::f64::consts::FRAC_PI_2) {
            return bad("flip_bound must lie in (0, pi/2)");
        }
        if !(self.footprint_radius > 0.0) || self.k_noise < 0.0 || self.k_noise_gyro < 0.0 {
            return bad("footprint_radius must be positive and noise gains nonnegative");
        }
        Ok(())
    }

    /// IMU samples per control step.
    pub fn substeps(&self) -> usize {
        (self.control_dt * self.imu_rate_hz).round() as usize
    }
}

/// Attitude and roughness of the ground under a pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainContact {
    pub roll: f64,
    pub pitch: f64,
    /// RMS residual of the footprint plane fit (m).
    pub roughness: f64,
}

/// Fits `h = a dx + b dy + c` to bilinear samples on a polar stencil (center
/// plus two rings of eight) within `radius` of the pose. Pitch is the slope
/// along the heading (nose-up positive); roll tilts the left side up for
/// terrain rising to the left.
pub fn terrain_attitude(world: &ElevationMap, pose: &Pose2D, radius: f64) -> TerrainContact {
    let mut pts = [(0.0f64, 0.0f64, 0.0f64); 17];
    let z0 = world.height_at(pose.x, pose.y);
    let mut n = 1;
    for ring in [0.5 * radius, radius] {
        for k in 0..8 {
            let (s, c) = (k as f64 * FRAC_PI_4).sin_cos();
            let (dx, dy) = (ring * c, ring * s);
            pts[n] = (dx, dy, world.height_at(pose.x + dx, pose.y + dy) - z0);
            n += 1;
        }
    }
    let m = pts.len() as f64;
    let (mx, my, mz) = pts.iter().fold((0.0, 0.0, 0.0), |acc, p| {
        (acc.0 + p.0 / m, acc.1 + p.1 / m, acc.2 + p.2 / m)
    });
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, z) in &pts {
        let (x, y, z) = (x - mx, y - my, z - mz);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxz += x * z;
        syz += y * z;
    }
    let det = sxx * syy - sxy * sxy;
    let a = (sxz * syy - syz * sxy) / det;
    let b = (syz * sxx - sxz * sxy) / det;
    let c = mz - a * mx - b * my;
    let ss: f64 = pts
        .iter()
        .map(|&(x, y, z)| {
            let r = z - (a * x + b * y + c);
            r * r
        })
        .sum();

    let (st, ct) = pose.theta.sin_cos();
    let slope_fwd = a * ct + b * st;
    let slope_left = -a * st + b * ct;
    let pitch = slope_fwd.atan();
    TerrainContact {
        roll: (slope_left * pitch.cos()).atan(),
        pitch,
        roughness: (ss / m).sqrt(),
    }
}

pub(crate) fn step_with_contact(
    state: &RobotState,
    v: f64,
    omega: f64,
    dt: f64,
    world: &ElevationMap,
    params: &SimParams,
) -> Result<(RobotState, TerrainContact), SimError> {
    let pose = state.pose.advance(v, omega, dt);
    if !world.contains(pose.x, pose.y) {
        return Err(SimError::OutOfBounds {
            x: pose.x,
            y: pose.y,
        });
    }
    let contact = terrain_attitude(world, &pose, params.footprint_radius);
    Ok((
        RobotState {
            pose,
            roll: contact.roll,
            pitch: contact.pitch,
            v,
            omega,
        },
        contact,
    ))
}

/// Advances the unicycle by `dt` under `(v, omega)` and re-derives attitude
/// from the terrain at the new pose.
pub fn step(
    state: &RobotState,
    v: f64,
    omega: f64,
    dt: f64,
    world: &ElevationMap,
    params: &SimParams,
) -> Result<RobotState, SimError> {
    step_with_contact(state, v, omega, dt, world, params).map(|(s, _)| s)
}

/// Noise standard deviations `(accel, gyro)` for a roughness and speed.
pub fn imu_noise_std(roughness: f64, speed: f64, params: &SimParams) -> (f64, f64) {
    let base = roughness * speed.abs();
    (params.k_noise * base, params.k_noise_gyro * base)
}

pub(crate) fn synth_imu_with_roughness<R: Rng + ?Sized>(
    prev: &RobotState,
    new: &RobotState,
    roughness: f64,
    dt: f64,
    rng: &mut R,
    params: &SimParams,
) -> [f64; 6] {
    let yaw_rate = normalize_angle(new.pose.theta - prev.pose.theta) / dt;
    let ax = (new.v - prev.v) / dt;
    let ay = new.v * yaw_rate;
    let g = params.gravity;
    let (sp, cp) = new.pitch.sin_cos();
    let (sr, cr) = new.roll.sin_cos();
    let (std_a, std_g) = imu_noise_std(roughness, new.v, params);
    let mut noise = [0.0f64; 6];
    for z in &mut noise {
        *z = rng.sample(StandardNormal);
    }
    [
        g * sp + ax + std_a * noise[0],
        g * cp * sr + ay + std_a * noise[1],
        g * cp * cr + std_a * noise[2],
        (new.roll - prev.roll) / dt + std_g * noise[3],
        (new.pitch - prev.pitch) / dt + std_g * noise[4],
        yaw_rate + std_g * noise[5],
    ]
}

/// One IMU sample between consecutive states: specific force (body-frame
/// acceleration plus the gravity reaction projected through roll and pitch)
/// and body rates, with zero-mean Gaussian noise scaled by local roughness
/// and speed. Channels are accel x, y, z then gyro x, y, z.
pub fn synth_imu<R: Rng + ?Sized>(
    prev: &RobotState,
    new: &RobotState,
    world: &ElevationMap,
    dt: f64,
    rng: &mut R,
    params: &SimParams,
) -> [f64; 6] {
    let roughness = terrain_attitude(world, &new.pose, params.footprint_radius).roughness;
    synth_imu_with_roughness(prev, new, roughness, dt, rng, params)
}
