//! Independent reference implementations and random fixtures shared by the
//! integration suites.
#![allow(dead_code)]

use nalgebra::{Matrix6, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use terranav::grid::Grid;
use terranav::perception::CostMap;
use terranav::planner::{
    admissible, candidate_grid, evaluate_terms, recovery_command, search_box, PlanStatus,
    PlannerLimits, RecoveryReason, RobotState,
};
use terranav::rewards::VibrationMeasure;
use terranav::terrain::Pose2D;

// ---------- rewards ----------

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `tanh` through `expm1`, accurate for small and large arguments alike.
pub fn tanh_ref(x: f64) -> f64 {
    if x.abs() > 20.0 {
        return x.signum();
    }
    let e = (2.0 * x.abs()).exp_m1();
    (e / (e + 2.0)).copysign(x)
}

/// Wraps into `(-pi, pi]` by exact remainder.
pub fn wrap_ref(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut r = a % tau;
    if r > std::f64::consts::PI {
        r -= tau;
    } else if r <= -std::f64::consts::PI {
        r += tau;
    }
    r
}

pub fn r_goal_ref(d: f64, alpha: f64) -> (f64, f64) {
    (-d, -wrap_ref(alpha).abs())
}

pub fn r_stable_ref(roll: f64, pitch: f64) -> f64 {
    -compensated_sum([tanh_ref(roll).abs(), tanh_ref(pitch).abs()])
}

pub fn r_elev_ref(grad: &[f64], k: f64) -> f64 {
    // weights by repeated multiplication with exp(-k)
    let decay = (-k).exp();
    let mut w = 1.0;
    -compensated_sum(grad.iter().map(|g| {
        w *= decay;
        g * w
    }))
}

pub fn r_vibration_ref(s1: f64, s2: f64) -> f64 {
    let m = s1.abs().max(s2.abs());
    if m == 0.0 {
        return 0.0;
    }
    -(m * ((s1 / m).powi(2) + (s2 / m).powi(2)).sqrt())
}

/// Square roots of the two largest eigenvalues of the two-pass sample
/// covariance, via nalgebra's symmetric eigen-solver.
pub fn pca_sigma_ref(samples: &[[f64; 6]]) -> (f64, f64) {
    let t = samples.len() as f64;
    let mean: [f64; 6] = std::array::from_fn(|k| compensated_sum(samples.iter().map(|s| s[k])) / t);
    let cov = Matrix6::from_fn(|i, j| {
        compensated_sum(samples.iter().map(|s| (s[i] - mean[i]) * (s[j] - mean[j]))) / (t - 1.0)
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    (ev[0].max(0.0).sqrt(), ev[1].max(0.0).sqrt())
}

// ---------- shortest path ----------

/// Label-correcting (Bellman-Ford style) search over the 8-connected grid
/// with the same edge weights as the planner: entering `v` from `u` costs
/// `(cost(v) + step_cost) * |u - v|`. Returns the distance table.
pub fn shortest_costs_ref(costmap: &CostMap, limits: &PlannerLimits) -> Vec<f64> {
    let (rows, cols) = (costmap.rows(), costmap.cols());
    let (cr, cc) = costmap.center();
    let blocked = |r: usize, c: usize| limits.obstacle_masking && costmap.get(r, c) >= limits.c_obs;
    let mut dist = vec![f64::INFINITY; rows * cols];
    dist[cr * cols + cc] = 0.0;
    loop {
        let mut changed = false;
        for r in 0..rows {
            for c in 0..cols {
                let du = dist[r * cols + c];
                if !du.is_finite() {
                    continue;
                }
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (nr, nc) = (r as isize + dr, c as isize + dc);
                        if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                            continue;
                        }
                        let (nr, nc) = (nr as usize, nc as usize);
                        if blocked(nr, nc) {
                            continue;
                        }
                        let len = if dr != 0 && dc != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                        let nd = du + (costmap.get(nr, nc) + limits.step_cost) * len;
                        if nd < dist[nr * cols + nc] {
                            dist[nr * cols + nc] = nd;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

// ---------- velocity planner ----------

/// Exhaustive argmax over the planner's candidate grid: score every
/// admissible sample, rank by objective, then smaller `|omega|`, smaller `v`,
/// earlier grid position. Returns `(v, omega, status)`.
pub fn plan_velocity_ref(
    state: &RobotState,
    costmap: &CostMap,
    waypoint: (f64, f64),
    vib: &VibrationMeasure,
    limits: &PlannerLimits,
) -> (f64, f64, PlanStatus) {
    let (sb, ..) = search_box(state, vib, limits);
    let recover = |reason| {
        let (v, w) = recovery_command(state, waypoint, limits);
        (v, w, PlanStatus::Recovery(reason))
    };
    if sb.is_empty() {
        return recover(RecoveryReason::EmptySearchSpace);
    }
    let cands: Vec<(usize, f64, f64)> = candidate_grid(&sb, limits.n_v, limits.n_omega)
        .into_iter()
        .enumerate()
        .filter(|&(_, (v, w))| admissible(costmap, v, w, limits))
        .map(|(i, (v, w))| (i, v, w))
        .collect();
    if cands.is_empty() {
        return recover(RecoveryReason::NoAdmissibleCandidate);
    }
    let terms: Vec<[f64; 3]> = cands
        .iter()
        .map(|&(_, v, w)| {
            let t = evaluate_terms(state, costmap, waypoint, v, w, limits);
            [t.head, t.dist, t.vel]
        })
        .collect();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for t in &terms {
        for k in 0..3 {
            lo[k] = lo[k].min(t[k]);
            hi[k] = hi[k].max(t[k]);
        }
    }
    let norm = |k: usize, x: f64| if hi[k] > lo[k] { (x - lo[k]) / (hi[k] - lo[k]) } else { 1.0 };
    let mut scored: Vec<(f64, usize, f64, f64)> = cands
        .iter()
        .zip(&terms)
        .map(|(&(i, v, w), t)| {
            let g = limits.alpha * norm(0, t[0]) + limits.beta * norm(1, t[1]) + limits.gamma * norm(2, t[2]);
            (g, i, v, w)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.3.abs().total_cmp(&b.3.abs()))
            .then(a.2.total_cmp(&b.2))
            .then(a.1.cmp(&b.1))
    });
    let (_, _, v, w) = scored[0];
    (v, w, PlanStatus::Nominal)
}

// ---------- fixtures ----------

/// Random cost-map: low background costs plus a few obstacle discs.
pub fn random_costmap(rng: &mut ChaCha8Rng, n: usize, resolution: f64) -> CostMap {
    let blobs: Vec<(f64, f64, f64)> = (0..rng.random_range(0..6))
        .map(|_| {
            (
                rng.random_range(0.0..n as f64),
                rng.random_range(0.0..n as f64),
                rng.random_range(1.0..4.0),
            )
        })
        .collect();
    let mid = n / 2;
    let grid = Grid::from_fn(n, n, |r, c| {
        let hit = blobs
            .iter()
            .any(|&(br, bc, rad)| (r as f64 - br).hypot(c as f64 - bc) <= rad);
        let base = rng.random_range(0.0..0.5);
        if (r, c) == (mid, mid) {
            0.0
        } else if hit {
            1.0
        } else {
            base
        }
    })
    .unwrap();
    CostMap::new(grid, resolution)
}

/// Fully random 40x40 cost-map for path searches.
pub fn random_path_costmap(rng: &mut ChaCha8Rng) -> CostMap {
    let obstacle_rate = rng.random_range(0.0..0.3);
    let mut grid = Grid::from_fn(40, 40, |_, _| {
        if rng.random_bool(obstacle_rate) {
            1.0
        } else {
            rng.random_range(0.0..0.9)
        }
    })
    .unwrap();
    grid.set(20, 20, 0.0);
    CostMap::new(grid, 0.25)
}

pub fn random_state(rng: &mut ChaCha8Rng, limits: &PlannerLimits) -> RobotState {
    let tilt = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.3) {
            0.0
        } else {
            rng.random_range(-0.9..0.9)
        }
    };
    RobotState {
        pose: Pose2D::new(0.0, 0.0, rng.random_range(-3.0..3.0)),
        roll: tilt(rng),
        pitch: tilt(rng),
        v: rng.random_range(0.0..=limits.v_abs_max),
        omega: rng.random_range(-limits.omega_abs_max..=limits.omega_abs_max),
    }
}

pub fn random_vibration(rng: &mut ChaCha8Rng) -> VibrationMeasure {
    if rng.random_bool(0.3) {
        return VibrationMeasure::ZERO;
    }
    let a: f64 = rng.random_range(0.0..4.0);
    let b: f64 = rng.random_range(0.0..4.0);
    VibrationMeasure::new(a.max(b), a.min(b)).unwrap()
}

/// Random planner limits around the defaults.
pub fn random_limits(rng: &mut ChaCha8Rng) -> PlannerLimits {
    PlannerLimits {
        lambda_el: rng.random_range(0.05..1.0),
        lambda_vib: rng.random_range(0.01..0.5),
        sigma_act: rng.random_range(0.05..2.0),
        n_v: rng.random_range(3..12),
        n_omega: rng.random_range(3..22),
        alpha: rng.random_range(0.0..2.0),
        beta: rng.random_range(0.0..2.0),
        gamma: rng.random_range(0.0..2.0),
        attitude_constraint: rng.random_bool(0.8),
        vibration_constraint: rng.random_bool(0.8),
        ..PlannerLimits::default()
    }
}

pub fn waypoint_near(rng: &mut ChaCha8Rng, pose: &Pose2D) -> (f64, f64) {
    let r = rng.random_range(0.5..5.0);
    let a = rng.random_range(-3.1..3.1);
    pose.to_world(r * f64::cos(a), r * f64::sin(a))
}

// ---------- terrain ----------

/// Analytic attitude on the plane `h = a x + b y` for a robot at heading `th`:
/// the body axes follow the plane, so the world up vector expressed in the
/// body frame gives `pitch = asin(up . x_b)` and `roll = atan2(up . y_b, up . z_b)`.
pub fn plane_attitude(a: f64, b: f64, th: f64) -> (f64, f64) {
    let (s, c) = th.sin_cos();
    let sf = a * c + b * s;
    let xb = [c, s, sf];
    let nx = (1.0 + sf * sf).sqrt();
    let xb = xb.map(|v| v / nx);
    let nz = (1.0 + a * a + b * b).sqrt();
    let zb = [-a / nz, -b / nz, 1.0 / nz];
    let yb = [
        zb[1] * xb[2] - zb[2] * xb[1],
        zb[2] * xb[0] - zb[0] * xb[2],
        zb[0] * xb[1] - zb[1] * xb[0],
    ];
    (yb[2].atan2(zb[2]), xb[2].asin())
}
