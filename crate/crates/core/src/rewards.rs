//! Navigation reward terms and the PCA vibration measure.
//!
//! Terms: goal distance and heading, attitude stability, decayed heading
//! elevation gradients, and IMU vibration. The weighted total sums all five.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::terrain::normalize_angle;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("missing reward component `{0}`")]
    MissingComponent(RewardTerm),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalObservation {
    pub d_goal: f64,
    pub alpha_goal: f64,
}

impl GoalObservation {
    pub fn new(d_goal: f64, alpha_goal: f64) -> Result<Self, RewardError> {
        if !(d_goal >= 0.0 && d_goal.is_finite()) || !alpha_goal.is_finite() {
            return Err(RewardError::Argument(format!(
                "goal observation needs finite d_goal >= 0 and finite alpha (got {d_goal}, {alpha_goal})"
            )));
        }
        Ok(Self {
            d_goal,
            alpha_goal: normalize_angle(alpha_goal),
        })
    }
}

/// Roll and pitch in radians. Valid while both stay strictly inside `bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeObservation {
    pub roll: f64,
    pub pitch: f64,
}

impl AttitudeObservation {
    /// Validates against the geometric limit `pi / 2`.
    pub fn new(roll: f64, pitch: f64) -> Result<Self, RewardError> {
        Self::within(roll, pitch, std::f64::consts::FRAC_PI_2)
    }

    /// Validates against a tighter flip bound.
    pub fn within(roll: f64, pitch: f64, bound: f64) -> Result<Self, RewardError> {
        if roll.abs() < bound && pitch.abs() < bound {
            Ok(Self { roll, pitch })
        } else {
            Err(RewardError::Argument(format!(
                "attitude (roll {roll}, pitch {pitch}) exceeds flip bound {bound}"
            )))
        }
    }
}

/// `T x 6` IMU samples, oldest first: accel x, y, z (m/s^2), gyro x, y, z (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct ImuWindow {
    samples: Vec<[f64; 6]>,
}

impl ImuWindow {
    pub fn new(samples: Vec<[f64; 6]>) -> Result<Self, RewardError> {
        if samples.len() < 2 {
            return Err(RewardError::Argument(format!(
                "IMU window needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(RewardError::Argument("IMU window contains non-finite entries".into()));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[[f64; 6]] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// 6x6 sample covariance (divisor `T - 1`).
    pub fn covariance(&self) -> [[f64; 6]; 6] {
        let t = self.samples.len() as f64;
        // shift by the first sample so constant channels stay exactly zero
        let origin = self.samples[0];
        let mut mean = [0.0; 6];
        for s in &self.samples {
            for k in 0..6 {
                mean[k] += s[k] - origin[k];
            }
        }
        for m in &mut mean {
            *m /= t;
        }
        let mut cov = [[0.0; 6]; 6];
        for s in &self.samples {
            let d: [f64; 6] = std::array::from_fn(|k| (s[k] - origin[k]) - mean[k]);
            for i in 0..6 {
                for j in i..6 {
                    cov[i][j] += d[i] * d[j];
                }
            }
        }
        for i in 0..6 {
            for j in i..6 {
                cov[i][j] /= t - 1.0;
                cov[j][i] = cov[i][j];
            }
        }
        cov
    }
}

/// Standard deviations of the two leading principal components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VibrationMeasure {
    pub sigma_pc1: f64,
    pub sigma_pc2: f64,
    pub magnitude: f64,
}

impl VibrationMeasure {
    pub const ZERO: VibrationMeasure = VibrationMeasure {
        sigma_pc1: 0.0,
        sigma_pc2: 0.0,
        magnitude: 0.0,
    };

    pub fn new(sigma_pc1: f64, sigma_pc2: f64) -> Result<Self, RewardError> {
        if !(sigma_pc1 >= sigma_pc2 && sigma_pc2 >= 0.0 && sigma_pc1.is_finite()) {
            return Err(RewardError::Argument(format!(
                "need sigma_pc1 >= sigma_pc2 >= 0, got ({sigma_pc1}, {sigma_pc2})"
            )));
        }
        Ok(Self {
            sigma_pc1,
            sigma_pc2,
            magnitude: sigma_pc1.hypot(sigma_pc2),
        })
    }
}

/// Eigenvalues of a symmetric 6x6 matrix by cyclic Jacobi rotations, sorted
/// in descending order.
pub fn symmetric_eigenvalues(m: &[[f64; 6]; 6]) -> [f64; 6] {
    let mut a = *m;
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..6 {
            diag += a[i][i] * a[i][i];
            for j in (i + 1)..6 {
                off += a[i][j] * a[i][j];
            }
        }
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for p in 0..6 {
            for q in (p + 1)..6 {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..6 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..6 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    let mut ev: [f64; 6] = std::array::from_fn(|i| a[i][i]);
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// PCA vibration: square roots of the two largest covariance eigenvalues.
pub fn pca_sigma(window: &ImuWindow) -> VibrationMeasure {
    let ev = symmetric_eigenvalues(&window.covariance());
    let s1 = ev[0].max(0.0).sqrt();
    let s2 = ev[1].max(0.0).sqrt().min(s1);
    VibrationMeasure {
        sigma_pc1: s1,
        sigma_pc2: s2,
        magnitude: s1.hypot(s2),
    }
}

/// `(-d_goal, -|alpha_goal|)`.
pub fn r_goal(obs: &GoalObservation) -> (f64, f64) {
    (-obs.d_goal, -obs.alpha_goal.abs())
}

/// `-(|tanh roll| + |tanh pitch|)`.
pub fn r_stable(att: &AttitudeObservation) -> f64 {
    -(att.roll.tanh().abs() + att.pitch.tanh().abs())
}

/// `-sum_i grad_i * exp(-i * k_elev)` with `i` starting at 1 nearest the robot.
pub fn r_elev(grad: &[f64], k_elev: f64) -> Result<f64, RewardError> {
    if grad.is_empty() {
        return Err(RewardError::Argument("elevation gradient sequence is empty".into()));
    }
    if !(k_elev > 0.0) {
        return Err(RewardError::Argument(format!("k_elev must be positive, got {k_elev}")));
    }
    let sum: f64 = grad
        .iter()
        .enumerate()
        .map(|(i, g)| g * (-((i + 1) as f64) * k_elev).exp())
        .sum();
    Ok(-sum)
}

pub fn r_vibration(measure: &VibrationMeasure) -> f64 {
    -measure.magnitude
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardTerm {
    Dist,
    Head,
    Stable,
    Elev,
    Vibr,
}

impl RewardTerm {
    pub const ALL: [RewardTerm; 5] = [
        RewardTerm::Dist,
        RewardTerm::Head,
        RewardTerm::Stable,
        RewardTerm::Elev,
        RewardTerm::Vibr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewardTerm::Dist => "dist",
            RewardTerm::Head => "head",
            RewardTerm::Stable => "stable",
            RewardTerm::Elev => "elev",
            RewardTerm::Vibr => "vibr",
        }
    }
}

impl fmt::Display for RewardTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub beta_dist: f64,
    pub beta_head: f64,
    pub beta_stable: f64,
    pub beta_elev: f64,
    pub beta_vibr: f64,
    pub k_elev: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            beta_dist: 1.0,
            beta_head: 0.5,
            beta_stable: 1.0,
            beta_elev: 1.0,
            beta_vibr: 1.0,
            k_elev: 0.5,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), RewardError> {
        let betas = [
            self.beta_dist,
            self.beta_head,
            self.beta_stable,
            self.beta_elev,
            self.beta_vibr,
        ];
        if betas.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(RewardError::Argument("reward weights must be finite and >= 0".into()));
        }
        if !(self.k_elev > 0.0 && self.k_elev.is_finite()) {
            return Err(RewardError::Argument("k_elev must be positive".into()));
        }
        Ok(())
    }

    pub fn beta(&self, term: RewardTerm) -> f64 {
        match term {
            RewardTerm::Dist => self.beta_dist,
            RewardTerm::Head => self.beta_head,
            RewardTerm::Stable => self.beta_stable,
            RewardTerm::Elev => self.beta_elev,
            RewardTerm::Vibr => self.beta_vibr,
        }
    }
}

/// Weighted sum over all five named components.
pub fn r_total(
    components: &BTreeMap<RewardTerm, f64>,
    weights: &RewardWeights,
) -> Result<f64, RewardError> {
    let mut total = 0.0;
    for term in RewardTerm::ALL {
        let value = components
            .get(&term)
            .ok_or(RewardError::MissingComponent(term))?;
        total += weights.beta(term) * value;
    }
    Ok(total)
}

/// One step's reward components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardComponents {
    pub dist: f64,
    pub head: f64,
    pub stable: f64,
    pub elev: f64,
    pub vibr: f64,
}

impl RewardComponents {
    /// Evaluates every term from raw observations.
    pub fn evaluate(
        goal: &GoalObservation,
        attitude: &AttitudeObservation,
        heading_gradients: &[f64],
        vibration: &VibrationMeasure,
        weights: &RewardWeights,
    ) -> Result<Self, RewardError> {
        let (dist, head) = r_goal(goal);
        Ok(Self {
            dist,
            head,
            stable: r_stable(attitude),
            elev: r_elev(heading_gradients, weights.k_elev)?,
            vibr: r_vibration(vibration),
        })
    }

    pub fn to_map(&self) -> BTreeMap<RewardTerm, f64> {
        BTreeMap::from([
            (RewardTerm::Dist, self.dist),
            (RewardTerm::Head, self.head),
            (RewardTerm::Stable, self.stable),
            (RewardTerm::Elev, self.elev),
            (RewardTerm::Vibr, self.vibr),
        ])
    }

    pub fn total(&self, weights: &RewardWeights) -> f64 {
        r_total(&self.to_map(), weights).expect("all components present")
    }
}

#[derive(Debug, Serialize)]
struct RewardRow {
    step: usize,
    r_dist: f64,
    r_head: f64,
    r_stable: f64,
    r_elev: f64,
    r_vibr: f64,
    r_total: f64,
}

/// Per-step rewards over an episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RewardTrace {
    pub weights: RewardWeights,
    pub steps: Vec<RewardComponents>,
}

impl RewardTrace {
    pub fn new(weights: RewardWeights) -> Self {
        Self {
            weights,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, c: RewardComponents) {
        self.steps.push(c);
    }

    /// Sum of the weighted per-step totals.
    pub fn episode_return(&self) -> f64 {
        self.steps.iter().map(|c| c.total(&self.weights)).sum()
    }

    /// Component-wise sums.
    pub fn aggregate(&self) -> RewardComponents {
        self.steps.iter().fold(RewardComponents::default(), |acc, c| RewardComponents {
            dist: acc.dist + c.dist,
            head: acc.head + c.head,
            stable: acc.stable + c.stable,
            elev: acc.elev + c.elev,
            vibr: acc.vibr + c.vibr,
        })
    }

    /// CSV with columns `step, r_dist, r_head, r_stable, r_elev, r_vibr, r_total`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (step, c) in self.steps.iter().enumerate() {
            w.serialize(RewardRow {
                step,
                r_dist: c.dist,
                r_head: c.head,
                r_stable: c.stable,
                r_elev: c.elev,
                r_vibr: c.vibr,
                r_total: c.total(&self.weights),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    #[allow(clippy::approx_constant)] // rounded documented value
    fn goal_reward_examples() {
        assert_eq!(r_goal(&GoalObservation::new(0.0, 0.0).unwrap()), (-0.0, -0.0));
        let (d, h) = r_goal(&GoalObservation::new(3.5, FRAC_PI_2).unwrap());
        assert_eq!(d, -3.5);
        assert_abs_diff_eq!(h, -1.5708, epsilon = 5e-5);
        let (d2, h2) = r_goal(&GoalObservation::new(3.5, -FRAC_PI_2).unwrap());
        assert_eq!((d2, h2), (d, h));
        assert!(GoalObservation::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn stability_reward_examples() {
        assert_eq!(r_stable(&AttitudeObservation::new(0.0, 0.0).unwrap()), -0.0);
        let r = r_stable(&AttitudeObservation::new(0.5, 0.5).unwrap());
        assert_abs_diff_eq!(r, -0.92423, epsilon = 5e-6);
        assert_eq!(r_stable(&AttitudeObservation::new(-0.5, 0.5).unwrap()), r);
        assert!(AttitudeObservation::new(1.6, 0.0).is_err());
        assert!(AttitudeObservation::within(1.1, 0.0, std::f64::consts::FRAC_PI_3).is_err());
    }

    #[test]
    fn elevation_reward_examples() {
        assert_eq!(r_elev(&[0.0, 0.0, 0.0], 1.0).unwrap(), -0.0);
        assert_abs_diff_eq!(r_elev(&[1.0], 1.0).unwrap(), -0.36788, epsilon = 5e-6);
        assert_abs_diff_eq!(r_elev(&[0.5, 0.5], 1.0).unwrap(), -0.25161, epsilon = 5e-6);
        assert!(r_elev(&[], 1.0).is_err());
        assert!(r_elev(&[1.0], 0.0).is_err());
    }

    #[test]
    fn vibration_reward_examples() {
        assert_eq!(r_vibration(&VibrationMeasure::ZERO), -0.0);
        assert_abs_diff_eq!(r_vibration(&VibrationMeasure::new(0.4, 0.3).unwrap()), -0.5, epsilon = 1e-15);
        assert_eq!(r_vibration(&VibrationMeasure::new(0.3, 0.0).unwrap()), -0.3);
        assert!(VibrationMeasure::new(0.2, 0.3).is_err());
    }

    #[test]
    fn total_examples() {
        let w = RewardWeights::default();
        let zero = RewardComponents::default();
        assert_eq!(zero.total(&w), 0.0);

        let ones = RewardWeights {
            beta_dist: 1.0,
            beta_head: 1.0,
            beta_stable: 1.0,
            beta_elev: 1.0,
            beta_vibr: 1.0,
            k_elev: 1.0,
        };
        let c = RewardComponents {
            dist: -1.0,
            head: -0.5,
            stable: -0.2,
            elev: -0.1,
            vibr: -0.3,
        };
        assert_abs_diff_eq!(c.total(&ones), -2.1, epsilon = 1e-12);

        let only_dist = RewardWeights {
            beta_dist: 2.0,
            beta_head: 0.0,
            beta_stable: 0.0,
            beta_elev: 0.0,
            beta_vibr: 0.0,
            k_elev: 1.0,
        };
        let c = RewardComponents {
            dist: -1.5,
            ..Default::default()
        };
        assert_eq!(c.total(&only_dist), -3.0);

        let mut partial = c.to_map();
        partial.remove(&RewardTerm::Elev);
        assert_eq!(
            r_total(&partial, &ones),
            Err(RewardError::MissingComponent(RewardTerm::Elev))
        );
    }

    #[test]
    fn pca_constant_and_single_column() {
        let w = ImuWindow::new(vec![[1.0, 2.0, 9.81, 0.0, 0.1, 0.0]; 10]).unwrap();
        assert_eq!(pca_sigma(&w), VibrationMeasure::ZERO);

        // column 1 alternates +-a around 4, T = 4: sample variance 4a^2/3
        let a = 0.3 * (3.0f64).sqrt() / 2.0;
        let rows: Vec<[f64; 6]> = (0..4)
            .map(|i| {
                let s = if i % 2 == 0 { a } else { -a };
                [0.0, 4.0 + s, 9.81, 0.0, 0.0, 0.0]
            })
            .collect();
        let m = pca_sigma(&ImuWindow::new(rows).unwrap());
        assert_abs_diff_eq!(m.sigma_pc1, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(m.sigma_pc2, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(m.magnitude, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn pca_two_orthogonal_columns() {
        // +-/+- patterns with zero cross-covariance; stds 0.4 and 0.3
        let a = 0.4 * (3.0f64).sqrt() / 2.0;
        let b = 0.3 * (3.0f64).sqrt() / 2.0;
        let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
        let rows: Vec<[f64; 6]> = signs
            .iter()
            .map(|(p, q)| [p * a, 0.0, 9.81, q * b, 0.0, 0.0])
            .collect();
        let m = pca_sigma(&ImuWindow::new(rows).unwrap());
        assert_abs_diff_eq!(m.sigma_pc1, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(m.sigma_pc2, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(m.magnitude, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn imu_window_validation() {
        assert!(ImuWindow::new(vec![[0.0; 6]]).is_err());
        assert!(ImuWindow::new(vec![[0.0; 6], [f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn trace_csv_has_expected_columns() {
        let mut t = RewardTrace::new(RewardWeights::default());
        t.push(RewardComponents {
            dist: -1.0,
            ..Default::default()
        });
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,r_dist,r_head,r_stable,r_elev,r_vibr,r_total\n0,-1.0,"));
        assert_eq!(t.episode_return(), -1.0);
        assert_eq!(t.aggregate().dist, -1.0);
    }
}
