use serde::{Deserialize, Serialize};

use super::{EpisodeLog, SimError, TerminalStatus};

/// Batch summary over episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub episodes: usize,
    pub successes: usize,
    /// Fraction of episodes ending in success.
    pub success_rate: f64,
    /// Mean vibration magnitude over all logged steps.
    pub avg_vibration: f64,
    /// Total distance over total elapsed time (m/s).
    pub avg_speed: f64,
    /// Mean of path length over straight-line reference, successful episodes
    /// only; absent when none succeeded.
    pub norm_traj_length: Option<f64>,
}

pub fn compute_metrics(logs: &[EpisodeLog]) -> Result<Metrics, SimError> {
    if logs.is_empty() {
        return Err(SimError::NoEpisodes);
    }
    let successes: Vec<&EpisodeLog> = logs
        .iter()
        .filter(|l| l.status == TerminalStatus::Success)
        .collect();
    let (vib_sum, vib_n) = logs
        .iter()
        .flat_map(|l| l.steps.iter())
        .fold((0.0, 0usize), |(s, n), r| (s + r.vibration.magnitude, n + 1));
    let distance: f64 = logs.iter().map(EpisodeLog::path_length).sum();
    let time: f64 = logs.iter().map(EpisodeLog::elapsed).sum();
    let norm = (!successes.is_empty()).then(|| {
        successes
            .iter()
            .map(|l| l.path_length() / l.reference_length)
            .sum::<f64>()
            / successes.len() as f64
    });
    Ok(Metrics {
        episodes: logs.len(),
        successes: successes.len(),
        success_rate: successes.len() as f64 / logs.len() as f64,
        avg_vibration: if vib_n > 0 { vib_sum / vib_n as f64 } else { 0.0 },
        avg_speed: if time > 0.0 { distance / time } else { 0.0 },
        norm_traj_length: norm,
    })
}
