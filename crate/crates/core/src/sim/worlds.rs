//! Procedural test worlds.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioClass;
use crate::grid::Grid;
use crate::terrain::{ElevationMap, Pose2D, TerrainError};

/// Constant height.
pub fn flat(width: usize, height: usize, resolution: f64, z: f64) -> Result<ElevationMap, TerrainError> {
    ElevationMap::from_fn(width, height, resolution, (0.0, 0.0), |_, _| z)
}

/// Plane rising by `slope` per meter along `direction` (rad, world frame).
pub fn ramp(
    width: usize,
    height: usize,
    resolution: f64,
    slope: f64,
    direction: f64,
) -> Result<ElevationMap, TerrainError> {
    let (s, c) = direction.sin_cos();
    ElevationMap::from_fn(width, height, resolution, (0.0, 0.0), |x, y| slope * (x * c + y * s))
}

/// Single Gaussian hill.
pub fn hill(
    width: usize,
    height: usize,
    resolution: f64,
    center: (f64, f64),
    peak: f64,
    sigma: f64,
) -> Result<ElevationMap, TerrainError> {
    ElevationMap::from_fn(width, height, resolution, (0.0, 0.0), |x, y| {
        gaussian(x, y, center, peak, sigma)
    })
}

/// Flat ground with a disc of uniform height noise in `[-amplitude, amplitude]`.
pub fn rough_patch(
    width: usize,
    height: usize,
    resolution: f64,
    center: (f64, f64),
    radius: f64,
    amplitude: f64,
    seed: u64,
) -> Result<ElevationMap, TerrainError> {
    let mut grid = Grid::filled(height, width, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise_disc(&mut grid, resolution, center, radius, amplitude, &mut rng);
    ElevationMap::new(grid, resolution, (0.0, 0.0))
}

fn gaussian(x: f64, y: f64, center: (f64, f64), peak: f64, sigma: f64) -> f64 {
    let d2 = (x - center.0).powi(2) + (y - center.1).powi(2);
    peak * (-d2 / (2.0 * sigma * sigma)).exp()
}

fn add_noise_disc<R: Rng>(
    grid: &mut Grid,
    resolution: f64,
    center: (f64, f64),
    radius: f64,
    amplitude: f64,
    rng: &mut R,
) {
    for r in 0..grid.rows() {
        for c in 0..grid.cols() {
            let (x, y) = (c as f64 * resolution, r as f64 * resolution);
            if (x - center.0).hypot(y - center.1) <= radius {
                let z = grid.get(r, c) + rng.random_range(-amplitude..=amplitude);
                grid.set(r, c, z);
            }
        }
    }
}

fn rescale(grid: &mut Grid, target_gain: f64) {
    let (lo, hi) = (grid.min(), grid.max());
    let k = if hi > lo { target_gain / (hi - lo) } else { 0.0 };
    *grid = grid.map(|z| (z - lo) * k);
}

/// Layout and roughness of generated scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldParams {
    /// Side length of the square world (m).
    pub size: f64,
    pub resolution: f64,
    /// Distance of start and goal from the left and right edges (m).
    pub margin: f64,
    /// Number of background hills.
    pub hills: usize,
    pub rough_patches: usize,
    /// Half-range of the uniform noise inside rough patches (m).
    pub rough_amplitude: f64,
    /// Target elevation gain for the low and medium classes (m).
    pub low_gain: f64,
    pub medium_gain: f64,
    /// Background gain under the high-class mound (m).
    pub high_base_gain: f64,
    pub mound_height: f64,
    pub mound_sigma: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            size: 30.0,
            resolution: 0.25,
            margin: 5.0,
            hills: 5,
            rough_patches: 3,
            rough_amplitude: 0.06,
            low_gain: 0.8,
            medium_gain: 1.7,
            high_base_gain: 1.0,
            mound_height: 3.5,
            mound_sigma: 1.1,
        }
    }
}

/// A generated world with its endpoints.
#[derive(Debug, Clone)]
pub struct GeneratedScenario {
    pub world: ElevationMap,
    pub start: Pose2D,
    pub goal: (f64, f64),
    pub class: ScenarioClass,
}

/// Random rolling terrain with rough patches across the start-goal line.
/// Start and goal sit near opposite edges; the high class adds a steep
/// mound close to the straight route.
pub fn generate(class: ScenarioClass, seed: u64, params: &WorldParams) -> Result<GeneratedScenario, TerrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (params.size / params.resolution).round() as usize;
    let res = params.resolution;
    let size = (n - 1) as f64 * res;
    let span = (size * 0.25, size * 0.75);
    let start_xy = (params.margin, rng.random_range(span.0..span.1));
    let goal = (size - params.margin, rng.random_range(span.0..span.1));
    let heading = (goal.1 - start_xy.1).atan2(goal.0 - start_xy.0);
    let start = Pose2D::new(start_xy.0, start_xy.1, heading);
    let along = |f: f64, lateral: f64| {
        let (s, c) = heading.sin_cos();
        (
            start_xy.0 + f * (goal.0 - start_xy.0) - lateral * s,
            start_xy.1 + f * (goal.1 - start_xy.1) + lateral * c,
        )
    };

    let hills: Vec<((f64, f64), f64, f64)> = (0..params.hills)
        .map(|_| {
            (
                (rng.random_range(0.0..size), rng.random_range(0.0..size)),
                rng.random_range(-1.0..1.0),
                rng.random_range(2.5..4.5),
            )
        })
        .collect();
    let mut grid = Grid::from_fn(n, n, |r, c| {
        let (x, y) = (c as f64 * res, r as f64 * res);
        hills.iter().map(|&(ctr, a, s)| gaussian(x, y, ctr, a, s)).sum()
    })?;
    let base_gain = match class {
        ScenarioClass::Low => params.low_gain,
        ScenarioClass::Medium => params.medium_gain,
        ScenarioClass::High => params.high_base_gain,
    };
    rescale(&mut grid, base_gain);

    let k = params.rough_patches;
    for i in 0..k {
        let f = (i as f64 + 1.0) / (k as f64 + 1.0) + rng.random_range(-0.08..0.08);
        let center = along(f, rng.random_range(-1.5..1.5));
        let radius = rng.random_range(1.5..2.5);
        add_noise_disc(&mut grid, res, center, radius, params.rough_amplitude, &mut rng);
    }
    rescale(&mut grid, base_gain);

    if class == ScenarioClass::High {
        let center = along(rng.random_range(0.4..0.6), rng.random_range(-0.8..0.8));
        let (h, s) = (params.mound_height, params.mound_sigma);
        grid = Grid::from_fn(n, n, |r, c| {
            grid.get(r, c) + gaussian(c as f64 * res, r as f64 * res, center, h, s)
        })?;
    }

    let world = ElevationMap::new(grid, res, (0.0, 0.0))?;
    debug_assert!(class.admits(world.max_elevation_gain()));
    Ok(GeneratedScenario {
        world,
        start,
        goal,
        class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_worlds_fit_their_class() {
        let p = WorldParams::default();
        for class in [ScenarioClass::Low, ScenarioClass::Medium, ScenarioClass::High] {
            for seed in 0..5 {
                let g = generate(class, seed, &p).unwrap();
                let gain = g.world.max_elevation_gain();
                assert!(class.admits(gain), "{class} seed {seed}: {gain}");
                assert!(g.world.contains(g.start.x, g.start.y));
                assert!(g.world.contains(g.goal.0, g.goal.1));
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let p = WorldParams::default();
        let a = generate(ScenarioClass::Medium, 7, &p).unwrap();
        let b = generate(ScenarioClass::Medium, 7, &p).unwrap();
        assert_eq!(a.world, b.world);
        assert_eq!(a.goal, b.goal);
        let c = generate(ScenarioClass::Medium, 8, &p).unwrap();
        assert_ne!(a.world, c.world);
    }

    #[test]
    fn simple_worlds() {
        let f = flat(10, 10, 0.5, 2.0).unwrap();
        assert_eq!(f.max_elevation_gain(), 0.0);
        let r = ramp(10, 10, 1.0, 0.2, 0.0).unwrap();
        assert!((r.height_at(5.0, 3.0) - 1.0).abs() < 1e-12);
        let h = hill(21, 21, 0.5, (5.0, 5.0), 2.0, 1.0).unwrap();
        assert!((h.max_elevation_gain() - 2.0).abs() < 1e-3);
        let p = rough_patch(20, 20, 0.25, (2.5, 2.5), 1.0, 0.05, 1).unwrap();
        assert!(p.max_elevation_gain() > 0.0 && p.max_elevation_gain() <= 0.1);
        assert_eq!(p.height_at(0.0, 0.0), 0.0);
    }
}
