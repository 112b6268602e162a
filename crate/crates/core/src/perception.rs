//! Attention providers and navigation cost-map composition.
//!
//! The cost-map is the element-wise product of an attention map with the
//! window's elevation channel. The elevation channel is `|relative height|`
//! min-max rescaled to `[0, 1]` over the window, so costs stay nonnegative and
//! flat windows cost nothing.

use std::f64::consts::FRAC_PI_4;
use std::io::{self, Write};

use thiserror::Error;

use crate::grid::{parse_ascii_grid, write_pgm, Grid, GridError, PgmScale};
use crate::terrain::{gradient, normalize_angle, window_center, ElevationMap};

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("attention snapshot parse error: {0}")]
    Parse(#[from] GridError),
    #[error("attention value {value} at row {row}, col {col} is outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("shape mismatch: attention is {attention:?}, elevation window is {window:?}")]
    Dimension {
        attention: (usize, usize),
        window: (usize, usize),
    },
}

/// Attention weights in `[0, 1]`, one per window cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap(Grid);

impl AttentionMap {
    pub fn new(grid: Grid) -> Result<Self, PerceptionError> {
        for r in 0..grid.rows() {
            for c in 0..grid.cols() {
                let value = grid.get(r, c);
                if !(0.0..=1.0).contains(&value) {
                    return Err(PerceptionError::OutOfRange {
                        row: r,
                        col: c,
                        value,
                    });
                }
            }
        }
        Ok(Self(grid))
    }

    pub fn uniform(rows: usize, cols: usize, value: f64) -> Result<Self, PerceptionError> {
        Self::new(Grid::filled(rows, cols, value)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0.get(row, col)
    }

    pub fn write_pgm<W: Write>(&self, out: W) -> io::Result<()> {
        write_pgm(&self.0, PgmScale::ZeroToMax, out)
    }
}

/// Nonnegative navigation costs on the window grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMap {
    grid: Grid,
    resolution: f64,
}

impl CostMap {
    /// Wraps a grid of costs. Panics on negative or non-finite values.
    pub fn new(grid: Grid, resolution: f64) -> Self {
        assert!(
            grid.values().iter().all(|v| v.is_finite() && *v >= 0.0),
            "cost-map values must be finite and nonnegative"
        );
        assert!(resolution > 0.0);
        Self { grid, resolution }
    }

    pub fn zeros(n: usize, resolution: f64) -> Self {
        Self::new(Grid::filled(n, n, 0.0).expect("n >= 1"), resolution)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn rows(&self) -> usize {
        self.grid.rows()
    }

    pub fn cols(&self) -> usize {
        self.grid.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.grid.get(row, col)
    }

    /// Robot cell.
    pub fn center(&self) -> (usize, usize) {
        (window_center(self.rows()), window_center(self.cols()))
    }

    /// Cost of the cell nearest to a robot-frame point `(forward, right)` in
    /// meters, or `None` when the point falls outside the window.
    pub fn cost_at_local(&self, forward: f64, right: f64) -> Option<f64> {
        let (cr, cc) = self.center();
        let r = (cr as f64 + forward / self.resolution).round();
        let c = (cc as f64 + right / self.resolution).round();
        if r < 0.0 || c < 0.0 || r >= self.rows() as f64 || c >= self.cols() as f64 {
            None
        } else {
            Some(self.grid.get(r as usize, c as usize))
        }
    }

    /// 8-bit PGM; 255 is the largest cost in the map.
    pub fn write_pgm<W: Write>(&self, out: W) -> io::Result<()> {
        write_pgm(&self.grid, PgmScale::ZeroToMax, out)
    }
}

/// Produces attention for an elevation window given the goal bearing in the
/// robot frame (radians, left positive).
pub trait AttentionProvider: Send + Sync {
    fn attention(
        &self,
        window: &ElevationMap,
        goal_direction: f64,
    ) -> Result<AttentionMap, PerceptionError>;
}

/// Gradient-magnitude attention with Gaussian emphasis around the goal bearing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceAttention {
    pub sigma_dir: f64,
}

impl Default for ReferenceAttention {
    fn default() -> Self {
        Self {
            sigma_dir: FRAC_PI_4,
        }
    }
}

impl AttentionProvider for ReferenceAttention {
    fn attention(
        &self,
        window: &ElevationMap,
        goal_direction: f64,
    ) -> Result<AttentionMap, PerceptionError> {
        Ok(reference_attention_with(window, goal_direction, self.sigma_dir))
    }
}

/// Constant attention; all ones reproduces the bare elevation channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformAttention {
    pub value: f64,
}

impl Default for UniformAttention {
    fn default() -> Self {
        Self { value: 1.0 }
    }
}

impl AttentionProvider for UniformAttention {
    fn attention(&self, window: &ElevationMap, _: f64) -> Result<AttentionMap, PerceptionError> {
        AttentionMap::uniform(window.height(), window.width(), self.value)
    }
}

/// Replays a fixed attention map, e.g. one exported from a trained network.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotAttention {
    pub map: AttentionMap,
}

impl AttentionProvider for SnapshotAttention {
    fn attention(&self, window: &ElevationMap, _: f64) -> Result<AttentionMap, PerceptionError> {
        let shape = (window.height(), window.width());
        if self.map.shape() != shape {
            return Err(PerceptionError::Dimension {
                attention: self.map.shape(),
                window: shape,
            });
        }
        Ok(self.map.clone())
    }
}

/// Bearing of window cell `(row, col)` from the robot cell, left positive.
/// The robot cell itself reports `None`.
pub fn cell_bearing(rows: usize, cols: usize, row: usize, col: usize) -> Option<f64> {
    let forward = row as f64 - window_center(rows) as f64;
    let right = col as f64 - window_center(cols) as f64;
    if forward == 0.0 && right == 0.0 {
        None
    } else {
        Some((-right).atan2(forward))
    }
}

/// Reference attention with the default `sigma_dir = pi / 4`.
pub fn reference_attention(window: &ElevationMap, goal_direction: f64) -> AttentionMap {
    reference_attention_with(window, goal_direction, FRAC_PI_4)
}

/// `A = clamp01(g / g_max * exp(-delta^2 / (2 sigma_dir^2)))` where `g` is the
/// gradient magnitude and `delta` the angle between the cell bearing and the
/// goal direction. The robot cell gets full directional weight.
pub fn reference_attention_with(
    window: &ElevationMap,
    goal_direction: f64,
    sigma_dir: f64,
) -> AttentionMap {
    let mag = gradient(window).magnitude();
    let g_max = mag.max();
    let g_max = if g_max > 0.0 { g_max } else { 1.0 };
    let (rows, cols) = mag.shape();
    let two_sigma_sq = 2.0 * sigma_dir * sigma_dir;
    let grid = Grid::from_fn(rows, cols, |r, c| {
        let w = match cell_bearing(rows, cols, r, c) {
            Some(b) => {
                let delta = normalize_angle(b - goal_direction);
                (-(delta * delta) / two_sigma_sq).exp()
            }
            None => 1.0,
        };
        (mag.get(r, c) / g_max * w).clamp(0.0, 1.0)
    })
    .expect("shape inherited from a valid window");
    AttentionMap(grid)
}

/// Elevation operand of the cost-map: `|h|` min-max rescaled to `[0, 1]`;
/// a constant window maps to all zeros.
pub fn elevation_channel(window: &ElevationMap) -> Grid {
    let abs = window.heights().map(f64::abs);
    let lo = abs.min();
    let hi = abs.max();
    let span = hi - lo;
    if span > 0.0 {
        abs.map(|v| ((v - lo) / span).clamp(0.0, 1.0))
    } else {
        abs.map(|_| 0.0)
    }
}

/// Element-wise product of attention and the elevation channel.
pub fn compose_costmap(
    attention: &AttentionMap,
    window: &ElevationMap,
) -> Result<CostMap, PerceptionError> {
    let shape = (window.height(), window.width());
    if attention.shape() != shape {
        return Err(PerceptionError::Dimension {
            attention: attention.shape(),
            window: shape,
        });
    }
    let channel = elevation_channel(window);
    let grid = Grid::from_fn(shape.0, shape.1, |r, c| attention.get(r, c) * channel.get(r, c))?;
    Ok(CostMap::new(grid, window.resolution()))
}

/// Parses an attention snapshot (ASCII grid format, values in `[0, 1]`).
pub fn load_attention_snapshot(source: &str) -> Result<AttentionMap, PerceptionError> {
    let (_, grid) = parse_ascii_grid(source)?;
    AttentionMap::new(grid)
}
