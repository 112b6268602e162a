//! Heightfields, robot-centric windows and elevation gradients.
//!
//! World maps use `x` along columns and `y` along rows, with the ASCII
//! convention that row 0 is the minimum `y`. A robot-centric window is itself
//! an [`ElevationMap`] expressed in the robot frame: `+row` points along the
//! robot heading, `+col` points to the robot's right, and the robot sits on
//! cell `(n / 2, n / 2)` at robot-frame coordinates `(0, 0)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::grid::{format_ascii_grid, parse_ascii_grid, AsciiHeader, Grid, GridError};

#[derive(Debug, Error, PartialEq)]
pub enum TerrainError {
    #[error("heightfield parse error: {0}")]
    Parse(#[from] GridError),
    #[error("invalid elevation map: {0}")]
    InvalidMap(String),
    #[error("pose ({x:.3}, {y:.3}) lies outside the world map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("requested {requested} cells ahead of the robot but only {available} are available")]
    Bounds { requested: usize, available: usize },
    #[error("window size must be at least 1")]
    EmptyWindow,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Planar pose in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    /// Heading in `(-pi, pi]`.
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    /// Integrates unicycle motion for `dt` seconds along the exact circular
    /// arc (a straight segment when `omega` is zero). The chord form stays
    /// accurate for tiny yaw rates.
    pub fn advance(&self, v: f64, omega: f64, dt: f64) -> Pose2D {
        let dtheta = omega * dt;
        let half = 0.5 * dtheta;
        let sinc = if half.abs() < 1e-4 {
            1.0 - half * half / 6.0
        } else {
            half.sin() / half
        };
        let chord = v * dt * sinc;
        let (s, c) = (self.theta + half).sin_cos();
        Pose2D::new(self.x + chord * c, self.y + chord * s, self.theta + dtheta)
    }

    /// Expresses a world point in this pose's frame as `(forward, left)`.
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = x - self.x;
        let dy = y - self.y;
        (dx * c + dy * s, -dx * s + dy * c)
    }

    /// Maps a `(forward, left)` offset in this pose's frame to world coordinates.
    pub fn to_world(&self, forward: f64, left: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (
            self.x + forward * c - left * s,
            self.y + forward * s + left * c,
        )
    }

    /// Bearing of a world point relative to the heading, in `(-pi, pi]`, left positive.
    pub fn bearing_to(&self, x: f64, y: f64) -> f64 {
        normalize_angle((y - self.y).atan2(x - self.x) - self.theta)
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }
}

/// Square-cell grid of terrain heights in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationMap {
    heights: Grid,
    resolution: f64,
    origin: (f64, f64),
}

impl ElevationMap {
    pub fn new(heights: Grid, resolution: f64, origin: (f64, f64)) -> Result<Self, TerrainError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(TerrainError::InvalidMap(format!(
                "resolution must be positive and finite, got {resolution}"
            )));
        }
        if !origin.0.is_finite() || !origin.1.is_finite() {
            return Err(TerrainError::InvalidMap("origin must be finite".into()));
        }
        if let Some(i) = heights.values().iter().position(|v| !v.is_finite()) {
            return Err(TerrainError::InvalidMap(format!(
                "non-finite height at row {}, col {}",
                i / heights.cols(),
                i % heights.cols()
            )));
        }
        Ok(Self {
            heights,
            resolution,
            origin,
        })
    }

    /// Builds a map by evaluating `f(x, y)` at every cell center.
    pub fn from_fn(
        width: usize,
        height: usize,
        resolution: f64,
        origin: (f64, f64),
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, TerrainError> {
        let grid = Grid::from_fn(height, width, |r, c| {
            f(
                origin.0 + c as f64 * resolution,
                origin.1 + r as f64 * resolution,
            )
        })?;
        Self::new(grid, resolution, origin)
    }

    /// Number of columns.
    pub fn width(&self) -> usize {
        self.heights.cols()
    }

    /// Number of rows.
    pub fn height(&self) -> usize {
        self.heights.rows()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn heights(&self) -> &Grid {
        &self.heights
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.heights.get(row, col)
    }

    /// World coordinates of a cell center.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin.0 + col as f64 * self.resolution,
            self.origin.1 + row as f64 * self.resolution,
        )
    }

    /// Continuous `(col, row)` coordinates of a world point.
    pub fn world_to_cell(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin.0) / self.resolution,
            (y - self.origin.1) / self.resolution,
        )
    }

    /// True if the point lies on the map footprint (cell centers plus half a cell).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (u, v) = self.world_to_cell(x, y);
        u >= -0.5 && v >= -0.5 && u <= self.width() as f64 - 0.5 && v <= self.height() as f64 - 0.5
    }

    /// Bilinear interpolation at continuous cell coordinates, clamped to the
    /// border cells.
    pub fn sample_cell(&self, u: f64, v: f64) -> f64 {
        let max_u = (self.width() - 1) as f64;
        let max_v = (self.height() - 1) as f64;
        let u = u.clamp(0.0, max_u);
        let v = v.clamp(0.0, max_v);
        let c0 = u.floor() as usize;
        let r0 = v.floor() as usize;
        let c1 = (c0 + 1).min(self.width() - 1);
        let r1 = (r0 + 1).min(self.height() - 1);
        let fu = u - c0 as f64;
        let fv = v - r0 as f64;
        let h00 = self.get(r0, c0);
        let h01 = self.get(r0, c1);
        let h10 = self.get(r1, c0);
        let h11 = self.get(r1, c1);
        if fu == 0.0 && fv == 0.0 {
            return h00;
        }
        (h00 * (1.0 - fu) + h01 * fu) * (1.0 - fv) + (h10 * (1.0 - fu) + h11 * fu) * fv
    }

    /// Height at a world point (bilinear, border-clamped).
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.world_to_cell(x, y);
        self.sample_cell(u, v)
    }

    /// Maximum elevation gain: highest minus lowest cell.
    pub fn max_elevation_gain(&self) -> f64 {
        self.heights.max() - self.heights.min()
    }

    pub fn to_ascii(&self) -> String {
        let header = AsciiHeader {
            ncols: self.width(),
            nrows: self.height(),
            resolution: self.resolution,
            origin_x: self.origin.0,
            origin_y: self.origin.1,
        };
        format_ascii_grid(&header, &self.heights)
    }
}

/// Parses an ASCII heightfield document.
pub fn load_heightfield(source: &str) -> Result<ElevationMap, TerrainError> {
    let (header, grid) = parse_ascii_grid(source)?;
    ElevationMap::new(grid, header.resolution, (header.origin_x, header.origin_y))
}

/// Row/column of the robot in an `n x n` window.
#[inline]
pub fn window_center(n: usize) -> usize {
    n / 2
}

fn snap_unit(x: f64) -> f64 {
    const TOL: f64 = 1e-12;
    if x.abs() < TOL {
        0.0
    } else if (x - 1.0).abs() < TOL {
        1.0
    } else if (x + 1.0).abs() < TOL {
        -1.0
    } else {
        x
    }
}

/// Extracts the `n x n` heading-aligned window around `pose`.
///
/// Heights are relative to the elevation under the robot. Samples falling off
/// the world take the nearest border value.
pub fn robot_centric_window(
    map: &ElevationMap,
    pose: &Pose2D,
    n: usize,
) -> Result<ElevationMap, TerrainError> {
    if n == 0 {
        return Err(TerrainError::EmptyWindow);
    }
    if !map.contains(pose.x, pose.y) {
        return Err(TerrainError::OutOfBounds {
            x: pose.x,
            y: pose.y,
        });
    }
    let (pu, pv) = map.world_to_cell(pose.x, pose.y);
    let (s, c) = pose.theta.sin_cos();
    // forward = (cos, sin), right = (sin, -cos) in (col, row) space
    let (fx, fy) = (snap_unit(c), snap_unit(s));
    let (rx, ry) = (fy, -fx);
    let base = map.sample_cell(pu, pv);
    let center = window_center(n);
    let grid = Grid::from_fn(n, n, |i, j| {
        let df = i as f64 - center as f64;
        let dr = j as f64 - center as f64;
        let u = pu + df * fx + dr * rx;
        let v = pv + df * fy + dr * ry;
        map.sample_cell(u, v) - base
    })?;
    let res = map.resolution();
    ElevationMap::new(
        grid,
        res,
        (-(center as f64) * res, -(center as f64) * res),
    )
}

/// Per-cell elevation gradient in meters per meter.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    /// dh/dx (along columns).
    pub dx: Grid,
    /// dh/dy (along rows).
    pub dy: Grid,
}

impl GradientField {
    pub fn shape(&self) -> (usize, usize) {
        self.dx.shape()
    }

    pub fn magnitude(&self) -> Grid {
        let mut out = self.dx.clone();
        for r in 0..out.rows() {
            for c in 0..out.cols() {
                out.set(r, c, self.dx.get(r, c).hypot(self.dy.get(r, c)));
            }
        }
        out
    }
}

#[inline]
fn diff_along_rows(h: &Grid, r: usize, c: usize, res: f64) -> f64 {
    let n = h.rows();
    if n == 1 {
        0.0
    } else if r == 0 {
        (h.get(1, c) - h.get(0, c)) / res
    } else if r == n - 1 {
        (h.get(n - 1, c) - h.get(n - 2, c)) / res
    } else {
        (h.get(r + 1, c) - h.get(r - 1, c)) / (2.0 * res)
    }
}

#[inline]
fn diff_along_cols(h: &Grid, r: usize, c: usize, res: f64) -> f64 {
    let n = h.cols();
    if n == 1 {
        0.0
    } else if c == 0 {
        (h.get(r, 1) - h.get(r, 0)) / res
    } else if c == n - 1 {
        (h.get(r, n - 1) - h.get(r, n - 2)) / res
    } else {
        (h.get(r, c + 1) - h.get(r, c - 1)) / (2.0 * res)
    }
}

/// Central differences inside, one-sided differences on the border.
pub fn gradient(map: &ElevationMap) -> GradientField {
    let h = map.heights();
    let res = map.resolution();
    let (rows, cols) = h.shape();
    let dx = Grid::from_fn(rows, cols, |r, c| diff_along_cols(h, r, c, res))
        .expect("shape inherited from a valid map");
    let dy = Grid::from_fn(rows, cols, |r, c| diff_along_rows(h, r, c, res))
        .expect("shape inherited from a valid map");
    GradientField { dx, dy }
}

/// Directional derivative along the heading at the `n_h` cells straight ahead
/// of the window center; element 0 is the cell nearest the robot.
pub fn heading_gradient_vector(window: &ElevationMap, n_h: usize) -> Result<Vec<f64>, TerrainError> {
    let rows = window.height();
    let center_row = window_center(rows);
    let center_col = window_center(window.width());
    let available = rows - 1 - center_row;
    if n_h == 0 || n_h > available {
        return Err(TerrainError::Bounds {
            requested: n_h,
            available,
        });
    }
    let res = window.resolution();
    Ok((1..=n_h)
        .map(|i| diff_along_rows(window.heights(), center_row + i, center_col, res))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flat(w: usize, h: usize, value: f64) -> ElevationMap {
        ElevationMap::new(Grid::filled(h, w, value).unwrap(), 1.0, (0.0, 0.0)).unwrap()
    }

    #[test]
    fn loads_constant_and_spike_maps() {
        let m = load_heightfield("2 2 1.0 0 0\n0 0\n0 0\n").unwrap();
        assert!(m.heights().values().iter().all(|&v| v == 0.0));
        let m = load_heightfield("3 3 1.0 0 0\n0 0 0\n0 1.0 0\n0 0 0\n").unwrap();
        assert_eq!(m.get(1, 1), 1.0);
        let err = load_heightfield("4 2 1.0 0 0\n0 0 0 0\n0 0 0\n").unwrap_err();
        assert_eq!(
            err,
            TerrainError::Parse(GridError::RowLength {
                line: 3,
                expected: 4,
                found: 3
            })
        );
    }

    #[test]
    fn rejects_non_finite_heights() {
        let g = Grid::from_vec(1, 2, vec![0.0, f64::INFINITY]).unwrap();
        assert!(ElevationMap::new(g, 1.0, (0.0, 0.0)).is_err());
    }

    #[test]
    fn angle_normalization_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(normalize_angle(-5.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn advance_straight_and_rotate() {
        let p = Pose2D::new(1.0, 2.0, 0.0).advance(1.0, 0.0, 1.0);
        assert_eq!((p.x, p.y, p.theta), (2.0, 2.0, 0.0));
        let p = Pose2D::new(1.0, 2.0, 0.0).advance(0.0, PI / 2.0, 1.0);
        assert_eq!((p.x, p.y), (1.0, 2.0));
        assert_abs_diff_eq!(p.theta, PI / 2.0);
        // quarter circle of radius 1
        let p = Pose2D::new(0.0, 0.0, 0.0).advance(PI / 2.0, PI / 2.0, 1.0);
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_world_gives_zero_window() {
        let m = flat(60, 60, 2.5);
        let w = robot_centric_window(&m, &Pose2D::new(30.3, 29.1, 0.7), 40).unwrap();
        assert_eq!(w.heights().shape(), (40, 40));
        assert!(w.heights().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn out_of_bounds_pose_is_rejected() {
        let m = flat(10, 10, 0.0);
        assert!(matches!(
            robot_centric_window(&m, &Pose2D::new(-3.0, 2.0, 0.0), 5),
            Err(TerrainError::OutOfBounds { .. })
        ));
        assert_eq!(
            robot_centric_window(&m, &Pose2D::new(3.0, 2.0, 0.0), 0),
            Err(TerrainError::EmptyWindow)
        );
    }

    #[test]
    fn ramp_window_up_slope_and_across() {
        let s = 0.2;
        let res = 0.5;
        let m = ElevationMap::from_fn(80, 80, res, (0.0, 0.0), |x, _| s * x).unwrap();
        let pose = Pose2D::new(20.0, 20.0, 0.0);
        let w = robot_centric_window(&m, &pose, 40).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let expected = (i as f64 - 20.0) * s * res;
                assert_abs_diff_eq!(w.get(i, j), expected, epsilon = 1e-12);
            }
        }
        // facing +y: slope runs to the robot's right (+col)
        let w = robot_centric_window(&m, &Pose2D::new(20.0, 20.0, PI / 2.0), 40).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let expected = (j as f64 - 20.0) * s * res;
                assert_abs_diff_eq!(w.get(i, j), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn out_of_map_cells_clamp_to_border() {
        let m = ElevationMap::from_fn(5, 5, 1.0, (0.0, 0.0), |x, _| x).unwrap();
        let w = robot_centric_window(&m, &Pose2D::new(4.0, 2.0, 0.0), 5).unwrap();
        // cells ahead fall off the +x edge and repeat the border height
        assert_eq!(w.get(3, 2), 0.0);
        assert_eq!(w.get(4, 2), 0.0);
        assert_eq!(w.get(1, 2), -1.0);
    }

    #[test]
    fn gradient_examples() {
        let g = gradient(&flat(5, 4, 3.0));
        assert!(g.dx.values().iter().chain(g.dy.values()).all(|&v| v == 0.0));

        let m = ElevationMap::from_fn(7, 6, 0.5, (1.0, -2.0), |x, _| 0.2 * x).unwrap();
        let g = gradient(&m);
        for &v in g.dx.values() {
            assert_abs_diff_eq!(v, 0.2, epsilon = 1e-12);
        }
        assert!(g.dy.values().iter().all(|&v| v == 0.0));

        let mut spike = Grid::filled(5, 5, 0.0).unwrap();
        spike.set(2, 2, 1.0);
        let g = gradient(&ElevationMap::new(spike, 1.0, (0.0, 0.0)).unwrap());
        let mag = g.magnitude();
        for (r, c) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert_eq!(mag.get(r, c), 0.5);
        }
        assert_eq!(g.dx.get(2, 1), 0.5);
        assert_eq!(g.dx.get(2, 3), -0.5);
        assert_eq!(g.dy.get(1, 2), 0.5);
        assert_eq!(mag.get(2, 2), 0.0);
    }

    #[test]
    fn heading_gradient_examples() {
        let w = flat(9, 9, 0.0);
        assert_eq!(heading_gradient_vector(&w, 4).unwrap(), vec![0.0; 4]);
        assert_eq!(
            heading_gradient_vector(&w, 5),
            Err(TerrainError::Bounds {
                requested: 5,
                available: 4
            })
        );
        assert!(heading_gradient_vector(&w, 0).is_err());

        let ramp = ElevationMap::from_fn(21, 21, 0.5, (-5.0, -5.0), |_, y| 0.1 * y).unwrap();
        for v in heading_gradient_vector(&ramp, 10).unwrap() {
            assert_abs_diff_eq!(v, 0.1, epsilon = 1e-12);
        }

        // +0.5 m step at the third cell ahead, resolution 0.5
        let res = 0.5;
        let step = Grid::from_fn(13, 13, |r, _| if r >= 6 + 3 { 0.5 } else { 0.0 }).unwrap();
        let w = ElevationMap::new(step, res, (-3.0, -3.0)).unwrap();
        let g = heading_gradient_vector(&w, 5).unwrap();
        assert_eq!(g[2], 0.5);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[3], 0.0);
        assert_eq!(g[4], 0.0);
    }
}
