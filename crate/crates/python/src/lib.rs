use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

use terranav::config::{run_batch as core_run_batch, ScenarioFile, Variant};
use terranav::grid::{Cell, Grid};
use terranav::perception::{self, AttentionMap};
use terranav::planner::{self, PlannerLimits, RobotState};
use terranav::rewards::{self, AttitudeObservation, GoalObservation, ImuWindow, VibrationMeasure};
use terranav::sim::terrain_attitude;
use terranav::terrain;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn grid_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Grid> {
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Grid::from_vec(h, w, rows.into_iter().flatten().collect()).map_err(value_err)
}

fn grid_to_rows(g: &Grid) -> Vec<Vec<f64>> {
    g.values().chunks(g.cols()).map(<[f64]>::to_vec).collect()
}

/// Defaults of `T` overridden by the entries of an optional dict.
fn with_overrides<T: Serialize + DeserializeOwned + Default>(
    py: Python<'_>,
    overrides: Option<&Bound<'_, PyDict>>,
) -> PyResult<T> {
    let Some(d) = overrides else {
        return Ok(T::default());
    };
    let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
    let patch: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text).map_err(value_err)?;
    let mut base = match serde_json::to_value(T::default()).map_err(value_err)? {
        serde_json::Value::Object(m) => m,
        _ => unreachable!("settings are structs"),
    };
    for (k, v) in patch {
        if !base.contains_key(&k) {
            return Err(PyValueError::new_err(format!("unknown key '{k}'")));
        }
        base.insert(k, v);
    }
    serde_json::from_value(serde_json::Value::Object(base)).map_err(value_err)
}

fn to_py_object<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Pose2D", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyPose {
    inner: terrain::Pose2D,
}

// pymethods cannot take `self` by value
#[pymethods]
#[allow(clippy::wrong_self_convention)]
impl PyPose {
    #[new]
    fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            inner: terrain::Pose2D::new(x, y, theta),
        }
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.inner.y
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    /// Pose after driving at `(v, omega)` for `dt` seconds.
    fn advance(&self, v: f64, omega: f64, dt: f64) -> Self {
        Self {
            inner: self.inner.advance(v, omega, dt),
        }
    }

    /// World point in the robot frame as `(forward, left)`.
    fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        self.inner.to_local(x, y)
    }

    fn to_world(&self, forward: f64, left: f64) -> (f64, f64) {
        self.inner.to_world(forward, left)
    }

    fn __repr__(&self) -> String {
        format!("Pose2D({}, {}, {})", self.inner.x, self.inner.y, self.inner.theta)
    }
}

#[pyclass(name = "ElevationMap", frozen)]
struct PyElevationMap {
    inner: terrain::ElevationMap,
}

#[pymethods]
impl PyElevationMap {
    /// `heights[row][col]`, row 0 at the lowest y.
    #[new]
    #[pyo3(signature = (heights, resolution, origin = (0.0, 0.0)))]
    fn new(heights: Vec<Vec<f64>>, resolution: f64, origin: (f64, f64)) -> PyResult<Self> {
        let grid = grid_from_rows(heights)?;
        let inner = terrain::ElevationMap::new(grid, resolution, origin).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Reads an ASCII heightfield file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| value_err(format!("{}: {e}", path.display())))?;
        let inner = terrain::load_heightfield(&text).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.height(), self.inner.width())
    }

    #[getter]
    fn resolution(&self) -> f64 {
        self.inner.resolution()
    }

    #[getter]
    fn origin(&self) -> (f64, f64) {
        self.inner.origin()
    }

    fn heights(&self) -> Vec<Vec<f64>> {
        grid_to_rows(self.inner.heights())
    }

    fn height_at(&self, x: f64, y: f64) -> f64 {
        self.inner.height_at(x, y)
    }

    /// Heading-aligned `n x n` window relative to the robot's height.
    fn window(&self, pose: PyPose, n: usize) -> PyResult<Self> {
        let inner = terrain::robot_centric_window(&self.inner, &pose.inner, n).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Central-difference slopes `(dz/dx, dz/dy)`.
    fn gradient(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let g = terrain::gradient(&self.inner);
        (grid_to_rows(&g.dx), grid_to_rows(&g.dy))
    }

    /// Forward slopes of a window along the heading, `n_h` cells ahead.
    fn heading_gradient(&self, n_h: usize) -> PyResult<Vec<f64>> {
        terrain::heading_gradient_vector(&self.inner, n_h).map_err(value_err)
    }

    /// `(roll, pitch, roughness)` of the robot footprint at `pose`.
    #[pyo3(signature = (pose, radius = 0.5))]
    fn attitude(&self, pose: PyPose, radius: f64) -> (f64, f64, f64) {
        let c = terrain_attitude(&self.inner, &pose.inner, radius);
        (c.roll, c.pitch, c.roughness)
    }
}

#[pyclass(name = "CostMap", frozen)]
struct PyCostMap {
    inner: perception::CostMap,
}

#[pymethods]
impl PyCostMap {
    #[new]
    fn new(values: Vec<Vec<f64>>, resolution: f64) -> PyResult<Self> {
        Ok(Self {
            inner: perception::CostMap::new(grid_from_rows(values)?, resolution),
        })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    #[getter]
    fn resolution(&self) -> f64 {
        self.inner.resolution()
    }

    fn values(&self) -> Vec<Vec<f64>> {
        grid_to_rows(self.inner.grid())
    }

    /// Least-cost cells from the center to `goal` and their total cost.
    #[pyo3(signature = (goal, limits = None))]
    fn least_cost_path(
        &self,
        py: Python<'_>,
        goal: (usize, usize),
        limits: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<(Vec<(usize, usize)>, f64)> {
        let limits: PlannerLimits = with_overrides(py, limits)?;
        let path = planner::least_cost_path(&self.inner, Cell::new(goal.0, goal.1), &limits).map_err(value_err)?;
        Ok((path.cells.iter().map(|c| (c.row, c.col)).collect(), path.cost))
    }
}

#[pyfunction]
fn elevation_channel(window: &PyElevationMap) -> Vec<Vec<f64>> {
    grid_to_rows(&perception::elevation_channel(&window.inner))
}

/// Goal-biased attention over a window; `goal_direction` in the robot frame.
#[pyfunction]
fn reference_attention(window: &PyElevationMap, goal_direction: f64) -> Vec<Vec<f64>> {
    grid_to_rows(perception::reference_attention(&window.inner, goal_direction).grid())
}

#[pyfunction]
fn compose_costmap(attention: Vec<Vec<f64>>, window: &PyElevationMap) -> PyResult<PyCostMap> {
    let att = AttentionMap::new(grid_from_rows(attention)?).map_err(value_err)?;
    let inner = perception::compose_costmap(&att, &window.inner).map_err(value_err)?;
    Ok(PyCostMap { inner })
}

/// Chooses `(v, omega)` toward a waypoint given in the robot's world frame.
#[pyfunction]
#[pyo3(signature = (costmap, pose, waypoint, v = 0.0, omega = 0.0, roll = 0.0, pitch = 0.0, vibration = (0.0, 0.0), limits = None))]
#[allow(clippy::too_many_arguments)]
fn plan_velocity<'py>(
    py: Python<'py>,
    costmap: &PyCostMap,
    pose: PyPose,
    waypoint: (f64, f64),
    v: f64,
    omega: f64,
    roll: f64,
    pitch: f64,
    vibration: (f64, f64),
    limits: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let limits: PlannerLimits = with_overrides(py, limits)?;
    let state = RobotState {
        pose: pose.inner,
        roll,
        pitch,
        v,
        omega,
    };
    let vib = VibrationMeasure::new(vibration.0, vibration.1).map_err(value_err)?;
    let out = planner::plan_velocity(&state, &costmap.inner, waypoint, &vib, &limits);
    to_py_object(py, &out)
}

/// `(sigma_pc1, sigma_pc2, magnitude)` of a window of 6-axis IMU samples.
#[pyfunction]
fn pca_sigma(samples: Vec<[f64; 6]>) -> PyResult<(f64, f64, f64)> {
    let m = rewards::pca_sigma(&ImuWindow::new(samples).map_err(value_err)?);
    Ok((m.sigma_pc1, m.sigma_pc2, m.magnitude))
}

#[pyfunction]
fn r_goal(d_goal: f64, alpha_goal: f64) -> PyResult<(f64, f64)> {
    Ok(rewards::r_goal(&GoalObservation::new(d_goal, alpha_goal).map_err(value_err)?))
}

#[pyfunction]
fn r_stable(roll: f64, pitch: f64) -> PyResult<f64> {
    Ok(rewards::r_stable(&AttitudeObservation::new(roll, pitch).map_err(value_err)?))
}

#[pyfunction]
fn r_elev(grad: Vec<f64>, k_elev: f64) -> PyResult<f64> {
    rewards::r_elev(&grad, k_elev).map_err(value_err)
}

#[pyfunction]
fn r_vibration(sigma_pc1: f64, sigma_pc2: f64) -> PyResult<f64> {
    Ok(rewards::r_vibration(&VibrationMeasure::new(sigma_pc1, sigma_pc2).map_err(value_err)?))
}

/// Weighted sum of reward components keyed `dist, head, stable, elev, vibr`.
#[pyfunction]
#[pyo3(signature = (components, weights = None))]
fn r_total(py: Python<'_>, components: &Bound<'_, PyDict>, weights: Option<&Bound<'_, PyDict>>) -> PyResult<f64> {
    let w: rewards::RewardWeights = with_overrides(py, weights)?;
    let c: rewards::RewardComponents = with_overrides(py, Some(components))?;
    let map = c.to_map();
    let missing: Vec<&str> = rewards::RewardTerm::ALL
        .iter()
        .filter(|t| components.get_item(t.name()).ok().flatten().is_none())
        .map(|t| t.name())
        .collect();
    if !missing.is_empty() {
        return Err(PyValueError::new_err(format!("missing components: {}", missing.join(", "))));
    }
    rewards::r_total(&map, &w).map_err(value_err)
}

/// Runs `episodes` seeded episodes of a scenario file and returns the metrics.
#[pyfunction]
fn run_batch<'py>(
    py: Python<'py>,
    scenario: PathBuf,
    variant: &str,
    episodes: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let sc = ScenarioFile::load(&scenario).map_err(value_err)?;
    let variant: Variant = variant.parse().map_err(value_err)?;
    let (_, metrics) = py
        .detach(|| core_run_batch(&sc, variant, episodes, seed))
        .map_err(value_err)?;
    to_py_object(py, &metrics)
}

#[pymodule]
fn terranav_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPose>()?;
    m.add_class::<PyElevationMap>()?;
    m.add_class::<PyCostMap>()?;
    m.add_function(wrap_pyfunction!(elevation_channel, m)?)?;
    m.add_function(wrap_pyfunction!(reference_attention, m)?)?;
    m.add_function(wrap_pyfunction!(compose_costmap, m)?)?;
    m.add_function(wrap_pyfunction!(plan_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(pca_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(r_goal, m)?)?;
    m.add_function(wrap_pyfunction!(r_stable, m)?)?;
    m.add_function(wrap_pyfunction!(r_elev, m)?)?;
    m.add_function(wrap_pyfunction!(r_vibration, m)?)?;
    m.add_function(wrap_pyfunction!(r_total, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    Ok(())
}
