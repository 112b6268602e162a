//! Scenario files and navigator variants.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "name": "medium_rolling",
//!   "world": { "kind": "generated", "class": "medium" },
//!   "max_steps": 600,
//!   "success_radius": 0.3,
//!   "k_noise": 4.0,
//!   "lambda_vib": 0.5
//! }
//! ```
//!
//! Any simulator constant, planner limit, reward weight or navigator setting
//! may be overridden by its field name at top level.
//!
//! Generated worlds draw a fresh layout, start and goal per episode seed.
//! Heightfield worlds are loaded from an ASCII grid next to the scenario file
//! and need explicit `start` and `goal`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::perception::{AttentionProvider, ReferenceAttention, UniformAttention};
use crate::planner::PlannerLimits;
use crate::rewards::RewardWeights;
use crate::sim::worlds::{self, WorldParams};
use crate::sim::{
    compute_metrics, run_episode, EpisodeLog, Metrics, NavigatorConfig, ScenarioClass, ScenarioSpec,
    SimError, SimParams,
};
use crate::terrain::{load_heightfield, ElevationMap, Pose2D, TerrainError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("unknown variant '{0}' (expected dwa_vanilla, ours_full, ours_no_attention or waypoint_only)")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorldSource {
    Generated {
        class: ScenarioClass,
        #[serde(default)]
        params: WorldParams,
    },
    /// ASCII grid, relative paths resolved against the scenario file.
    Heightfield { path: PathBuf },
    Flat {
        width: usize,
        height: usize,
        resolution: f64,
        #[serde(default)]
        z: f64,
    },
    Ramp {
        width: usize,
        height: usize,
        resolution: f64,
        slope: f64,
        #[serde(default)]
        direction: f64,
    },
    Hill {
        width: usize,
        height: usize,
        resolution: f64,
        center: [f64; 2],
        peak: f64,
        sigma: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub name: String,
    pub world: WorldSource,
    /// `[x, y, theta]`; generated worlds supply their own when absent.
    pub start: Option<[f64; 3]>,
    pub goal: Option<[f64; 2]>,
    /// Expected difficulty class, checked against the world.
    pub class: Option<ScenarioClass>,
    pub max_steps: usize,
    pub success_radius: f64,
    pub sim: SimParams,
    /// Base navigator settings; variants toggle waypoints and constraints.
    pub navigator: NavigatorConfig,
    pub base_dir: PathBuf,
}

/// Keys owned by the variant or derived from other keys.
const RESERVED_KEYS: [&str; 4] = ["dt", "use_waypoints", "attitude_constraint", "vibration_constraint"];

fn object_of<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value).expect("settings serialize") {
        Value::Object(m) => m,
        _ => unreachable!("settings are structs"),
    }
}

fn take<T: serde::de::DeserializeOwned>(
    doc: &mut Map<String, Value>,
    key: &str,
) -> Result<Option<T>, serde_json::Error> {
    doc.remove(key).map(serde_json::from_value).transpose()
}

impl ScenarioFile {
    /// Parses the flat key/value document. Besides the scenario keys, every
    /// field of the simulator constants, planner limits, reward weights and
    /// navigator settings may appear at top level.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let invalid = |e: serde_json::Error| ConfigError::Invalid(e.to_string());
        let mut doc: Map<String, Value> = serde_json::from_str(text).map_err(invalid)?;
        let name: String = take(&mut doc, "name")
            .map_err(invalid)?
            .ok_or_else(|| ConfigError::Invalid("missing key 'name'".into()))?;
        let world: WorldSource = take(&mut doc, "world")
            .map_err(invalid)?
            .ok_or_else(|| ConfigError::Invalid("missing key 'world'".into()))?;
        let start = take(&mut doc, "start").map_err(invalid)?;
        let goal = take(&mut doc, "goal").map_err(invalid)?;
        let class = take(&mut doc, "class").map_err(invalid)?;
        let max_steps = take(&mut doc, "max_steps").map_err(invalid)?.unwrap_or(1500);
        let success_radius = take(&mut doc, "success_radius").map_err(invalid)?.unwrap_or(0.3);

        let mut sim = object_of(&SimParams::default());
        let mut limits = object_of(&PlannerLimits::default());
        let mut rewards = object_of(&RewardWeights::default());
        let mut nav = object_of(&NavigatorConfig::default());
        nav.remove("limits");
        nav.remove("rewards");
        for (key, value) in doc {
            if RESERVED_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "key '{key}' is set by the variant or by control_dt"
                )));
            }
            let section = [&mut sim, &mut limits, &mut rewards, &mut nav]
                .into_iter()
                .find(|m| m.contains_key(&key))
                .ok_or_else(|| ConfigError::Invalid(format!("unknown key '{key}'")))?;
            section.insert(key, value);
        }
        nav.insert("limits".into(), Value::Object(limits));
        nav.insert("rewards".into(), Value::Object(rewards));
        Ok(Self {
            name,
            world,
            start,
            goal,
            class,
            max_steps,
            success_radius,
            sim: serde_json::from_value(Value::Object(sim)).map_err(invalid)?,
            navigator: serde_json::from_value(Value::Object(nav)).map_err(invalid)?,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let s = Self::from_json(&text, base).map_err(|e| match e {
            ConfigError::Invalid(m) => ConfigError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        })?;
        s.check()?;
        Ok(s)
    }

    /// The flat document with every key spelled out.
    pub fn to_json(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("name".into(), Value::from(self.name.clone()));
        doc.insert("world".into(), serde_json::to_value(&self.world).expect("world serializes"));
        if let Some(s) = self.start {
            doc.insert("start".into(), serde_json::to_value(s).expect("array"));
        }
        if let Some(g) = self.goal {
            doc.insert("goal".into(), serde_json::to_value(g).expect("array"));
        }
        if let Some(c) = self.class {
            doc.insert("class".into(), serde_json::to_value(c).expect("class"));
        }
        doc.insert("max_steps".into(), Value::from(self.max_steps));
        doc.insert("success_radius".into(), Value::from(self.success_radius));
        doc.extend(object_of(&self.sim));
        let mut nav = object_of(&self.navigator);
        let limits = nav.remove("limits");
        let rewards = nav.remove("rewards");
        for section in [limits, rewards].into_iter().flatten() {
            if let Value::Object(m) = section {
                doc.extend(m);
            }
        }
        doc.extend(nav);
        for k in RESERVED_KEYS {
            doc.remove(k);
        }
        Value::Object(doc)
    }

    /// Static checks that do not need a world.
    pub fn check(&self) -> Result<(), ConfigError> {
        self.sim.validate()?;
        self.navigator().validate()?;
        let needs_endpoints = !matches!(self.world, WorldSource::Generated { .. });
        if needs_endpoints && (self.start.is_none() || self.goal.is_none()) {
            return Err(ConfigError::Invalid(
                "start and goal are required unless the world is generated".into(),
            ));
        }
        Ok(())
    }

    /// Base navigator with the planner interval tied to the control interval.
    pub fn navigator(&self) -> NavigatorConfig {
        let mut nav = self.navigator;
        nav.limits.dt = self.sim.control_dt;
        nav
    }

    /// Concrete scenario for one episode seed.
    pub fn build(&self, seed: u64) -> Result<ScenarioSpec, ConfigError> {
        let (world, start, goal, class) = match &self.world {
            WorldSource::Generated { class, params } => {
                let g = worlds::generate(*class, seed, params)?;
                (g.world, Some(g.start), Some(g.goal), Some(*class))
            }
            WorldSource::Heightfield { path } => {
                let full = self.base_dir.join(path);
                let text = fs::read_to_string(&full).map_err(|source| ConfigError::Io {
                    path: full.clone(),
                    source,
                })?;
                (load_heightfield(&text)?, None, None, None)
            }
            WorldSource::Flat {
                width,
                height,
                resolution,
                z,
            } => (worlds::flat(*width, *height, *resolution, *z)?, None, None, None),
            WorldSource::Ramp {
                width,
                height,
                resolution,
                slope,
                direction,
            } => (
                worlds::ramp(*width, *height, *resolution, *slope, *direction)?,
                None,
                None,
                None,
            ),
            WorldSource::Hill {
                width,
                height,
                resolution,
                center,
                peak,
                sigma,
            } => (
                worlds::hill(*width, *height, *resolution, (center[0], center[1]), *peak, *sigma)?,
                None,
                None,
                None,
            ),
        };
        let start = self
            .start
            .map(|[x, y, th]| Pose2D::new(x, y, th))
            .or(start)
            .ok_or_else(|| ConfigError::Invalid("missing start".into()))?;
        let goal = self
            .goal
            .map(|[x, y]| (x, y))
            .or(goal)
            .ok_or_else(|| ConfigError::Invalid("missing goal".into()))?;
        let spec = ScenarioSpec {
            name: self.name.clone(),
            world: Arc::new(world),
            start,
            goal,
            class: self.class.or(class),
            max_steps: self.max_steps,
            success_radius: self.success_radius,
            noise_seed: seed,
            sim: self.sim,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical JSON used to check that runs are comparable.
    pub fn identity(&self) -> Value {
        self.to_json()
    }
}

/// Navigator variants compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Goal-directed DWA on the bare elevation cost-map, no extra constraints.
    DwaVanilla,
    /// Attention cost-map, least-cost waypoints, attitude and vibration boxes.
    OursFull,
    /// As `OursFull` with uniform attention.
    OursNoAttention,
    /// Attention cost-map and waypoints without the extra boxes.
    WaypointOnly,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::DwaVanilla,
        Variant::OursFull,
        Variant::OursNoAttention,
        Variant::WaypointOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::DwaVanilla => "dwa_vanilla",
            Variant::OursFull => "ours_full",
            Variant::OursNoAttention => "ours_no_attention",
            Variant::WaypointOnly => "waypoint_only",
        }
    }

    pub fn navigator(self, base: &NavigatorConfig) -> NavigatorConfig {
        let mut nav = *base;
        let (waypoints, constraints) = match self {
            Variant::DwaVanilla => (false, false),
            Variant::OursFull | Variant::OursNoAttention => (true, true),
            Variant::WaypointOnly => (true, false),
        };
        nav.use_waypoints = waypoints;
        nav.limits.attitude_constraint = constraints;
        nav.limits.vibration_constraint = constraints;
        nav
    }

    pub fn provider(self) -> Box<dyn AttentionProvider> {
        match self {
            Variant::OursFull | Variant::WaypointOnly => Box::new(ReferenceAttention::default()),
            Variant::DwaVanilla | Variant::OursNoAttention => Box::new(UniformAttention::default()),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| ConfigError::UnknownVariant(s.to_string()))
    }
}

/// Episode `i` uses seed `seed + i` for both the world layout and IMU noise.
pub fn episode_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Runs `episodes` episodes of one variant and summarizes them.
pub fn run_batch(
    scenario: &ScenarioFile,
    variant: Variant,
    episodes: usize,
    seed: u64,
) -> Result<(Vec<EpisodeLog>, Metrics), ConfigError> {
    let nav = variant.navigator(&scenario.navigator());
    let provider = variant.provider();
    let mut logs = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let spec = scenario.build(episode_seed(seed, i))?;
        logs.push(run_episode(&spec, &nav, provider.as_ref())?);
    }
    let metrics = compute_metrics(&logs)?;
    Ok((logs, metrics))
}

/// World used by an episode seed, for inspection.
pub fn world_for(scenario: &ScenarioFile, seed: u64) -> Result<Arc<ElevationMap>, ConfigError> {
    Ok(scenario.build(seed)?.world)
}
