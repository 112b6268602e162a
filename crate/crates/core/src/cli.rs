//! `run` and `compare` subcommands.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::{episode_seed, ConfigError, ScenarioFile, Variant};
use crate::grid::{write_pgm, PgmScale};
use crate::terrain::ElevationMap;
use crate::sim::{compute_metrics, run_episode, EpisodeLog, Metrics, SimError, TerminalStatus};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("episode {episode} panicked: {message}")]
    Panic { episode: usize, message: String },
    #[error("runs are not comparable:\n{0}")]
    Mismatch(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 1 for configuration and input errors, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Mismatch(_) | CliError::Usage(_) => 1,
            CliError::Json { .. } => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub variant: Variant,
    pub seed: u64,
    pub episodes: usize,
    pub metrics: Metrics,
    pub outcomes: BTreeMap<String, usize>,
    /// Terminal status per episode, in order.
    pub episode_status: Vec<TerminalStatus>,
    /// Files written next to this summary.
    pub artifacts: Vec<String>,
    /// Canonical scenario configuration.
    pub scenario_config: Value,
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub scenario: PathBuf,
    pub variant: String,
    pub episodes: usize,
    pub seed: u64,
    pub out: PathBuf,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}

fn write_snapshot(
    log: &EpisodeLog,
    world: &ElevationMap,
    out: &Path,
    artifacts: &mut Vec<String>,
) -> Result<(), CliError> {
    let mut emit = |name: &str, f: &dyn Fn(BufWriter<File>) -> io::Result<()>| {
        let p = out.join(name);
        f(create(&p)?).map_err(io_err(&p))?;
        artifacts.push(name.to_string());
        Ok::<(), CliError>(())
    };
    emit("elevation.pgm", &|w| write_pgm(world.heights(), PgmScale::MinToMax, w))?;
    if let Some(snap) = &log.snapshot {
        emit("window.pgm", &|w| write_pgm(snap.window.heights(), PgmScale::MinToMax, w))?;
        emit("attention.pgm", &|w| snap.attention.write_pgm(w))?;
        emit("costmap.pgm", &|w| snap.costmap.write_pgm(w))?;
    }
    Ok(())
}

/// Runs a batch and writes per-episode logs, reward traces, map snapshots of
/// the first step and `summary.json` into `out`.
pub fn cmd_run(args: &RunArgs) -> Result<RunSummary, CliError> {
    let variant: Variant = args.variant.parse()?;
    if args.episodes == 0 {
        return Err(CliError::Usage("--episodes must be at least 1".into()));
    }
    let scenario = ScenarioFile::load(&args.scenario)?;
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let nav = variant.navigator(&scenario.navigator());
    let provider = variant.provider();

    let mut logs = Vec::with_capacity(args.episodes);
    let mut artifacts = Vec::new();
    for i in 0..args.episodes {
        let spec = scenario.build(episode_seed(args.seed, i))?;
        let result = panic::catch_unwind(AssertUnwindSafe(|| run_episode(&spec, &nav, provider.as_ref())));
        let log = match result {
            Ok(r) => r?,
            Err(payload) => {
                return Err(CliError::Panic {
                    episode: i,
                    message: panic_message(payload),
                })
            }
        };
        let name = format!("episode_{i:03}.csv");
        let p = args.out.join(&name);
        log.write_csv(create(&p)?).map_err(|source| CliError::Csv {
            path: p.clone(),
            source,
        })?;
        artifacts.push(name);
        let name = format!("rewards_{i:03}.csv");
        let p = args.out.join(&name);
        log.reward_trace()
            .write_csv(create(&p)?)
            .map_err(|source| CliError::Csv {
                path: p.clone(),
                source,
            })?;
        artifacts.push(name);
        if i == 0 {
            write_snapshot(&log, &spec.world, &args.out, &mut artifacts)?;
        }
        let mut lean = log;
        lean.snapshot = None;
        logs.push(lean);
    }

    let metrics = compute_metrics(&logs)?;
    let mut outcomes = BTreeMap::new();
    for s in [
        TerminalStatus::Success,
        TerminalStatus::Collision,
        TerminalStatus::FlipOver,
        TerminalStatus::Timeout,
    ] {
        outcomes.insert(s.name().to_string(), logs.iter().filter(|l| l.status == s).count());
    }
    let summary = RunSummary {
        scenario: scenario.name.clone(),
        variant,
        seed: args.seed,
        episodes: args.episodes,
        metrics,
        outcomes,
        episode_status: logs.iter().map(|l| l.status).collect(),
        artifacts,
        scenario_config: scenario.identity(),
    };
    let p = args.out.join("summary.json");
    let mut w = create(&p)?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|source| CliError::Json {
        path: p.clone(),
        source,
    })?;
    w.flush().map_err(io_err(&p))?;
    Ok(summary)
}

pub fn load_summary(dir: &Path) -> Result<RunSummary, CliError> {
    let p = dir.join("summary.json");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: p, source })
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

/// Differences in scenario identity between two runs, one line per field.
pub fn identity_diff(a: &RunSummary, b: &RunSummary) -> Vec<String> {
    let mut fa = BTreeMap::new();
    let mut fb = BTreeMap::new();
    flatten("", &a.scenario_config, &mut fa);
    flatten("", &b.scenario_config, &mut fb);
    fa.insert("seed".into(), a.seed.to_string());
    fb.insert("seed".into(), b.seed.to_string());
    fa.insert("episodes".into(), a.episodes.to_string());
    fb.insert("episodes".into(), b.episodes.to_string());
    let keys: std::collections::BTreeSet<&String> = fa.keys().chain(fb.keys()).collect();
    let missing = "<absent>".to_string();
    keys.into_iter()
        .filter_map(|k| {
            let va = fa.get(k).unwrap_or(&missing);
            let vb = fb.get(k).unwrap_or(&missing);
            (va != vb).then(|| format!("  {k}: {va} != {vb}"))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: String,
    pub seed: u64,
    pub episodes: usize,
    /// Metric name to per-variant value; absent values are `null`.
    pub metrics: BTreeMap<String, BTreeMap<String, Option<f64>>>,
}

const METRIC_NAMES: [&str; 4] = ["success_rate", "avg_vibration", "avg_speed", "norm_traj_length"];

fn metric(m: &Metrics, name: &str) -> Option<f64> {
    match name {
        "success_rate" => Some(m.success_rate),
        "avg_vibration" => Some(m.avg_vibration),
        "avg_speed" => Some(m.avg_speed),
        "norm_traj_length" => m.norm_traj_length,
        _ => None,
    }
}

/// Tabulates run directories sharing one scenario, seed and episode count;
/// writes `comparison.md` and `comparison.json` into `out`.
pub fn cmd_compare(runs: &[PathBuf], out: &Path) -> Result<Comparison, CliError> {
    if runs.is_empty() {
        return Err(CliError::Usage("compare needs at least one run directory".into()));
    }
    let summaries = runs.iter().map(|d| load_summary(d)).collect::<Result<Vec<_>, _>>()?;
    let first = &summaries[0];
    let mut problems = Vec::new();
    for (dir, s) in runs.iter().zip(&summaries).skip(1) {
        let diff = identity_diff(first, s);
        if !diff.is_empty() {
            problems.push(format!("{} vs {}:\n{}", runs[0].display(), dir.display(), diff.join("\n")));
        }
    }
    let mut seen = BTreeMap::new();
    for (dir, s) in runs.iter().zip(&summaries) {
        if let Some(prev) = seen.insert(s.variant, dir) {
            problems.push(format!(
                "variant {} appears in both {} and {}",
                s.variant,
                prev.display(),
                dir.display()
            ));
        }
    }
    if !problems.is_empty() {
        return Err(CliError::Mismatch(problems.join("\n")));
    }

    let mut ordered: Vec<&RunSummary> = summaries.iter().collect();
    ordered.sort_by_key(|s| s.variant);
    let mut metrics = BTreeMap::new();
    for name in METRIC_NAMES {
        let row = ordered
            .iter()
            .map(|s| (s.variant.name().to_string(), metric(&s.metrics, name)))
            .collect();
        metrics.insert(name.to_string(), row);
    }
    let cmp = Comparison {
        scenario: first.scenario.clone(),
        seed: first.seed,
        episodes: first.episodes,
        metrics,
    };

    fs::create_dir_all(out).map_err(io_err(out))?;
    let p = out.join("comparison.json");
    let mut w = create(&p)?;
    serde_json::to_writer_pretty(&mut w, &cmp).map_err(|source| CliError::Json {
        path: p.clone(),
        source,
    })?;
    w.flush().map_err(io_err(&p))?;

    let mut md = format!(
        "# {} (seed {}, {} episodes)\n\n| metric |",
        cmp.scenario, cmp.seed, cmp.episodes
    );
    for s in &ordered {
        md.push_str(&format!(" {} |", s.variant));
    }
    md.push_str("\n|---|");
    for _ in &ordered {
        md.push_str("---:|");
    }
    md.push('\n');
    for name in METRIC_NAMES {
        md.push_str(&format!("| {name} |"));
        for s in &ordered {
            match metric(&s.metrics, name) {
                Some(v) => md.push_str(&format!(" {v:.4} |")),
                None => md.push_str(" n/a |"),
            }
        }
        md.push('\n');
    }
    let p = out.join("comparison.md");
    fs::write(&p, md).map_err(io_err(&p))?;
    Ok(cmp)
}
