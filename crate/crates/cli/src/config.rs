//! Run configuration: a TOML file, `--set` overrides and defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ctic_core::diffusion::SuccessTiming;
use ctic_core::experiments::{estimates, ExperimentSpec};
use ctic_core::qmf::CurveAxis;
use ctic_core::{Execution, InterventionPlan};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_EXPERIMENT_RUNS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed for every random stream.
    pub seed: u64,
    /// Run budget applied where a section does not set its own.
    pub runs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 means one per available core.
    pub threads: usize,
    pub execution: Execution,
    pub graph: GraphConfig,
    pub simulate: SimulateConfig,
    pub sweep: ExperimentConfig,
    pub targeting: ExperimentConfig,
    pub scenarios: ExperimentConfig,
    pub calibrate_diffusion: CalibrateDiffusionConfig,
    pub calibrate_intervention: CalibrateInterventionConfig,
    pub qmf: QmfConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: DEFAULT_SEED,
            runs: None,
            out_dir: None,
            threads: 0,
            execution: Execution::default(),
            graph: GraphConfig::default(),
            simulate: SimulateConfig::default(),
            sweep: ExperimentConfig::default(),
            targeting: ExperimentConfig::default(),
            scenarios: ExperimentConfig::default(),
            calibrate_diffusion: CalibrateDiffusionConfig::default(),
            calibrate_intervention: CalibrateInterventionConfig::default(),
            qmf: QmfConfig::default(),
        }
    }
}

/// Where the network comes from. Without `edges` the synthetic desk network
/// is generated from `network_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub edges: Option<PathBuf>,
    pub susceptibility: Option<PathBuf>,
    /// With a susceptibility file: keep only scored nodes, then the largest
    /// weakly connected component.
    pub scored_only: bool,
    /// Susceptibility of every node when no file is given.
    pub default_susceptibility: f64,
    pub network_seed: u64,
    /// Seed node label; chosen automatically when absent.
    pub seed_node: Option<String>,
    /// Fall back to the largest out-degree node when no node has
    /// susceptibility exactly 1.
    pub seed_fallback: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            edges: None,
            susceptibility: None,
            scored_only: true,
            default_susceptibility: 1.0,
            network_seed: 1,
            seed_node: None,
            seed_fallback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub eta: f64,
    pub lambda: f64,
    pub timing: SuccessTiming,
    pub runs: Option<usize>,
    /// Mean activation curve grid, in hours.
    pub curve_step: f64,
    pub curve_end: f64,
    /// Runs used to place a stage-timed contextualization.
    pub ctx_runs: usize,
    pub ctx_resolution: f64,
    pub interventions: InterventionPlan,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            eta: estimates::ETA,
            lambda: estimates::LAMBDA,
            timing: SuccessTiming::default(),
            runs: None,
            curve_step: 1.0,
            curve_end: 48.0,
            ctx_runs: DEFAULT_EXPERIMENT_RUNS,
            ctx_resolution: 0.5,
            interventions: InterventionPlan::none(),
        }
    }
}

/// Shared by `sweep`, `targeting` and `scenarios`: either a named preset or
/// an inline experiment description.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub spec: Option<ExperimentSpec>,
    pub runs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCascades {
    pub eta: f64,
    pub lambda: f64,
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateDiffusionConfig {
    pub cascades: Option<PathBuf>,
    /// Simulated cascades to fit instead of a file.
    pub synthetic: Option<SyntheticCascades>,
    pub min_size: usize,
    pub size_window_hours: f64,
    pub eta_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub loss_window_hours: Option<f64>,
    pub loss_step_hours: Option<f64>,
    pub runs_per_cell: Option<usize>,
    pub include_root: Option<bool>,
}

impl Default for CalibrateDiffusionConfig {
    fn default() -> Self {
        CalibrateDiffusionConfig {
            cascades: None,
            synthetic: None,
            min_size: 0,
            size_window_hours: 48.0,
            eta_grid: None,
            lambda_grid: None,
            loss_window_hours: None,
            loss_step_hours: None,
            runs_per_cell: None,
            include_root: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateInterventionConfig {
    pub survey: Option<PathBuf>,
    pub control_floor: f64,
}

impl Default for CalibrateInterventionConfig {
    fn default() -> Self {
        CalibrateInterventionConfig {
            survey: None,
            control_floor: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QmfConfig {
    pub eta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub bisect_tol: f64,
    pub curve: Option<CurveAxis>,
}

impl Default for QmfConfig {
    fn default() -> Self {
        QmfConfig {
            eta: estimates::ETA,
            tol: 1e-8,
            max_iter: 10_000,
            bisect_tol: 1e-4,
            curve: None,
        }
    }
}

/// Reads `path` (if any), applies `KEY=VALUE` overrides and deserializes.
/// Relative paths inside the file resolve against the file's directory.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
            text.parse::<toml::Table>()
                .map_err(|e| anyhow!("{}: invalid TOML: {}", p.display(), e.to_string().trim()))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let origin = path.map_or_else(|| "command line".to_string(), |p| p.display().to_string());
    let mut cfg: Config = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let at = e.path().to_string();
        let msg = e.into_inner().message().trim().to_string();
        if at == "." {
            anyhow!("{origin}: {msg}")
        } else {
            anyhow!("{origin}: {at}: {msg}")
        }
    })?;
    if let Some(dir) = path.and_then(Path::parent) {
        cfg.resolve_paths(dir);
    }
    Ok(cfg)
}

/// `a.b.c=value`, with the value read as a TOML literal or, failing that, a
/// bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override {spec:?} is not KEY=VALUE"))?;
    let value = parse_literal(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override {spec:?} has an empty key segment");
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for (i, p) in parents.iter().enumerate() {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| anyhow!("override {spec:?}: {} is not a table", parts[..=i].join(".")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl Config {
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.graph.edges);
        fix(&mut self.graph.susceptibility);
        fix(&mut self.calibrate_diffusion.cascades);
        fix(&mut self.calibrate_intervention.survey);
        fix(&mut self.out_dir);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file() {
        let cfg = load(None, &[]).unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.simulate.eta, estimates::ETA);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = load(
            None,
            &[
                "simulate.eta=0.5".into(),
                "graph.seed_node=hub".into(),
                "qmf.eta = 1".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.simulate.eta, 0.5);
        assert_eq!(cfg.graph.seed_node.as_deref(), Some("hub"));
        // integers are accepted where reals are expected
        assert_eq!(cfg.qmf.eta, 1.0);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = load(None, &["simulate.etaa=0.5".into()]).unwrap_err();
        assert!(format!("{err:#}").contains("etaa"), "{err:#}");
        assert!(load(None, &["novalue".into()]).is_err());
        assert!(load(None, &["seed=1".into(), "seed.x=2".into()]).is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "seed = 7\n[graph]\nedges = \"g.txt\"\n[simulate.interventions.nudge]\nepsilon = 0.25\n",
        )
        .unwrap();
        let cfg = load(Some(&path), &[]).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.graph.edges, Some(dir.path().join("g.txt")));
        assert_eq!(cfg.simulate.interventions, InterventionPlan::nudge(0.25));
    }
}
