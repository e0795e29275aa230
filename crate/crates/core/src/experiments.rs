//! Experiment families built on the Monte Carlo engine: strength by
//! contagiousness grids, strength by scale or timing grids, targeting
//! differentials against random selection, and combined-intervention
//! scenarios.
//!
//! Every cell of an experiment reuses the same master seed, so cells are
//! compared on common random numbers and the ε = 0 slice reproduces the
//! no-intervention baseline exactly.

use serde::{Deserialize, Serialize};

use crate::diffusion::{
    mean_std, resolve_ctx_time, CascadeModel, CtxResolution, DiffusionParams, MonteCarloConfig, MonteCarloSummary,
};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::interventions::{ContextTiming, InterventionPlan, TargetStrategy};
use crate::parallel::{map_indexed, Execution};

/// Calibrated point estimates behind the presets and scenario settings.
pub mod estimates {
    pub const ETA: f64 = 0.026;
    pub const LAMBDA: f64 = 0.25;
    pub const EPS_NUDGE: f64 = 0.143;
    pub const EPS_PREBUNK: f64 = 0.204;
    pub const EPS_CTX: f64 = 0.342;
    pub const DELTA_PRE: f64 = 0.2;
    pub const PHI_CTX: f64 = 0.8;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterventionKind {
    Nudge,
    Prebunk,
    Contextualize,
}

/// Run budget shared by every cell of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub runs: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl RunConfig {
    pub fn new(runs: usize, master_seed: u64) -> Self {
        RunConfig {
            runs,
            master_seed,
            execution: Execution::default(),
        }
    }

    fn monte_carlo(&self) -> MonteCarloConfig {
        MonteCarloConfig::new(self.runs, self.master_seed).with_execution(self.execution)
    }

    fn ctx_resolution(&self) -> CtxResolution {
        CtxResolution {
            execution: self.execution,
            ..CtxResolution::new(self.runs, self.master_seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Axis {
            name: name.to_string(),
            values,
        }
    }
}

/// Mean prevalence over a two-dimensional grid. Rows follow `axis1`
/// (intervention strength), columns follow `axis2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub axis1: Axis,
    pub axis2: Axis,
    pub prevalence: Vec<Vec<f64>>,
    pub relative_prevalence: Vec<Vec<f64>>,
    /// Sample standard deviation of per-run prevalence.
    pub std: Vec<Vec<f64>>,
    /// No-intervention prevalence per column.
    pub baseline: Vec<f64>,
    /// Contextualization time used per column, when relevant.
    pub ctx_time: Option<Vec<f64>>,
}

impl SweepGrid {
    /// Long format, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis1,axis2,prevalence,relative_prevalence,std\n");
        for (i, a) in self.axis1.values.iter().enumerate() {
            for (j, b) in self.axis2.values.iter().enumerate() {
                out.push_str(&format!(
                    "{a},{b},{},{},{}\n",
                    self.prevalence[i][j], self.relative_prevalence[i][j], self.std[i][j]
                ));
            }
        }
        out
    }
}

fn check_sorted(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty(name));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Invalid(format!("{name} must be finite and sorted ascending")));
    }
    Ok(())
}

fn check_unit_grid(name: &'static str, values: &[f64]) -> Result<()> {
    check_sorted(name, values)?;
    for &v in values {
        crate::error::check_unit(name, v)?;
    }
    Ok(())
}

fn summary(
    graph: &DirectedGraph,
    params: DiffusionParams,
    plan: InterventionPlan,
    seed: NodeId,
    ctx_time: Option<f64>,
    cfg: &RunConfig,
) -> Result<MonteCarloSummary> {
    CascadeModel::new(graph, params, plan, seed, ctx_time)?.monte_carlo(&cfg.monte_carlo())
}

/// Fixed parameters for [`sweep_strength_vs_contagiousness`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepFixed {
    pub lambda: f64,
    pub delta_pre: f64,
    pub phi_ctx: f64,
    #[serde(default = "default_strategy")]
    pub strategy: TargetStrategy,
}

fn default_strategy() -> TargetStrategy {
    TargetStrategy::Random
}

impl Default for SweepFixed {
    fn default() -> Self {
        SweepFixed {
            lambda: estimates::LAMBDA,
            delta_pre: estimates::DELTA_PRE,
            phi_ctx: estimates::PHI_CTX,
            strategy: TargetStrategy::Random,
        }
    }
}

fn plan_for(
    kind: InterventionKind,
    eps: f64,
    delta: f64,
    phi: f64,
    strategy: TargetStrategy,
    seed: u64,
) -> InterventionPlan {
    match kind {
        InterventionKind::Nudge => InterventionPlan::nudge(eps),
        InterventionKind::Prebunk => InterventionPlan::prebunk(eps, delta, strategy, seed),
        InterventionKind::Contextualize => InterventionPlan::contextualize(eps, ContextTiming::Stage(phi)),
    }
}

/// Grid over `kind` strength (rows) and contagiousness `eta` (columns).
/// Relative prevalence is normalized per column by the no-intervention
/// batch. For contextualization, `T` is resolved per `eta` first.
pub fn sweep_strength_vs_contagiousness(
    graph: &DirectedGraph,
    kind: InterventionKind,
    eps_grid: &[f64],
    eta_grid: &[f64],
    fixed: SweepFixed,
    seed: NodeId,
    cfg: &RunConfig,
) -> Result<SweepGrid> {
    check_unit_grid("eps_grid", eps_grid)?;
    check_unit_grid("eta_grid", eta_grid)?;
    let columns: Vec<(DiffusionParams, Option<f64>)> = eta_grid
        .iter()
        .map(|&eta| {
            let params = DiffusionParams::new(eta, fixed.lambda)?;
            let t = match kind {
                InterventionKind::Contextualize => Some(resolve_ctx_time(
                    graph,
                    params,
                    seed,
                    fixed.phi_ctx,
                    &cfg.ctx_resolution(),
                )?),
                _ => None,
            };
            Ok((params, t))
        })
        .collect::<Result<_>>()?;
    let plan = |eps: f64| {
        plan_for(
            kind,
            eps,
            fixed.delta_pre,
            fixed.phi_ctx,
            fixed.strategy,
            cfg.master_seed,
        )
    };
    assemble(
        graph,
        seed,
        cfg,
        Axis::new("epsilon", eps_grid.to_vec()),
        Axis::new("eta", eta_grid.to_vec()),
        |i, j| (columns[j].0, plan(eps_grid[i]), columns[j].1),
        |j| (columns[j].0, columns[j].1),
        matches!(kind, InterventionKind::Contextualize),
    )
}

/// Second axis for [`sweep_scale_or_timing`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScaleOrTiming {
    /// Columns are the targeted fraction `delta_pre`.
    Prebunk { strategy: TargetStrategy },
    /// Columns are the stage `phi_ctx`.
    Contextualize,
}

/// Grid over strength (rows) and scale `delta_pre` or timing `phi_ctx`
/// (columns) at fixed diffusion parameters.
pub fn sweep_scale_or_timing(
    graph: &DirectedGraph,
    kind: ScaleOrTiming,
    eps_grid: &[f64],
    axis2: &[f64],
    params: DiffusionParams,
    seed: NodeId,
    cfg: &RunConfig,
) -> Result<SweepGrid> {
    check_unit_grid("eps_grid", eps_grid)?;
    check_unit_grid("axis2", axis2)?;
    params.validate()?;
    match kind {
        ScaleOrTiming::Prebunk { strategy } => assemble(
            graph,
            seed,
            cfg,
            Axis::new("epsilon", eps_grid.to_vec()),
            Axis::new("delta", axis2.to_vec()),
            |i, j| {
                let plan = InterventionPlan::prebunk(eps_grid[i], axis2[j], strategy, cfg.master_seed);
                (params, plan, None)
            },
            |_| (params, None),
            false,
        ),
        ScaleOrTiming::Contextualize => {
            let times: Vec<f64> = axis2
                .iter()
                .map(|&phi| resolve_ctx_time(graph, params, seed, phi, &cfg.ctx_resolution()))
                .collect::<Result<_>>()?;
            assemble(
                graph,
                seed,
                cfg,
                Axis::new("epsilon", eps_grid.to_vec()),
                Axis::new("phi", axis2.to_vec()),
                |i, j| {
                    let plan = InterventionPlan::contextualize(eps_grid[i], ContextTiming::Stage(axis2[j]));
                    (params, plan, Some(times[j]))
                },
                |_| (params, None),
                true,
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    graph: &DirectedGraph,
    seed: NodeId,
    cfg: &RunConfig,
    axis1: Axis,
    axis2: Axis,
    cell: impl Fn(usize, usize) -> (DiffusionParams, InterventionPlan, Option<f64>) + Sync,
    column_baseline: impl Fn(usize) -> (DiffusionParams, Option<f64>) + Sync,
    record_ctx: bool,
) -> Result<SweepGrid> {
    let (rows, cols) = (axis1.values.len(), axis2.values.len());
    let baseline = map_indexed(cfg.execution, cols, |j| {
        let (params, _) = column_baseline(j);
        summary(graph, params, InterventionPlan::none(), seed, None, cfg).map(|s| s.mean_prevalence)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let cells = map_indexed(cfg.execution, rows * cols, |k| {
        let (params, plan, t) = cell(k / cols, k % cols);
        summary(graph, params, plan, seed, t, cfg)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut prevalence = vec![vec![0.0; cols]; rows];
    let mut relative = vec![vec![0.0; cols]; rows];
    let mut std = vec![vec![0.0; cols]; rows];
    for (k, s) in cells.iter().enumerate() {
        let (i, j) = (k / cols, k % cols);
        prevalence[i][j] = s.mean_prevalence;
        relative[i][j] = s.mean_prevalence / baseline[j];
        std[i][j] = s.prevalence_std;
    }
    let ctx_time = record_ctx.then(|| (0..cols).map(|j| cell(0, j).2.unwrap_or(0.0)).collect());
    Ok(SweepGrid {
        axis1,
        axis2,
        prevalence,
        relative_prevalence: relative,
        std,
        baseline,
        ctx_time,
    })
}

/// Difference from random targeting, `rho_Random - rho_strategy`, over a
/// strength by scale grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyDifferential {
    pub strategy: TargetStrategy,
    pub eps: Vec<f64>,
    pub deltas: Vec<f64>,
    pub prevalence: Vec<Vec<f64>>,
    pub delta_rho: Vec<Vec<f64>>,
    /// Standard error of the mean of per-run paired differences.
    pub paired_se: Vec<Vec<f64>>,
}

impl StrategyDifferential {
    pub fn to_csv_rows(&self, out: &mut String) {
        for (i, e) in self.eps.iter().enumerate() {
            for (j, d) in self.deltas.iter().enumerate() {
                out.push_str(&format!(
                    "{},{e},{d},{},{},{}\n",
                    self.strategy.name(),
                    self.prevalence[i][j],
                    self.delta_rho[i][j],
                    self.paired_se[i][j]
                ));
            }
        }
    }
}

pub const DIFFERENTIAL_CSV_HEADER: &str = "strategy,epsilon,delta,prevalence,delta_rho,paired_se\n";

pub fn differentials_csv(diffs: &[StrategyDifferential]) -> String {
    let mut out = String::from(DIFFERENTIAL_CSV_HEADER);
    for d in diffs {
        d.to_csv_rows(&mut out);
    }
    out
}

/// Prebunking differentials for each strategy against `Random`, which must
/// be among `strategies`. All strategies share the run seeds of each cell.
pub fn targeting_differentials(
    graph: &DirectedGraph,
    eps_grid: &[f64],
    delta_grid: &[f64],
    strategies: &[TargetStrategy],
    params: DiffusionParams,
    seed: NodeId,
    cfg: &RunConfig,
) -> Result<Vec<StrategyDifferential>> {
    check_unit_grid("eps_grid", eps_grid)?;
    check_unit_grid("delta_grid", delta_grid)?;
    let random = strategies
        .iter()
        .position(|&s| s == TargetStrategy::Random)
        .ok_or_else(|| Error::Invalid("targeting differentials need Random as the baseline strategy".into()))?;
    let (rows, cols, ns) = (eps_grid.len(), delta_grid.len(), strategies.len());
    let runs: Vec<Vec<f64>> = map_indexed(cfg.execution, rows * cols * ns, |k| {
        let (cell, s) = (k / ns, k % ns);
        let plan = InterventionPlan::prebunk(
            eps_grid[cell / cols],
            delta_grid[cell % cols],
            strategies[s],
            cfg.master_seed,
        );
        summary(graph, params, plan, seed, None, cfg).map(|m| m.per_run)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(strategies
        .iter()
        .enumerate()
        .map(|(s, &strategy)| {
            let mut prevalence = vec![vec![0.0; cols]; rows];
            let mut delta_rho = vec![vec![0.0; cols]; rows];
            let mut paired_se = vec![vec![0.0; cols]; rows];
            for i in 0..rows {
                for j in 0..cols {
                    let cell = i * cols + j;
                    let mine = &runs[cell * ns + s];
                    let base = &runs[cell * ns + random];
                    let diffs: Vec<f64> = base.iter().zip(mine).map(|(b, m)| b - m).collect();
                    let (d, sd) = mean_std(&diffs);
                    prevalence[i][j] = mean_std(mine).0;
                    delta_rho[i][j] = d;
                    paired_se[i][j] = sd / (diffs.len() as f64).sqrt();
                }
            }
            StrategyDifferential {
                strategy,
                eps: eps_grid.to_vec(),
                deltas: delta_grid.to_vec(),
                prevalence,
                delta_rho,
                paired_se,
            }
        })
        .collect())
}

/// One setting of the combined-intervention comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSetting {
    pub name: String,
    pub eps_nudge: f64,
    pub eps_prebunk: f64,
    pub eps_ctx: f64,
    pub delta_pre: f64,
    pub phi_ctx: f64,
    #[serde(default = "default_strategy")]
    pub strategy: TargetStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub eta: f64,
    pub lambda: f64,
    pub settings: Vec<ScenarioSetting>,
}

impl ScenarioSpec {
    /// The four settings: estimated parameters, strength +0.1, reach
    /// expanded (delta +0.1, phi -0.1), and both.
    pub fn estimated() -> Self {
        let base = ScenarioSetting {
            name: "i-estimated".into(),
            eps_nudge: estimates::EPS_NUDGE,
            eps_prebunk: estimates::EPS_PREBUNK,
            eps_ctx: estimates::EPS_CTX,
            delta_pre: estimates::DELTA_PRE,
            phi_ctx: estimates::PHI_CTX,
            strategy: TargetStrategy::Random,
        };
        let stronger = |s: &ScenarioSetting, name: &str| ScenarioSetting {
            name: name.into(),
            eps_nudge: s.eps_nudge + 0.1,
            eps_prebunk: s.eps_prebunk + 0.1,
            eps_ctx: s.eps_ctx + 0.1,
            ..s.clone()
        };
        let wider = |s: &ScenarioSetting, name: &str| ScenarioSetting {
            name: name.into(),
            delta_pre: s.delta_pre + 0.1,
            phi_ctx: s.phi_ctx - 0.1,
            ..s.clone()
        };
        let ii = stronger(&base, "ii-stronger");
        let iii = wider(&base, "iii-wider");
        let iv = wider(&ii, "iv-stronger-wider");
        ScenarioSpec {
            eta: estimates::ETA,
            lambda: estimates::LAMBDA,
            settings: vec![base, ii, iii, iv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub setting: String,
    /// `nudge`, `prebunk`, `contextualize` or `combined`.
    pub intervention: String,
    pub ctx_time: Option<f64>,
    pub mean_prevalence: f64,
    pub mean_relative: f64,
    /// Per-run prevalence divided by the paired no-intervention run.
    pub per_run_relative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSet {
    pub eta: f64,
    pub lambda: f64,
    pub baseline_prevalence: f64,
    pub results: Vec<ScenarioResult>,
}

impl ScenarioSet {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("setting,intervention,mean_prevalence,mean_relative,ctx_time\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.setting,
                r.intervention,
                r.mean_prevalence,
                r.mean_relative,
                r.ctx_time.map(|t| t.to_string()).unwrap_or_default()
            ));
        }
        out
    }

    pub fn find(&self, setting: &str, intervention: &str) -> Option<&ScenarioResult> {
        self.results
            .iter()
            .find(|r| r.setting == setting && r.intervention == intervention)
    }
}

/// Single and combined interventions for every setting, each run paired
/// with the no-intervention run that shares its random numbers.
pub fn combined_scenarios(
    graph: &DirectedGraph,
    spec: &ScenarioSpec,
    seed: NodeId,
    cfg: &RunConfig,
) -> Result<ScenarioSet> {
    if spec.settings.is_empty() {
        return Err(Error::Empty("scenario settings"));
    }
    let params = DiffusionParams::new(spec.eta, spec.lambda)?;
    let base = summary(graph, params, InterventionPlan::none(), seed, None, cfg)?;
    let mut jobs: Vec<(String, &'static str, InterventionPlan, Option<f64>)> = Vec::new();
    for s in &spec.settings {
        let t = resolve_ctx_time(graph, params, seed, s.phi_ctx, &cfg.ctx_resolution())?;
        let nudge = InterventionPlan::nudge(s.eps_nudge);
        let prebunk = InterventionPlan::prebunk(s.eps_prebunk, s.delta_pre, s.strategy, cfg.master_seed);
        let ctx = InterventionPlan::contextualize(s.eps_ctx, ContextTiming::Stage(s.phi_ctx));
        jobs.push((s.name.clone(), "nudge", nudge, None));
        jobs.push((s.name.clone(), "prebunk", prebunk, None));
        jobs.push((s.name.clone(), "contextualize", ctx, Some(t)));
        jobs.push((s.name.clone(), "combined", nudge.with(prebunk).with(ctx), Some(t)));
    }
    let summaries = map_indexed(cfg.execution, jobs.len(), |k| {
        let (_, _, plan, t) = &jobs[k];
        summary(graph, params, *plan, seed, *t, cfg)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let results = jobs
        .into_iter()
        .zip(summaries)
        .map(|((setting, intervention, _, t), s)| {
            let per_run_relative: Vec<f64> = s.per_run.iter().zip(&base.per_run).map(|(x, b)| x / b).collect();
            ScenarioResult {
                setting,
                intervention: intervention.to_string(),
                ctx_time: t,
                mean_prevalence: s.mean_prevalence,
                mean_relative: mean_std(&per_run_relative).0,
                per_run_relative,
            }
        })
        .collect();
    Ok(ScenarioSet {
        eta: spec.eta,
        lambda: spec.lambda,
        baseline_prevalence: base.mean_prevalence,
        results,
    })
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| {
                if i + 1 == steps {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

/// `steps` log-spaced values from `center / factor` to `center * factor`,
/// with `center` itself in the middle when `steps` is odd.
pub fn logspace_around(center: f64, factor: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![center; steps];
    }
    let half = (steps - 1) as f64 / 2.0;
    (0..steps)
        .map(|i| {
            let k = i as f64 - half;
            if k == 0.0 {
                center
            } else {
                center * factor.powf(k / half)
            }
        })
        .collect()
}

/// A fully specified experiment, as named by a preset or a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentSpec {
    StrengthVsContagiousness {
        kind: InterventionKind,
        eps: Vec<f64>,
        eta: Vec<f64>,
        #[serde(default)]
        fixed: SweepFixed,
    },
    ScaleOrTiming {
        sweep: ScaleOrTiming,
        eps: Vec<f64>,
        axis2: Vec<f64>,
        eta: f64,
        lambda: f64,
    },
    Targeting {
        eps: Vec<f64>,
        delta: Vec<f64>,
        strategies: Vec<TargetStrategy>,
        eta: f64,
        lambda: f64,
    },
    Scenarios(ScenarioSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub runs: usize,
    pub spec: ExperimentSpec,
}

/// Preset names. `-desk` variants use the default desk-scale grids and 200
/// runs per cell; `-full` variants use finer grids and 1000 runs.
pub const PRESETS: &[&str] = &[
    "paper-fig3-nudge-desk",
    "paper-fig3-prebunk-desk",
    "paper-fig3-ctx-desk",
    "paper-fig4-prebunk-desk",
    "paper-fig4-ctx-desk",
    "paper-fig5-targeting-desk",
    "paper-fig6-scenarios-desk",
    "paper-fig3-nudge-full",
    "paper-fig3-prebunk-full",
    "paper-fig3-ctx-full",
    "paper-fig4-prebunk-full",
    "paper-fig4-ctx-full",
    "paper-fig5-targeting-full",
    "paper-fig6-scenarios-full",
];

pub fn preset(name: &str) -> Result<Preset> {
    let (stem, full) = match (name.strip_suffix("-desk"), name.strip_suffix("-full")) {
        (Some(s), _) => (s, false),
        (_, Some(s)) => (s, true),
        _ => return Err(unknown_preset(name)),
    };
    let (eps_steps, eta_steps, unit_steps, runs) = if full { (51, 31, 51, 1000) } else { (21, 15, 11, 200) };
    let eps = linspace(0.0, 1.0, eps_steps);
    let unit = linspace(0.0, 1.0, unit_steps);
    let eta = logspace_around(estimates::ETA, 4.0, eta_steps);
    let strength = |kind| ExperimentSpec::StrengthVsContagiousness {
        kind,
        eps: eps.clone(),
        eta: eta.clone(),
        fixed: SweepFixed::default(),
    };
    let scale = |sweep| ExperimentSpec::ScaleOrTiming {
        sweep,
        eps: eps.clone(),
        axis2: unit.clone(),
        eta: estimates::ETA,
        lambda: estimates::LAMBDA,
    };
    let spec = match stem {
        "paper-fig3-nudge" => strength(InterventionKind::Nudge),
        "paper-fig3-prebunk" => strength(InterventionKind::Prebunk),
        "paper-fig3-ctx" => strength(InterventionKind::Contextualize),
        "paper-fig4-prebunk" => scale(ScaleOrTiming::Prebunk {
            strategy: TargetStrategy::Random,
        }),
        "paper-fig4-ctx" => scale(ScaleOrTiming::Contextualize),
        "paper-fig5-targeting" => ExperimentSpec::Targeting {
            eps: eps.clone(),
            delta: unit.clone(),
            strategies: TargetStrategy::ALL.to_vec(),
            eta: estimates::ETA,
            lambda: estimates::LAMBDA,
        },
        "paper-fig6-scenarios" => ExperimentSpec::Scenarios(ScenarioSpec::estimated()),
        _ => return Err(unknown_preset(name)),
    };
    Ok(Preset {
        name: name.to_string(),
        runs,
        spec,
    })
}

fn unknown_preset(name: &str) -> Error {
    Error::Invalid(format!(
        "unknown preset {name:?}; available presets: {}",
        PRESETS.join(", ")
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentOutput {
    Grid(SweepGrid),
    Differentials(Vec<StrategyDifferential>),
    Scenarios(ScenarioSet),
}

impl ExperimentOutput {
    /// The CSV rendering of the result.
    pub fn to_csv(&self) -> String {
        match self {
            ExperimentOutput::Grid(g) => g.to_csv(),
            ExperimentOutput::Differentials(d) => differentials_csv(d),
            ExperimentOutput::Scenarios(s) => s.to_csv(),
        }
    }
}

pub fn run_experiment(
    graph: &DirectedGraph,
    spec: &ExperimentSpec,
    seed: NodeId,
    cfg: &RunConfig,
) -> Result<ExperimentOutput> {
    Ok(match spec {
        ExperimentSpec::StrengthVsContagiousness { kind, eps, eta, fixed } => ExperimentOutput::Grid(
            sweep_strength_vs_contagiousness(graph, *kind, eps, eta, *fixed, seed, cfg)?,
        ),
        ExperimentSpec::ScaleOrTiming {
            sweep,
            eps,
            axis2,
            eta,
            lambda,
        } => ExperimentOutput::Grid(sweep_scale_or_timing(
            graph,
            *sweep,
            eps,
            axis2,
            DiffusionParams::new(*eta, *lambda)?,
            seed,
            cfg,
        )?),
        ExperimentSpec::Targeting {
            eps,
            delta,
            strategies,
            eta,
            lambda,
        } => ExperimentOutput::Differentials(targeting_differentials(
            graph,
            eps,
            delta,
            strategies,
            DiffusionParams::new(*eta, *lambda)?,
            seed,
            cfg,
        )?),
        ExperimentSpec::Scenarios(s) => ExperimentOutput::Scenarios(combined_scenarios(graph, s, seed, cfg)?),
    })
}
