//! One function per subcommand. Each loads its inputs, runs the core
//! routine and stages its files in an [`Outputs`] set.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::anyhow;
use ctic_core::calibration::{
    cascades_csv, estimate_intervention_strength, filter_cascades, fit_diffusion_params, load_cascades, load_survey,
    synthesize_cascades, FitConfig,
};
use ctic_core::diffusion::{max_out_degree_node, uniform_grid};
use ctic_core::experiments::{preset, run_experiment, ExperimentSpec, RunConfig};
use ctic_core::graph::{load_edge_list, load_susceptibility, prepare_scored_network};
use ctic_core::qmf::{critical_curve, nudge_critical_epsilon, spectral_radius, CurveAxis, SpectralConfig};
use ctic_core::{
    output, resolve_ctx_time, select_seed, synth, CascadeModel, ContextTiming, CtxResolution, DiffusionParams,
    DirectedGraph, Error as CoreError, MonteCarloConfig, NodeId,
};
use serde::Serialize;

use crate::config::{Config, ExperimentConfig, DEFAULT_EXPERIMENT_RUNS};
use crate::manifest::{digest_file, FileDigest, Outputs, PresetNote, RunManifest};
use crate::{CliError, Failure, ResultExt};

/// Everything a command needs besides its own config section.
pub struct Invocation {
    pub command: &'static str,
    pub cfg: Config,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub runs_override: Option<usize>,
    pub preset_override: Option<String>,
    pub threads: usize,
    pub started: Instant,
}

type CmdResult = Result<(), CliError>;

/// Errors from the core library are input problems except for the one
/// internal invariant it reports.
fn core(e: CoreError) -> CliError {
    let kind = match e {
        CoreError::MissingContextTime => Failure::Compute,
        _ => Failure::Input,
    };
    CliError::new(kind, anyhow::Error::new(e))
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub source: String,
    pub nodes: usize,
    pub edges: usize,
    pub seed_node: String,
    pub seed_out_degree: usize,
    pub seed_susceptibility: f64,
    pub seed_method: &'static str,
}

struct Network {
    graph: DirectedGraph,
    seed: NodeId,
    summary: GraphSummary,
    inputs: Vec<FileDigest>,
}

fn load_network(cfg: &Config) -> Result<Network, CliError> {
    let g = &cfg.graph;
    let mut inputs = Vec::new();
    let (graph, source, desk_seed) = match &g.edges {
        None => {
            if g.susceptibility.is_some() {
                return Err(CliError::input(anyhow!(
                    "graph.susceptibility is set but graph.edges is not"
                )));
            }
            let (graph, seed) = synth::desk_network(g.network_seed).map_err(core)?;
            (
                graph,
                format!("synthetic desk network (network_seed {})", g.network_seed),
                Some(seed),
            )
        }
        Some(edges) => {
            inputs.push(digest_file("edges", edges).input()?);
            let (graph, _) = load_edge_list(edges, None).map_err(core)?;
            let graph = match &g.susceptibility {
                Some(path) => {
                    inputs.push(digest_file("susceptibility", path).input()?);
                    let (graph, report) = if g.scored_only {
                        prepare_scored_network(graph, path)
                    } else {
                        load_susceptibility(graph, path)
                    }
                    .map_err(core)?;
                    log::info!(
                        "susceptibility: {} assigned, {} unlisted, {} unknown ids",
                        report.assigned,
                        report.unlisted,
                        report.unknown_ids
                    );
                    graph
                }
                None => {
                    let n = graph.node_count();
                    graph
                        .with_susceptibility(vec![g.default_susceptibility; n])
                        .map_err(core)?
                }
            };
            (graph, edges.display().to_string(), None)
        }
    };
    if graph.node_count() == 0 {
        return Err(CliError::input(anyhow!("{source}: graph has no nodes")));
    }
    let (seed, method) = match (&g.seed_node, desk_seed) {
        (Some(label), _) => {
            let v = graph
                .find(label)
                .ok_or_else(|| CliError::input(anyhow!("graph.seed_node {label:?} is not in the graph")))?;
            (v, "configured")
        }
        (None, Some(v)) => (v, "fully_susceptible_max_out_degree"),
        (None, None) => match select_seed(&graph) {
            Ok(v) => (v, "fully_susceptible_max_out_degree"),
            Err(e @ CoreError::NoFullySusceptibleNode { .. }) if g.seed_fallback => {
                log::warn!("{e}; falling back to the largest out-degree node");
                (max_out_degree_node(&graph).map_err(core)?, "max_out_degree_fallback")
            }
            Err(e) => {
                return Err(CliError::input(
                    anyhow::Error::new(e).context("seed selection failed (set graph.seed_node or graph.seed_fallback)"),
                ))
            }
        },
    };
    let summary = GraphSummary {
        source,
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        seed_node: graph.label(seed).to_string(),
        seed_out_degree: graph.out_degree(seed),
        seed_susceptibility: graph.susceptibility()[seed.index()],
        seed_method: method,
    };
    log::info!(
        "graph: {} nodes, {} edges, seed {} (out-degree {})",
        summary.nodes,
        summary.edges,
        summary.seed_node,
        summary.seed_out_degree
    );
    Ok(Network {
        graph,
        seed,
        summary,
        inputs,
    })
}

fn manifest(
    inv: &Invocation,
    cfg: &Config,
    inputs: Vec<FileDigest>,
    preset: Option<String>,
) -> Result<RunManifest, CliError> {
    let mut inputs = inputs;
    if let Some(p) = &inv.config_path {
        inputs.insert(0, digest_file("config", p).input()?);
    }
    Ok(RunManifest {
        command: inv.command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION"),
        master_seed: cfg.seed,
        threads: inv.threads,
        preset: preset.map(|name| PresetNote {
            name,
            note: "run counts and grid resolutions are choices of this tool, not reported values",
        }),
        resolved_config: serde_json::to_value(cfg).compute()?,
        inputs,
        outputs: Vec::new(),
        duration_seconds: 0.0,
    })
}

fn finish(inv: &Invocation, out: Outputs, manifest: RunManifest) -> CmdResult {
    let dir = out.dir().display().to_string();
    let m = out.commit(manifest, inv.started).output()?;
    log::info!(
        "wrote {} files and manifest to {dir} in {:.2}s",
        m.outputs.len(),
        m.duration_seconds
    );
    Ok(())
}

fn runs_for(inv: &Invocation, section: Option<usize>, fallback: usize) -> Result<usize, CliError> {
    let runs = inv.runs_override.or(section).or(inv.cfg.runs).unwrap_or(fallback);
    if runs == 0 {
        return Err(CliError::input(anyhow!("runs must be at least 1")));
    }
    Ok(runs)
}

pub fn simulate(inv: Invocation) -> CmdResult {
    let mut cfg = inv.cfg.clone();
    let net = load_network(&cfg)?;
    let sc = &cfg.simulate;
    let runs = runs_for(&inv, sc.runs, 1)?;
    let params = DiffusionParams::new(sc.eta, sc.lambda)
        .map_err(|e| core(e).context("[simulate]"))?
        .with_timing(sc.timing);
    let plan = sc.interventions;
    plan.validate()
        .map_err(|e| core(e).context("[simulate.interventions]"))?;
    if !(sc.curve_step > 0.0 && sc.curve_end >= 0.0) {
        return Err(CliError::input(anyhow!(
            "[simulate] curve_step must be positive and curve_end non-negative"
        )));
    }
    let ctx_time = match plan.contextualize.map(|c| c.timing) {
        Some(ContextTiming::Stage(phi)) => {
            let res = CtxResolution {
                time_resolution: sc.ctx_resolution,
                execution: cfg.execution,
                ..CtxResolution::new(sc.ctx_runs, cfg.seed)
            };
            let t = resolve_ctx_time(&net.graph, params, net.seed, phi, &res).map_err(core)?;
            log::info!("contextualization at stage {phi} resolves to t = {t} h");
            Some(t)
        }
        _ => None,
    };
    let model = CascadeModel::new(&net.graph, params, plan, net.seed, ctx_time).map_err(core)?;
    let first = model.run_indexed(cfg.seed, 0);
    let mc = MonteCarloConfig::new(runs, cfg.seed)
        .with_grid(uniform_grid(sc.curve_end, sc.curve_step))
        .with_execution(cfg.execution);
    log::info!("simulating {runs} runs");
    let summary = model.monte_carlo(&mc).map_err(core)?;

    #[derive(Serialize)]
    struct SimulateReport<'a> {
        graph: &'a GraphSummary,
        ctx_time: Option<f64>,
        first_run_prevalence: f64,
        summary: &'a ctic_core::MonteCarloSummary,
    }
    let mut out = Outputs::new(inv.out_dir.clone());
    out.add("activations.csv", output::activation_csv(&net.graph, &first));
    out.add("curve.csv", output::curve_csv(&summary.mean_curve));
    out.add_json(
        "summary.json",
        &SimulateReport {
            graph: &net.summary,
            ctx_time,
            first_run_prevalence: first.final_prevalence,
            summary: &summary,
        },
    )
    .compute()?;
    cfg.simulate.runs = Some(runs);
    let m = manifest(&inv, &cfg, net.inputs, None)?;
    finish(&inv, out, m)
}

/// Which experiment families a command accepts.
fn accepts(command: &str, spec: &ExperimentSpec) -> bool {
    matches!(
        (command, spec),
        ("sweep", ExperimentSpec::StrengthVsContagiousness { .. })
            | ("sweep", ExperimentSpec::ScaleOrTiming { .. })
            | ("targeting", ExperimentSpec::Targeting { .. })
            | ("scenarios", ExperimentSpec::Scenarios(_))
    )
}

pub fn experiment(inv: Invocation) -> CmdResult {
    let mut cfg = inv.cfg.clone();
    let section: &mut ExperimentConfig = match inv.command {
        "sweep" => &mut cfg.sweep,
        "targeting" => &mut cfg.targeting,
        "scenarios" => &mut cfg.scenarios,
        other => unreachable!("{other} is not an experiment command"),
    };
    let preset_name = inv.preset_override.clone().or_else(|| section.preset.clone());
    let (spec, preset_runs) = match (&preset_name, &section.spec) {
        (Some(name), _) => {
            let p = preset(name).map_err(core)?;
            (p.spec, Some(p.runs))
        }
        (None, Some(spec)) => (spec.clone(), None),
        (None, None) => {
            return Err(CliError::input(anyhow!(
                "{0}: give --preset or a [{0}] preset / spec in the config",
                inv.command
            )))
        }
    };
    if !accepts(inv.command, &spec) {
        return Err(CliError::input(anyhow!(
            "{}: experiment {:?} belongs to another subcommand",
            inv.command,
            preset_name.as_deref().unwrap_or("spec")
        )));
    }
    let runs = runs_for(&inv, section.runs, preset_runs.unwrap_or(DEFAULT_EXPERIMENT_RUNS))?;
    section.preset = preset_name.clone();
    section.spec = Some(spec.clone());
    section.runs = Some(runs);

    let net = load_network(&cfg)?;
    let run_cfg = RunConfig {
        execution: cfg.execution,
        ..RunConfig::new(runs, cfg.seed)
    };
    log::info!("{}: {runs} runs per cell", inv.command);
    let result = run_experiment(&net.graph, &spec, net.seed, &run_cfg).map_err(core)?;

    #[derive(Serialize)]
    struct ExperimentReport<'a> {
        graph: &'a GraphSummary,
        result: &'a ctic_core::experiments::ExperimentOutput,
    }
    let csv_name = match inv.command {
        "sweep" => "grid.csv",
        "targeting" => "differentials.csv",
        _ => "scenarios.csv",
    };
    let mut out = Outputs::new(inv.out_dir.clone());
    out.add(csv_name, result.to_csv());
    out.add_json(
        "result.json",
        &ExperimentReport {
            graph: &net.summary,
            result: &result,
        },
    )
    .compute()?;
    let m = manifest(&inv, &cfg, net.inputs, preset_name)?;
    finish(&inv, out, m)
}

pub fn calibrate_diffusion(inv: Invocation) -> CmdResult {
    let mut cfg = inv.cfg.clone();
    let net = load_network(&cfg)?;
    let mut inputs = net.inputs;
    let cd = &cfg.calibrate_diffusion;
    let mut out = Outputs::new(inv.out_dir.clone());
    let cascades = match (&cd.cascades, &cd.synthetic) {
        (Some(path), None) => {
            inputs.push(digest_file("cascades", path).input()?);
            load_cascades(path).map_err(core)?
        }
        (None, Some(s)) => {
            let params = DiffusionParams::new(s.eta, s.lambda)
                .map_err(|e| core(e).context("[calibrate_diffusion.synthetic]"))?;
            let cascades = synthesize_cascades(&net.graph, params, s.count, s.seed).map_err(core)?;
            out.add("cascades.csv", cascades_csv(&cascades));
            cascades
        }
        (Some(_), Some(_)) => {
            return Err(CliError::input(anyhow!(
                "[calibrate_diffusion] set either cascades or synthetic, not both"
            )))
        }
        (None, None) => {
            return Err(CliError::input(anyhow!(
                "[calibrate_diffusion] needs a cascades file or a synthetic block"
            )))
        }
    };
    let total = cascades.len();
    let cascades = filter_cascades(cascades, cd.min_size, cd.size_window_hours);
    log::info!("{} of {total} cascades pass the size filter", cascades.len());
    if cascades.is_empty() {
        return Err(CliError::input(anyhow!("no cascades left after filtering")));
    }

    let defaults = FitConfig::new(cfg.seed);
    let fit_cfg = FitConfig {
        eta_grid: cd.eta_grid.clone().unwrap_or(defaults.eta_grid),
        lambda_grid: cd.lambda_grid.clone().unwrap_or(defaults.lambda_grid),
        loss_window_hours: cd.loss_window_hours.unwrap_or(defaults.loss_window_hours),
        loss_step_hours: cd.loss_step_hours.unwrap_or(defaults.loss_step_hours),
        runs_per_cell: inv.runs_override.or(cd.runs_per_cell).unwrap_or(defaults.runs_per_cell),
        include_root: cd.include_root.unwrap_or(defaults.include_root),
        execution: cfg.execution,
        master_seed: cfg.seed,
    };
    log::info!(
        "fitting over {} x {} cells, {} runs each",
        fit_cfg.eta_grid.len(),
        fit_cfg.lambda_grid.len(),
        fit_cfg.runs_per_cell
    );
    let fit = fit_diffusion_params(&net.graph, &cascades, &fit_cfg).map_err(core)?;
    log::info!(
        "fitted eta = {}, lambda = {} (loss {:.4})",
        fit.eta_hat,
        fit.lambda_hat,
        fit.loss
    );

    let mut curve = String::from("time,mean_count\n");
    for (t, c) in &fit.empirical_curve {
        curve.push_str(&format!("{t},{c}\n"));
    }
    out.add("loss_surface.csv", fit.surface_csv());
    out.add("empirical_curve.csv", curve);
    #[derive(Serialize)]
    struct FitReport<'a> {
        eta_hat: f64,
        lambda_hat: f64,
        loss: f64,
        seed_node: &'a str,
        cascades: usize,
        fit: &'a FitConfig,
    }
    out.add_json(
        "fit.json",
        &FitReport {
            eta_hat: fit.eta_hat,
            lambda_hat: fit.lambda_hat,
            loss: fit.loss,
            seed_node: &fit.seed_node,
            cascades: fit.cascades,
            fit: &fit_cfg,
        },
    )
    .compute()?;
    let cd = &mut cfg.calibrate_diffusion;
    cd.eta_grid = Some(fit_cfg.eta_grid);
    cd.lambda_grid = Some(fit_cfg.lambda_grid);
    cd.loss_window_hours = Some(fit_cfg.loss_window_hours);
    cd.loss_step_hours = Some(fit_cfg.loss_step_hours);
    cd.runs_per_cell = Some(fit_cfg.runs_per_cell);
    cd.include_root = Some(fit_cfg.include_root);
    let m = manifest(&inv, &cfg, inputs, None)?;
    finish(&inv, out, m)
}

pub fn calibrate_intervention(inv: Invocation) -> CmdResult {
    let cfg = inv.cfg.clone();
    let ci = &cfg.calibrate_intervention;
    let path = ci
        .survey
        .as_ref()
        .ok_or_else(|| CliError::input(anyhow!("[calibrate_intervention] survey is not set")))?;
    let inputs = vec![digest_file("survey", path).input()?];
    let records = load_survey(path).map_err(core)?;
    let est = estimate_intervention_strength(&records, ci.control_floor).map_err(core)?;
    for (item, mean) in &est.excluded_items {
        log::warn!(
            "item {item} excluded: control mean {mean:.4} below floor {}",
            ci.control_floor
        );
    }

    let mut per_item = String::from("study,item_id,control_mean,treatment_mean,suppression\n");
    for r in &est.per_item {
        per_item.push_str(&format!(
            "{},{},{},{},{}\n",
            r.study.as_deref().unwrap_or(""),
            r.item_id,
            r.control_mean,
            r.treatment_mean,
            r.suppression
        ));
    }
    let mut out = Outputs::new(inv.out_dir.clone());
    out.add("per_item.csv", per_item);
    out.add_json("strength.json", &est).compute()?;
    let m = manifest(&inv, &cfg, inputs, None)?;
    finish(&inv, out, m)?;
    // the one human-readable result line; the files above carry the detail
    println!(
        "e(a) = {:.6} over {} items ({} excluded)",
        est.mean_epsilon,
        est.per_item.len(),
        est.excluded_items.len()
    );
    Ok(())
}

pub fn qmf(inv: Invocation) -> CmdResult {
    let mut cfg = inv.cfg.clone();
    let net = load_network(&cfg)?;
    let q = &cfg.qmf;
    let sc = SpectralConfig {
        tol: q.tol,
        max_iter: q.max_iter,
    };
    let base = spectral_radius(&net.graph, 1.0, None, &sc).map_err(core)?;
    let at_eta = spectral_radius(&net.graph, q.eta, None, &sc).map_err(|e| core(e).context("[qmf]"))?;
    let nudge = nudge_critical_epsilon(&net.graph, q.eta, &sc).map_err(core)?;
    if !at_eta.converged {
        log::warn!("power iteration stopped at residual {:.3e}", at_eta.residual);
    }
    log::info!("spectral radius at eta = {}: {}", q.eta, at_eta.spectral_radius);

    #[derive(Serialize)]
    struct SpectralSummary<'a> {
        graph: &'a GraphSummary,
        eta: f64,
        spectral_radius: f64,
        /// Radius of `A diag(s)`, the value at eta = 1.
        base_radius: f64,
        iterations: usize,
        converged: bool,
        residual: f64,
        nudge_critical_epsilon: Option<f64>,
    }
    let mut out = Outputs::new(inv.out_dir.clone());
    out.add_json(
        "spectral.json",
        &SpectralSummary {
            graph: &net.summary,
            eta: q.eta,
            spectral_radius: at_eta.spectral_radius,
            base_radius: base.spectral_radius,
            iterations: at_eta.iterations,
            converged: at_eta.converged,
            residual: at_eta.residual,
            nudge_critical_epsilon: nudge,
        },
    )
    .compute()?;

    if let Some(mut axis) = q.curve.clone() {
        // distance ranking needs an origin; default to the cascade seed
        if let CurveAxis::PrebunkDelta { targeting, .. } | CurveAxis::PrebunkEta { targeting, .. } = &mut axis {
            targeting.seed_node.get_or_insert(net.seed);
        }
        let curve = critical_curve(&net.graph, &axis, q.bisect_tol, &sc, cfg.execution).map_err(core)?;
        out.add("critical_curve.csv", curve.to_csv());
        out.add_json("critical_curve.json", &curve).compute()?;
        cfg.qmf.curve = Some(axis);
    }
    let m = manifest(&inv, &cfg, net.inputs, None)?;
    finish(&inv, out, m)
}

pub fn seed_select(inv: Invocation) -> CmdResult {
    let cfg = inv.cfg.clone();
    let net = load_network(&cfg)?;
    let mut out = Outputs::new(inv.out_dir.clone());
    out.add_json("seed.json", &net.summary).compute()?;
    let m = manifest(&inv, &cfg, net.inputs, None)?;
    finish(&inv, out, m)
}
