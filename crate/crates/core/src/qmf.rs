//! Spectral criticality of the linearized cascade.
//!
//! The cascade grows when the Perron root of `eta * A * diag(s)` exceeds one.
//! We work with `M = eta * diag(s) * A`, i.e. `M[v][u] = eta * s_v` for each
//! edge `u -> v`; the products `XY` and `YX` share their nonzero eigenvalues,
//! so `M` has the same Perron root.
//!
//! The Perron root of a reducible non-negative matrix is the largest Perron
//! root over its irreducible diagonal blocks, so the graph is split into
//! strongly connected components (keeping only edges with positive weight)
//! and each nontrivial block is handled by shifted power iteration. The shift
//! makes every block primitive, which guarantees convergence even for periodic
//! components such as plain cycles.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::graph::{strongly_connected_components, DirectedGraph, NodeId};
use crate::interventions::{rank_nodes, target_count, TargetStrategy};
use crate::parallel::{map_indexed, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    /// Relative eigen-residual at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralReport {
    pub spectral_radius: f64,
    /// Total iterations over all components (at least one).
    pub iterations: usize,
    pub converged: bool,
    /// Largest relative residual `|Mx - theta x| / |theta x|` over components.
    pub residual: f64,
}

/// Perron root of `eta * A * diag(s)`, with `s` taken from the graph unless
/// `susceptibility_override` is given.
pub fn spectral_radius(
    graph: &DirectedGraph,
    eta: f64,
    susceptibility_override: Option<&[f64]>,
    cfg: &SpectralConfig,
) -> Result<SpectralReport> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: cfg.tol,
            reason: "must be positive",
        });
    }
    if cfg.max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            value: 0.0,
            reason: "must be positive",
        });
    }
    let s = susceptibility_override.unwrap_or(graph.susceptibility());
    if s.len() != graph.node_count() {
        return Err(Error::Invalid(format!(
            "susceptibility override has {} entries for {} nodes",
            s.len(),
            graph.node_count()
        )));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            reason: "must be finite and non-negative",
        });
    }
    let trivial = SpectralReport {
        spectral_radius: 0.0,
        iterations: 1,
        converged: true,
        residual: 0.0,
    };
    if eta == 0.0 {
        return Ok(trivial);
    }

    let (comp, n_comp) = strongly_connected_components(graph, |_, v| s[v as usize] > 0.0);
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); n_comp];
    for (v, &c) in comp.iter().enumerate() {
        members[c as usize].push(v as u32);
    }

    let mut report = SpectralReport {
        iterations: 0,
        ..trivial
    };
    for nodes in members.iter().filter(|m| m.len() > 1) {
        let block = Block::new(graph, &comp, nodes, eta, s);
        let r = block.perron_root(cfg);
        report.spectral_radius = report.spectral_radius.max(r.spectral_radius);
        report.iterations += r.iterations;
        report.converged &= r.converged;
        report.residual = report.residual.max(r.residual);
    }
    report.iterations = report.iterations.max(1);
    Ok(report)
}

/// One irreducible diagonal block in local indexing.
struct Block {
    weight: Vec<f64>,
    offsets: Vec<usize>,
    sources: Vec<u32>,
}

impl Block {
    fn new(graph: &DirectedGraph, comp: &[u32], nodes: &[u32], eta: f64, s: &[f64]) -> Self {
        let c = comp[nodes[0] as usize];
        let local: std::collections::HashMap<u32, u32> =
            nodes.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        let mut sources = Vec::new();
        offsets.push(0);
        for &v in nodes {
            for &u in graph.in_neighbors(NodeId(v)) {
                if comp[u as usize] == c {
                    sources.push(local[&u]);
                }
            }
            offsets.push(sources.len());
        }
        Block {
            weight: nodes.iter().map(|&v| eta * s[v as usize]).collect(),
            offsets,
            sources,
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (v, out) in y.iter_mut().enumerate() {
            let sum: f64 = self.sources[self.offsets[v]..self.offsets[v + 1]]
                .iter()
                .map(|&u| x[u as usize])
                .sum();
            *out = self.weight[v] * sum;
        }
    }

    fn perron_root(&self, cfg: &SpectralConfig) -> SpectralReport {
        let n = self.weight.len();
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut y = vec![0.0; n];
        let mut theta = 0.0;
        let mut residual = f64::INFINITY;
        for it in 1..=cfg.max_iter {
            self.apply(&x, &mut y);
            // x has unit norm
            theta = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
            let r2: f64 = x.iter().zip(&y).map(|(a, b)| (b - theta * a).powi(2)).sum();
            residual = if theta > 0.0 { r2.sqrt() / theta } else { f64::INFINITY };
            if residual <= cfg.tol {
                return SpectralReport {
                    spectral_radius: theta,
                    iterations: it,
                    converged: true,
                    residual,
                };
            }
            // shift by half the current estimate: eigenvalues on the Perron circle
            // other than the root move strictly inside
            let shift = 0.5 * theta.max(0.0);
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += shift * xi;
            }
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                break;
            }
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / norm;
            }
        }
        SpectralReport {
            spectral_radius: theta,
            iterations: cfg.max_iter,
            converged: false,
            residual,
        }
    }
}

/// Nudge strength at which the cascade becomes critical:
/// `1 - 1 / (eta * Lambda_0)` with `Lambda_0` the Perron root of `A diag(s)`.
/// `None` when the network is already subcritical without intervention.
pub fn nudge_critical_epsilon(graph: &DirectedGraph, eta: f64, cfg: &SpectralConfig) -> Result<Option<f64>> {
    let base = spectral_radius(graph, 1.0, None, cfg)?.spectral_radius;
    Ok(nudge_critical_from_radius(eta * base))
}

fn nudge_critical_from_radius(scaled: f64) -> Option<f64> {
    (scaled >= 1.0).then(|| 1.0 - 1.0 / scaled)
}

/// Target selection for the spectral analysis of prebunking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrebunkTargeting {
    pub strategy: TargetStrategy,
    /// Origin for distance-based ranking.
    pub seed_node: Option<NodeId>,
    pub rng_seed: u64,
}

/// Smallest prebunk strength (to within `bisect_tol`) that brings the Perron
/// root down to one when a fraction `delta` of nodes is treated.
///
/// Unlike the simulation, the ranking keeps the seed node as a candidate: the
/// criticality condition concerns the network matrix, not one cascade, and at
/// `delta = 1` this reproduces the nudge result exactly.
pub fn prebunk_critical_epsilon(
    graph: &DirectedGraph,
    eta: f64,
    delta: f64,
    targeting: &PrebunkTargeting,
    bisect_tol: f64,
    cfg: &SpectralConfig,
) -> Result<Option<f64>> {
    check_unit("delta_pre", delta)?;
    let order = rank_nodes(graph, targeting.strategy, targeting.seed_node, None, targeting.rng_seed)?;
    let k = target_count(delta, graph.node_count()).min(order.len());
    let targets = &order[..k];
    let base = graph.susceptibility();
    let f = |eps: f64| -> Result<f64> {
        let mut s = base.to_vec();
        for &v in targets {
            s[v as usize] *= 1.0 - eps;
        }
        Ok(spectral_radius(graph, eta, Some(&s), cfg)?.spectral_radius - 1.0)
    };
    bisect_decreasing(f, bisect_tol)
}

/// Root of a non-increasing `f` on `[0, 1]`; `None` when `f(0) < 0` or
/// `f(1) > 0`. Iterates until the bracket is narrower than `tol` and
/// `|f(mid)| <= tol`.
fn bisect_decreasing(f: impl Fn(f64) -> Result<f64>, tol: f64) -> Result<Option<f64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "bisect_tol",
            value: tol,
            reason: "must be positive",
        });
    }
    let f0 = f(0.0)?;
    if f0 < 0.0 {
        return Ok(None);
    }
    if f0 == 0.0 {
        return Ok(Some(0.0));
    }
    let f1 = f(1.0)?;
    if f1 > 0.0 {
        return Ok(None);
    }
    if f1 == 0.0 {
        return Ok(Some(1.0));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut mid = 0.5;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if hi - lo <= tol && fm.abs() <= tol {
            break;
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(mid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "vary", rename_all = "snake_case")]
pub enum CurveAxis {
    /// Nudge threshold as a function of contagiousness.
    NudgeEta { etas: Vec<f64> },
    /// Prebunk threshold as a function of scale at fixed contagiousness.
    PrebunkDelta {
        eta: f64,
        deltas: Vec<f64>,
        targeting: PrebunkTargeting,
    },
    /// Prebunk threshold as a function of contagiousness at fixed scale.
    PrebunkEta {
        delta: f64,
        etas: Vec<f64>,
        targeting: PrebunkTargeting,
    },
}

impl CurveAxis {
    pub fn values(&self) -> &[f64] {
        match self {
            CurveAxis::NudgeEta { etas } | CurveAxis::PrebunkEta { etas, .. } => etas,
            CurveAxis::PrebunkDelta { deltas, .. } => deltas,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CurveAxis::NudgeEta { .. } | CurveAxis::PrebunkEta { .. } => "eta",
            CurveAxis::PrebunkDelta { .. } => "delta_pre",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalCurve {
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub critical_epsilon: Vec<Option<f64>>,
}

impl CriticalCurve {
    /// CSV with header `axis_value,critical_epsilon`; absent values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis_value,critical_epsilon\n");
        for (a, e) in self.axis.iter().zip(&self.critical_epsilon) {
            match e {
                Some(e) => out.push_str(&format!("{a},{e}\n")),
                None => out.push_str(&format!("{a},\n")),
            }
        }
        out
    }
}

pub fn critical_curve(
    graph: &DirectedGraph,
    axis: &CurveAxis,
    bisect_tol: f64,
    cfg: &SpectralConfig,
    execution: Execution,
) -> Result<CriticalCurve> {
    let values = axis.values();
    if values.is_empty() {
        return Err(Error::Empty("critical curve grid"));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Invalid("critical curve grid must be sorted".into()));
    }
    let critical_epsilon = match axis {
        CurveAxis::NudgeEta { etas } => {
            let base = spectral_radius(graph, 1.0, None, cfg)?.spectral_radius;
            etas.iter().map(|&eta| nudge_critical_from_radius(eta * base)).collect()
        }
        CurveAxis::PrebunkDelta { eta, deltas, targeting } => map_indexed(execution, deltas.len(), |i| {
            prebunk_critical_epsilon(graph, *eta, deltas[i], targeting, bisect_tol, cfg)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?,
        CurveAxis::PrebunkEta { delta, etas, targeting } => map_indexed(execution, etas.len(), |i| {
            prebunk_critical_epsilon(graph, etas[i], *delta, targeting, bisect_tol, cfg)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?,
    };
    Ok(CriticalCurve {
        axis_name: axis.name().to_string(),
        axis: values.to_vec(),
        critical_epsilon,
    })
}
