//! Intervention plans and target selection.
//!
//! Every intervention multiplies a node's susceptibility by a retention factor
//! `1 - epsilon`. Nudging applies to everyone from the start, prebunking to a
//! selected fraction of nodes from the start, and contextualization to every
//! still-inactive node from time `T` onward.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::graph::{bfs_distance_from, DirectedGraph, NodeId};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetStrategy {
    Random,
    #[serde(alias = "degree")]
    DegreeDescending,
    #[serde(alias = "susceptibility")]
    SusceptibilityDescending,
    #[serde(alias = "distance")]
    DistanceFromSeed,
}

impl TargetStrategy {
    pub const ALL: [TargetStrategy; 4] = [
        TargetStrategy::Random,
        TargetStrategy::DegreeDescending,
        TargetStrategy::SusceptibilityDescending,
        TargetStrategy::DistanceFromSeed,
    ];

    pub fn is_deterministic(self) -> bool {
        self != TargetStrategy::Random
    }

    pub fn name(self) -> &'static str {
        match self {
            TargetStrategy::Random => "random",
            TargetStrategy::DegreeDescending => "degree",
            TargetStrategy::SusceptibilityDescending => "susceptibility",
            TargetStrategy::DistanceFromSeed => "distance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nudge {
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prebunk {
    pub epsilon: f64,
    pub delta: f64,
    pub strategy: TargetStrategy,
    #[serde(default)]
    pub rng_seed: u64,
    /// Keep one random target set for every Monte Carlo run instead of
    /// redrawing per run. Ignored by the deterministic strategies.
    #[serde(default)]
    pub fixed_targets: bool,
}

/// When contextualization switches on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextTiming {
    /// Fraction of the final no-intervention prevalence reached.
    Stage(f64),
    /// Absolute time in hours.
    At(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contextualize {
    pub epsilon: f64,
    pub timing: ContextTiming,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InterventionPlan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nudge: Option<Nudge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prebunk: Option<Prebunk>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contextualize: Option<Contextualize>,
}

impl InterventionPlan {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn nudge(epsilon: f64) -> Self {
        InterventionPlan {
            nudge: Some(Nudge { epsilon }),
            ..Self::default()
        }
    }

    pub fn prebunk(epsilon: f64, delta: f64, strategy: TargetStrategy, rng_seed: u64) -> Self {
        InterventionPlan {
            prebunk: Some(Prebunk {
                epsilon,
                delta,
                strategy,
                rng_seed,
                fixed_targets: false,
            }),
            ..Self::default()
        }
    }

    pub fn contextualize(epsilon: f64, timing: ContextTiming) -> Self {
        InterventionPlan {
            contextualize: Some(Contextualize { epsilon, timing }),
            ..Self::default()
        }
    }

    /// Combines the entries of `self` and `other`; `other` wins on overlap.
    pub fn with(mut self, other: InterventionPlan) -> Self {
        self.nudge = other.nudge.or(self.nudge);
        self.prebunk = other.prebunk.or(self.prebunk);
        self.contextualize = other.contextualize.or(self.contextualize);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.nudge.is_none() && self.prebunk.is_none() && self.contextualize.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.nudge {
            check_unit("epsilon_nud", n.epsilon)?;
        }
        if let Some(p) = self.prebunk {
            check_unit("epsilon_pre", p.epsilon)?;
            check_unit("delta_pre", p.delta)?;
        }
        if let Some(c) = self.contextualize {
            check_unit("epsilon_ctx", c.epsilon)?;
            match c.timing {
                ContextTiming::Stage(phi) => check_unit("phi_ctx", phi)?,
                ContextTiming::At(t) if !(t >= 0.0 && t.is_finite()) => {
                    return Err(Error::InvalidParameter {
                        name: "ctx_time",
                        value: t,
                        reason: "must be a finite non-negative time",
                    })
                }
                ContextTiming::At(_) => {}
            }
        }
        Ok(())
    }
}

/// Susceptibility of a node after the interventions in effect for it.
///
/// Factors are applied in a fixed order (nudge, prebunk, contextualization)
/// so equal inputs give bit-equal outputs.
pub fn effective_susceptibility(
    base: f64,
    plan: &InterventionPlan,
    node_is_target_of_prebunk: bool,
    time_at_or_after_t: bool,
) -> f64 {
    let mut s = base;
    if let Some(n) = plan.nudge {
        s *= 1.0 - n.epsilon;
    }
    if let (Some(p), true) = (plan.prebunk, node_is_target_of_prebunk) {
        s *= 1.0 - p.epsilon;
    }
    if let (Some(c), true) = (plan.contextualize, time_at_or_after_t) {
        s *= 1.0 - c.epsilon;
    }
    s
}

/// Number of targets for a fraction `delta` of `n` nodes, rounded half-up.
pub fn target_count(delta: f64, n: usize) -> usize {
    ((delta * n as f64) + 0.5).floor() as usize
}

/// Full priority order of candidate nodes under `strategy`, best first.
///
/// `exclude` (the diffusion seed) is left out of the order. For
/// `DistanceFromSeed` the distances are measured from `origin`.
pub fn rank_nodes(
    graph: &DirectedGraph,
    strategy: TargetStrategy,
    origin: Option<NodeId>,
    exclude: Option<NodeId>,
    rng_seed: u64,
) -> Result<Vec<u32>> {
    let mut order: Vec<u32> = graph.nodes().filter(|&v| Some(v) != exclude).map(|v| v.0).collect();
    match strategy {
        TargetStrategy::Random => {
            let mut rng = rng::chacha(rng::derive(rng_seed, rng::Stream::Targets, 0));
            order.shuffle(&mut rng);
        }
        TargetStrategy::DegreeDescending => {
            let deg = graph.out_degrees();
            order.sort_by(|&a, &b| deg[b as usize].cmp(&deg[a as usize]).then(a.cmp(&b)));
        }
        TargetStrategy::SusceptibilityDescending => {
            let s = graph.susceptibility();
            order.sort_by(|&a, &b| s[b as usize].total_cmp(&s[a as usize]).then(a.cmp(&b)));
        }
        TargetStrategy::DistanceFromSeed => {
            let origin = origin.ok_or(Error::MissingSeed("distance-from-seed targeting"))?;
            graph.check_node(origin)?;
            let dist = bfs_distance_from(graph, origin);
            let key = |v: u32| dist[v as usize].unwrap_or(u32::MAX);
            order.sort_by(|&a, &b| key(a).cmp(&key(b)).then(a.cmp(&b)));
        }
    }
    Ok(order)
}

/// Selects `round(delta * N)` prebunk targets, never including `seed_node`.
/// The result is sorted by priority (best first).
pub fn resolve_targets(
    graph: &DirectedGraph,
    delta: f64,
    strategy: TargetStrategy,
    seed_node: Option<NodeId>,
    rng_seed: u64,
) -> Result<Vec<NodeId>> {
    check_unit("delta_pre", delta)?;
    if let Some(s) = seed_node {
        graph.check_node(s)?;
    }
    let order = rank_nodes(graph, strategy, seed_node, seed_node, rng_seed)?;
    let k = target_count(delta, graph.node_count()).min(order.len());
    Ok(order[..k].iter().map(|&v| NodeId(v)).collect())
}

/// Boolean membership mask for a target list.
pub fn target_mask(n: usize, targets: &[NodeId]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for t in targets {
        mask[t.index()] = true;
    }
    mask
}
