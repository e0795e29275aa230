//! Synthetic networks for desk-scale experiments and tests.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::rng;

/// Directed scale-free graph from undirected preferential attachment.
///
/// Each new node attaches to `edges_per_node` distinct existing nodes chosen
/// proportionally to degree. Every undirected link becomes a reciprocal pair
/// with probability `reciprocity`, otherwise a single edge of random
/// direction. Node labels are shuffled so index order carries no information
/// about arrival time (and hence degree).
pub fn scale_free(nodes: usize, edges_per_node: usize, reciprocity: f64, seed: u64) -> Result<DirectedGraph> {
    if edges_per_node == 0 || nodes <= edges_per_node {
        return Err(Error::Invalid(format!(
            "scale-free graph needs nodes > edges_per_node > 0 (got {nodes}, {edges_per_node})"
        )));
    }
    crate::error::check_unit("reciprocity", reciprocity)?;
    let mut rng = rng::chacha(rng::derive(seed, rng::Stream::Generator, 0));
    let m = edges_per_node;
    // endpoint list: sampling uniformly from it is degree-proportional
    let mut ends: Vec<u32> = Vec::with_capacity(2 * nodes * m);
    let mut links: Vec<(u32, u32)> = Vec::with_capacity(nodes * m);
    // seed clique on m + 1 nodes
    for u in 0..=m as u32 {
        for v in 0..u {
            links.push((u, v));
            ends.extend([u, v]);
        }
    }
    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for u in (m + 1) as u32..nodes as u32 {
        chosen.clear();
        while chosen.len() < m {
            let v = ends[rng.gen_range(0..ends.len())];
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        for &v in &chosen {
            links.push((u, v));
            ends.extend([u, v]);
        }
    }
    let mut perm: Vec<u32> = (0..nodes as u32).collect();
    perm.shuffle(&mut rng);
    let mut edges = Vec::with_capacity(links.len() * 2);
    for (a, b) in links {
        let (a, b) = (perm[a as usize], perm[b as usize]);
        if rng.gen_bool(reciprocity) {
            edges.push((a, b));
            edges.push((b, a));
        } else if rng.gen_bool(0.5) {
            edges.push((a, b));
        } else {
            edges.push((b, a));
        }
    }
    Ok(DirectedGraph::from_edges(nodes, &edges)?.0)
}

/// Follower network grown by directed preferential attachment.
///
/// Each arriving node follows `follows_per_node` distinct earlier nodes,
/// picked with probability proportional to follower count plus one. An edge
/// `u -> v` means `v` follows `u`, so content flows from `u` to `v`. With
/// probability `reciprocity` the followed node follows back. Out-degree is
/// heavy-tailed while in-degree stays near `follows_per_node`, and a hub's
/// followers are mostly late arrivals with few followers of their own.
/// Labels are shuffled as in [`scale_free`].
pub fn follower_network(nodes: usize, follows_per_node: usize, reciprocity: f64, seed: u64) -> Result<DirectedGraph> {
    if follows_per_node == 0 || nodes <= follows_per_node {
        return Err(Error::Invalid(format!(
            "follower network needs nodes > follows_per_node > 0 (got {nodes}, {follows_per_node})"
        )));
    }
    crate::error::check_unit("reciprocity", reciprocity)?;
    let mut rng = rng::chacha(rng::derive(seed, rng::Stream::Generator, 2));
    let m = follows_per_node;
    // every node appears once, plus once per follower gained
    let mut pool: Vec<u32> = Vec::with_capacity(nodes * (m + 1));
    let mut links: Vec<(u32, u32)> = Vec::with_capacity(nodes * m * 2);
    for u in 0..=m as u32 {
        for v in 0..=m as u32 {
            if u != v {
                links.push((u, v));
                pool.push(u);
            }
        }
        pool.push(u);
    }
    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for v in (m + 1) as u32..nodes as u32 {
        chosen.clear();
        while chosen.len() < m {
            let u = pool[rng.gen_range(0..pool.len())];
            if !chosen.contains(&u) {
                chosen.push(u);
            }
        }
        pool.push(v);
        for &u in &chosen {
            links.push((u, v));
            pool.push(u);
            if rng.gen_bool(reciprocity) {
                links.push((v, u));
                pool.push(v);
            }
        }
    }
    let mut perm: Vec<u32> = (0..nodes as u32).collect();
    perm.shuffle(&mut rng);
    let edges: Vec<(u32, u32)> = links
        .into_iter()
        .map(|(a, b)| (perm[a as usize], perm[b as usize]))
        .collect();
    Ok(DirectedGraph::from_edges(nodes, &edges)?.0)
}

/// Directed Erdos-Renyi graph `G(n, p)` without self-loops.
pub fn erdos_renyi(nodes: usize, p: f64, seed: u64) -> Result<DirectedGraph> {
    crate::error::check_unit("p", p)?;
    let mut rng = rng::chacha(rng::derive(seed, rng::Stream::Generator, 1));
    let mut edges = Vec::new();
    for u in 0..nodes as u32 {
        for v in 0..nodes as u32 {
            if u != v && rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Ok(DirectedGraph::from_edges(nodes, &edges)?.0)
}

/// How to fill in susceptibilities on a generated graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SusceptibilityModel {
    Constant(f64),
    Uniform,
    /// Resample with replacement from the given values.
    Bootstrap(Vec<f64>),
    /// Exactly 1 with probability `ones`, otherwise `u^exponent` for uniform
    /// `u`: mostly low values with a small fully susceptible group.
    Skewed {
        ones: f64,
        exponent: f64,
    },
}

/// Assigns susceptibilities; with `pin_hub`, the node of largest out-degree
/// (lowest index on ties) is set to exactly 1 so it qualifies as the seed.
pub fn with_susceptibility(
    graph: DirectedGraph,
    model: &SusceptibilityModel,
    seed: u64,
    pin_hub: bool,
) -> Result<DirectedGraph> {
    let n = graph.node_count();
    let mut g = match model {
        SusceptibilityModel::Constant(c) => graph.with_susceptibility(vec![*c; n])?,
        SusceptibilityModel::Uniform => {
            let mut rng = rng::chacha(rng::derive(seed, rng::Stream::Bootstrap, 1));
            let values = (0..n).map(|_| rng.gen::<f64>()).collect();
            graph.with_susceptibility(values)?
        }
        SusceptibilityModel::Skewed { ones, exponent } => {
            crate::error::check_unit("ones", *ones)?;
            if !(*exponent > 0.0 && exponent.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "exponent",
                    value: *exponent,
                    reason: "must be positive",
                });
            }
            let mut rng = rng::chacha(rng::derive(seed, rng::Stream::Bootstrap, 2));
            let values = (0..n)
                .map(|_| {
                    let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                    if a < *ones {
                        1.0
                    } else {
                        b.powf(*exponent)
                    }
                })
                .collect();
            graph.with_susceptibility(values)?
        }
        SusceptibilityModel::Bootstrap(values) => {
            crate::graph::assign_susceptibility_from_distribution(graph, values, seed)?
        }
    };
    if pin_hub && n > 0 {
        let hub = crate::diffusion::max_out_degree_node(&g)?;
        let mut s = g.susceptibility().to_vec();
        s[hub.index()] = 1.0;
        g = g.with_susceptibility(s)?;
    }
    Ok(g)
}

/// The 2,000-node network used by desk-scale checks and the CLI default:
/// a [`follower_network`] with 40 follows per node and reciprocity 0.3,
/// skewed susceptibilities (3% fully susceptible, the rest `u^3`), and the
/// seed chosen by [`crate::diffusion::select_seed`].
pub fn desk_network(seed: u64) -> Result<(DirectedGraph, crate::graph::NodeId)> {
    let g = follower_network(2000, 40, 0.3, seed)?;
    let g = with_susceptibility(
        g,
        &SusceptibilityModel::Skewed {
            ones: 0.03,
            exponent: 3.0,
        },
        seed,
        false,
    )?;
    let s = crate::diffusion::select_seed(&g)?;
    Ok((g, s))
}
