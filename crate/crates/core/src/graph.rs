//! Directed networks with per-node susceptibility.
//!
//! Adjacency is stored in compressed sparse row form in both directions. Nodes
//! are dense `u32` indices; the external identifier read from file is kept
//! alongside so outputs can be written back in the caller's namespace.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Dense node index in `[0, node_count)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

/// Counts collected while building a graph from raw edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EdgeLoadReport {
    pub lines: usize,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
}

/// Counts collected while reading a susceptibility file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SusceptibilityReport {
    pub assigned: usize,
    pub unlisted: usize,
    pub unknown_ids: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    susceptibility: Vec<f64>,
    labels: Vec<String>,
}

impl DirectedGraph {
    /// Builds a graph from index pairs, dropping self-loops and collapsing
    /// parallel edges. Node labels default to the decimal index.
    pub fn from_edges(node_count: usize, edges: &[(u32, u32)]) -> Result<(Self, EdgeLoadReport)> {
        let labels = (0..node_count).map(|i| i.to_string()).collect();
        Self::from_labeled_edges(labels, edges.to_vec())
    }

    fn from_labeled_edges(labels: Vec<String>, mut edges: Vec<(u32, u32)>) -> Result<(Self, EdgeLoadReport)> {
        let n = labels.len();
        let mut report = EdgeLoadReport {
            lines: edges.len(),
            ..Default::default()
        };
        for &(u, v) in &edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(Error::InvalidNode(w as usize, n));
                }
            }
        }
        let before = edges.len();
        edges.retain(|&(u, v)| u != v);
        report.self_loops_dropped = before - edges.len();
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        report.duplicates_collapsed = before - edges.len();

        let (out_offsets, out_targets) = csr(n, edges.iter().map(|&(u, v)| (u, v)));
        let mut rev: Vec<(u32, u32)> = edges.iter().map(|&(u, v)| (v, u)).collect();
        rev.sort_unstable();
        let (in_offsets, in_sources) = csr(n, rev.into_iter());
        Ok((
            DirectedGraph {
                out_offsets,
                out_targets,
                in_offsets,
                in_sources,
                susceptibility: vec![0.0; n],
                labels,
            },
            report,
        ))
    }

    /// Replaces all susceptibilities.
    pub fn with_susceptibility(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.node_count() {
            return Err(Error::Invalid(format!(
                "susceptibility vector has {} entries for {} nodes",
                values.len(),
                self.node_count()
            )));
        }
        for (i, &s) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::SusceptibilityOutOfRange {
                    node: self.labels[i].clone(),
                    value: s,
                });
            }
        }
        self.susceptibility = values;
        Ok(self)
    }

    /// Replaces the external labels (one per node, in index order).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.node_count() {
            return Err(Error::Invalid("label count does not match node count".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.susceptibility.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count() as u32).map(NodeId)
    }

    /// Successors of `u`, sorted ascending.
    #[inline]
    pub fn out_neighbors(&self, u: NodeId) -> &[u32] {
        &self.out_targets[self.out_offsets[u.index()]..self.out_offsets[u.index() + 1]]
    }

    /// Range of edge indices leaving `u`; edge `e` points to `edge_target(e)`.
    #[inline]
    pub fn out_edge_range(&self, u: NodeId) -> std::ops::Range<usize> {
        self.out_offsets[u.index()]..self.out_offsets[u.index() + 1]
    }

    #[inline]
    pub fn edge_target(&self, e: usize) -> u32 {
        self.out_targets[e]
    }

    /// Predecessors of `v`, sorted ascending.
    #[inline]
    pub fn in_neighbors(&self, v: NodeId) -> &[u32] {
        &self.in_sources[self.in_offsets[v.index()]..self.in_offsets[v.index() + 1]]
    }

    #[inline]
    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_offsets[u.index() + 1] - self.out_offsets[u.index()]
    }

    #[inline]
    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_offsets[v.index() + 1] - self.in_offsets[v.index()]
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.out_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        self.in_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    #[inline]
    pub fn susceptibility(&self) -> &[f64] {
        &self.susceptibility
    }

    #[inline]
    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Looks up a node by its external label.
    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label).map(NodeId::from)
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.index() < self.node_count() {
            Ok(())
        } else {
            Err(Error::InvalidNode(v.index(), self.node_count()))
        }
    }

    /// All edges as `(source, target)` pairs in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count())
            .flat_map(move |u| self.out_neighbors(NodeId(u as u32)).iter().map(move |&v| (u as u32, v)))
    }

    /// Subgraph induced by `keep` (sorted, deduplicated), reindexed in order.
    pub fn induced(&self, keep: &[u32]) -> DirectedGraph {
        let mut remap = vec![u32::MAX; self.node_count()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let edges: Vec<(u32, u32)> = self
            .edges()
            .filter_map(|(u, v)| {
                let (a, b) = (remap[u as usize], remap[v as usize]);
                (a != u32::MAX && b != u32::MAX).then_some((a, b))
            })
            .collect();
        let labels = keep.iter().map(|&o| self.labels[o as usize].clone()).collect();
        let (mut g, _) = Self::from_labeled_edges(labels, edges).expect("induced edges are valid");
        g.susceptibility = keep.iter().map(|&o| self.susceptibility[o as usize]).collect();
        g
    }

    /// Writes `EXTERNAL_ID<tab>INTERNAL_INDEX` lines.
    pub fn write_id_map(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(w, "{l}\t{i}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csr(n: usize, sorted: impl Iterator<Item = (u32, u32)>) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; n + 1];
    let mut targets = Vec::new();
    for (u, v) in sorted {
        offsets[u as usize + 1] += 1;
        targets.push(v);
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, targets)
}

fn data_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let owned = path.to_path_buf();
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Err(e) => Some(Err(Error::io(&owned, e))),
            Ok(l) => {
                let t = l.trim();
                if t.is_empty() || t.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, t.to_string())))
                }
            }
        }))
}

/// Reads a whitespace-separated `SOURCE TARGET` edge list. Node labels are
/// assigned dense indices in order of first appearance.
pub fn load_edge_list(path: &Path, id_map_out: Option<&Path>) -> Result<(DirectedGraph, EdgeLoadReport)> {
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut labels = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |s: &str| -> u32 {
        if let Some(&i) = index.get(s) {
            return i;
        }
        let i = labels.len() as u32;
        labels.push(s.to_string());
        index.insert(s.to_string(), i);
        i
    };
    for line in data_lines(path)? {
        let (no, text) = line?;
        let mut parts = text.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: no,
                message: format!("expected two node ids, got {text:?}"),
            });
        };
        let u = intern(a);
        let v = intern(b);
        edges.push((u, v));
    }
    let (graph, report) = DirectedGraph::from_labeled_edges(labels, edges)?;
    if report.self_loops_dropped > 0 {
        warn!("{}: dropped {} self-loops", path.display(), report.self_loops_dropped);
    }
    if let Some(out) = id_map_out {
        graph.write_id_map(out)?;
    }
    Ok((graph, report))
}

/// Reads `NODE_ID VALUE` lines and assigns susceptibilities. Unlisted nodes
/// keep their current value (zero for a freshly loaded graph).
pub fn load_susceptibility(mut graph: DirectedGraph, path: &Path) -> Result<(DirectedGraph, SusceptibilityReport)> {
    let (values, _, report) = read_scores(&graph, path)?;
    graph.susceptibility = values;
    Ok((graph, report))
}

/// Network preparation for scored data: loads susceptibilities, keeps only
/// nodes that have an entry, then takes the largest weakly connected
/// component of what remains.
pub fn prepare_scored_network(graph: DirectedGraph, path: &Path) -> Result<(DirectedGraph, SusceptibilityReport)> {
    let (values, assigned, report) = read_scores(&graph, path)?;
    let keep: Vec<u32> = (0..graph.node_count() as u32)
        .filter(|&v| assigned[v as usize])
        .collect();
    let scored = DirectedGraph {
        susceptibility: values,
        ..graph
    }
    .induced(&keep);
    Ok((largest_weakly_connected_component(&scored), report))
}

fn read_scores(graph: &DirectedGraph, path: &Path) -> Result<(Vec<f64>, Vec<bool>, SusceptibilityReport)> {
    let index: HashMap<&str, usize> = graph.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut assigned = vec![false; graph.node_count()];
    let mut values = graph.susceptibility.clone();
    let mut report = SusceptibilityReport::default();
    for line in data_lines(path)? {
        let (no, text) = line?;
        let mut parts = text.split_whitespace();
        let (Some(id), Some(raw), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: no,
                message: format!("expected node id and value, got {text:?}"),
            });
        };
        let value: f64 = raw.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: no,
            message: format!("not a number: {raw:?}"),
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::SusceptibilityOutOfRange {
                node: id.to_string(),
                value,
            });
        }
        match index.get(id) {
            Some(&i) => {
                if assigned[i] {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: no,
                        message: format!("node {id} listed twice"),
                    });
                }
                assigned[i] = true;
                values[i] = value;
                report.assigned += 1;
            }
            None => report.unknown_ids += 1,
        }
    }
    report.unlisted = assigned.iter().filter(|&&a| !a).count();
    if report.unlisted > 0 {
        warn!(
            "{}: {} nodes have no susceptibility entry",
            path.display(),
            report.unlisted
        );
    }
    if report.unknown_ids > 0 {
        warn!("{}: {} entries name unknown nodes", path.display(), report.unknown_ids);
    }
    Ok((values, assigned, report))
}

/// Reads a bare list of values (one per line, or the value column of a
/// two-column file) to use as an empirical susceptibility distribution.
pub fn load_value_list(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for line in data_lines(path)? {
        let (no, text) = line?;
        let raw = text.split_whitespace().last().unwrap_or("");
        let v: f64 = raw.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: no,
            message: format!("not a number: {raw:?}"),
        })?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::SusceptibilityOutOfRange {
                node: format!("line {no}"),
                value: v,
            });
        }
        out.push(v);
    }
    Ok(out)
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Largest weakly connected component, reindexed preserving node order. Ties
/// go to the component holding the smallest node index.
pub fn largest_weakly_connected_component(graph: &DirectedGraph) -> DirectedGraph {
    let n = graph.node_count();
    if n == 0 {
        return graph.clone();
    }
    let mut ds = DisjointSet::new(n);
    for (u, v) in graph.edges() {
        ds.union(u, v);
    }
    let mut best_root = ds.find(0);
    let mut best_size = ds.size[best_root as usize];
    for v in 1..n as u32 {
        let r = ds.find(v);
        let s = ds.size[r as usize];
        if s > best_size {
            best_root = r;
            best_size = s;
        }
    }
    let keep: Vec<u32> = (0..n as u32).filter(|&v| ds.find(v) == best_root).collect();
    if keep.len() == n {
        return graph.clone();
    }
    graph.induced(&keep)
}

/// Draws every node's susceptibility uniformly with replacement from
/// `empirical_values`.
pub fn assign_susceptibility_from_distribution(
    graph: DirectedGraph,
    empirical_values: &[f64],
    rng_seed: u64,
) -> Result<DirectedGraph> {
    if empirical_values.is_empty() {
        return Err(Error::Empty("empirical susceptibility values"));
    }
    let mut rng = rng::chacha(rng::derive(rng_seed, rng::Stream::Bootstrap, 0));
    let k = empirical_values.len();
    let values = (0..graph.node_count())
        .map(|_| empirical_values[rng.gen_range(0..k)])
        .collect();
    graph.with_susceptibility(values)
}

/// Hop distance along directed edges; `None` when unreachable.
pub fn bfs_distance_from(graph: &DirectedGraph, source: NodeId) -> Vec<Option<u32>> {
    let mut dist = vec![None; graph.node_count()];
    dist[source.index()] = Some(0);
    let mut queue = VecDeque::from([source.0]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize].unwrap() + 1;
        for &v in graph.out_neighbors(NodeId(u)) {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(d);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn out_degrees(graph: &DirectedGraph) -> Vec<usize> {
    graph.out_degrees()
}

/// Strongly connected components (iterative Tarjan) of the subgraph that keeps
/// only edges accepted by `keep_edge(source, target)`. Returns a component
/// label per node; labels are dense but otherwise unordered.
pub fn strongly_connected_components(graph: &DirectedGraph, keep_edge: impl Fn(u32, u32) -> bool) -> (Vec<u32>, usize) {
    const UNSET: u32 = u32::MAX;
    let n = graph.node_count();
    let mut index = vec![UNSET; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSET; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut call: Vec<(u32, usize)> = Vec::new();
    let mut next_index = 0u32;
    let mut n_comp = 0usize;

    for root in 0..n as u32 {
        if index[root as usize] != UNSET {
            continue;
        }
        call.push((root, 0));
        index[root as usize] = next_index;
        low[root as usize] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root as usize] = true;

        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            let nbrs = graph.out_neighbors(NodeId(u));
            if *pos < nbrs.len() {
                let v = nbrs[*pos];
                *pos += 1;
                if !keep_edge(u, v) {
                    continue;
                }
                if index[v as usize] == UNSET {
                    index[v as usize] = next_index;
                    low[v as usize] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v as usize] = true;
                    call.push((v, 0));
                } else if on_stack[v as usize] {
                    low[u as usize] = low[u as usize].min(index[v as usize]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent as usize] = low[parent as usize].min(low[u as usize]);
                }
                if low[u as usize] == index[u as usize] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w as usize] = false;
                        comp[w as usize] = n_comp as u32;
                        if w == u {
                            break;
                        }
                    }
                    n_comp += 1;
                }
            }
        }
    }
    (comp, n_comp)
}
