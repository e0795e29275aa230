//! File writers for simulation results.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::diffusion::SimulationResult;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// `node_id,time` for every activated node, in activation order.
pub fn activation_csv(graph: &DirectedGraph, result: &SimulationResult) -> String {
    let mut rows: Vec<(f64, usize)> = result
        .activation_time
        .iter()
        .enumerate()
        .filter_map(|(v, t)| t.map(|t| (t, v)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = String::from("node_id,time\n");
    for (t, v) in rows {
        out.push_str(&format!("{},{t}\n", graph.labels()[v]));
    }
    out
}

/// `time,active_fraction` on the given grid.
pub fn curve_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("time,active_fraction\n");
    for (t, f) in curve {
        out.push_str(&format!("{t},{f}\n"));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{simulate, DiffusionParams, InterventionPlan, NodeId};

    #[test]
    fn activation_rows_are_time_ordered() {
        let g = DirectedGraph::from_edges(3, &[(0, 1), (1, 2)])
            .unwrap()
            .0
            .with_susceptibility(vec![1.0; 3])
            .unwrap()
            .with_labels(vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let p = DiffusionParams::new(1.0, 1.0).unwrap();
        let r = simulate(&g, p, &InterventionPlan::none(), NodeId(0), None, 3).unwrap();
        let csv = activation_csv(&g, &r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "a,0");
        assert!(lines[2].starts_with("b,") && lines[3].starts_with("c,"));
    }

    #[test]
    fn json_creates_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.json");
        write_json(&path, &[1, 2]).unwrap();
        let back: Vec<i32> = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(back, vec![1, 2]);
        assert_eq!(curve_csv(&[(0.0, 0.5)]), "time,active_fraction\n0,0.5\n");
    }
}
