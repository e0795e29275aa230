//! Fitting the cascade model to data.
//!
//! Two independent pipelines:
//!
//! * diffusion parameters `(eta, lambda)` by grid search, matching the mean
//!   simulated cumulative activation count against the mean empirical
//!   cumulative share count over a fixed window with an L2 loss;
//! * intervention strengths from survey experiments, as the mean per-item
//!   relative drop in (rescaled) sharing willingness between control and
//!   treatment groups.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffusion::{max_out_degree_node, uniform_grid, CascadeModel, DiffusionParams};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::interventions::InterventionPlan;
use crate::parallel::{map_indexed, Execution};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeRecord {
    pub cascade_id: String,
    /// `(node id, hours since the first event)`, sorted by time.
    pub events: Vec<(String, f64)>,
}

impl CascadeRecord {
    /// Builds a record, sorting events and shifting times so the earliest
    /// event sits at zero.
    pub fn new(cascade_id: impl Into<String>, mut events: Vec<(String, f64)>) -> Result<Self> {
        let cascade_id = cascade_id.into();
        if events.is_empty() {
            return Err(Error::Invalid(format!("cascade {cascade_id} has no events")));
        }
        if events.iter().any(|(_, t)| !t.is_finite()) {
            return Err(Error::Invalid(format!(
                "cascade {cascade_id} has a non-finite timestamp"
            )));
        }
        events.sort_by(|a, b| a.1.total_cmp(&b.1));
        let t0 = events[0].1;
        for e in &mut events {
            e.1 -= t0;
        }
        Ok(CascadeRecord { cascade_id, events })
    }

    /// Events at or before `t` hours.
    pub fn count_until(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.1 <= t)
    }
}

/// Reads `cascade_id,node_id,timestamp_hours` rows (with header). Cascades
/// keep the order of their first row.
pub fn load_cascades(path: &Path) -> Result<Vec<CascadeRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("missing column {name:?}"),
            })
    };
    let (c_id, c_node, c_time) = (col("cascade_id")?, col("node_id")?, col("timestamp_hours")?);
    let mut order: Vec<String> = Vec::new();
    let mut events: HashMap<String, Vec<(String, f64)>> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        let field = |c: usize| row.get(c).map(str::trim).unwrap_or("");
        let t: f64 = field(c_time).parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("invalid timestamp {:?}", field(c_time)),
        })?;
        let id = field(c_id).to_string();
        if !events.contains_key(&id) {
            order.push(id.clone());
        }
        events.entry(id).or_default().push((field(c_node).to_string(), t));
    }
    order
        .into_iter()
        .map(|id| {
            let ev = events.remove(&id).unwrap_or_default();
            CascadeRecord::new(id, ev)
        })
        .collect()
}

pub fn write_cascades(path: &Path, cascades: &[CascadeRecord]) -> Result<()> {
    crate::output::write_text(path, &cascades_csv(cascades))
}

/// `cascade_id,node_id,timestamp_hours`, the format [`load_cascades`] reads.
pub fn cascades_csv(cascades: &[CascadeRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let rows = std::iter::once(["cascade_id".to_string(), "node_id".into(), "timestamp_hours".into()]).chain(
        cascades.iter().flat_map(|c| {
            c.events
                .iter()
                .map(|(node, t)| [c.cascade_id.clone(), node.clone(), t.to_string()])
        }),
    );
    for row in rows {
        w.write_record(&row).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
}

/// Keeps cascades with at least `min_size` events within `within_hours` of
/// their first event.
pub fn filter_cascades(cascades: Vec<CascadeRecord>, min_size: usize, within_hours: f64) -> Vec<CascadeRecord> {
    cascades
        .into_iter()
        .filter(|c| c.count_until(within_hours) >= min_size)
        .collect()
}

/// Mean cumulative event count at each grid time, counting the root event.
pub fn empirical_mean_curve(cascades: &[CascadeRecord], time_grid: &[f64]) -> Result<Vec<f64>> {
    empirical_mean_curve_with(cascades, time_grid, true)
}

/// As [`empirical_mean_curve`]; with `include_root = false` the root event
/// is left out of every count.
pub fn empirical_mean_curve_with(
    cascades: &[CascadeRecord],
    time_grid: &[f64],
    include_root: bool,
) -> Result<Vec<f64>> {
    if cascades.is_empty() {
        return Err(Error::Empty("cascade list"));
    }
    if time_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Invalid("time grid must be sorted".into()));
    }
    let offset = if include_root { 0 } else { 1 };
    let k = cascades.len() as f64;
    Ok(time_grid
        .iter()
        .map(|&t| {
            cascades
                .iter()
                .map(|c| c.count_until(t).saturating_sub(offset) as f64)
                .sum::<f64>()
                / k
        })
        .collect())
}

/// Cascades produced by the simulator itself, for round-trip checks.
pub fn synthesize_cascades(
    graph: &DirectedGraph,
    params: DiffusionParams,
    count: usize,
    master_seed: u64,
) -> Result<Vec<CascadeRecord>> {
    let seed = max_out_degree_node(graph)?;
    let model = CascadeModel::new(graph, params, InterventionPlan::none(), seed, None)?;
    (0..count)
        .map(|i| {
            let r = model.run_indexed(master_seed, i as u64);
            let events = r
                .activation_time
                .iter()
                .enumerate()
                .filter_map(|(v, t)| t.map(|t| (graph.labels()[v].clone(), t)))
                .collect();
            CascadeRecord::new(format!("c{i}"), events)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub eta_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub loss_window_hours: f64,
    pub loss_step_hours: f64,
    pub runs_per_cell: usize,
    pub master_seed: u64,
    #[serde(default = "default_true")]
    pub include_root: bool,
    #[serde(default)]
    pub execution: Execution,
}

fn default_true() -> bool {
    true
}

impl FitConfig {
    /// Default search grids: `eta` in 0.002..=0.060 (step 0.002) and
    /// `lambda` in 0.05..=1.00 (step 0.05), 50 runs per cell, 1 h loss grid
    /// over the first 48 h.
    pub fn new(master_seed: u64) -> Self {
        FitConfig {
            eta_grid: (1..=30).map(|i| i as f64 * 0.002).collect(),
            lambda_grid: (1..=20).map(|i| i as f64 * 0.05).collect(),
            loss_window_hours: 48.0,
            loss_step_hours: 1.0,
            runs_per_cell: 50,
            master_seed,
            include_root: true,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub eta_hat: f64,
    pub lambda_hat: f64,
    pub loss: f64,
    /// `(eta, lambda, loss)` for every cell, eta-major.
    pub loss_surface: Vec<(f64, f64, f64)>,
    pub seed_node: String,
    pub cascades: usize,
    pub empirical_curve: Vec<(f64, f64)>,
}

impl FitResult {
    pub fn surface_csv(&self) -> String {
        let mut out = String::from("eta,lambda,loss\n");
        for (e, l, loss) in &self.loss_surface {
            out.push_str(&format!("{e},{l},{loss}\n"));
        }
        out
    }
}

/// Grid search for `(eta, lambda)`. Every cell shares the same run seeds, so
/// neighbouring cells are compared on common random numbers.
pub fn fit_diffusion_params(graph: &DirectedGraph, cascades: &[CascadeRecord], cfg: &FitConfig) -> Result<FitResult> {
    if cfg.eta_grid.is_empty() || cfg.lambda_grid.is_empty() {
        return Err(Error::Empty("parameter grid"));
    }
    if cfg.runs_per_cell == 0 {
        return Err(Error::InvalidParameter {
            name: "runs_per_cell",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    if !(cfg.loss_step_hours > 0.0 && cfg.loss_window_hours >= 0.0) {
        return Err(Error::Invalid("loss window and step must be positive".into()));
    }
    let grid = uniform_grid(cfg.loss_window_hours, cfg.loss_step_hours);
    let empirical = empirical_mean_curve_with(cascades, &grid, cfg.include_root)?;
    let seed = max_out_degree_node(graph)?;
    let offset = if cfg.include_root { 0.0 } else { 1.0 };

    let cells: Vec<(f64, f64)> = cfg
        .eta_grid
        .iter()
        .flat_map(|&e| cfg.lambda_grid.iter().map(move |&l| (e, l)))
        .collect();
    let losses = map_indexed(cfg.execution, cells.len(), |i| -> Result<f64> {
        let (eta, lambda) = cells[i];
        let model = CascadeModel::new(
            graph,
            DiffusionParams::new(eta, lambda)?,
            InterventionPlan::none(),
            seed,
            None,
        )?;
        let mut sums = vec![0usize; grid.len()];
        for r in 0..cfg.runs_per_cell {
            let run = model.run_indexed(cfg.master_seed, r as u64);
            for (s, c) in sums.iter_mut().zip(run.counts_at(&grid)) {
                *s += c;
            }
        }
        let runs = cfg.runs_per_cell as f64;
        Ok(sums
            .iter()
            .zip(&empirical)
            .map(|(&s, &e)| (s as f64 / runs - offset - e).powi(2))
            .sum::<f64>()
            .sqrt())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;

    let loss_surface: Vec<(f64, f64, f64)> = cells.iter().zip(&losses).map(|(&(e, l), &loss)| (e, l, loss)).collect();
    let best = loss_surface
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.total_cmp(&b.0)).then(a.1.total_cmp(&b.1)))
        .copied()
        .expect("grid is nonempty");
    Ok(FitResult {
        eta_hat: best.0,
        lambda_hat: best.1,
        loss: best.2,
        loss_surface,
        seed_node: graph.label(seed).to_string(),
        cascades: cascades.len(),
        empirical_curve: grid.into_iter().zip(empirical).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Control,
    Treatment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub item_id: String,
    pub participant_id: String,
    pub condition: Condition,
    pub response: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Source study, used only to report per-study means.
    #[serde(default)]
    pub study: Option<String>,
}

impl SurveyRecord {
    pub fn rescaled(&self) -> f64 {
        (self.response - self.scale_min) / (self.scale_max - self.scale_min)
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale_max > self.scale_min) {
            return Err(Error::Invalid(format!(
                "item {}: scale_max {} must exceed scale_min {}",
                self.item_id, self.scale_max, self.scale_min
            )));
        }
        if !(self.scale_min..=self.scale_max).contains(&self.response) {
            return Err(Error::Invalid(format!(
                "item {}, participant {}: response {} outside [{}, {}]",
                self.item_id, self.participant_id, self.response, self.scale_min, self.scale_max
            )));
        }
        Ok(())
    }
}

/// Reads `item_id,participant_id,condition,response,scale_min,scale_max`
/// rows, plus an optional `study` column.
pub fn load_survey(path: &Path) -> Result<Vec<SurveyRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let col = |name: &str| {
        find(name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column {name:?}"),
        })
    };
    let cols = [
        col("item_id")?,
        col("participant_id")?,
        col("condition")?,
        col("response")?,
        col("scale_min")?,
        col("scale_max")?,
    ];
    let study_col = find("study");
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        let field = |c: usize| row.get(c).map(str::trim).unwrap_or("");
        // data row number plus the record identity; the file line goes in `line`
        let name = format!(
            "row {} (item {:?}, participant {:?})",
            i + 1,
            field(cols[0]),
            field(cols[1])
        );
        let bad = |what: &str, v: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{name}: invalid {what} {v:?}"),
        };
        let condition = match field(cols[2]).to_ascii_lowercase().as_str() {
            "control" => Condition::Control,
            "treatment" => Condition::Treatment,
            _ => return Err(bad("condition", field(cols[2]))),
        };
        let num = |c: usize, what: &str| field(c).parse::<f64>().map_err(|_| bad(what, field(c)));
        let record = SurveyRecord {
            item_id: field(cols[0]).to_string(),
            participant_id: field(cols[1]).to_string(),
            condition,
            response: num(cols[3], "response")?,
            scale_min: num(cols[4], "scale_min")?,
            scale_max: num(cols[5], "scale_max")?,
            study: study_col.map(|c| field(c).to_string()).filter(|s| !s.is_empty()),
        };
        record.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{name}: {e}"),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemSuppression {
    pub item_id: String,
    pub study: Option<String>,
    pub control_mean: f64,
    pub treatment_mean: f64,
    pub suppression: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyMean {
    pub study: Option<String>,
    pub items: usize,
    pub mean_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthEstimate {
    pub per_item: Vec<ItemSuppression>,
    /// Unweighted mean of the retained per-item suppression rates.
    pub mean_epsilon: f64,
    /// Items dropped by the control floor, with their control mean.
    pub excluded_items: Vec<(String, f64)>,
    pub per_study: Vec<StudyMean>,
    /// Mean of the per-study means (equals `mean_epsilon` for one study).
    pub mean_of_study_means: f64,
}

/// Per-item suppression rates `(control - treatment) / control` on responses
/// rescaled to `[0, 1]`, excluding items whose control mean is below
/// `control_floor`.
pub fn estimate_intervention_strength(records: &[SurveyRecord], control_floor: f64) -> Result<StrengthEstimate> {
    #[derive(Default)]
    struct Acc {
        sum: [f64; 2],
        n: [usize; 2],
    }
    let mut order: Vec<(Option<String>, String)> = Vec::new();
    let mut acc: HashMap<(Option<String>, String), Acc> = HashMap::new();
    for r in records {
        r.validate()?;
        let key = (r.study.clone(), r.item_id.clone());
        let a = acc.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Acc::default()
        });
        let k = match r.condition {
            Condition::Control => 0,
            Condition::Treatment => 1,
        };
        a.sum[k] += r.rescaled();
        a.n[k] += 1;
    }

    let mut per_item = Vec::new();
    let mut excluded_items = Vec::new();
    for key in order {
        let a = &acc[&key];
        let (study, item) = key;
        if a.n[0] == 0 {
            return Err(Error::MissingCondition {
                item,
                condition: "control",
            });
        }
        if a.n[1] == 0 {
            return Err(Error::MissingCondition {
                item,
                condition: "treatment",
            });
        }
        let control = a.sum[0] / a.n[0] as f64;
        let treatment = a.sum[1] / a.n[1] as f64;
        if control < control_floor {
            excluded_items.push((item, control));
            continue;
        }
        per_item.push(ItemSuppression {
            item_id: item,
            study,
            control_mean: control,
            treatment_mean: treatment,
            suppression: (control - treatment) / control,
        });
    }
    if per_item.is_empty() {
        return Err(Error::Empty("survey items above the control floor"));
    }
    let mean_epsilon = per_item.iter().map(|i| i.suppression).sum::<f64>() / per_item.len() as f64;

    let mut studies: Vec<Option<String>> = Vec::new();
    for i in &per_item {
        if !studies.contains(&i.study) {
            studies.push(i.study.clone());
        }
    }
    let per_study: Vec<StudyMean> = studies
        .into_iter()
        .map(|study| {
            let xs: Vec<f64> = per_item
                .iter()
                .filter(|i| i.study == study)
                .map(|i| i.suppression)
                .collect();
            StudyMean {
                study,
                items: xs.len(),
                mean_epsilon: xs.iter().sum::<f64>() / xs.len() as f64,
            }
        })
        .collect();
    let mean_of_study_means = per_study.iter().map(|s| s.mean_epsilon).sum::<f64>() / per_study.len() as f64;
    Ok(StrengthEstimate {
        per_item,
        mean_epsilon,
        excluded_items,
        per_study,
        mean_of_study_means,
    })
}

/// Deterministic synthetic survey: per item, control responses have mean
/// `control_means[i]` and treatment responses are exactly `(1 - e)` times the
/// matching control response.
pub fn synthetic_survey(control_means: &[f64], e: f64, participants: usize, seed: u64) -> Vec<SurveyRecord> {
    use rand::Rng;
    let mut rng = rng::chacha(seed);
    let mut out = Vec::new();
    for (i, &m) in control_means.iter().enumerate() {
        // symmetric offsets keep the control mean exact
        let offsets: Vec<f64> = (0..participants / 2)
            .map(|_| rng.gen_range(0.0..m.min(1.0 - m)))
            .collect();
        let controls: Vec<f64> = offsets.iter().flat_map(|&o| [m - o, m + o]).collect();
        for (j, &c) in controls.iter().enumerate() {
            for (cond, value) in [(Condition::Control, c), (Condition::Treatment, (1.0 - e) * c)] {
                out.push(SurveyRecord {
                    item_id: format!("item{i}"),
                    participant_id: format!("{cond:?}-{j}"),
                    condition: cond,
                    response: value,
                    scale_min: 0.0,
                    scale_max: 1.0,
                    study: None,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn rec(item: &str, cond: Condition, z: f64) -> SurveyRecord {
        SurveyRecord {
            item_id: item.into(),
            participant_id: "p".into(),
            condition: cond,
            response: z,
            scale_min: 0.0,
            scale_max: 1.0,
            study: None,
        }
    }

    fn cascade(times: &[f64]) -> CascadeRecord {
        CascadeRecord::new("c", times.iter().map(|&t| ("n".to_string(), t)).collect()).unwrap()
    }

    #[test]
    fn filter_boundary() {
        let small = cascade(&(0..99).map(|i| i as f64).collect::<Vec<_>>());
        let mut times: Vec<f64> = (0..120).map(|i| i as f64 * 0.8).collect();
        times.extend((0..30).map(|i| 150.0 + i as f64));
        let big = cascade(&times);
        let kept = filter_cascades(vec![small, big.clone()], 100, 100.0);
        assert_eq!(kept, vec![big]);
    }

    #[test]
    fn step_curve_counts_root() {
        let c = cascade(&[0.0, 1.0, 2.0]);
        assert_eq!(
            empirical_mean_curve(std::slice::from_ref(&c), &[0.0, 1.5, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            empirical_mean_curve(&[c.clone(), c.clone()], &[0.0, 1.5, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            empirical_mean_curve_with(&[c], &[0.0, 1.5, 3.0], false).unwrap(),
            vec![0.0, 1.0, 2.0]
        );
        assert!(empirical_mean_curve(&[], &[0.0]).is_err());
    }

    #[test]
    fn timestamps_are_shifted_to_start() {
        let c = CascadeRecord::new("x", vec![("b".into(), 12.5), ("a".into(), 10.0)]).unwrap();
        assert_eq!(c.events, vec![("a".into(), 0.0), ("b".into(), 2.5)]);
    }

    #[test]
    fn mean_curve_matches_naive_recount() {
        use rand::Rng;
        let mut r = rng::chacha(3);
        let cascades: Vec<CascadeRecord> = (0..20)
            .map(|i| {
                let n = r.gen_range(1..40);
                let ev = (0..n).map(|_| ("v".to_string(), r.gen_range(0.0..60.0))).collect();
                CascadeRecord::new(format!("{i}"), ev).unwrap()
            })
            .collect();
        let grid = uniform_grid(48.0, 1.0);
        let fast = empirical_mean_curve(&cascades, &grid).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let naive: f64 = cascades
                .iter()
                .map(|c| c.events.iter().filter(|e| e.1 <= t).count() as f64)
                .sum::<f64>()
                / 20.0;
            assert_eq!(fast[k], naive);
        }
        assert!(fast.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cascade_csv_round_trip() {
        let cs = vec![
            CascadeRecord::new("a", vec![("1".into(), 0.0), ("2".into(), 0.5)]).unwrap(),
            CascadeRecord::new("b", vec![("3".into(), 0.0)]).unwrap(),
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_cascades(f.path(), &cs).unwrap();
        assert_eq!(load_cascades(f.path()).unwrap(), cs);
    }

    #[test]
    fn seed_only_grid_loss_is_distance_to_one() {
        let g = crate::synth::erdos_renyi(30, 0.2, 1).unwrap();
        let g = g.with_susceptibility(vec![1.0; 30]).unwrap();
        let cs = vec![cascade(&[0.0, 1.0, 5.0, 30.0])];
        let mut cfg = FitConfig::new(1);
        cfg.eta_grid = vec![0.0];
        cfg.lambda_grid = vec![0.5];
        cfg.runs_per_cell = 3;
        let fit = fit_diffusion_params(&g, &cs, &cfg).unwrap();
        let grid = uniform_grid(48.0, 1.0);
        let emp = empirical_mean_curve(&cs, &grid).unwrap();
        let expected = emp.iter().map(|e| (e - 1.0).powi(2)).sum::<f64>().sqrt();
        assert!((fit.loss - expected).abs() < 1e-12);
    }

    #[test]
    fn single_item_direct_formula() {
        let rs = vec![
            rec("a", Condition::Control, 0.4),
            rec("a", Condition::Control, 0.6),
            rec("a", Condition::Treatment, 0.4),
        ];
        let est = estimate_intervention_strength(&rs, 0.10).unwrap();
        assert!((est.mean_epsilon - 0.2).abs() < 1e-12);
        assert_eq!(est.per_item.len(), 1);
    }

    #[test]
    fn floor_excludes_low_control_items() {
        let rs = vec![
            rec("a", Condition::Control, 0.5),
            rec("a", Condition::Treatment, 0.4),
            rec("b", Condition::Control, 0.05),
            rec("b", Condition::Treatment, 0.01),
        ];
        let est = estimate_intervention_strength(&rs, 0.10).unwrap();
        assert_eq!(est.excluded_items, vec![("b".to_string(), 0.05)]);
        assert!((est.mean_epsilon - 0.2).abs() < 1e-12);
    }

    #[test]
    fn negative_suppression_is_kept() {
        let rs = vec![rec("a", Condition::Control, 0.5), rec("a", Condition::Treatment, 0.6)];
        let est = estimate_intervention_strength(&rs, 0.10).unwrap();
        assert!((est.mean_epsilon + 0.2).abs() < 1e-12);
    }

    #[test]
    fn missing_condition_names_item() {
        let rs = vec![rec("lonely", Condition::Control, 0.5)];
        match estimate_intervention_strength(&rs, 0.10) {
            Err(Error::MissingCondition { item, condition }) => {
                assert_eq!(item, "lonely");
                assert_eq!(condition, "treatment");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn likert_rescaling_and_studies() {
        // 1-6 Likert: (z - 1) / 5
        let mk = |study: &str, item: &str, c: Condition, z: f64| SurveyRecord {
            item_id: item.into(),
            participant_id: "p".into(),
            condition: c,
            response: z,
            scale_min: 1.0,
            scale_max: 6.0,
            study: Some(study.into()),
        };
        let rs = vec![
            mk("s1", "a", Condition::Control, 3.5),
            mk("s1", "a", Condition::Treatment, 3.0),
            mk("s1", "b", Condition::Control, 6.0),
            mk("s1", "b", Condition::Treatment, 3.5),
            mk("s2", "a", Condition::Control, 2.0),
            mk("s2", "a", Condition::Treatment, 2.0),
        ];
        let est = estimate_intervention_strength(&rs, 0.10).unwrap();
        // s1: a 0.5 -> 0.4 (0.2), b 1.0 -> 0.5 (0.5); s2: a 0.2 -> 0.2 (0)
        assert_eq!(est.per_item.len(), 3);
        assert!((est.mean_epsilon - 0.7 / 3.0).abs() < 1e-12);
        assert!((est.per_study[0].mean_epsilon - 0.35).abs() < 1e-12);
        assert!((est.mean_of_study_means - 0.175).abs() < 1e-12);
    }

    #[test]
    fn survey_file_errors_name_the_row() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "item_id,participant_id,condition,response,scale_min,scale_max").unwrap();
        writeln!(f, "a,p1,control,3,1,6").unwrap();
        writeln!(f, "a,p2,placebo,3,1,6").unwrap();
        match load_survey(f.path()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(
                    message.contains("row 2") && message.contains("\"p2\"") && message.contains("placebo"),
                    "{message}"
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn survey_response_outside_scale_is_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "item_id,participant_id,condition,response,scale_min,scale_max").unwrap();
        writeln!(f, "a,p1,control,7,1,6").unwrap();
        assert!(matches!(load_survey(f.path()), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn suppression_is_affine_invariant(
            zs in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..20),
            shift in -10.0f64..10.0, scale in 0.1f64..10.0,
        ) {
            let mut base = vec![];
            let mut moved = vec![];
            for (i, &(c, t)) in zs.iter().enumerate() {
                let c = 0.2 + 0.8 * c; // keep above the floor
                for (cond, z) in [(Condition::Control, c), (Condition::Treatment, t)] {
                    let r = SurveyRecord { participant_id: format!("{i}"), ..rec("x", cond, z) };
                    moved.push(SurveyRecord {
                        response: shift + scale * z,
                        scale_min: shift,
                        scale_max: shift + scale,
                        ..r.clone()
                    });
                    base.push(r);
                }
            }
            let a = estimate_intervention_strength(&base, 0.10).unwrap();
            let b = estimate_intervention_strength(&moved, 0.10).unwrap();
            prop_assert!((a.mean_epsilon - b.mean_epsilon).abs() < 1e-9);
            prop_assert!(a.mean_epsilon <= 1.0);
        }
    }
}
