//! Scenario orchestration and result emission.
//!
//! A run writes its CSV/SVG outputs plus `summary.json` into the scenario's
//! output directory. Identical configs produce byte-identical files.

mod config;
mod output;
mod svg;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub use config::{
    default_stations, load_config, save_config, ConfigError, DatasetSection, Experiment, InferenceSection,
    NetworkSection, RttScanSection, ScenarioConfig, TrainSection,
};
pub use output::write_atomic;
pub use svg::{emit_svg_curve, read_trace_csv, render_curves, Series};

use crate::archmodel::{self, ArchitectureKind};
use crate::fedsim::{self, TimeToAccuracy, TrainingTrace};
use crate::topology::{self, GridOptions, NodeId};
use crate::TOOL_VERSION;
use output::OutputSet;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("simulation failed: {0}")]
    Simulation(#[from] crate::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("trace error: {0}")]
    Trace(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub scenario: ScenarioConfig,
    /// Produced files, relative to `output_dir`.
    pub files: Vec<String>,
    pub stats: Value,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl Report {
    pub fn paths(&self) -> impl Iterator<Item = PathBuf> + '_ {
        self.files.iter().map(|f| self.output_dir.join(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                count: 0,
                min: None,
                max: None,
                mean: None,
            };
        }
        Self {
            count: values.len(),
            min: Some(values.iter().copied().fold(f64::INFINITY, f64::min)),
            max: Some(values.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            mean: Some(values.iter().sum::<f64>() / values.len() as f64),
        }
    }

    fn into_map(self, metric: &str) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("metric".into(), json!(metric));
        m.insert("count".into(), json!(self.count));
        m.insert("min".into(), json!(self.min));
        m.insert("max".into(), json!(self.max));
        m.insert("mean".into(), json!(self.mean));
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RttRow {
    pub t_s: f64,
    pub satellite: usize,
    pub station: String,
    pub rtt_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RttScan {
    pub rows: Vec<RttRow>,
    /// Satellite-steps dropped because no station could be reached.
    pub omitted: usize,
    pub steps: usize,
}

pub const RTT_CSV_HEADER: &str = "t_s,satellite,station,rtt_ms";

impl RttScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RTT_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:.6}\n", r.t_s, r.satellite, r.station, r.rtt_ms));
        }
        out
    }
}

/// RTT from every satellite to its nearest (lowest-latency) station at each
/// step over the scan window, sorted by (t_s, satellite).
pub fn rtt_scan(cfg: &ScenarioConfig) -> Result<RttScan, crate::Error> {
    if cfg.stations.is_empty() {
        return Err(crate::Error::Domain("rtt scan needs at least one station".into()));
    }
    let duration = cfg
        .rtt_scan
        .duration_s
        .unwrap_or_else(|| cfg.shell.period_s(&cfg.earth));
    let step = cfg.rtt_scan.step_s;
    let times: Vec<f64> = (0..)
        .map(|k| k as f64 * step)
        .take_while(|t| *t < duration)
        .collect();
    let options = GridOptions {
        seam_links: cfg.network.seam_links,
    };

    let per_step = times
        .par_iter()
        .map(|&t| -> Result<(Vec<RttRow>, usize), crate::Error> {
            let graph = topology::build_isl_grid_with(&cfg.shell, t, &cfg.earth, options)?;
            let graph = topology::attach_gsl(graph, &cfg.stations, t, &cfg.earth)?;
            let adjacency = graph.adjacency();
            let trees = (0..cfg.stations.len())
                .map(|g| adjacency.tree_from(NodeId::ground(g)))
                .collect::<Result<Vec<_>, _>>()?;
            let mut rows = Vec::new();
            let mut omitted = 0;
            for sat in 0..cfg.shell.total_satellites() {
                let node = NodeId::satellite(sat);
                let nearest = trees
                    .iter()
                    .enumerate()
                    .filter_map(|(g, tree)| tree.latency_to(node).map(|l| (g, l)))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                match nearest {
                    Some((g, one_way)) => rows.push(RttRow {
                        t_s: t,
                        satellite: sat,
                        station: cfg.stations[g].name.clone(),
                        rtt_ms: 2.0 * one_way,
                    }),
                    None => omitted += 1,
                }
            }
            Ok((rows, omitted))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut scan = RttScan {
        rows: Vec::new(),
        omitted: 0,
        steps: times.len(),
    };
    for (rows, omitted) in per_step {
        scan.rows.extend(rows);
        scan.omitted += omitted;
    }
    Ok(scan)
}

/// Outcome of a training-curve experiment.
#[derive(Debug, Clone)]
pub struct TrainingCurves {
    pub baseline: Option<(ArchitectureKind, TrainingTrace)>,
    pub federated: Vec<(usize, TrainingTrace)>,
    pub target_accuracy: f64,
}

impl TrainingCurves {
    pub fn baseline_tta(&self) -> Option<TimeToAccuracy> {
        self.baseline
            .as_ref()
            .map(|(_, t)| fedsim::time_to_accuracy(t, self.target_accuracy).expect("target validated"))
    }

    /// FL time-to-accuracy divided by the baseline's, when both are reached.
    pub fn ratio(&self, n_clients: usize) -> Option<f64> {
        let base = self.baseline_tta()?.elapsed_ms()?;
        let (_, trace) = self.federated.iter().find(|(n, _)| *n == n_clients)?;
        let fl = fedsim::time_to_accuracy(trace, self.target_accuracy).ok()?.elapsed_ms()?;
        (base > 0.0).then(|| fl / base)
    }
}

/// Runs the baseline (per `cfg.architecture`) and one FedAvg run per client count.
pub fn training_curves(cfg: &ScenarioConfig) -> Result<TrainingCurves, HarnessError> {
    let train = cfg
        .train
        .as_ref()
        .ok_or_else(|| ConfigError::Schema {
            key: "train".into(),
            message: "required for training-curve".into(),
        })?;
    let d = &train.dataset;
    let ds = fedsim::make_synthetic(d.num_samples, d.dim, d.num_classes, cfg.seed)?;
    let max_clients = train.client_counts.iter().copied().max().unwrap_or(1);

    let baseline = match cfg.architecture {
        ArchitectureKind::Federated => None,
        arch => {
            let tc = cfg.train_config(max_clients, arch).expect("train section present");
            Some((arch, fedsim::run_centralized(&ds, &tc)?))
        }
    };
    let federated = train
        .client_counts
        .iter()
        .map(|&n| {
            let tc = cfg
                .train_config(n, ArchitectureKind::Federated)
                .expect("train section present");
            fedsim::run_federated(&ds, &tc).map(|t| (n, t))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrainingCurves {
        baseline,
        federated,
        target_accuracy: train.target_accuracy,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Validates `cfg`, runs its experiment and writes the outputs. On failure
/// every file written so far is removed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Report, HarnessError> {
    cfg.validate()?;
    let mut out = OutputSet::create(&cfg.output_dir)?;
    let stats = match cfg.experiment {
        Experiment::LatencyTable => {
            let (lo, hi) = cfg.inference.alpha_bounds();
            let rows = archmodel::latency_table(&cfg.inference.params(), &cfg.ns, lo, hi)?;
            out.write("latency_table.csv", archmodel::latency_table_csv(&rows).as_bytes())?;
            let values: Vec<f64> = rows
                .iter()
                .flat_map(|r| [r.latency_low_ms, r.latency_high_ms])
                .collect();
            let central: Vec<f64> = rows
                .iter()
                .filter(|r| r.architecture == ArchitectureKind::Centralized)
                .flat_map(|r| [r.latency_low_ms, r.latency_high_ms])
                .collect();
            let mut m = Stats::of(&values).into_map("latency_ms");
            m.insert("centralized".into(), json!(Stats::of(&central)));
            Value::Object(m)
        }
        Experiment::RttScan => {
            let scan = rtt_scan(cfg)?;
            out.write("rtt_scan.csv", scan.to_csv().as_bytes())?;
            let values: Vec<f64> = scan.rows.iter().map(|r| r.rtt_ms).collect();
            let stats = Stats::of(&values);
            let mut m = stats.into_map("rtt_ms");
            m.insert("steps".into(), json!(scan.steps));
            m.insert("warnings".into(), json!(scan.omitted));
            let rtt = cfg.inference.rtt_ms;
            m.insert(
                "reference_rtt_in_envelope".into(),
                json!(stats.min.zip(stats.max).map(|(lo, hi)| lo <= rtt && rtt <= hi)),
            );
            Value::Object(m)
        }
        Experiment::TrainingCurve => {
            let curves = training_curves(cfg)?;
            let target = curves.target_accuracy;
            let mut trace_files = Vec::new();
            let mut summary_csv = String::from(
                "run,n_clients,target_accuracy,reached,round,elapsed_ms,final_accuracy,ratio_to_baseline\n",
            );
            let mut tta_values = Vec::new();
            let mut m = Map::new();

            let mut emit = |out: &mut OutputSet, name: String, label: String, n: usize, trace: &TrainingTrace, ratio: Option<f64>| -> Result<(), HarnessError> {
                out.write(&name, trace.to_csv().as_bytes())?;
                trace_files.push(out.path(&name));
                let tta = fedsim::time_to_accuracy(trace, target)?;
                let (reached, round, elapsed) = match tta {
                    TimeToAccuracy::Reached { round, elapsed_ms } => {
                        tta_values.push(elapsed_ms);
                        (true, Some(round), Some(elapsed_ms))
                    }
                    TimeToAccuracy::NotReached { .. } => (false, None, None),
                };
                summary_csv.push_str(&format!(
                    "{label},{n},{target},{reached},{},{},{:.6},{}\n",
                    round.map(|r| r.to_string()).unwrap_or_default(),
                    fmt_opt(elapsed),
                    trace.final_accuracy(),
                    fmt_opt(ratio)
                ));
                m.insert(
                    format!("{label}_n{n}"),
                    json!({
                        "time_to_accuracy_ms": elapsed,
                        "final_accuracy": trace.final_accuracy(),
                        "ratio_to_baseline": ratio,
                    }),
                );
                Ok(())
            };

            let max_clients = curves.federated.iter().map(|(n, _)| *n).max().unwrap_or(1);
            if let Some((arch, trace)) = &curves.baseline {
                emit(&mut out, format!("trace_{arch}.csv"), arch.to_string(), max_clients, trace, None)?;
            }
            for (n, trace) in &curves.federated {
                emit(&mut out, format!("trace_federated_n{n}.csv"), "federated".into(), *n, trace, curves.ratio(*n))?;
            }
            out.write("time_to_accuracy.csv", summary_csv.as_bytes())?;

            let series = trace_files
                .iter()
                .map(|p| read_trace_csv(p))
                .collect::<Result<Vec<_>, _>>()?;
            let svg = render_curves("Training accuracy vs. simulated time", &series)?;
            out.write("training_curve.svg", svg.as_bytes())?;

            let mut stats = Stats::of(&tta_values).into_map("time_to_accuracy_ms");
            stats.insert("target_accuracy".into(), json!(target));
            stats.insert("runs".into(), Value::Object(m));
            Value::Object(stats)
        }
    };

    let mut files: Vec<String> = out.names().to_vec();
    files.push(SUMMARY_FILE.to_string());
    let report = Report {
        tool_version: TOOL_VERSION.to_string(),
        scenario: cfg.clone(),
        files,
        stats,
        output_dir: cfg.output_dir.clone(),
    };
    let summary = serde_json::to_string_pretty(&report).expect("report is always serializable") + "\n";
    out.write(SUMMARY_FILE, summary.as_bytes())?;
    out.commit();
    Ok(report)
}
