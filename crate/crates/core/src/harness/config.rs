//! JSON scenario files.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::archmodel::{ArchitectureKind, CommSizes, InferenceParams};
use crate::fedsim::{CommParams, ModelKind, TrainConfig, DEFAULT_BANDWIDTH_BPS};
use crate::orbits::{EarthModel, GroundStation, ShellConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config file {path} not found")]
    Missing { path: PathBuf },

    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Malformed { line: usize, column: usize, message: String },

    #[error("invalid value for \"{key}\": {message}")]
    Schema { key: String, message: String },
}

impl ConfigError {
    fn schema(key: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Schema {
            key: key.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LatencyTable,
    TrainingCurve,
    RttScan,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::LatencyTable => "latency-table",
            Experiment::TrainingCurve => "training-curve",
            Experiment::RttScan => "rtt-scan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceSection {
    pub rtt_ms: f64,
    pub gs_inference_latency_ms: f64,
    pub onboard_inference_latency_ms: f64,
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// Shorthand that pins both bounds to one value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub batch_per_satellite: u32,
}

impl Default for InferenceSection {
    fn default() -> Self {
        let p = InferenceParams::default();
        Self {
            rtt_ms: p.rtt_ms,
            gs_inference_latency_ms: p.gs_inference_latency_ms,
            onboard_inference_latency_ms: p.onboard_inference_latency_ms,
            alpha_low: 0.1,
            alpha_high: 0.7,
            alpha: None,
            batch_per_satellite: p.batch_per_satellite,
        }
    }
}

impl InferenceSection {
    pub fn alpha_bounds(&self) -> (f64, f64) {
        self.alpha.map_or((self.alpha_low, self.alpha_high), |a| (a, a))
    }

    pub fn params(&self) -> InferenceParams {
        InferenceParams {
            rtt_ms: self.rtt_ms,
            gs_inference_latency_ms: self.gs_inference_latency_ms,
            onboard_inference_latency_ms: self.onboard_inference_latency_ms,
            alpha: self.alpha_bounds().1,
            batch_per_satellite: self.batch_per_satellite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub num_samples: usize,
    pub dim: usize,
    pub num_classes: usize,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            num_samples: 2000,
            dim: 2,
            num_classes: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    /// One federated run per entry.
    pub client_counts: Vec<usize>,
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub compute_ms_per_batch: f64,
    pub ground_speedup: f64,
    pub model: ModelKind,
    pub holdout_fraction: f64,
    pub target_accuracy: f64,
    pub dataset: DatasetSection,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            client_counts: vec![1, 10, 50],
            rounds: t.rounds,
            local_epochs: t.local_epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            compute_ms_per_batch: t.compute_ms_per_batch,
            ground_speedup: t.ground_speedup,
            model: t.model,
            holdout_fraction: t.holdout_fraction,
            target_accuracy: 0.85,
            dataset: DatasetSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub bandwidth_bps: f64,
    pub seam_links: bool,
    /// Snapshot time used to cost training rounds.
    pub snapshot_t_s: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            bandwidth_bps: DEFAULT_BANDWIDTH_BPS,
            seam_links: true,
            snapshot_t_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RttScanSection {
    pub step_s: f64,
    /// Defaults to one orbital period of the shell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl Default for RttScanSection {
    fn default() -> Self {
        Self {
            step_s: 60.0,
            duration_s: None,
        }
    }
}

pub fn default_stations() -> Vec<GroundStation> {
    vec![
        GroundStation::new("Paris", 48.8566, 2.3522),
        GroundStation::new("Denver", 39.7392, -104.9903),
        GroundStation::new("Tokyo", 35.6762, 139.6503),
    ]
}

fn default_ns() -> Vec<usize> {
    vec![1, 10, 100]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_architecture() -> ArchitectureKind {
    ArchitectureKind::Centralized
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub shell: ShellConfig,
    #[serde(default)]
    pub earth: EarthModel,
    #[serde(default = "default_stations")]
    pub stations: Vec<GroundStation>,
    /// Ground-training baseline for `training-curve`; `federated` skips it.
    #[serde(default = "default_architecture")]
    pub architecture: ArchitectureKind,
    #[serde(default)]
    pub inference: InferenceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSection>,
    #[serde(default)]
    pub comm_sizes: CommSizes,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub rtt_scan: RttScanSection,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ScenarioConfig {
    /// All defaults for `experiment`; training experiments get a default
    /// `train` section.
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            shell: ShellConfig::default(),
            earth: EarthModel::default(),
            stations: default_stations(),
            architecture: default_architecture(),
            inference: InferenceSection::default(),
            train: (experiment == Experiment::TrainingCurve).then(TrainSection::default),
            comm_sizes: CommSizes::default(),
            network: NetworkSection::default(),
            rtt_scan: RttScanSection::default(),
            ns: default_ns(),
            seed: 0,
            output_dir: default_output_dir(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            match inner.classify() {
                serde_json::error::Category::Data => {
                    let message = inner.to_string();
                    let key = offending_key(&path, &message);
                    ConfigError::Schema { key, message }
                }
                _ => ConfigError::Malformed {
                    line: inner.line(),
                    column: inner.column(),
                    message: inner.to_string(),
                },
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.shell.validate().map_err(|e| ConfigError::schema("shell", e))?;
        self.earth.validate().map_err(|e| ConfigError::schema("earth", e))?;
        for (i, gs) in self.stations.iter().enumerate() {
            gs.validate().map_err(|e| ConfigError::schema(format!("stations[{i}]"), e))?;
        }

        let inf = &self.inference;
        for (key, v) in [
            ("inference.rtt_ms", inf.rtt_ms),
            ("inference.gs_inference_latency_ms", inf.gs_inference_latency_ms),
            ("inference.onboard_inference_latency_ms", inf.onboard_inference_latency_ms),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::schema(key, format!("must be positive, got {v}")));
            }
        }
        if let Some(a) = inf.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(ConfigError::schema("inference.alpha", format!("must lie in (0, 1], got {a}")));
            }
        } else {
            if !(inf.alpha_low > 0.0 && inf.alpha_low <= 1.0) {
                return Err(ConfigError::schema(
                    "inference.alpha_low",
                    format!("must lie in (0, 1], got {}", inf.alpha_low),
                ));
            }
            if !(inf.alpha_high >= inf.alpha_low && inf.alpha_high <= 1.0) {
                return Err(ConfigError::schema(
                    "inference.alpha_high",
                    format!("must lie in [alpha_low, 1], got {}", inf.alpha_high),
                ));
            }
        }

        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(ConfigError::schema("ns", "must be a non-empty list of positive counts"));
        }
        if !(self.network.bandwidth_bps.is_finite() && self.network.bandwidth_bps > 0.0) {
            return Err(ConfigError::schema("network.bandwidth_bps", "must be positive"));
        }
        if !(self.network.snapshot_t_s.is_finite() && self.network.snapshot_t_s >= 0.0) {
            return Err(ConfigError::schema("network.snapshot_t_s", "must be non-negative"));
        }
        if !(self.rtt_scan.step_s.is_finite() && self.rtt_scan.step_s > 0.0) {
            return Err(ConfigError::schema("rtt_scan.step_s", "must be positive"));
        }
        if let Some(d) = self.rtt_scan.duration_s {
            if !(d.is_finite() && d > 0.0) {
                return Err(ConfigError::schema("rtt_scan.duration_s", "must be positive"));
            }
        }

        match self.experiment {
            Experiment::TrainingCurve => {
                let train = self
                    .train
                    .as_ref()
                    .ok_or_else(|| ConfigError::schema("train", "required for training-curve"))?;
                self.validate_train(train)?;
            }
            Experiment::RttScan if self.stations.is_empty() => {
                return Err(ConfigError::schema("stations", "rtt-scan needs at least one station"));
            }
            _ => {}
        }
        if let Some(train) = &self.train {
            self.validate_train(train)?;
        }
        Ok(())
    }

    fn validate_train(&self, t: &TrainSection) -> Result<(), ConfigError> {
        if self.stations.is_empty() {
            return Err(ConfigError::schema("stations", "training needs an aggregating station"));
        }
        if t.client_counts.is_empty() || t.client_counts.contains(&0) {
            return Err(ConfigError::schema(
                "train.client_counts",
                "must be a non-empty list of positive counts",
            ));
        }
        for (key, v) in [
            ("train.local_epochs", t.local_epochs),
            ("train.batch_size", t.batch_size),
            ("train.dataset.num_samples", t.dataset.num_samples),
            ("train.dataset.dim", t.dataset.dim),
            ("train.dataset.num_classes", t.dataset.num_classes),
        ] {
            if v == 0 {
                return Err(ConfigError::schema(key, "must be at least 1"));
            }
        }
        for (key, v) in [
            ("train.learning_rate", t.learning_rate),
            ("train.compute_ms_per_batch", t.compute_ms_per_batch),
            ("train.ground_speedup", t.ground_speedup),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::schema(key, format!("must be positive, got {v}")));
            }
        }
        if !(t.holdout_fraction > 0.0 && t.holdout_fraction < 1.0) {
            return Err(ConfigError::schema("train.holdout_fraction", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&t.target_accuracy) {
            return Err(ConfigError::schema("train.target_accuracy", "must lie in [0, 1]"));
        }
        if t.dataset.num_classes > t.dataset.num_samples {
            return Err(ConfigError::schema("train.dataset.num_classes", "exceeds num_samples"));
        }
        let train_rows = t.dataset.num_samples - (t.dataset.num_samples as f64 * t.holdout_fraction).round() as usize;
        if let Some(&n) = t.client_counts.iter().find(|&&n| n > train_rows) {
            return Err(ConfigError::schema(
                "train.client_counts",
                format!("{n} clients exceed the {train_rows} training samples"),
            ));
        }
        Ok(())
    }

    /// Training configuration for `n_clients` under architecture `arch`.
    pub fn train_config(&self, n_clients: usize, arch: ArchitectureKind) -> Option<TrainConfig> {
        let t = self.train.as_ref()?;
        Some(TrainConfig {
            n_clients,
            rounds: t.rounds,
            local_epochs: t.local_epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            seed: self.seed,
            compute_ms_per_batch: t.compute_ms_per_batch,
            ground_speedup: t.ground_speedup,
            arch,
            model: t.model,
            holdout_fraction: t.holdout_fraction,
            comm: CommParams {
                shell: self.shell,
                earth: self.earth,
                station: self.stations.first()?.clone(),
                snapshot_t_s: self.network.snapshot_t_s,
                sizes: self.comm_sizes,
                bandwidth_bps: self.network.bandwidth_bps,
                seam_links: self.network.seam_links,
            },
        })
    }
}

/// Best key name for a serde data error: the tracked path, refined by the
/// backticked field name serde puts in unknown/missing-field messages.
fn offending_key(path: &str, message: &str) -> String {
    let named = message
        .split('`')
        .nth(1)
        .filter(|_| message.starts_with("unknown field") || message.starts_with("missing field"));
    match (path, named) {
        (".", Some(field)) => field.to_string(),
        (p, Some(field)) if message.starts_with("missing field") => format!("{p}.{field}"),
        (p, _) => p.to_string(),
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ConfigError::Missing {
                path: path.to_path_buf(),
            }
        } else {
            ConfigError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    ScenarioConfig::from_json_str(&text)
}

pub fn save_config(cfg: &ScenarioConfig, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, cfg.to_json_string() + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_key(text: &str) -> String {
        match ScenarioConfig::from_json_str(text) {
            Err(ConfigError::Schema { key, .. }) => key,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_latency_config_gets_published_defaults() {
        let cfg = ScenarioConfig::from_json_str(r#"{"experiment": "latency-table"}"#).unwrap();
        assert_eq!(cfg.inference.rtt_ms, 124.2);
        assert_eq!(cfg.inference.gs_inference_latency_ms, 1.44);
        assert_eq!(cfg.inference.onboard_inference_latency_ms, 23.75);
        assert_eq!(cfg.inference.alpha_bounds(), (0.1, 0.7));
        assert_eq!(cfg.inference.batch_per_satellite, 128);
        assert_eq!(cfg.ns, vec![1, 10, 100]);
        assert_eq!(cfg.shell, ShellConfig::default());
        assert_eq!(cfg, ScenarioConfig::defaults(Experiment::LatencyTable));
    }

    #[test]
    fn alpha_out_of_range_names_alpha() {
        let key = schema_key(r#"{"experiment": "latency-table", "inference": {"alpha": 1.5}}"#);
        assert_eq!(key, "inference.alpha");
        let key = schema_key(r#"{"experiment": "latency-table", "inference": {"alpha_high": 1.5}}"#);
        assert_eq!(key, "inference.alpha_high");
    }

    #[test]
    fn unknown_and_missing_keys_are_named() {
        let key = schema_key(r#"{"experiment": "latency-table", "bogus": 1}"#);
        assert!(key.contains("bogus"), "{key}");
        let key = schema_key(r#"{"experiment": "latency-table", "shell": {"planes": 3}}"#);
        assert!(key.contains("planes"), "{key}");
        assert_eq!(schema_key(r#"{"seed": 1}"#), "experiment");
        assert_eq!(schema_key(r#"{"experiment": "training-curve"}"#), "train");
        assert_eq!(schema_key(r#"{"experiment": "latency-table", "seed": "x"}"#), "seed");
    }

    #[test]
    fn malformed_json_is_distinct() {
        assert!(matches!(
            ScenarioConfig::from_json_str("{\"experiment\": "),
            Err(ConfigError::Malformed { .. })
        ));
        assert!(matches!(
            load_config("/definitely/not/here.json"),
            Err(ConfigError::Missing { .. })
        ));
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ScenarioConfig::defaults(Experiment::TrainingCurve);
        cfg.seed = 17;
        cfg.inference.alpha = Some(0.3);
        cfg.rtt_scan.duration_s = Some(600.0);
        let path = dir.path().join("cfg.json");
        save_config(&cfg, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);
    }

    #[test]
    fn train_section_is_checked() {
        let key = schema_key(r#"{"experiment": "training-curve", "train": {"client_counts": [0]}}"#);
        assert_eq!(key, "train.client_counts");
        let key = schema_key(r#"{"experiment": "training-curve", "train": {"learning_rate": 0}}"#);
        assert_eq!(key, "train.learning_rate");
        let key = schema_key(
            r#"{"experiment": "training-curve", "train": {"client_counts": [5000]}}"#,
        );
        assert_eq!(key, "train.client_counts");
    }
}
