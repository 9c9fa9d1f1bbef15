use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::data::{partition_iid, split_holdout, Dataset};
use super::model::{evaluate, Layout, Model, ModelKind};
use crate::archmodel::{self, ArchitectureKind, CommSizes};
use crate::error::{Error, Result};
use crate::orbits::{EarthModel, GroundStation, ShellConfig};
use crate::topology::{self, GridOptions, NodeId};

/// Mini-batch SGD on mean cross-entropy. Batches are consecutive chunks of a
/// per-epoch seeded shuffle; the last batch may be short.
pub fn local_train(
    model: &Model,
    shard: &Dataset,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    seed: u64,
) -> Result<Model> {
    if shard.is_empty() {
        return Err(Error::domain("cannot train on an empty shard"));
    }
    if batch_size == 0 {
        return Err(Error::domain("batch_size must be at least 1"));
    }
    let mut out = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..shard.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let grad = out.gradient(shard, batch)?;
            for (w, g) in out.weights.iter_mut().zip(&grad) {
                *w -= lr * g;
            }
        }
    }
    Ok(out)
}

/// Weighted element-wise mean of `updates`; weights are normalised to sum 1.
pub fn fedavg(updates: &[Model], weights: &[f64]) -> Result<Model> {
    let first = updates.first().ok_or_else(|| Error::domain("fedavg needs at least one update"))?;
    if weights.len() != updates.len() {
        return Err(Error::domain(format!(
            "{} updates but {} weights",
            updates.len(),
            weights.len()
        )));
    }
    if let Some(bad) = updates.iter().find(|m| m.layout != first.layout || m.weights.len() != first.weights.len()) {
        return Err(Error::LayoutMismatch(format!("{:?} vs {:?}", first.layout, bad.layout)));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::domain("aggregation weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::domain("aggregation weights must not all be zero"));
    }
    let shares: Vec<f64> = weights.iter().map(|w| w / total).collect();

    // Averaging offsets from the first model keeps identical inputs exact.
    let mut out = first.clone();
    for (c, base) in out.weights.iter_mut().enumerate() {
        let origin = *base;
        let mut offset = 0.0;
        let (mut lo, mut hi) = (origin, origin);
        for (m, share) in updates.iter().zip(&shares) {
            let v = m.weights[c];
            offset += share * (v - origin);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        *base = (origin + offset).clamp(lo, hi);
    }
    Ok(out)
}

/// Network context used to cost each round's communication.
#[derive(Debug, Clone, PartialEq)]
pub struct CommParams {
    pub shell: ShellConfig,
    pub earth: EarthModel,
    /// Aggregating ground station.
    pub station: GroundStation,
    pub snapshot_t_s: f64,
    pub sizes: CommSizes,
    pub bandwidth_bps: f64,
    pub seam_links: bool,
}

pub const DEFAULT_BANDWIDTH_BPS: f64 = 100e6;

impl Default for CommParams {
    fn default() -> Self {
        Self {
            shell: ShellConfig::default(),
            earth: EarthModel::default(),
            station: GroundStation::new("Paris", 48.8566, 2.3522),
            snapshot_t_s: 0.0,
            sizes: CommSizes::default(),
            bandwidth_bps: DEFAULT_BANDWIDTH_BPS,
            seam_links: true,
        }
    }
}

impl CommParams {
    /// Satellites hosting `n` clients, spread evenly over the shell.
    pub fn participants(&self, n: usize) -> Vec<NodeId> {
        let total = self.shell.total_satellites();
        let mut picked: Vec<usize> = (0..n).map(|i| i * total / n.max(1)).collect();
        picked.dedup();
        picked.into_iter().map(NodeId::satellite).collect()
    }

    pub fn round_ms(&self, kind: ArchitectureKind, n_clients: usize) -> Result<f64> {
        let graph = topology::build_isl_grid_with(
            &self.shell,
            self.snapshot_t_s,
            &self.earth,
            GridOptions {
                seam_links: self.seam_links,
            },
        )?;
        let graph = topology::attach_gsl(graph, std::slice::from_ref(&self.station), self.snapshot_t_s, &self.earth)?;
        archmodel::training_round_comm_ms_for(
            kind,
            &graph,
            NodeId::ground(0),
            &self.participants(n_clients),
            &self.sizes,
            self.bandwidth_bps,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Number of satellites: FL clients, or telemetry sources when centralized.
    pub n_clients: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub compute_ms_per_batch: f64,
    /// How much faster the ground trains than a satellite.
    pub ground_speedup: f64,
    pub arch: ArchitectureKind,
    pub model: ModelKind,
    pub holdout_fraction: f64,
    pub comm: CommParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_clients: 10,
            rounds: 200,
            local_epochs: 1,
            batch_size: 32,
            learning_rate: 0.1,
            seed: 0,
            compute_ms_per_batch: 1.0,
            ground_speedup: 16.0,
            arch: ArchitectureKind::Federated,
            model: ModelKind::Logistic,
            holdout_fraction: 0.2,
            comm: CommParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_clients", self.n_clients),
            ("local_epochs", self.local_epochs),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(Error::domain(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::domain("learning_rate must be positive"));
        }
        if !(self.compute_ms_per_batch.is_finite() && self.compute_ms_per_batch > 0.0) {
            return Err(Error::domain("compute_ms_per_batch must be positive"));
        }
        if !(self.ground_speedup.is_finite() && self.ground_speedup > 0.0) {
            return Err(Error::domain("ground_speedup must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub accuracy: f64,
    pub elapsed_ms: f64,
    pub exposure_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<RoundRecord>,
    pub final_model: Model,
}

pub const TRACE_CSV_HEADER: &str = "round,accuracy,elapsed_ms,exposure_bytes";

impl TrainingTrace {
    pub fn final_accuracy(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.accuracy)
    }

    pub fn best_accuracy(&self) -> f64 {
        self.records.iter().map(|r| r.accuracy).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                r.round, r.accuracy, r.elapsed_ms, r.exposure_bytes
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeToAccuracy {
    Reached { round: usize, elapsed_ms: f64 },
    NotReached { best_accuracy: f64 },
}

impl TimeToAccuracy {
    pub fn elapsed_ms(&self) -> Option<f64> {
        match self {
            TimeToAccuracy::Reached { elapsed_ms, .. } => Some(*elapsed_ms),
            TimeToAccuracy::NotReached { .. } => None,
        }
    }
}

pub fn time_to_accuracy(trace: &TrainingTrace, target: f64) -> Result<TimeToAccuracy> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::domain(format!("target accuracy must lie in [0, 1], got {target}")));
    }
    Ok(trace
        .records
        .iter()
        .find(|r| r.accuracy >= target)
        .map_or(
            TimeToAccuracy::NotReached {
                best_accuracy: trace.best_accuracy(),
            },
            |r| TimeToAccuracy::Reached {
                round: r.round,
                elapsed_ms: r.elapsed_ms,
            },
        ))
}

/// SplitMix64 finaliser over a (seed, stream, index) triple.
pub(crate) fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const STREAM_HOLDOUT: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_PARTITION: u64 = 3;

/// Seed for client `client` in round `round` (1-based).
fn batch_seed(seed: u64, round: usize, client: usize) -> u64 {
    derive_seed(seed, 0x100 + round as u64, client as u64)
}

fn batches(len: usize, batch_size: usize) -> usize {
    len.div_ceil(batch_size)
}

struct Prepared {
    train: Dataset,
    test: Dataset,
    model: Model,
}

fn prepare(ds: &Dataset, cfg: &TrainConfig) -> Result<Prepared> {
    cfg.validate()?;
    let (train, test) = split_holdout(ds, cfg.holdout_fraction, derive_seed(cfg.seed, STREAM_HOLDOUT, 0))?;
    let layout = Layout::for_kind(cfg.model, ds.dim(), ds.num_classes());
    let model = Model::init(layout, derive_seed(cfg.seed, STREAM_INIT, 0));
    Ok(Prepared { train, test, model })
}

pub fn run_centralized(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainingTrace> {
    run_centralized_observed(ds, cfg, |_, _| {})
}

/// Ground-side training on the pooled data. `observe` sees the global model
/// after initialisation (round 0) and after every round.
pub fn run_centralized_observed(
    ds: &Dataset,
    cfg: &TrainConfig,
    mut observe: impl FnMut(usize, &Model),
) -> Result<TrainingTrace> {
    let Prepared { train, test, mut model } = prepare(ds, cfg)?;
    let arch = match cfg.arch {
        ArchitectureKind::Distributed => ArchitectureKind::Distributed,
        _ => ArchitectureKind::Centralized,
    };
    let round_cost = batches(train.len(), cfg.batch_size) as f64 * cfg.compute_ms_per_batch / cfg.ground_speedup
        + if cfg.rounds > 0 { cfg.comm.round_ms(arch, cfg.n_clients)? } else { 0.0 };

    observe(0, &model);
    let mut records = vec![RoundRecord {
        round: 0,
        accuracy: evaluate(&model, &test)?,
        elapsed_ms: 0.0,
        exposure_bytes: 0,
    }];
    let mut elapsed = 0.0;
    for round in 1..=cfg.rounds {
        model = local_train(&model, &train, 1, cfg.batch_size, cfg.learning_rate, batch_seed(cfg.seed, round, 0))?;
        elapsed += round_cost;
        observe(round, &model);
        records.push(RoundRecord {
            round,
            accuracy: evaluate(&model, &test)?,
            elapsed_ms: elapsed,
            exposure_bytes: archmodel::telemetry_exposure_bytes(arch, &cfg.comm.sizes, cfg.n_clients, round),
        });
    }
    Ok(TrainingTrace {
        records,
        final_model: model,
    })
}

pub fn run_federated(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainingTrace> {
    run_federated_observed(ds, cfg, |_, _| {})
}

/// Synchronous FedAvg over static IID shards, weighted by shard size.
pub fn run_federated_observed(
    ds: &Dataset,
    cfg: &TrainConfig,
    mut observe: impl FnMut(usize, &Model),
) -> Result<TrainingTrace> {
    let Prepared { train, test, mut model } = prepare(ds, cfg)?;
    let shards = partition_iid(&train, cfg.n_clients, derive_seed(cfg.seed, STREAM_PARTITION, 0))?;
    let shard_weights: Vec<f64> = shards.iter().map(|s| s.len() as f64).collect();
    let slowest_client = shards
        .iter()
        .map(|s| (cfg.local_epochs * batches(s.len(), cfg.batch_size)) as f64 * cfg.compute_ms_per_batch)
        .fold(0.0, f64::max);
    let round_cost = slowest_client
        + if cfg.rounds > 0 {
            cfg.comm.round_ms(ArchitectureKind::Federated, cfg.n_clients)?
        } else {
            0.0
        };

    observe(0, &model);
    let mut records = vec![RoundRecord {
        round: 0,
        accuracy: evaluate(&model, &test)?,
        elapsed_ms: 0.0,
        exposure_bytes: 0,
    }];
    let mut elapsed = 0.0;
    for round in 1..=cfg.rounds {
        let global = &model;
        // Results come back in client order, so aggregation is reproducible.
        let updates = shards
            .par_iter()
            .enumerate()
            .map(|(client, shard)| {
                local_train(
                    global,
                    shard,
                    cfg.local_epochs,
                    cfg.batch_size,
                    cfg.learning_rate,
                    batch_seed(cfg.seed, round, client),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        model = fedavg(&updates, &shard_weights)?;
        elapsed += round_cost;
        observe(round, &model);
        records.push(RoundRecord {
            round,
            accuracy: evaluate(&model, &test)?,
            elapsed_ms: elapsed,
            exposure_bytes: archmodel::telemetry_exposure_bytes(
                ArchitectureKind::Federated,
                &cfg.comm.sizes,
                cfg.n_clients,
                round,
            ),
        });
    }
    Ok(TrainingTrace {
        records,
        final_model: model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fedsim::data::make_synthetic;
    use proptest::prelude::*;

    fn blobs() -> Dataset {
        make_synthetic(400, 2, 2, 11).unwrap()
    }

    fn logistic(weights: Vec<f64>) -> Model {
        Model::from_weights(Layout::Logistic { dim: 2, classes: 2 }, weights).unwrap()
    }

    fn quick_cfg(rounds: usize) -> TrainConfig {
        let mut cfg = TrainConfig {
            rounds,
            seed: 5,
            ..TrainConfig::default()
        };
        cfg.comm.shell = ShellConfig::new(630.0, 51.9, 6, 6, 0).unwrap();
        cfg.comm.station = GroundStation::new("eq", 0.0, 0.0).with_min_elevation(0.0);
        cfg
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let ds = blobs();
        let m = Model::init(Layout::for_kind(ModelKind::Perceptron, 2, 2), 3);
        assert_eq!(local_train(&m, &ds, 3, 16, 0.0, 9).unwrap(), m);
    }

    #[test]
    fn full_batch_step_matches_closed_form() {
        let ds = blobs();
        let m = logistic(vec![0.3, -0.2, 0.1, 0.05, -0.4, 0.2]);
        let all: Vec<usize> = (0..ds.len()).collect();
        let grad = m.gradient(&ds, &all).unwrap();
        let stepped = local_train(&m, &ds, 1, ds.len(), 0.5, 1).unwrap();
        for ((w, g), got) in m.weights.iter().zip(&grad).zip(&stepped.weights) {
            assert!((got - (w - 0.5 * g)).abs() < 1e-12);
        }
    }

    #[test]
    fn small_steps_reduce_loss() {
        let ds = blobs();
        let all: Vec<usize> = (0..ds.len()).collect();
        let m = Model::init(Layout::for_kind(ModelKind::Logistic, 2, 2), 0);
        let trained = local_train(&m, &ds, 5, 20, 0.01, 4).unwrap();
        assert!(trained.loss(&ds, &all).unwrap() < m.loss(&ds, &all).unwrap());
    }

    #[test]
    fn empty_shard_and_zero_batch_rejected() {
        let ds = blobs();
        let m = Model::zeros(Layout::Logistic { dim: 2, classes: 2 });
        assert!(local_train(&m, &ds.subset(&[]), 1, 4, 0.1, 0).is_err());
        assert!(local_train(&m, &ds, 1, 0, 0.1, 0).is_err());
    }

    #[test]
    fn fedavg_single_and_identical_inputs_are_exact() {
        let m = logistic(vec![0.1, 0.2, 0.3, 1e-17, -7.5, 3.3]);
        assert_eq!(fedavg(std::slice::from_ref(&m), &[2.0]).unwrap(), m);
        assert_eq!(fedavg(&[m.clone(), m.clone(), m.clone()], &[1.0, 5.0, 3.0]).unwrap(), m);
    }

    #[test]
    fn fedavg_weighted_mean() {
        let a = logistic(vec![0.0; 6]);
        let b = logistic(vec![2.0; 6]);
        let c = logistic(vec![-4.0, 1.0, 8.0, 0.0, 0.5, 3.0]);
        let mid = fedavg(&[a.clone(), b.clone()], &[1.0, 1.0]).unwrap();
        assert!(mid.weights.iter().all(|w| (w - 1.0).abs() < 1e-15));

        let avg = fedavg(&[a.clone(), b.clone(), c.clone()], &[1.0, 2.0, 5.0]).unwrap();
        for k in 0..6 {
            let want = (a.weights[k] + 2.0 * b.weights[k] + 5.0 * c.weights[k]) / 8.0;
            assert!((avg.weights[k] - want).abs() < 1e-12, "coord {k}");
        }
    }

    #[test]
    fn fedavg_rejects_bad_inputs() {
        let a = logistic(vec![0.0; 6]);
        let p = Model::zeros(Layout::for_kind(ModelKind::Perceptron, 2, 2));
        assert!(matches!(fedavg(&[a.clone(), p], &[1.0, 1.0]), Err(Error::LayoutMismatch(_))));
        assert!(fedavg(&[], &[]).is_err());
        assert!(fedavg(std::slice::from_ref(&a), &[1.0, 1.0]).is_err());
        assert!(fedavg(&[a.clone(), a.clone()], &[0.0, 0.0]).is_err());
        assert!(fedavg(std::slice::from_ref(&a), &[-1.0]).is_err());
    }

    proptest! {
        #[test]
        fn fedavg_stays_within_coordinate_bounds(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 6), 1..6),
            raw in prop::collection::vec(0.01f64..10.0, 6),
        ) {
            let models: Vec<Model> = rows.iter().map(|w| logistic(w.clone())).collect();
            let avg = fedavg(&models, &raw[..models.len()]).unwrap();
            for k in 0..6 {
                let lo = rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(avg.weights[k] >= lo && avg.weights[k] <= hi);
            }
        }
    }

    #[test]
    fn zero_rounds_gives_initial_record_only() {
        let trace = run_federated(&blobs(), &quick_cfg(0)).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].round, 0);
        assert_eq!(trace.records[0].elapsed_ms, 0.0);
    }

    #[test]
    fn elapsed_strictly_increases() {
        let ds = blobs();
        for trace in [run_federated(&ds, &quick_cfg(5)).unwrap(), run_centralized(&ds, &quick_cfg(5)).unwrap()] {
            assert_eq!(trace.records.len(), 6);
            assert!(trace.records.windows(2).all(|w| w[1].elapsed_ms > w[0].elapsed_ms));
        }
    }

    #[test]
    fn centralized_learns_blobs() {
        let ds = make_synthetic(2000, 2, 2, 1).unwrap();
        let trace = run_centralized(&ds, &quick_cfg(30)).unwrap();
        assert!(trace.final_accuracy() > 0.9, "{}", trace.final_accuracy());
    }

    #[test]
    fn single_client_fedavg_tracks_centralized_weights() {
        let ds = blobs();
        let mut cfg = quick_cfg(20);
        cfg.n_clients = 1;
        for model in [ModelKind::Logistic, ModelKind::Perceptron] {
            cfg.model = model;
            let mut central = Vec::new();
            let mut federated = Vec::new();
            run_centralized_observed(&ds, &cfg, |_, m| central.push(m.weights.clone())).unwrap();
            run_federated_observed(&ds, &cfg, |_, m| federated.push(m.weights.clone())).unwrap();
            assert_eq!(central.len(), 21);
            for (c, f) in central.iter().zip(&federated) {
                assert!(c.iter().zip(f).all(|(a, b)| (a - b).abs() <= 1e-9));
            }
        }
    }

    #[test]
    fn exposure_follows_architecture() {
        let ds = blobs();
        let cfg = quick_cfg(4);
        let fl = run_federated(&ds, &cfg).unwrap();
        assert!(fl.records.iter().all(|r| r.exposure_bytes == 0));
        let central = run_centralized(&ds, &cfg).unwrap();
        for r in &central.records {
            assert_eq!(r.exposure_bytes, (cfg.n_clients * r.round) as u64 * cfg.comm.sizes.telemetry_bytes);
        }
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let ds = blobs();
        let cfg = quick_cfg(5);
        assert_eq!(run_federated(&ds, &cfg).unwrap(), run_federated(&ds, &cfg).unwrap());
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(
            run_federated(&ds, &cfg).unwrap().final_model,
            run_federated(&ds, &other).unwrap().final_model
        );
    }

    #[test]
    fn time_to_accuracy_lookup() {
        let trace = TrainingTrace {
            records: [(0.5, 0.0), (0.8, 10.0), (0.9, 20.0)]
                .iter()
                .enumerate()
                .map(|(round, &(accuracy, elapsed_ms))| RoundRecord {
                    round,
                    accuracy,
                    elapsed_ms,
                    exposure_bytes: 0,
                })
                .collect(),
            final_model: Model::zeros(Layout::Logistic { dim: 1, classes: 2 }),
        };
        assert_eq!(
            time_to_accuracy(&trace, 0.0).unwrap(),
            TimeToAccuracy::Reached { round: 0, elapsed_ms: 0.0 }
        );
        assert_eq!(time_to_accuracy(&trace, 0.85).unwrap().elapsed_ms(), Some(20.0));
        assert_eq!(
            time_to_accuracy(&trace, 0.95).unwrap(),
            TimeToAccuracy::NotReached { best_accuracy: 0.9 }
        );
        assert!(time_to_accuracy(&trace, 1.5).is_err());
    }
}
