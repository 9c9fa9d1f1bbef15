//! Desk-scale comparison of centralized SGD and synchronous FedAvg.
//!
//! A small classifier on synthetic Gaussian blobs stands in for a real
//! vision workload. Each run advances a simulated clock made of per-batch
//! compute time plus the round's communication cost over the constellation.

mod data;
mod model;
mod train;

pub use data::{
    class_mean, make_synthetic, partition_iid, partition_indices, split_holdout, Dataset, CLASS_SEPARATION,
};
pub use model::{evaluate, Layout, Model, ModelKind, HIDDEN_UNITS};
pub use train::{
    fedavg, local_train, run_centralized, run_centralized_observed, run_federated, run_federated_observed,
    time_to_accuracy, CommParams, RoundRecord, TimeToAccuracy, TrainConfig, TrainingTrace, DEFAULT_BANDWIDTH_BPS,
    TRACE_CSV_HEADER,
};
