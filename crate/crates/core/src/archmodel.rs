//! Analytic cost models for the centralized, distributed and federated
//! security-AI architectures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{LinkGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchitectureKind {
    /// Training and inference on the ground, fed by raw telemetry.
    Centralized,
    /// Ground training on raw telemetry, on-board inference.
    Distributed,
    /// On-board training and inference, gradients aggregated.
    Federated,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 3] = [
        ArchitectureKind::Centralized,
        ArchitectureKind::Distributed,
        ArchitectureKind::Federated,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ArchitectureKind::Centralized => "centralized",
            ArchitectureKind::Distributed => "distributed",
            ArchitectureKind::Federated => "federated",
        }
    }

    pub fn sends_telemetry(&self) -> bool {
        !matches!(self, ArchitectureKind::Federated)
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchitectureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centralized" => Ok(ArchitectureKind::Centralized),
            "distributed" => Ok(ArchitectureKind::Distributed),
            "federated" => Ok(ArchitectureKind::Federated),
            other => Err(Error::domain(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceParams {
    pub rtt_ms: f64,
    pub gs_inference_latency_ms: f64,
    pub onboard_inference_latency_ms: f64,
    /// Parallelism level of the ground server, in (0, 1].
    pub alpha: f64,
    pub batch_per_satellite: u32,
}

impl Default for InferenceParams {
    fn default() -> Self {
        Self {
            rtt_ms: 124.2,
            gs_inference_latency_ms: 1.44,
            onboard_inference_latency_ms: 23.75,
            alpha: 0.7,
            batch_per_satellite: 128,
        }
    }
}

impl InferenceParams {
    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rtt_ms", self.rtt_ms),
            ("gs_inference_latency_ms", self.gs_inference_latency_ms),
            ("onboard_inference_latency_ms", self.onboard_inference_latency_ms),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommSizes {
    pub telemetry_bytes: u64,
    pub model_bytes: u64,
    pub gradient_bytes: u64,
}

impl Default for CommSizes {
    fn default() -> Self {
        Self {
            telemetry_bytes: 1 << 20,
            model_bytes: 4096,
            gradient_bytes: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyReport {
    pub architecture: ArchitectureKind,
    pub n_satellites: usize,
    pub alpha_low: f64,
    pub alpha_high: f64,
    pub latency_low_ms: f64,
    pub latency_high_ms: f64,
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::domain("number of satellites must be at least 1"))
    } else {
        Ok(())
    }
}

/// RTT plus the ground-side inference cost. A request always pays at least
/// one ground inference; `alpha * n` scales it once the server is shared.
pub fn centralized_inference_latency(p: &InferenceParams, n: usize) -> Result<f64> {
    check_count(n)?;
    let load = (p.alpha * n as f64).max(1.0);
    Ok(p.rtt_ms + p.gs_inference_latency_ms * load)
}

pub fn federated_inference_latency(p: &InferenceParams, n: usize) -> Result<f64> {
    check_count(n)?;
    Ok(p.onboard_inference_latency_ms)
}

pub fn distributed_inference_latency(p: &InferenceParams, n: usize) -> Result<f64> {
    federated_inference_latency(p, n)
}

pub fn inference_latency(kind: ArchitectureKind, p: &InferenceParams, n: usize) -> Result<f64> {
    match kind {
        ArchitectureKind::Centralized => centralized_inference_latency(p, n),
        ArchitectureKind::Distributed => distributed_inference_latency(p, n),
        ArchitectureKind::Federated => federated_inference_latency(p, n),
    }
}

/// One row per (architecture, n), architectures in declaration order.
pub fn latency_table(
    p: &InferenceParams,
    ns: &[usize],
    alpha_low: f64,
    alpha_high: f64,
) -> Result<Vec<LatencyReport>> {
    if ns.is_empty() {
        return Err(Error::domain("at least one satellite count is required"));
    }
    if !(alpha_low > 0.0 && alpha_low <= alpha_high && alpha_high <= 1.0) {
        return Err(Error::domain(format!(
            "need 0 < alpha_low <= alpha_high <= 1, got [{alpha_low}, {alpha_high}]"
        )));
    }
    let low = p.with_alpha(alpha_low);
    let high = p.with_alpha(alpha_high);
    low.validate()?;

    let mut rows = Vec::with_capacity(ns.len() * ArchitectureKind::ALL.len());
    for kind in ArchitectureKind::ALL {
        for &n in ns {
            rows.push(LatencyReport {
                architecture: kind,
                n_satellites: n,
                alpha_low,
                alpha_high,
                latency_low_ms: inference_latency(kind, &low, n)?,
                latency_high_ms: inference_latency(kind, &high, n)?,
            });
        }
    }
    Ok(rows)
}

pub const LATENCY_CSV_HEADER: &str = "architecture,n_satellites,alpha_low,alpha_high,latency_low_ms,latency_high_ms";

pub fn latency_table_csv(rows: &[LatencyReport]) -> String {
    let mut out = String::from(LATENCY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6}\n",
            r.architecture, r.n_satellites, r.alpha_low, r.alpha_high, r.latency_low_ms, r.latency_high_ms
        ));
    }
    out
}

/// Serialization time of `bytes` on a link of `bandwidth_bps`, in ms.
pub fn transmission_ms(bytes: u64, bandwidth_bps: f64) -> f64 {
    bytes as f64 * 8.0 / bandwidth_bps * 1000.0
}

/// Duration of one synchronous training round's communication, over every
/// satellite in the graph.
pub fn training_round_comm_ms(
    kind: ArchitectureKind,
    graph: &LinkGraph,
    gs_node: NodeId,
    sizes: &CommSizes,
    bandwidth_bps: f64,
) -> Result<f64> {
    let satellites: Vec<NodeId> = graph.satellites().collect();
    training_round_comm_ms_for(kind, graph, gs_node, &satellites, sizes, bandwidth_bps)
}

/// Same as [`training_round_comm_ms`] restricted to the participating
/// satellites. The round ends when the slowest participant finishes.
pub fn training_round_comm_ms_for(
    kind: ArchitectureKind,
    graph: &LinkGraph,
    gs_node: NodeId,
    participants: &[NodeId],
    sizes: &CommSizes,
    bandwidth_bps: f64,
) -> Result<f64> {
    if !(bandwidth_bps.is_finite() && bandwidth_bps > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth_bps}")));
    }
    if participants.is_empty() {
        return Err(Error::domain("at least one satellite must take part in a round"));
    }
    let tree = graph.adjacency().tree_from(gs_node)?;
    let mut slowest: f64 = 0.0;
    for &sat in participants {
        if !sat.is_satellite() || !graph.contains(sat) {
            return Err(Error::UnknownNode(sat));
        }
        let one_way = tree.latency_to(sat).ok_or(Error::UnreachableSatellite {
            satellite: sat,
            ground: gs_node,
        })?;
        let total = match kind {
            ArchitectureKind::Centralized => one_way + transmission_ms(sizes.telemetry_bytes, bandwidth_bps),
            ArchitectureKind::Distributed => {
                one_way
                    + transmission_ms(sizes.telemetry_bytes, bandwidth_bps)
                    + one_way
                    + transmission_ms(sizes.model_bytes, bandwidth_bps)
            }
            ArchitectureKind::Federated => {
                one_way
                    + transmission_ms(sizes.gradient_bytes, bandwidth_bps)
                    + one_way
                    + transmission_ms(sizes.model_bytes, bandwidth_bps)
            }
        };
        slowest = slowest.max(total);
    }
    Ok(slowest)
}

/// Raw telemetry bytes that leave the space segment over `rounds` rounds.
pub fn telemetry_exposure_bytes(kind: ArchitectureKind, sizes: &CommSizes, n: usize, rounds: usize) -> u64 {
    if kind.sends_telemetry() {
        n as u64 * rounds as u64 * sizes.telemetry_bytes
    } else {
        0
    }
}
