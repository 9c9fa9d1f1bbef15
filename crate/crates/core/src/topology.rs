//! Time-stamped link graphs over a shell and its ground stations.
//!
//! Satellites are wired in the +Grid pattern (two intra-plane and two
//! inter-plane neighbours, wrapping around). Ground stations attach to every
//! satellite above their elevation mask. Link latency is pure light-time.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbits::{self, EarthModel, GroundStation, Position, ShellConfig};

/// Speed of light in km/s.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

pub fn light_time_ms(length_km: f64) -> f64 {
    length_km / SPEED_OF_LIGHT_KM_S * 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Satellite,
    Ground,
}

/// Satellites order before ground nodes, then by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: usize,
}

impl NodeId {
    pub const fn satellite(index: usize) -> Self {
        Self { kind: NodeKind::Satellite, index }
    }

    pub const fn ground(index: usize) -> Self {
        Self { kind: NodeKind::Ground, index }
    }

    pub fn is_satellite(&self) -> bool {
        self.kind == NodeKind::Satellite
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Satellite => write!(f, "sat#{}", self.index),
            NodeKind::Ground => write!(f, "gs#{}", self.index),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    #[serde(rename = "ISL")]
    Isl,
    #[serde(rename = "GSL")]
    Gsl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub kind: LinkKind,
    pub length_km: f64,
    pub latency_ms: f64,
}

impl Link {
    pub fn new(a: NodeId, b: NodeId, kind: LinkKind, length_km: f64) -> Self {
        Self {
            a,
            b,
            kind,
            length_km,
            latency_ms: light_time_ms(length_km),
        }
    }

    /// Builds a link from its one-way latency; the length is derived.
    pub fn with_latency(a: NodeId, b: NodeId, kind: LinkKind, latency_ms: f64) -> Self {
        Self {
            a,
            b,
            kind,
            length_km: latency_ms * SPEED_OF_LIGHT_KM_S / 1000.0,
            latency_ms,
        }
    }

    fn key(&self) -> (NodeId, NodeId) {
        if self.a <= self.b {
            (self.a, self.b)
        } else {
            (self.b, self.a)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridOptions {
    /// Keep the inter-plane links between the last and the first plane.
    pub seam_links: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { seam_links: true }
    }
}

/// One snapshot of the network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGraph {
    pub timestamp_s: f64,
    pub nodes: Vec<NodeId>,
    pub links: Vec<Link>,
    /// Satellite positions at `timestamp_s`, indexed by satellite index.
    /// Empty for graphs assembled by hand.
    pub satellite_positions: Vec<Position>,
}

impl LinkGraph {
    /// Assembles a graph from explicit nodes and links, checking the
    /// structural invariants.
    pub fn new(timestamp_s: f64, nodes: Vec<NodeId>, links: Vec<Link>) -> Result<Self> {
        let graph = Self {
            timestamp_s,
            nodes,
            links,
            satellite_positions: Vec::new(),
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn validate(&self) -> Result<()> {
        let node_set: BTreeSet<NodeId> = self.nodes.iter().copied().collect();
        if node_set.len() != self.nodes.len() {
            return Err(Error::domain("duplicate node in graph"));
        }
        let mut seen = BTreeSet::new();
        for link in &self.links {
            if link.a == link.b {
                return Err(Error::domain(format!("self-loop on {}", link.a)));
            }
            for end in [link.a, link.b] {
                if !node_set.contains(&end) {
                    return Err(Error::UnknownNode(end));
                }
            }
            if !(link.latency_ms.is_finite() && link.latency_ms >= 0.0) {
                return Err(Error::domain(format!(
                    "link {}-{} has invalid latency {}",
                    link.a, link.b, link.latency_ms
                )));
            }
            if link.kind == LinkKind::Gsl && link.a.is_satellite() == link.b.is_satellite() {
                return Err(Error::domain(format!(
                    "GSL {}-{} must join one ground and one satellite node",
                    link.a, link.b
                )));
            }
            if !seen.insert(link.key()) {
                return Err(Error::domain(format!("duplicate link {}-{}", link.a, link.b)));
            }
        }
        Ok(())
    }

    pub fn satellite_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_satellite()).count()
    }

    pub fn ground_count(&self) -> usize {
        self.nodes.len() - self.satellite_count()
    }

    pub fn satellites(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied().filter(NodeId::is_satellite)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }

    /// Number of links of `kind` touching `node`.
    pub fn degree(&self, node: NodeId, kind: LinkKind) -> usize {
        self.links
            .iter()
            .filter(|l| l.kind == kind && (l.a == node || l.b == node))
            .count()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self)
    }

    /// Debug export: `{timestamp_s, nodes, links}`.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Snapshot<'a> {
            timestamp_s: f64,
            nodes: &'a [NodeId],
            links: &'a [Link],
        }
        serde_json::to_value(Snapshot {
            timestamp_s: self.timestamp_s,
            nodes: &self.nodes,
            links: &self.links,
        })
        .expect("snapshot is always serializable")
    }
}

pub fn build_isl_grid(shell: &ShellConfig, t_s: f64, earth: &EarthModel) -> Result<LinkGraph> {
    build_isl_grid_with(shell, t_s, earth, GridOptions::default())
}

pub fn build_isl_grid_with(
    shell: &ShellConfig,
    t_s: f64,
    earth: &EarthModel,
    options: GridOptions,
) -> Result<LinkGraph> {
    shell.validate()?;
    if shell.num_planes < 3 || shell.sats_per_plane < 3 {
        return Err(Error::domain(format!(
            "+Grid needs at least 3 planes and 3 satellites per plane, got {}x{}",
            shell.num_planes, shell.sats_per_plane
        )));
    }
    let positions = shell
        .satellites()
        .map(|sat| orbits::propagate(shell, sat, t_s, earth))
        .collect::<Result<Vec<_>>>()?;

    let (planes, slots) = (shell.num_planes, shell.sats_per_plane);
    let idx = |p: usize, s: usize| p * slots + s;
    let mut links = Vec::with_capacity(2 * planes * slots);
    for p in 0..planes {
        for s in 0..slots {
            let here = idx(p, s);
            let along = idx(p, (s + 1) % slots);
            links.push(Link::new(
                NodeId::satellite(here),
                NodeId::satellite(along),
                LinkKind::Isl,
                orbits::distance_km(&positions[here], &positions[along]),
            ));
            if p + 1 == planes && !options.seam_links {
                continue;
            }
            let across = idx((p + 1) % planes, s);
            links.push(Link::new(
                NodeId::satellite(here),
                NodeId::satellite(across),
                LinkKind::Isl,
                orbits::distance_km(&positions[here], &positions[across]),
            ));
        }
    }

    Ok(LinkGraph {
        timestamp_s: t_s,
        nodes: (0..shell.total_satellites()).map(NodeId::satellite).collect(),
        links,
        satellite_positions: positions,
    })
}

/// Adds one ground node per station, linked to every visible satellite.
/// Ground indices continue after any ground nodes already in the graph.
pub fn attach_gsl(
    mut graph: LinkGraph,
    stations: &[GroundStation],
    t_s: f64,
    earth: &EarthModel,
) -> Result<LinkGraph> {
    if t_s != graph.timestamp_s {
        return Err(Error::domain(format!(
            "graph snapshot is at t={} s, stations requested at t={} s",
            graph.timestamp_s, t_s
        )));
    }
    if graph.satellite_positions.len() != graph.satellite_count() {
        return Err(Error::domain("graph carries no satellite positions"));
    }
    let first_ground = graph.ground_count();
    for (offset, station) in stations.iter().enumerate() {
        station.validate()?;
        let gs_node = NodeId::ground(first_ground + offset);
        let gs_pos = orbits::ground_position(station, t_s, earth);
        graph.nodes.push(gs_node);
        for (sat_index, sat_pos) in graph.satellite_positions.iter().enumerate() {
            if orbits::visible(sat_pos, station, &gs_pos) {
                graph.links.push(Link::new(
                    gs_node,
                    NodeId::satellite(sat_index),
                    LinkKind::Gsl,
                    orbits::distance_km(sat_pos, &gs_pos),
                ));
            }
        }
    }
    Ok(graph)
}

/// Minimum-latency route between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub path: Vec<NodeId>,
    pub latency_ms: f64,
}

/// Dense adjacency lists for repeated shortest-path queries on one snapshot.
#[derive(Debug, Clone)]
pub struct Adjacency {
    nodes: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
    edges: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    source: usize,
    dist: Vec<Option<f64>>,
    pred: Vec<Option<usize>>,
    nodes: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Adjacency {
    fn new(graph: &LinkGraph) -> Self {
        // Dense order follows NodeId order so index comparisons match node order.
        let mut nodes = graph.nodes.clone();
        nodes.sort();
        let index: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut edges = vec![Vec::new(); nodes.len()];
        for link in &graph.links {
            let (a, b) = (index[&link.a], index[&link.b]);
            edges[a].push((b, link.latency_ms));
            edges[b].push((a, link.latency_ms));
        }
        for list in &mut edges {
            list.sort_by_key(|x| x.0);
        }
        Self { nodes, index, edges }
    }

    /// Dijkstra from `src`. Among equal-latency paths the lexicographically
    /// smallest node sequence wins.
    pub fn tree_from(&self, src: NodeId) -> Result<ShortestPathTree> {
        let source = *self.index.get(&src).ok_or(Error::UnknownNode(src))?;
        let n = self.nodes.len();
        let mut dist: Vec<Option<f64>> = vec![None; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = Some(0.0);
        heap.push(Frontier { dist: 0.0, node: source });

        while let Some(Frontier { dist: d, node: u }) = heap.pop() {
            if settled[u] || dist[u] != Some(d) {
                continue;
            }
            settled[u] = true;
            for &(v, w) in &self.edges[u] {
                if settled[v] {
                    continue;
                }
                let candidate = d + w;
                let better = match dist[v] {
                    None => true,
                    Some(current) if candidate < current => true,
                    Some(current) if candidate == current => {
                        let incumbent = pred[v].expect("reached node has a predecessor");
                        path_cmp(&pred, u, incumbent, v) == Ordering::Less
                    }
                    Some(_) => false,
                };
                if better {
                    let improved = dist[v] != Some(candidate);
                    dist[v] = Some(candidate);
                    pred[v] = Some(u);
                    if improved {
                        heap.push(Frontier { dist: candidate, node: v });
                    }
                }
            }
        }

        Ok(ShortestPathTree {
            source,
            dist,
            pred,
            nodes: self.nodes.clone(),
            index: self.index.clone(),
        })
    }
}

/// Compares the root paths `..a, tail` and `..b, tail` lexicographically.
fn path_cmp(pred: &[Option<usize>], a: usize, b: usize, tail: usize) -> Ordering {
    let trace = |mut v: usize| {
        let mut path = vec![tail, v];
        while let Some(p) = pred[v] {
            path.push(p);
            v = p;
        }
        path.reverse();
        path
    };
    trace(a).cmp(&trace(b))
}

impl ShortestPathTree {
    pub fn source(&self) -> NodeId {
        self.nodes[self.source]
    }

    pub fn latency_to(&self, dst: NodeId) -> Option<f64> {
        self.index.get(&dst).and_then(|&i| self.dist[i])
    }

    pub fn route_to(&self, dst: NodeId) -> Result<Route> {
        let target = *self.index.get(&dst).ok_or(Error::UnknownNode(dst))?;
        let latency_ms = self.dist[target].ok_or(Error::NoPath {
            from: self.source(),
            to: dst,
        })?;
        let mut path = vec![dst];
        let mut v = target;
        while let Some(p) = self.pred[v] {
            path.push(self.nodes[p]);
            v = p;
        }
        path.reverse();
        Ok(Route { path, latency_ms })
    }
}

pub fn shortest_path(graph: &LinkGraph, src: NodeId, dst: NodeId) -> Result<Route> {
    if !graph.contains(dst) {
        return Err(Error::UnknownNode(dst));
    }
    graph.adjacency().tree_from(src)?.route_to(dst)
}

/// Round-trip propagation time between two nodes.
pub fn rtt_ms(graph: &LinkGraph, sat: NodeId, gs: NodeId) -> Result<f64> {
    Ok(2.0 * shortest_path(graph, sat, gs)?.latency_ms)
}
