use leosim::topology::{Link, LinkGraph, LinkKind, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random satellite-only graph; `integer` weights make ties common.
pub fn random_graph(seed: u64, max_nodes: usize, integer: bool) -> LinkGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_nodes);
    let density = rng.random_range(0.1..0.6);
    let nodes: Vec<NodeId> = (0..n).map(NodeId::satellite).collect();
    let mut links = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(density) {
                let w = if integer {
                    rng.random_range(1..4) as f64
                } else {
                    rng.random_range(0.1..50.0)
                };
                links.push(Link::with_latency(nodes[a], nodes[b], LinkKind::Isl, w));
            }
        }
    }
    LinkGraph::new(0.0, nodes, links).unwrap()
}

pub fn bellman_ford(graph: &LinkGraph, src: NodeId) -> Vec<f64> {
    let n = graph.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[src.index] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for l in &graph.links {
            for (u, v) in [(l.a, l.b), (l.b, l.a)] {
                let cand = dist[u.index] + l.latency_ms;
                if cand < dist[v.index] {
                    dist[v.index] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}
